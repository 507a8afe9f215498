import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from systolab.conformal import (
    EvennessError,
    HarmonicSpec,
    NonPositiveFactorError,
    ProjectiveFactor,
    constant,
    evaluate,
    fingerprint,
    format_spec,
    harmonic,
    harmonic_bound,
    list_presets,
    p2_factor,
    p4_factor,
    parse_spec,
    preset,
    random_even_factor,
    random_factor,
    real_sh,
    sample_to_grid,
    validate,
    validated,
)
from systolab.geometry import sphere_rule

from oracles import latlong_points, real_sh_scipy, uniform_sphere

Z = np.array([0.0, 0.0, 1.0])
X = np.array([1.0, 0.0, 0.0])


def test_real_harmonics_match_scipy(rng):
    pts = uniform_sphere(300, rng)
    for l in range(17):
        for m in range(-l, l + 1):
            np.testing.assert_allclose(real_sh(l, m, pts), real_sh_scipy(l, m, pts), atol=1e-12)


def test_pinned_low_degree_harmonics(rng):
    x, y, z = uniform_sphere(50, rng).T
    pts = np.stack([x, y, z], -1)
    c1 = np.sqrt(3 / (4 * np.pi))
    table = {
        (0, 0): np.full_like(z, 1 / (2 * np.sqrt(np.pi))),
        (1, 0): c1 * z, (1, 1): c1 * x, (1, -1): c1 * y,
        (2, 0): np.sqrt(5 / (16 * np.pi)) * (3 * z**2 - 1),
        (2, 1): np.sqrt(15 / (4 * np.pi)) * x * z,
        (2, -1): np.sqrt(15 / (4 * np.pi)) * y * z,
        (2, 2): np.sqrt(15 / (16 * np.pi)) * (x**2 - y**2),
        (2, -2): np.sqrt(15 / (4 * np.pi)) * x * y,
    }
    for (l, m), expected in table.items():
        np.testing.assert_allclose(real_sh(l, m, pts), expected, atol=1e-14)


def test_harmonic_bound_is_uniform(rng):
    pts = uniform_sphere(2000, rng)
    for l in range(9):
        for m in range(-l, l + 1):
            assert np.abs(real_sh(l, m, pts)).max() <= harmonic_bound(l) + 1e-12


def test_evaluate_examples():
    assert evaluate(constant(2.0), np.array([0.6, 0, 0.8])) == 2.0
    f = p2_factor(0.3)
    assert evaluate(f, Z) == pytest.approx(1.2, abs=1e-14)
    assert evaluate(f, X) == pytest.approx(0.9, abs=1e-14)


def test_nonpositive_evaluation_reports_node():
    f = harmonic(HarmonicSpec(((1, 0, 2.0 / harmonic_bound(1)),), offset=1.0))  # 1 + 2z
    with pytest.raises(NonPositiveFactorError) as err:
        f(np.array([Z, -Z]))
    np.testing.assert_array_equal(err.value.point, -Z)
    assert err.value.value == pytest.approx(-1.0)


def test_validate_examples():
    rule = sphere_rule(32)
    res = validate(constant(1.0), rule)
    assert (res.min_value, res.evenness_residual) == (1.0, 0.0)

    res = validate(p2_factor(0.3), rule, require_even=True)
    assert res.evenness_residual < 1e-12
    # brute-force lat-long scan: the minimum sits on the equator
    scan = p2_factor(0.3)(latlong_points(181, 360)).min()
    assert scan == pytest.approx(0.9, abs=1e-12)
    assert res.min_value == pytest.approx(scan, abs=1e-12)

    odd = harmonic(HarmonicSpec(((1, 0, 0.5 / harmonic_bound(1)),), offset=1.0))  # 1 + z/2
    res = validate(odd, rule)
    assert res.min_value == pytest.approx(0.5, abs=1e-14)
    assert res.evenness_residual == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(EvennessError):
        validate(odd, rule, require_even=True)
    with pytest.raises(EvennessError):
        ProjectiveFactor(odd)


def test_validate_rejects_nonpositive():
    f = harmonic(HarmonicSpec(((2, 0, -1.5 / harmonic_bound(2)),), offset=1.0))  # -0.5 at the poles
    with pytest.raises(NonPositiveFactorError):
        validate(f, sphere_rule(16))


def test_random_even_factor_determinism_and_degenerate_case():
    a = random_even_factor(42, 8, 0.5)
    b = random_even_factor(42, 8, 0.5)
    assert a.rep.terms == b.rep.terms
    assert a.rep.terms != random_even_factor(43, 8, 0.5).rep.terms
    assert all(l % 2 == 0 and l >= 2 for l, _, _ in a.rep.terms)
    assert random_even_factor(7, 0, 0.5).kind == "constant"
    assert random_even_factor(7, 0, 0.5)(Z) == 1.0


def test_random_factor_sup_norm_rescaling():
    rule = sphere_rule(24)
    for seed in range(100):
        f = random_even_factor(seed, 8, 0.5)
        res = validate(f, rule, require_even=True)
        assert res.min_value >= 0.5 - 1e-9
        assert res.evenness_residual < 1e-9
        bound = sum(abs(c) * harmonic_bound(l) for l, _, c in f.rep.terms)
        assert bound == pytest.approx(0.5, rel=1e-12)


def test_general_random_factor_has_odd_terms():
    f = random_factor(3, 4, 0.3)
    assert any(l % 2 for l, _, _ in f.rep.terms)
    assert not f.even


@settings(max_examples=30)
@given(st.floats(0.1, 10.0), st.integers(0, 1000))
def test_scaling_is_exact(c, seed):
    f = random_even_factor(seed, 6, 0.4)
    pts = uniform_sphere(20, np.random.default_rng(seed))
    np.testing.assert_array_equal(f.scaled(c)(pts), c * f(pts))


@pytest.mark.parametrize("seed", range(5))
def test_grid_representation_consistency(seed, rng):
    pts = uniform_sphere(3000, rng)
    for f in (random_even_factor(seed, 8, 0.5), random_factor(seed, 8, 0.5)):
        high = sample_to_grid(f, 32, order=11)
        assert np.abs(high(pts) - f(pts)).max() < 1e-6
        # bilinear: second-order in the node spacing pi / 32
        bilinear = sample_to_grid(f, 32)
        assert np.abs(bilinear(pts) - f(pts)).max() < 2e-2


def test_grid_reproduces_nodes_and_evenness():
    rule = sphere_rule(12)
    f = p2_factor(0.3)
    g = sample_to_grid(f, 12, order=3)
    np.testing.assert_allclose(g(rule.nodes), f(rule.nodes), atol=1e-13)
    assert g.even
    ProjectiveFactor(g)  # evenness survives interpolation
    with pytest.raises(ValueError):
        sample_to_grid(f, 4, order=4)


def test_presets():
    rows = list_presets()
    assert len(rows) >= 4
    text = "\n".join(f"{u} {d}" for u, d in rows)
    assert "constant" in text and "p2" in text and "z^2 - 1/3" in text
    assert preset("constant:2")(Z) == 2.0
    assert preset("p2:0.3")(X) == pytest.approx(0.9)
    assert preset("p4:0.3")(Z) == pytest.approx(1.3)
    assert preset("mixed:5").even
    with pytest.raises(ValueError):
        preset("nope:1")
    with pytest.raises(ValueError):
        preset("constant:-1")
    with pytest.raises(ValueError):
        preset("p2:abc")


def test_p4_is_legendre(rng):
    pts = uniform_sphere(100, rng)
    z = pts[:, 2]
    np.testing.assert_allclose(p4_factor(0.2)(pts), 1 + 0.2 * (35 * z**4 - 30 * z**2 + 3) / 8, atol=1e-14)


def test_spec_file_round_trip(tmp_path):
    spec = random_even_factor(9, 6, 0.3).rep
    path = tmp_path / "f.txt"
    path.write_text(format_spec(spec))
    assert parse_spec(path.read_text()) == spec
    text = "# comment\noffset 1.5\n\n2 0 0.25  # zonal\n2 -1 0.125\n"
    parsed = parse_spec(text)
    assert parsed.offset == 1.5
    assert parsed.terms == ((2, -1, 0.125), (2, 0, 0.25))


@pytest.mark.parametrize(
    "text",
    ["2 0 0.1\n", "offset 1\n2 3 0.1\n", "offset 1\n2 0\n", "offset 1\n40 0 0.1\n", ""],
)
def test_spec_parse_errors(text):
    with pytest.raises(ValueError):
        parse_spec(text)


def test_fingerprint_depends_on_content_only():
    a = random_even_factor(1, 4, 0.3)
    assert fingerprint(a) == fingerprint(random_even_factor(1, 4, 0.3))
    assert fingerprint(a) != fingerprint(random_even_factor(2, 4, 0.3))
    assert fingerprint(a) != fingerprint(a.scaled(2.0))
    assert fingerprint(constant(1.0)) != fingerprint(constant(2.0))
    g = sample_to_grid(a, 8)
    assert fingerprint(g) == fingerprint(sample_to_grid(a, 8))


def test_validated_records_minimum():
    f = validated(p2_factor(0.3), sphere_rule(16), require_even=True)
    assert f.validated_min == pytest.approx(0.9)
    assert f.scaled(2.0).validated_min == pytest.approx(1.8)
