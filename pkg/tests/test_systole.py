import numpy as np
import pytest

from systolab import kernels
from systolab.conformal import constant, p2_factor, random_even_factor
from systolab.systole import (
    MAX_LEVEL,
    MeshError,
    all_sources,
    arc_angle,
    band_sources,
    build_mesh,
    compute_systole,
    path_length,
    simpson_weights,
    weight_edges,
    write_mesh,
)

from oracles import graph_systole


@pytest.mark.parametrize("level", range(5))
def test_mesh_counts_and_euler_characteristic(level):
    mesh = build_mesh(level)
    V, E, F = len(mesh.vertices), len(mesh.edges), len(mesh.faces)
    assert (V, E, F) == (10 * 4**level + 2, 30 * 4**level, 20 * 4**level)
    assert V - E + F == 2  # S^2; the quotient has half of each, chi = 1
    np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1, atol=1e-15)
    # each edge borders exactly two faces
    fe = np.sort(np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]],
                                 mesh.faces[:, [2, 0]]]), axis=1)
    _, counts = np.unique(fe, axis=0, return_counts=True)
    assert len(counts) == E and np.all(counts == 2)


@pytest.mark.parametrize("level", [0, 3])
def test_antipodal_pairing(level):
    mesh = build_mesh(level)
    s = mesh.partner
    idx = np.arange(len(s))
    assert np.all(s[s] == idx) and np.all(s != idx)
    np.testing.assert_array_equal(mesh.vertices[s], -mesh.vertices)
    ep = mesh.edge_partner()
    np.testing.assert_array_equal(np.sort(s[mesh.edges], axis=1), mesh.edges[ep])
    np.testing.assert_array_equal(mesh.angles[ep], mesh.angles)


def test_edge_angles_shrink_by_half():
    h = [build_mesh(k).max_edge_angle for k in range(1, 6)]
    ratios = np.array(h[1:]) / np.array(h[:-1])
    assert np.all(np.abs(ratios - 0.5) < 0.02)
    assert build_mesh(5).max_edge_angle == pytest.approx(0.04134, abs=1e-5)


def test_level_out_of_range():
    with pytest.raises(MeshError):
        build_mesh(-1)
    with pytest.raises(MeshError):
        build_mesh(MAX_LEVEL + 1)


def test_arc_angle_is_accurate_for_short_arcs():
    a = np.array([1.0, 0, 0])
    b = np.array([np.cos(1e-9), np.sin(1e-9), 0])
    assert arc_angle(a, b) == pytest.approx(1e-9, rel=1e-7)


def test_simpson_weights():
    w = simpson_weights(5)
    np.testing.assert_allclose(w * 12, [1, 4, 2, 4, 1])
    t = np.linspace(0, 1, 5)
    assert w @ t**3 == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ValueError):
        simpson_weights(4)


def test_edge_weights_constant_and_symmetric():
    mesh = build_mesh(3)
    np.testing.assert_allclose(weight_edges(mesh, constant(2.0)).weights, 2 * mesh.angles, rtol=1e-14)
    wm = weight_edges(mesh, random_even_factor(2, 6, 0.4))
    np.testing.assert_allclose(wm.weights[mesh.edge_partner()], wm.weights, rtol=1e-12)
    assert not wm.weights.flags.writeable


@pytest.mark.parametrize("level", [2, 3, 4])
@pytest.mark.parametrize("factor", [constant(1.0), p2_factor(0.3), random_even_factor(5, 6, 0.5)],
                         ids=["constant", "p2", "random"])
def test_systole_matches_scipy_oracle(level, factor):
    wm = weight_edges(build_mesh(level), factor)
    res = compute_systole(wm)
    assert res.L == pytest.approx(graph_systole(wm.mesh, wm.weights), rel=1e-13)


@pytest.mark.parametrize("seed", range(4))
def test_band_and_all_sources_agree(seed):
    wm = weight_edges(build_mesh(3), random_even_factor(seed, 8, 0.6))
    band, full = compute_systole(wm), compute_systole(wm, sources="all")
    # same curve, entered at a different vertex: sums agree up to summation order
    assert band.L == pytest.approx(full.L, rel=1e-14)
    assert band.sources_scanned < full.sources_scanned == len(all_sources(wm.mesh))
    with pytest.raises(ValueError):
        compute_systole(wm, sources="some")


def test_band_sources_are_representatives():
    mesh = build_mesh(4)
    src = band_sources(mesh)
    assert np.all(src < mesh.partner[src])
    z = mesh.vertices[src, 2]
    assert np.abs(z).max() < 2 * mesh.max_edge_angle


def test_path_is_a_noncontractible_lift():
    wm = weight_edges(build_mesh(4), p2_factor(0.3))
    res = compute_systole(wm)
    path = res.path
    assert path[0] == res.base and path[-1] == wm.mesh.partner[res.base]
    assert len(set(path.tolist())) == len(path)
    assert path_length(wm, path) == pytest.approx(res.L, rel=1e-14)
    # the antipodal image closes it up into a loop twice as long
    image = wm.mesh.partner[path]
    assert image[0] == path[-1] and image[-1] == path[0]
    loop = np.concatenate([path, image[1:]])
    assert path_length(wm, loop) == pytest.approx(2 * res.L, rel=1e-14)


def test_path_length_rejects_non_edges():
    wm = weight_edges(build_mesh(1), constant(1.0))
    with pytest.raises(MeshError):
        path_length(wm, [0, wm.mesh.partner[0]])


def test_constant_metric_systole_is_pi():
    for level in (1, 3, 5):
        res = compute_systole(weight_edges(build_mesh(level), constant(1.0)))
        assert res.L == pytest.approx(np.pi, rel=1e-14)


def test_threads_do_not_change_the_result():
    wm = weight_edges(build_mesh(4), random_even_factor(1, 8, 0.5))
    a = compute_systole(wm)
    b = compute_systole(wm, threads=4)
    assert (a.L, a.base) == (b.L, b.base)
    np.testing.assert_array_equal(a.path, b.path)


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")
@pytest.mark.parametrize("sources", ["band", "all"])
def test_backends_agree(sources):
    wm = weight_edges(build_mesh(3), random_even_factor(4, 8, 0.5))
    a = compute_systole(wm, sources=sources, backend="compiled")
    b = compute_systole(wm, sources=sources, backend="python")
    assert (a.L, a.base) == (b.L, b.base)
    np.testing.assert_array_equal(a.path, b.path)


def test_write_mesh(tmp_path):
    wm = weight_edges(build_mesh(1), p2_factor(0.3))
    out = tmp_path / "mesh.txt"
    write_mesh(wm, out)
    lines = out.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 42
    edges = [l.split() for l in lines if l.startswith("e ")]
    assert len(edges) == 120
    assert float(edges[0][3]) == wm.weights[0]
