"""Positive conformal factors ``f`` on S^2, ``g = f^2 g0``.

Three representations are supported: a constant, a finite real
spherical-harmonic series plus a constant offset, and samples on a
:class:`~systolab.geometry.SphereRule` grid with local Lagrange interpolation.

Real spherical harmonics
------------------------
Orthonormal on S^2 (``int Y_lm^2 dA = 1``), no Condon-Shortley phase::

    Y_00  = 1 / (2 sqrt(pi))
    Y_10  = sqrt(3 / 4pi) z      Y_11 = sqrt(3 / 4pi) x      Y_1,-1 = sqrt(3 / 4pi) y
    Y_20  = sqrt(5 / 16pi) (3 z^2 - 1)
    Y_21  = sqrt(15 / 4pi) x z   Y_2,-1 = sqrt(15 / 4pi) y z
    Y_22  = sqrt(15 / 16pi) (x^2 - y^2)                      Y_2,-2 = sqrt(15 / 4pi) x y

In general ``Y_l0 = N_l0 P_l(z)``, ``Y_lm = sqrt(2) N_lm P_l^m(z) cos(m phi)``
and ``Y_l,-m = sqrt(2) N_lm P_l^m(z) sin(m phi)`` for ``m > 0``, with
``N_lm = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!)`` and ``P_l^m >= 0`` near ``z = 1``.
Every real harmonic of degree ``l`` is bounded by ``sqrt((2l+1)/(4pi))``.

Harmonic spec files
-------------------
Plain text, one ``l m coeff`` term per line after a header line
``offset <value>``. Blank lines and ``#`` comments are ignored.
"""
import functools
import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .geometry import SphereRule, sphere_rule

DEFAULT_MAX_DEGREE = 16
EVENNESS_TOL = 1e-9
_AXES = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
)


class FactorValidationError(ValueError):
    """The factor cannot be used as a conformal factor (for the requested use)."""


class NonPositiveFactorError(FactorValidationError):
    def __init__(self, value, point):
        self.value = float(value)
        self.point = np.asarray(point, dtype=float)
        super().__init__(f"factor is {self.value!r} <= 0 at {self.point.tolist()}")


class EvennessError(FactorValidationError):
    def __init__(self, residual):
        self.residual = float(residual)
        super().__init__(
            f"factor is not even (max |f(v) - f(-v)| = {self.residual:.3e}); "
            "it does not descend to RP^2"
        )


# --------------------------------------------------------------------------
# real spherical harmonics
# --------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _recurrence_tables(lmax):
    a = np.zeros((lmax + 1, lmax + 1))
    b = np.zeros((lmax + 1, lmax + 1))
    mm = np.empty(lmax + 1)
    mm[0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, lmax + 1):
        mm[m] = mm[m - 1] * math.sqrt((2 * m + 1) / (2 * m))
    for m in range(lmax + 1):
        for l in range(m + 1, lmax + 1):
            a[l, m] = math.sqrt((4 * l * l - 1) / (l * l - m * m))
            b[l, m] = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
    return a, b, mm


def harmonic_bound(l):
    """Uniform bound ``sqrt((2l+1)/(4pi))`` of any real harmonic of degree ``l``."""
    return math.sqrt((2 * l + 1) / (4.0 * math.pi))


def _coef_tables(terms, lmax):
    c = np.zeros((lmax + 1, lmax + 1))
    s = np.zeros((lmax + 1, lmax + 1))
    for l, m, coef in terms:
        if m == 0:
            c[l, 0] += coef
        elif m > 0:
            c[l, m] += math.sqrt(2.0) * coef
        else:
            s[l, -m] += math.sqrt(2.0) * coef
    return c, s


def _sh_eval(points, cos_coef, sin_coef):
    points = np.asarray(points, dtype=float)
    shape = points.shape[:-1]
    flat = np.ascontiguousarray(points.reshape(-1, 3))
    a, b, mm = _recurrence_tables(cos_coef.shape[0] - 1)
    return kernels.sh_series(flat, cos_coef, sin_coef, a, b, mm).reshape(shape)


def real_sh(l, m, points):
    """Evaluate the single real harmonic ``Y_lm`` at unit vectors ``points``."""
    if abs(m) > l:
        raise ValueError(f"|m| = {abs(m)} exceeds l = {l}")
    c, s = _coef_tables([(l, m, 1.0)], l)
    return _sh_eval(points, c, s)


# --------------------------------------------------------------------------
# representations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicSpec:
    """``offset + sum coeff * Y_lm``; terms are ``(l, m, coeff)`` triples."""

    terms: tuple
    offset: float = 0.0
    max_degree: int = DEFAULT_MAX_DEGREE

    def __post_init__(self):
        terms = tuple(sorted((int(l), int(m), float(c)) for l, m, c in self.terms))
        for l, m, _ in terms:
            if l < 0 or abs(m) > l:
                raise ValueError(f"invalid harmonic index (l={l}, m={m})")
            if l > self.max_degree:
                raise ValueError(f"degree {l} exceeds the configured maximum {self.max_degree}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def degree(self):
        return max((l for l, _, _ in self.terms), default=0)

    @property
    def is_even(self):
        return all(l % 2 == 0 for l, _, c in self.terms if c != 0.0)

    @functools.cached_property
    def tables(self):
        return _coef_tables(self.terms, self.degree)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if not self.terms:
            return np.full(points.shape[:-1], self.offset)
        c, s = self.tables
        return self.offset + _sh_eval(points, c, s)


@dataclass(frozen=True, eq=False)
class GridSamples:
    """Samples of a factor on the nodes of a sphere rule.

    ``values[j, k]`` is the value at polar angle ``theta[j]`` (ascending) and
    azimuth ``phi[k] = k pi / level``. Evaluation is tensor-product Lagrange
    interpolation of polynomial degree ``order`` in ``(theta, phi)``; the
    polar axis is extended across the poles by ``f(-theta, phi) = f(theta,
    phi + pi)`` and the azimuth wraps periodically. ``order = 1`` is bilinear.
    """

    level: int
    order: int
    theta: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.order < self.level:
            raise ValueError(f"interpolation order must be in [1, {self.level - 1}]")

    @functools.cached_property
    def _extended(self):
        g = self.order + 1
        L = self.level
        shifted = np.roll(self.values, -L, axis=1)  # phi + pi
        ext_theta = np.concatenate([-self.theta[g - 1 :: -1], self.theta, 2 * np.pi - self.theta[::-1][:g]])
        ext_rows = np.concatenate([shifted[g - 1 :: -1], self.values, shifted[::-1][:g]])
        ext_rows = np.concatenate([ext_rows[:, -g:], ext_rows, ext_rows[:, :g]], axis=1)
        return ext_theta, ext_rows, g

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        p = points.reshape(-1, 3)
        theta = np.arctan2(np.hypot(p[:, 0], p[:, 1]), p[:, 2])
        phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)
        ext_theta, ext_rows, g = self._extended
        npts = self.order + 1
        half = npts // 2

        right = np.searchsorted(ext_theta, theta, side="right")
        start = np.clip(right - half, 0, len(ext_theta) - npts)
        rows = start[:, None] + np.arange(npts)
        wt = _lagrange_weights(ext_theta[rows], theta)

        dphi = np.pi / self.level
        u = phi / dphi
        right = np.floor(u).astype(int) + 1
        cstart = right - half
        cols = cstart[:, None] + np.arange(npts)
        wp = _lagrange_weights(cols * dphi, phi)
        cols = cols + g

        vals = ext_rows[rows[:, :, None], cols[:, None, :]]
        out = np.einsum("nj,nk,njk->n", wt, wp, vals)
        return out.reshape(shape)


def _lagrange_weights(nodes, x):
    """Lagrange basis weights for each row of ``nodes`` evaluated at ``x``."""
    p = nodes.shape[1]
    w = np.ones_like(nodes)
    for j in range(p):
        for k in range(p):
            if k != j:
                w[:, j] *= (x - nodes[:, k]) / (nodes[:, j] - nodes[:, k])
    return w


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """A positive function ``f`` on S^2 with a representation-level scale.

    ``rep`` is a float (constant), a :class:`HarmonicSpec` or a
    :class:`GridSamples`. ``even`` records that ``f(-v) = f(v)`` is intended;
    it is checked by :func:`validate`. ``validated_min`` is the minimum seen
    by the last validation scan.
    """

    rep: object
    scale: float = 1.0
    even: bool = False
    validated_min: float | None = field(default=None, compare=False)

    @property
    def kind(self):
        if isinstance(self.rep, HarmonicSpec):
            return "harmonic"
        if isinstance(self.rep, GridSamples):
            return "grid"
        return "constant"

    def raw(self, points):
        """Evaluate without the positivity check."""
        points = np.asarray(points, dtype=float)
        if self.kind == "constant":
            return np.full(points.shape[:-1], self.scale * self.rep)
        return self.scale * self.rep(points)

    def __call__(self, points):
        values = self.raw(points)
        if values.size and not np.min(values) > 0.0:
            i = int(np.argmin(values))
            raise NonPositiveFactorError(values.flat[i], np.reshape(points, (-1, 3))[i])
        return values

    def scaled(self, c):
        """``c * f``; only the scale changes, so values scale exactly."""
        vm = None if self.validated_min is None else c * self.validated_min
        return replace(self, scale=self.scale * c, validated_min=vm)


def evaluate(f, v):
    """``f(v)`` for a unit vector (or stack of them)."""
    return f(v)


def constant(c):
    return ConformalFactor(float(c), even=True)


def harmonic(spec, scale=1.0):
    return ConformalFactor(spec, scale=scale, even=spec.is_even)


def sample_to_grid(f, level, order=1):
    """Sample ``f`` on the nodes of ``sphere_rule(level)``."""
    rule = sphere_rule(level)
    theta = np.arccos(rule.cos_theta)[::-1]
    values = f.raw(rule.nodes).reshape(level, 2 * level)[::-1].copy()
    return ConformalFactor(GridSamples(level, order, theta, values), even=f.even)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationResult:
    min_value: float
    min_point: tuple
    evenness_residual: float


def validation_nodes(rule):
    return np.concatenate([rule.nodes, _AXES])


def validate(f, rule: SphereRule, require_even=False):
    """Scan ``f`` on the rule nodes plus the six coordinate axis points.

    Raises
    ------
    NonPositiveFactorError
        If the minimum is not positive.
    EvennessError
        If ``require_even`` and ``max |f(v) - f(-v)| > 1e-9``.
    """
    nodes = validation_nodes(rule)
    values = f.raw(nodes)
    i = int(np.argmin(values))
    if not values[i] > 0.0:
        raise NonPositiveFactorError(values[i], nodes[i])
    residual = float(np.max(np.abs(values - f.raw(-nodes))))
    if require_even and residual > EVENNESS_TOL:
        raise EvennessError(residual)
    return ValidationResult(float(values[i]), tuple(nodes[i].tolist()), residual)


def validated(f, rule, require_even=False):
    """Return ``f`` with ``validated_min`` filled in (raises like :func:`validate`)."""
    res = validate(f, rule, require_even)
    return replace(f, validated_min=res.min_value, even=f.even or require_even)


class ProjectiveFactor:
    """An even factor regarded as a function on RP^2 through ``rho: S^2 -> RP^2``.

    RP^2 integrals are computed on S^2 and halved.
    """

    def __init__(self, f, rule=None):
        rule = rule if rule is not None else sphere_rule(16)
        self.factor = validated(f, rule, require_even=True)

    def __call__(self, points):
        return self.factor(points)

    def scaled(self, c):
        out = object.__new__(ProjectiveFactor)
        out.factor = self.factor.scaled(c)
        return out

    def __repr__(self):
        return f"ProjectiveFactor({self.factor!r})"


# --------------------------------------------------------------------------
# generators and presets
# --------------------------------------------------------------------------


def _random_spec(seed, max_degree, amplitude, degrees):
    if not 0.0 < amplitude < 1.0:
        raise ValueError("amplitude must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    terms = [(l, m, rng.standard_normal()) for l in degrees for m in range(-l, l + 1)]
    if not terms:
        return None
    sup = sum(abs(c) * harmonic_bound(l) for l, _, c in terms)
    k = amplitude / sup
    return HarmonicSpec(tuple((l, m, k * c) for l, m, c in terms), offset=1.0,
                        max_degree=max(max_degree, DEFAULT_MAX_DEGREE))


def random_even_factor(seed, max_degree, amplitude):
    """``1 + sum`` of even-degree (``2 <= l <= max_degree``) harmonics.

    Coefficients are standard normal draws from ``numpy.random.default_rng(seed)``
    in ``(l, m)`` order, rescaled so that ``sum |c_lm| sqrt((2l+1)/(4pi))``
    equals ``amplitude``; hence ``f >= 1 - amplitude``.
    """
    spec = _random_spec(seed, max_degree, amplitude, range(2, max_degree + 1, 2))
    return constant(1.0) if spec is None else harmonic(spec)


def random_factor(seed, max_degree, amplitude):
    """Like :func:`random_even_factor` but with all degrees ``1..max_degree``."""
    spec = _random_spec(seed, max_degree, amplitude, range(1, max_degree + 1))
    return constant(1.0) if spec is None else harmonic(spec)


def p2_factor(a):
    """``1 + a (z^2 - 1/3)``."""
    # z^2 - 1/3 = (2/3) P_2(z) = (2/3) Y_20 / sqrt(5/(4pi))
    return harmonic(HarmonicSpec(((2, 0, a * (2.0 / 3.0) / harmonic_bound(2)),), offset=1.0))


def p4_factor(a):
    """``1 + a P_4(z)`` with the Legendre polynomial ``P_4``."""
    return harmonic(HarmonicSpec(((4, 0, a / harmonic_bound(4)),), offset=1.0))


PRESETS = {
    "constant": ("constant:c", "f = c (round metric scaled by c)", 1.0),
    "p2": ("p2:a", "f = 1 + a (z^2 - 1/3)", 0.3),
    "p4": ("p4:a", "f = 1 + a P4(z), P4 = (35 z^4 - 30 z^2 + 3) / 8", 0.3),
    "mixed": ("mixed:seed", "random even factor, degree <= 8, amplitude 0.4", 0),
}


def list_presets():
    """``(usage, description)`` rows for every preset."""
    return [(usage, desc) for usage, desc, _ in PRESETS.values()]


def preset(text):
    """Build a factor from ``NAME[:PARAM]``, e.g. ``p2:0.3`` or ``constant:2``."""
    name, _, param = text.partition(":")
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    default = PRESETS[name][2]
    try:
        value = type(default)(param) if param else default
    except ValueError:
        raise ValueError(f"bad parameter {param!r} for preset {name!r}") from None
    if name == "constant":
        if not value > 0:
            raise ValueError("constant preset needs c > 0")
        return constant(value)
    if name == "p2":
        return p2_factor(value)
    if name == "p4":
        return p4_factor(value)
    return random_even_factor(value, 8, 0.4)


# --------------------------------------------------------------------------
# spec files and fingerprints
# --------------------------------------------------------------------------


def parse_spec(text, max_degree=DEFAULT_MAX_DEGREE):
    offset = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if offset is None:
            if len(parts) != 2 or parts[0] != "offset":
                raise ValueError(f"line {lineno}: expected header 'offset <value>'")
            offset = float(parts[1])
            continue
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'l m coeff'")
        terms.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if offset is None:
        raise ValueError("missing 'offset <value>' header")
    return HarmonicSpec(tuple(terms), offset, max_degree)


def format_spec(spec):
    lines = [f"offset {spec.offset!r}"]
    lines += [f"{l} {m} {c!r}" for l, m, c in spec.terms]
    return "\n".join(lines) + "\n"


def read_spec(path, max_degree=DEFAULT_MAX_DEGREE):
    with open(path) as fh:
        return parse_spec(fh.read(), max_degree)


def fingerprint(f):
    """SHA-256 of the factor's canonical description."""
    h = hashlib.sha256()
    h.update(f"{f.kind};scale={f.scale!r};".encode())
    if f.kind == "constant":
        h.update(repr(float(f.rep)).encode())
    elif f.kind == "harmonic":
        h.update(format_spec(f.rep).encode())
    else:
        h.update(f"level={f.rep.level};order={f.rep.order};".encode())
        h.update(np.ascontiguousarray(f.rep.values).tobytes())
    return h.hexdigest()
