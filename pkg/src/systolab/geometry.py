"""Points and frames on S^2 and on the frame manifold M, the metric g_M, great
circles, and product quadrature rules on S^1, S^2 and M.

Unit vectors are plain ``numpy`` arrays of shape ``(3,)`` (or stacks of shape
``(..., 3)``); :func:`unit_vector` is the validating constructor.

The frame manifold is ``M = {(v, w) : |v| = |w| = 1, v.w = 0}``. At a frame
the tangent vectors ``(0, n)``, ``(n, 0)`` and ``(w, -v)`` (``n = v x w``) are
declared orthonormal, which is the Euclidean metric of R^6 on
``A = span{(0,n), (n,0)}`` plus one half of it on ``B = span{(w,-v)}``.
"""
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

CONSTRUCTION_TOL = 1e-12
PROJECTION_TOL = 1e-6
TANGENT_TOL = 1e-9

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])


class GeometryError(ValueError):
    """Input is too far from the constraint set to be projected onto it."""


class NotTangentError(GeometryError):
    """A vector pair does not satisfy the linearized frame constraints."""

    def __init__(self, residual):
        self.residual = float(residual)
        super().__init__(f"vector pair is not tangent to M (residual {self.residual:.3e})")


class NonFiniteIntegrandError(ValueError):
    """An integrand returned inf or nan at a quadrature node."""


def unit_vector(x, tol=PROJECTION_TOL):
    """Return ``x`` as a unit vector, normalizing if ``| |x| - 1 | <= tol``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise GeometryError(f"expected a 3-vector, got shape {x.shape}")
    norm = np.linalg.norm(x)
    if abs(norm - 1.0) > tol:
        raise GeometryError(f"|x| = {norm!r} is not within {tol} of 1")
    return x / norm


def antipode(v):
    """The antipodal point ``-v``."""
    return -np.asarray(v, dtype=float)


def _orthonormal_frame(pole):
    """Right-handed completion ``(e1, e2)`` of ``pole``, vectorized.

    ``e1`` is the normalized projection of z-hat (or x-hat when
    ``|pole_z| > 0.9``) onto the plane orthogonal to ``pole``; ``e2 = pole x e1``.
    """
    pole = np.asarray(pole, dtype=float)
    ref = np.where(np.abs(pole[..., 2:3]) > 0.9, X_AXIS, Z_AXIS)
    e1 = ref - np.sum(ref * pole, axis=-1, keepdims=True) * pole
    e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(pole, e1)
    return e1, e2


@dataclass(frozen=True, eq=False)
class GreatCircle:
    """Great circle with unit normal ``pole``, parametrized by ``cos t e1 + sin t e2``."""

    pole: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    @classmethod
    def from_pole(cls, pole):
        pole = unit_vector(pole)
        e1, e2 = _orthonormal_frame(pole)
        return cls(pole, e1, e2)


def circle_point(c, t):
    """Point of the great circle ``c`` at angle ``t`` (scalar or array)."""
    t = np.asarray(t, dtype=float)[..., None]
    return np.cos(t) * c.e1 + np.sin(t) * c.e2


def great_circle_points(poles, angles):
    """Points ``cos t e1 + sin t e2`` for a stack of poles.

    Returns an array of shape ``poles.shape[:-1] + (len(angles), 3)``.
    """
    e1, e2 = _orthonormal_frame(np.asarray(poles, dtype=float))
    c = np.cos(angles)[:, None]
    s = np.sin(angles)[:, None]
    return c * e1[..., None, :] + s * e2[..., None, :]


@dataclass(frozen=True, eq=False)
class Frame:
    """A point ``(v, w)`` of M."""

    v: np.ndarray
    w: np.ndarray

    @classmethod
    def from_vectors(cls, v, w, tol=PROJECTION_TOL):
        """Validate ``(v, w)``; inputs within ``tol`` of M are projected (Gram-Schmidt)."""
        v = unit_vector(v, tol)
        w = np.asarray(w, dtype=float)
        dot = float(v @ w)
        if abs(dot) > tol:
            raise GeometryError(f"v.w = {dot!r} exceeds {tol}")
        w = unit_vector(w - dot * v, tol)
        return cls(v, w)

    @property
    def n(self):
        return np.cross(self.v, self.w)


class TangentBasis(NamedTuple):
    """The g_M-orthonormal basis ``e1 = (0,n)``, ``e2 = (n,0)``, ``e3 = (w,-v)``."""

    e1: tuple
    e2: tuple
    e3: tuple


def frame_basis(fr):
    n = fr.n
    zero = np.zeros(3)
    return TangentBasis((zero, n), (n, zero.copy()), (fr.w.copy(), -fr.v))


def tangent_residual(fr, t):
    """Largest violation of ``X.v = 0``, ``Y.w = 0``, ``X.w + Y.v = 0``."""
    x, y = (np.asarray(a, dtype=float) for a in t)
    return max(abs(x @ fr.v), abs(y @ fr.w), abs(x @ fr.w + y @ fr.v))


def _gm_coordinates(fr, t):
    x, y = (np.asarray(a, dtype=float) for a in t)
    n = fr.n
    # Euclidean projections onto (0,n), (n,0), (w,-v); the last has |.|^2 = 2
    return np.array([y @ n, x @ n, (x @ fr.w - y @ fr.v) / 2.0])


def gm_inner(fr, t1, t2, tol=TANGENT_TOL):
    """Inner product of two tangent pairs under ``g_M = g|_A + g|_B / 2``.

    Raises
    ------
    NotTangentError
        If either pair violates the tangency constraints by more than ``tol``.
    """
    for t in (t1, t2):
        r = tangent_residual(fr, t)
        if r > tol:
            raise NotTangentError(r)
    # in (e1, e2, e3) coordinates g_M is the identity
    return float(_gm_coordinates(fr, t1) @ _gm_coordinates(fr, t2))


def euclidean_inner(t1, t2):
    """Inner product of two vector pairs in R^6."""
    return float(np.dot(t1[0], t2[0]) + np.dot(t1[1], t2[1]))


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CircleRule:
    """Uniform rule on ``[0, 2 pi)``: ``n`` nodes of weight ``2 pi / n``."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("circle rule needs at least one node")

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def weight(self):
        return 2.0 * np.pi / self.n


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Gauss-Legendre (in ``cos theta``) times uniform azimuth product rule.

    Nodes are stored polar-index major: node ``i * 2L + k`` has polar cosine
    ``cos_theta[i]`` and azimuth ``phi[k]``.
    """

    level: int
    cos_theta: np.ndarray
    phi: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def degree(self):
        """Largest total degree integrated exactly."""
        return 2 * self.level - 1


def sphere_rule(level):
    """Product rule with ``level`` Gauss nodes and ``2 level`` azimuth nodes."""
    if level < 1:
        raise ValueError("sphere rule level must be >= 1")
    z, gw = np.polynomial.legendre.leggauss(level)
    phi = np.pi * np.arange(2 * level) / level
    s = np.sqrt(1.0 - z * z)
    nodes = np.stack(
        [
            (s[:, None] * np.cos(phi)[None, :]).ravel(),
            (s[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(z, 2 * level),
        ],
        axis=-1,
    )
    weights = np.repeat(gw * (np.pi / level), 2 * level)
    return SphereRule(level, z, phi, nodes, weights)


def _check_finite(values):
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteIntegrandError(f"integrand is {values.flat[i]} at node {i}")
    return values


def integrate_sphere(rule, h: Callable):
    """``sum_i w_i h(v_i)``; ``h`` maps an ``(N, 3)`` array to ``(N,)`` values."""
    values = _check_finite(h(rule.nodes))
    return float(np.sum(rule.weights * values))


@dataclass(frozen=True, eq=False)
class FrameRule:
    """Product of a sphere rule for ``v`` and a circle rule along the fiber of p.

    The fiber through base node ``v`` is ``w(t) = cos t w0 + sin t (v x w0)``,
    with ``w0`` the first great-circle frame vector of pole ``v``. Each fiber
    is a unit-speed curve in g_M, so the total mass is ``4 pi * 2 pi``.
    """

    base: SphereRule
    fiber: CircleRule
    v: np.ndarray
    w: np.ndarray
    weights: np.ndarray

    @property
    def total_mass(self):
        return float(np.sum(self.weights))


def frame_rule(level, fiber_n):
    base = sphere_rule(level)
    fiber = CircleRule(fiber_n)
    w = great_circle_points(base.nodes, fiber.angles)  # (N, n, 3)
    v = np.broadcast_to(base.nodes[:, None, :], w.shape)
    weights = np.repeat(base.weights * fiber.weight, fiber.n)
    return FrameRule(base, fiber, v.reshape(-1, 3).copy(), w.reshape(-1, 3), weights)


def integrate_frames(rule, h: Callable):
    """``sum w_v (2 pi / n) h(v, w(t))``; ``h(v, w)`` takes two ``(N, 3)`` arrays."""
    values = _check_finite(h(rule.v, rule.w))
    return float(np.sum(rule.weights * values))


def random_frames(count, rng):
    """``count`` frames with ``v`` uniform on S^2 and ``w`` uniform in the fiber."""
    v = rng.normal(size=(count, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    w = rng.normal(size=(count, 3))
    w -= np.sum(w * v, axis=1, keepdims=True) * v
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return [Frame(a, b) for a, b in zip(v, w)]
