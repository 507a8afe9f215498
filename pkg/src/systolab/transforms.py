"""Great-circle integrals of a conformal factor and the variance moments.

``funk(f, u)`` is the integral of ``f`` over the great circle with pole ``u``,
i.e. the round-metric length element weighted by ``f``: the ``g``-length of
that circle. Its minimum over poles is ``m`` on S^2; on RP^2 every projective
line is covered twice by a great circle, so ``m_bar = m / 2``.
"""
from dataclasses import dataclass

import numpy as np

from .conformal import ProjectiveFactor
from .geometry import CircleRule, great_circle_points, _orthonormal_frame

FOUR_PI = 4.0 * np.pi
TWO_PI = 2.0 * np.pi
DEFAULT_CIRCLE = CircleRule(256)
CERTIFY_TOL = 1e-8
TIE_RTOL = 1e-12
GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(frozen=True, eq=False)
class FunkValue:
    pole: np.ndarray
    value: float


def funk_values(f, poles, rule=DEFAULT_CIRCLE, chunk=1024):
    """``(2 pi / n) sum_i f(cos t_i e1 + sin t_i e2)`` for each pole in a stack."""
    poles = np.atleast_2d(np.asarray(poles, dtype=float))
    out = np.empty(len(poles))
    angles = rule.angles
    for lo in range(0, len(poles), chunk):
        pts = great_circle_points(poles[lo : lo + chunk], angles)
        out[lo : lo + chunk] = rule.weight * np.sum(f(pts), axis=-1)
    return out


def funk(f, pole, rule=DEFAULT_CIRCLE):
    pole = np.asarray(pole, dtype=float)
    return FunkValue(pole, float(funk_values(f, pole[None, :], rule)[0]))


def hemisphere_grid(n):
    """Fibonacci spiral with ``n`` equal-area points on the upper hemisphere."""
    i = np.arange(n)
    z = 1.0 - (i + 0.5) / n
    r = np.sqrt(1.0 - z * z)
    phi = i * GOLDEN_ANGLE
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


@dataclass(frozen=True, eq=False)
class FunkMinimum:
    """Best great circle found.

    ``certified`` is set when the compass refinement from the best grid pole
    ran to its final step size (``step0 / 2**halvings``) without hitting the
    move cap, so the reported value is a local minimum to ``CERTIFY_TOL``, and
    the refined value does not exceed the grid minimum.
    """

    value: float
    pole: np.ndarray
    certified: bool
    grid_value: float
    grid_pole: np.ndarray


def _is_tie(a, b):
    return abs(a - b) <= TIE_RTOL * max(abs(a), abs(b))


def _select_starts(poles, values, count, separation=0.3):
    # values within TIE_RTOL of the minimum count as equal; those go first in pole order
    vmin = values.min()
    tied = values <= vmin + TIE_RTOL * abs(vmin)
    key = np.where(tied, vmin, values)
    order = np.lexsort((poles[:, 2], poles[:, 1], poles[:, 0], key))
    starts = []
    for i in order:
        if all(abs(poles[i] @ poles[j]) < np.cos(separation) for j in starts):
            starts.append(i)
            if len(starts) == count:
                break
    return starts


def _compass(f, pole, value, rule, step, halvings, max_moves):
    """Pattern search on the sphere: try +-e1, +-e2 at angle ``step``; halve on failure."""
    done = 0
    moves = 0
    while done < halvings:
        if moves >= max_moves:
            return pole, value, False
        e1, e2 = _orthonormal_frame(pole)
        dirs = np.array([e1, -e1, e2, -e2])
        cand = np.cos(step) * pole + np.sin(step) * dirs
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        vals = funk_values(f, cand, rule)
        k = int(np.argmin(vals))
        if vals[k] < value and not _is_tie(vals[k], value):
            pole, value = cand[k], float(vals[k])
            moves += 1
        else:
            step /= 2.0
            done += 1
    return pole, value, True


def min_funk_sphere(f, rule=DEFAULT_CIRCLE, n_grid=2000, halvings=20, starts=4,
                    max_moves=400):
    """Minimize the great-circle integral over poles.

    A Fibonacci grid of ``n_grid`` hemisphere poles (antipodal poles give the
    same circle) is scanned; the ``starts`` best well-separated grid poles
    are polished by compass search with step halving. Ties are resolved
    towards the lexicographically smallest pole.
    """
    grid = hemisphere_grid(n_grid)
    vals = funk_values(f, grid, rule)
    idx = _select_starts(grid, vals, starts)
    best = idx[0]
    step0 = 1.5 * np.sqrt(TWO_PI / n_grid)
    results = []
    for i in idx:
        pole, value, ok = _compass(f, grid[i], float(vals[i]), rule, step0, halvings, max_moves)
        results.append((value, i, pole, ok))
    vmin = min(r[0] for r in results)
    value, i, pole, ok = min((r for r in results if _is_tie(r[0], vmin)),
                             key=lambda r: tuple(r[2]))
    certified = ok and value <= vals[best] + CERTIFY_TOL
    return FunkMinimum(value, pole, bool(certified), float(vals[best]), grid[best])


def min_funk_projective(f, rule=DEFAULT_CIRCLE, **kw):
    """``m_bar``: half the minimal great-circle integral of the even factor."""
    if not isinstance(f, ProjectiveFactor):
        f = ProjectiveFactor(f)
    res = min_funk_sphere(f.factor, rule, **kw)
    return FunkMinimum(res.value / 2.0, res.pole, res.certified, res.grid_value / 2.0,
                       res.grid_pole)


@dataclass(frozen=True)
class SphereMoments:
    I1: float
    I2: float
    E: float
    Var: float
    V: float


@dataclass(frozen=True)
class ProjectiveMoments:
    J1: float
    J2: float
    V_bar: float
    VarP: float

    @property
    def area(self):
        return self.J2


def moments_sphere(f, rule):
    """Integral moments of ``f`` for the area measure and for ``mu = dA / 4pi``.

    ``V = int f^2 - (int f)^2 / 4pi`` is evaluated in the centered form
    ``sum w (f - E)^2``, which cannot go negative through cancellation.
    """
    fv = f(rule.nodes)
    w = rule.weights
    I1 = float(np.sum(w * fv))
    I2 = float(np.sum(w * fv * fv))
    E = I1 / FOUR_PI
    V = float(np.sum(w * (fv - E) ** 2))
    return SphereMoments(I1, I2, E, V / FOUR_PI, V)


def moments_projective(f, rule):
    """RP^2 moments of an even factor: halved sphere integrals.

    ``J2`` is the area of ``f^2 g0``; ``V_bar = J2 - J1^2 / 2pi = V / 2`` and
    ``VarP = V_bar / 2pi`` is the variance for ``g0 / 2pi``.
    """
    if not isinstance(f, ProjectiveFactor):
        f = ProjectiveFactor(f)
    s = moments_sphere(f.factor, rule)
    v_bar = s.V / 2.0
    return ProjectiveMoments(s.I1 / 2.0, s.I2 / 2.0, v_bar, v_bar / TWO_PI)
