"""Numerical checks of the submersion identities, the inequality chains and
the strengthened Pu inequality.

Every check returns a frozen report dataclass with a ``passed`` flag; nothing
here raises on a failed inequality.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .conformal import ProjectiveFactor
from .geometry import (
    CircleRule,
    frame_basis,
    frame_rule,
    gm_inner,
    integrate_frames,
    integrate_sphere,
    random_frames,
    sphere_rule,
)
from .systole import DEFAULT_LEVEL, DEFAULT_SAMPLES, build_mesh, compute_systole, weight_edges
from .transforms import (
    DEFAULT_CIRCLE,
    min_funk_projective,
    min_funk_sphere,
    moments_projective,
    moments_sphere,
)

DEFAULT_QUAD_LEVEL = 32
EQUALITY_RTOL = 1e-8
SLACK_TOL = 1e-9
ORTHO_TOL = 1e-12
FIBER_TOL = 1e-12
FUBINI_TOL = 1e-8
DEFAULT_KAPPA = 0.31


class _Report:
    def to_dict(self):
        return {k: _plain(v) for k, v in asdict(self).items()}


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


@dataclass(frozen=True)
class SubmersionReport(_Report):
    frames: int
    orthonormality_residual: float
    gm_gram_residual: float
    fiber_image_residual: float
    fubini_p_residual: float
    fubini_q_residual: float
    volume: float
    volume_residual: float
    passed: bool


def check_submersion(rule=None, factors=(), n_frames=1000, seed=0):
    """Check that p and q are Riemannian submersions and the Fubini identities.

    At ``n_frames`` random frames: the g_M Gram matrix of the basis, the
    pushforwards ``dp = (0, n, w)`` and ``dq = (n, 0, -v)`` of the basis (their
    nonzero images must be orthonormal and tangent to S^2), and the image
    under p of a sampled q-fiber (must lie on the great circle with pole w).
    Over the frame rule: ``int_M f o p`` and ``int_M f o q`` against
    ``2 pi int_S2 f`` for each factor, and the volume ``8 pi^2``.
    """
    rule = rule if rule is not None else frame_rule(DEFAULT_QUAD_LEVEL, 64)
    rng = np.random.default_rng(seed)
    frames = random_frames(n_frames, rng)
    ts = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    eye2 = np.eye(2)
    ortho = gram = fiber = 0.0
    for fr in frames:
        basis = frame_basis(fr)
        g = np.array([[gm_inner(fr, a, b) for b in basis] for a in basis])
        gram = max(gram, np.abs(g - np.eye(3)).max())
        for vanishing, imgs, base in (
            (basis.e1[0], (basis.e2[0], basis.e3[0]), fr.v),  # dp(X, Y) = X
            (basis.e2[1], (basis.e1[1], basis.e3[1]), fr.w),  # dq(X, Y) = Y
        ):
            u = np.array(imgs)
            ortho = max(ortho, np.abs(u @ u.T - eye2).max(), np.abs(u @ base).max(),
                        np.abs(vanishing).max())
        # q-fiber through (v, w): v(t) = cos t v + sin t n, w fixed
        vt = np.cos(ts)[:, None] * fr.v + np.sin(ts)[:, None] * fr.n
        fiber = max(fiber, np.abs(vt @ fr.w).max())

    two_pi = 2.0 * np.pi
    volume = integrate_frames(rule, lambda v, w: np.ones(len(v)))
    vol_res = abs(volume - 8.0 * np.pi**2) / (8.0 * np.pi**2)
    res_p = res_q = 0.0
    for f in factors:
        f = f.factor if isinstance(f, ProjectiveFactor) else f
        ref = two_pi * integrate_sphere(rule.base, f)
        res_p = max(res_p, abs(integrate_frames(rule, lambda v, w: f(v)) - ref) / abs(ref))
        res_q = max(res_q, abs(integrate_frames(rule, lambda v, w: f(w)) - ref) / abs(ref))
    passed = (
        ortho < ORTHO_TOL and gram < ORTHO_TOL and fiber < FIBER_TOL
        and max(res_p, res_q, vol_res) < FUBINI_TOL
    )
    return SubmersionReport(n_frames, float(ortho), float(gram), float(fiber), float(res_p),
                            float(res_q), volume, vol_res, bool(passed))


@dataclass(frozen=True)
class ChainReport(_Report):
    """``lower <= middle <= upper`` and ``upper - lower >= remainder >= 0``.

    Sphere: ``m^2/pi <= (int f)^2 / 4pi <= int f^2``, remainder ``V``.
    Projective: ``2 m_bar^2/pi <= (int f)^2 / 2pi <= int f^2``, remainder ``V_bar``.
    """

    kind: str
    m: float
    m_certified: bool
    lower: float
    middle: float
    upper: float
    slack1: float
    slack2: float
    remainder: float
    remainder_slack: float
    variance: float
    classification: str
    threshold: float
    passed: bool


def _chain(kind, m, certified, lower, middle, upper, remainder, variance):
    slack1 = middle - lower
    slack2 = upper - middle
    remainder_slack = (upper - lower) - remainder
    threshold = EQUALITY_RTOL * upper
    equal = slack1 < threshold and slack2 < threshold
    passed = min(slack1, slack2, remainder_slack, remainder) >= -SLACK_TOL
    return ChainReport(kind, m, certified, lower, middle, upper, slack1, slack2, remainder,
                       remainder_slack, variance, "equality" if equal else "strict",
                       threshold, bool(passed))


def verify_sphere_chain(f, rule=None, circle=DEFAULT_CIRCLE, **search):
    rule = rule if rule is not None else sphere_rule(DEFAULT_QUAD_LEVEL)
    f = f.factor if isinstance(f, ProjectiveFactor) else f
    mom = moments_sphere(f, rule)
    mn = min_funk_sphere(f, circle, **search)
    return _chain("sphere", mn.value, mn.certified, mn.value**2 / np.pi,
                  mom.I1**2 / (4.0 * np.pi), mom.I2, mom.V, mom.Var)


def verify_projective_chain(f, rule=None, circle=DEFAULT_CIRCLE, **search):
    rule = rule if rule is not None else sphere_rule(DEFAULT_QUAD_LEVEL)
    if not isinstance(f, ProjectiveFactor):
        f = ProjectiveFactor(f)
    mom = moments_projective(f, rule)
    mn = min_funk_projective(f, circle, **search)
    return _chain("projective", mn.value, mn.certified, 2.0 * mn.value**2 / np.pi,
                  mom.J1**2 / (2.0 * np.pi), mom.J2, mom.V_bar, mom.VarP)


@dataclass(frozen=True)
class PuReport(_Report):
    """``area - 2 L^2/pi >= 2 pi Var`` in two forms.

    The mesh form uses the mesh systole ``L`` (an overestimate) and tolerates
    ``eps_mesh = 2 (L^2 - (L / (1 + kappa h))^2) / pi``. The rigorous form
    replaces ``L`` by ``m_bar >= L`` and holds at quadrature precision.
    """

    area: float
    L: float
    mesh_level: int
    max_edge_angle: float
    kappa: float
    eps_mesh: float
    m_bar: float
    m_bar_certified: bool
    var: float
    lhs: float
    rhs: float
    lhs_rigorous: float
    extra_gap: float
    pass_mesh: bool
    pass_rigorous: bool
    systole_bound: bool
    classification: str
    path: list
    passed: bool


def verify_pu(f, mesh_level=DEFAULT_LEVEL, rule=None, circle=DEFAULT_CIRCLE,
              samples=DEFAULT_SAMPLES, kappa=DEFAULT_KAPPA, threads=1, **search):
    if not isinstance(f, ProjectiveFactor):
        f = ProjectiveFactor(f)
    chain = verify_projective_chain(f, rule, circle, **search)
    area, m_bar = chain.upper, chain.m
    var = chain.variance
    wm = weight_edges(build_mesh(mesh_level), f, samples)
    sysres = compute_systole(wm, threads=threads)
    L, h = sysres.L, sysres.max_edge_angle
    eps = 2.0 * (L**2 - (L / (1.0 + kappa * h)) ** 2) / np.pi
    lhs = area - 2.0 * L**2 / np.pi
    rhs = 2.0 * np.pi * var
    lhs_rig = area - 2.0 * m_bar**2 / np.pi
    pass_mesh = lhs >= rhs - eps
    pass_rig = lhs_rig >= rhs - SLACK_TOL
    bound = L <= m_bar + eps
    return PuReport(area, L, mesh_level, h, kappa, eps, m_bar, chain.m_certified, var, lhs,
                    rhs, lhs_rig, lhs_rig - rhs, bool(pass_mesh), bool(pass_rig), bool(bound),
                    chain.classification, sysres.path.tolist(),
                    bool(pass_mesh and pass_rig and bound))
