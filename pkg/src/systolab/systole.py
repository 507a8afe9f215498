"""Shortest noncontractible loop of ``(RP^2, f^2 g0)`` on an antipodal icosphere.

A loop in RP^2 is noncontractible exactly when its lift to S^2 runs from a
point ``x`` to ``-x``. On a centrally symmetric mesh the discrete systole is
therefore ``L = min_x d(x, sigma(x))`` for the edge-path distance ``d`` with
edge weights ``int f ds``.

Every path from ``x`` to ``-x`` crosses the plane ``z = 0``, and each vertex
``y`` on a shortest such path satisfies ``d(y, sigma(y)) <= L`` (follow the
path to ``-x`` and then the antipodal image of its first part). Scanning
sources in the band of vertices touching that plane therefore yields the
same ``L`` as scanning all vertices, at ``O(sqrt(V))`` searches instead of
``O(V)``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import functools

import numpy as np

from . import kernels
from .conformal import ProjectiveFactor

MAX_LEVEL = 8
DEFAULT_LEVEL = 5
DEFAULT_SAMPLES = 5
BAND_TOL = 1e-12

_PHI = (1.0 + 5.0**0.5) / 2.0
_ICO_VERTS = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ]
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
)


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RP2Mesh:
    """Subdivided icosahedron on S^2 with its antipodal vertex pairing.

    ``edges`` are sorted index pairs ``i < j``; ``angles`` their arc angles.
    ``indptr``/``indices``/``slot_edge`` is the symmetric adjacency in CSR
    form, ``slot_edge[k]`` naming the edge behind CSR slot ``k``.
    """

    level: int
    vertices: np.ndarray
    faces: np.ndarray
    partner: np.ndarray
    edges: np.ndarray
    angles: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    slot_edge: np.ndarray

    @property
    def max_edge_angle(self):
        return float(self.angles.max())

    def edge_partner(self):
        """Index of the antipodal image of every edge."""
        img = np.sort(self.partner[self.edges], axis=1)
        key = self.edges[:, 0] * len(self.vertices) + self.edges[:, 1]
        img_key = img[:, 0] * len(self.vertices) + img[:, 1]
        return np.searchsorted(key, img_key)


def _subdivide(verts, faces):
    e = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    mids = verts[uniq[:, 0]] + verts[uniq[:, 1]]
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    m = (len(verts) + inv.reshape(-1, 3)).astype(faces.dtype)
    ab, bc, ca = m[:, 0], m[:, 1], m[:, 2]
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate(
        [np.stack(t, axis=1) for t in ((a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca))]
    )
    return np.concatenate([verts, mids]), new_faces


def arc_angle(a, b):
    """Angle between unit vectors, accurate for small and large angles."""
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))


@functools.lru_cache(maxsize=8)
def build_mesh(level=DEFAULT_LEVEL):
    """Icosphere of the given subdivision depth (``10 4^level + 2`` vertices).

    Midpoints are normalized sums of exact antipodal pairs, so the vertex set
    is closed under ``v -> -v`` bit for bit.
    """
    if not 0 <= level <= MAX_LEVEL:
        raise MeshError(f"mesh level must be in [0, {MAX_LEVEL}], got {level}")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    faces = _ICO_FACES.astype(np.intp)
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)

    lookup = {tuple(p): i for i, p in enumerate(verts.tolist())}
    try:
        partner = np.array([lookup[tuple(-p)] for p in verts], dtype=np.intp)
    except KeyError:  # pragma: no cover - construction guarantees closure
        raise MeshError("vertex set is not centrally symmetric") from None

    edges = np.unique(np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1), axis=0)
    angles = arc_angle(verts[edges[:, 0]], verts[edges[:, 1]])

    n = len(verts)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    eid = np.concatenate([np.arange(len(edges))] * 2)
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.intp)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    for arr in (verts, faces, partner, edges, angles):
        arr.setflags(write=False)
    return RP2Mesh(level, verts, faces, partner, edges, angles, indptr,
                   dst[order].astype(np.intp), eid[order])


@dataclass(frozen=True, eq=False)
class WeightedMesh:
    mesh: RP2Mesh
    weights: np.ndarray

    @property
    def csr_weights(self):
        return self.weights[self.mesh.slot_edge]


def simpson_weights(samples):
    if samples < 3 or samples % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of samples >= 3")
    w = np.ones(samples)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * (samples - 1))


def weight_edges(mesh, f, samples=DEFAULT_SAMPLES):
    """Edge weights ``int f ds`` along each great-circle arc (composite Simpson)."""
    factor = f.factor if isinstance(f, ProjectiveFactor) else f
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    om = mesh.angles
    t = np.linspace(0.0, 1.0, samples)
    so = np.sin(om)[:, None, None]
    pts = (np.sin(np.outer(om, 1.0 - t))[:, :, None] * a[:, None, :]
           + np.sin(np.outer(om, t))[:, :, None] * b[:, None, :]) / so
    weights = om * (factor(pts) @ simpson_weights(samples))
    if not np.all(weights > 0.0):
        raise MeshError(f"non-positive edge weight at edge {int(np.argmin(weights))}")
    weights.setflags(write=False)
    return WeightedMesh(mesh, weights)


@dataclass(frozen=True, eq=False)
class SystoleResult:
    """``L`` with a realizing lifted path ``base -> partner[base]``."""

    L: float
    base: int
    path: np.ndarray
    level: int
    max_edge_angle: float
    sources_scanned: int


def band_sources(mesh):
    """Antipodal representatives of the vertices touching the plane ``z = 0``."""
    z = mesh.vertices[:, 2]
    sign = np.where(np.abs(z) < BAND_TOL, 0, np.sign(z)).astype(int)
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    crossing = sign[i] * sign[j] < 0
    band = np.zeros(len(z), dtype=bool)
    band[sign == 0] = True
    band[i[crossing]] = True
    band[j[crossing]] = True
    idx = np.flatnonzero(band)
    return np.unique(np.minimum(idx, mesh.partner[idx]))


def all_sources(mesh):
    idx = np.arange(len(mesh.vertices))
    return idx[idx < mesh.partner]


def compute_systole(wm, sources="band", threads=1, backend=None):
    """Discrete systole of the weighted mesh.

    Parameters
    ----------
    sources : {"band", "all"}
        Which antipodal representatives to scan; both give the same ``L``.
        ``"all"`` also guarantees the smallest possible base vertex index.
    threads : int
        Source chunks searched concurrently (the compiled kernel releases the
        GIL). The result does not depend on this.
    backend : {"compiled", "python"}, optional
        Override the import-time kernel choice.
    """
    mesh = wm.mesh
    k = kernels if backend is None else kernels.backend_module(backend)
    if sources not in ("band", "all"):
        raise ValueError(f"unknown source set {sources!r}")
    src = band_sources(mesh) if sources == "band" else all_sources(mesh)
    w = wm.csr_weights
    args = (mesh.indptr, mesh.indices, w, mesh.partner)
    if threads > 1 and len(src) > threads:
        chunks = np.array_split(src, threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: k.antipodal_lengths(*args, c), chunks))
        lengths = np.concatenate(parts)
    else:
        lengths = k.antipodal_lengths(*args, src)
    j = int(np.argmin(lengths))
    if not np.isfinite(lengths[j]):
        raise MeshError("mesh graph is disconnected")
    base = int(src[j])
    L, path = k.shortest_path(mesh.indptr, mesh.indices, w, base, int(mesh.partner[base]))
    return SystoleResult(float(L), base, path, mesh.level, mesh.max_edge_angle, len(src))


def path_length(wm, path):
    """Sum of edge weights along a vertex path (raises if a step is not an edge)."""
    mesh = wm.mesh
    total = 0.0
    for u, v in zip(path[:-1], path[1:]):
        lo, hi = mesh.indptr[u], mesh.indptr[u + 1]
        hit = np.flatnonzero(mesh.indices[lo:hi] == v)
        if not len(hit):
            raise MeshError(f"vertices {u} and {v} are not adjacent")
        total += wm.weights[mesh.slot_edge[lo + hit[0]]]
    return total


def write_mesh(wm, path):
    """Text dump: ``v x y z`` per vertex, then ``e i j weight`` per edge."""
    mesh = wm.mesh
    with open(path, "w") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for (i, j), w in zip(mesh.edges.tolist(), wm.weights.tolist()):
            fh.write(f"e {i} {j} {w!r}\n")
