"""Numerical homotopy obstructions for sampled sphere maps, and the zero/containment probes.

Orientation conventions: sphere meshes are oriented outward-normal-first,
a PL fiber of S^3 -> S^2 is oriented so that (fiber direction, pulled-back
frame of S^2) is positive, and stereographic projection is orientation
preserving.  With these, the Hopf map S3_S2 has Hopf invariant +1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .boundary_data import sphere_samples, tangent_frames
from .geometry import GraphFunction
from .mesh import Mesh, sphere_area

ROUND_TOL = 0.2


class TopologyError(ValueError):
    pass


class ResolutionError(TopologyError):
    """Raw invariant too far from an integer, or image simplices too large."""


class RegularValueError(TopologyError):
    pass


@dataclass(frozen=True)
class IntegerInvariant:
    value: int
    raw: float


@dataclass(frozen=True, eq=False)
class Polyline:
    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if len(P) < 2:
            raise TopologyError("polyline needs at least two points")
        if self.closed and len(P) < 3:
            raise TopologyError("closed polyline needs at least 3 segments")
        object.__setattr__(self, "points", P)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        P = self.points
        Q = np.roll(P, -1, axis=0) if self.closed else P[1:]
        return (P if self.closed else P[:-1]), Q

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "closed": self.closed}


def fibers_to_json(fibers: dict[str, list[Polyline]], path: str | Path | None = None) -> str:
    text = json.dumps({k: [p.to_dict() for p in v] for k, v in fibers.items()}, sort_keys=True)
    if path is not None:
        Path(path).write_text(text)
    return text


def _round(raw: float, what: str) -> IntegerInvariant:
    k = int(round(raw))
    if abs(raw - k) > ROUND_TOL:
        raise ResolutionError(f"{what}: raw value {raw:.4f} is not within {ROUND_TOL} of an integer; refine the mesh")
    return IntegerInvariant(k, float(raw))


# -- degree ----------------------------------------------------------------------

def _simplex_rule(n: int, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Legendre rule on the standard n-simplex {a >= 0, sum a <= 1}."""
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1), 0.5 * w
    grids = np.meshgrid(*([x] * n), indexing="ij")
    wg = np.meshgrid(*([w] * n), indexing="ij")
    U = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack([g.ravel() for g in wg], axis=1), axis=1)
    A = np.empty_like(U)
    rest = np.ones(len(U))
    for k in range(n):
        A[:, k] = rest * U[:, k]
        W *= rest
        rest = rest * (1 - U[:, k])
    return A, W


def spherical_simplex_volumes(Y: np.ndarray) -> np.ndarray:
    """Signed n-volumes of the radial projections of the simplices Y (N, n+1, n+1)."""
    n = Y.shape[1] - 1
    if n == 1:
        a, b = Y[:, 0], Y[:, 1]
        return np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], np.einsum("ni,ni->n", a, b))
    if n == 2:
        a, b, c = Y[:, 0], Y[:, 1], Y[:, 2]
        det = np.linalg.det(Y)
        den = 1 + np.einsum("ni,ni->n", a, b) + np.einsum("ni,ni->n", b, c) + np.einsum("ni,ni->n", c, a)
        return 2 * np.arctan2(det, den)
    det = np.linalg.det(Y)
    A, W = _simplex_rule(n)
    E = Y[:, 1:] - Y[:, :1]
    pts = Y[:, None, 0] + np.einsum("qk,nki->nqi", A, E)
    integrand = np.linalg.norm(pts, axis=2) ** (-(n + 1))
    return det * (integrand @ W)


def sphere_degree(mesh: Mesh, values: np.ndarray) -> IntegerInvariant:
    """Brouwer degree of a sampled map S^n -> S^n: signed image volume / vol(S^n)."""
    if not mesh.is_sphere:
        raise TopologyError("sphere_degree needs a sphere mesh")
    V = np.asarray(values, dtype=float)
    if V.shape != mesh.vertices.shape:
        raise TopologyError(f"values must have shape {mesh.vertices.shape}, got {V.shape}")
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    Y = V[mesh.simplices]
    k = Y.shape[1]
    for i in range(k):
        for j in range(i + 1, k):
            if np.any(np.einsum("ni,ni->n", Y[:, i], Y[:, j]) < -0.5):
                raise ResolutionError("an image simplex spans more than 120 degrees; refine the mesh")
    raw = spherical_simplex_volumes(Y).sum() / sphere_area(mesh.dimension_top)
    return _round(float(raw), "degree")


# -- fibers ------------------------------------------------------------------------

def _plane_frame(q: np.ndarray) -> np.ndarray:
    """Orthonormal (e1, e2) with det[q, e1, e2] = +1."""
    F = tangent_frames(q[None])[0]
    if np.linalg.det(np.vstack([q, F])) < 0:
        F = F[::-1].copy()
    return F


def _fibers_once(mesh: Mesh, values: np.ndarray, q: np.ndarray, margin: float) -> list[Polyline]:
    Vx = mesh.vertices
    T = mesh.simplices
    frame = _plane_frame(q)
    w = values @ frame.T  # (nv, 2)
    side = values @ q

    local_faces = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)]
    faces = np.concatenate([T[:, list(f)] for f in local_faces])
    keys = np.sort(faces, axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel().reshape(4, len(T)).T  # (ntet, 4)

    # crossing of the face PL map through 0
    M = np.ones((len(uniq), 3, 3))
    M[:, :2, :] = np.swapaxes(w[uniq], 1, 2)
    rhs = np.zeros((len(uniq), 3))
    rhs[:, 2] = 1.0
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-300
    lam = np.full((len(uniq), 3), -1.0)
    lam[ok] = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    near = np.any(np.abs(lam) < margin, axis=1) & np.all(lam > -margin, axis=1)
    if np.any(near) or np.any(~ok & np.all(np.abs(w[uniq]).sum(axis=2) < 1e-14, axis=1)):
        raise RegularValueError("value too close to the image of the 1-skeleton")
    hit = np.all(lam > 0, axis=1) & (np.einsum("fk,fk->f", lam, side[uniq]) > 0)
    point = np.einsum("fk,fki->fi", lam, Vx[uniq])

    crossing = hit[inv]  # (ntet, 4)
    counts = crossing.sum(axis=1)
    if np.any((counts != 0) & (counts != 2)):
        raise RegularValueError("a tetrahedron meets the fiber an odd number of times")
    tets = np.flatnonzero(counts == 2)
    nxt: dict[int, int] = {}
    for t in tets:
        fa, fb = inv[t][crossing[t]]
        E = (Vx[T[t, 1:]] - Vx[T[t, 0]]).T  # (4, 3)
        W = (w[T[t, 1:]] - w[T[t, 0]]).T  # (2, 3)
        direction = E @ np.cross(W[0], W[1])
        if np.dot(point[fb] - point[fa], direction) < 0:
            fa, fb = fb, fa
        if fa in nxt:
            raise TopologyError(f"fiber chaining failed at face {uniq[fa].tolist()}; perturb the value")
        nxt[int(fa)] = int(fb)
    lines = []
    seen: set[int] = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        cur = nxt[start]
        while cur != start:
            if cur not in nxt or cur in seen:
                raise TopologyError(f"fiber chaining failed at face {uniq[cur].tolist()}; perturb the value")
            chain.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        pts = point[chain]
        lines.append(Polyline(pts / np.linalg.norm(pts, axis=1, keepdims=True), closed=True))
    return lines


def regular_value_candidates(q: np.ndarray | None, count: int = 64, seed: int = 7) -> np.ndarray:
    """The requested value (if any), then small perturbations from a low-discrepancy sequence."""
    base = sphere_samples(2, count, seed=seed)
    if q is None:
        return base
    q = np.asarray(q, float) / np.linalg.norm(q)
    pert = q + 0.02 * base * np.arange(1, count + 1)[:, None] / count
    pert /= np.linalg.norm(pert, axis=1, keepdims=True)
    return np.vstack([q, pert])


def preimage_fiber(mesh: Mesh, values: np.ndarray, q, margin: float = 1e-9,
                   perturb: bool = True) -> tuple[list[Polyline], np.ndarray]:
    """Oriented closed polylines approximating the preimage of q under a PL map S^3 -> S^2.

    Returns the polylines and the regular value actually used.
    """
    if not (mesh.is_sphere and mesh.dimension_top == 3):
        raise TopologyError("preimage_fiber needs a tetrahedral mesh of S^3")
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices, 3):
        raise TopologyError("values must be points of S^2 per vertex")
    values = values / np.linalg.norm(values, axis=1, keepdims=True)
    cands = regular_value_candidates(q) if perturb else np.asarray(q, float)[None]
    last = None
    for c in cands:
        try:
            return _fibers_once(mesh, values, c / np.linalg.norm(c), margin), c / np.linalg.norm(c)
        except RegularValueError as exc:
            last = exc
    raise RegularValueError(f"no regular value found near {np.asarray(q).tolist()}: {last}")


# -- linking -----------------------------------------------------------------------

def stereographic(points: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """Orientation-preserving stereographic projection S^3 minus pole -> R^3."""
    p = pole / np.linalg.norm(pole)
    B = tangent_frames(p[None])[0]
    if np.linalg.det(np.vstack([B, p])) < 0:
        B[0] = -B[0]
    X = points / np.linalg.norm(points, axis=1, keepdims=True)
    return (X @ B.T) / (1.0 - X @ p)[:, None]


def _gauss_linking(a1, a2, b1, b2) -> float:
    """Exact Gauss integral for two closed polygons in R^3, summed over segment pairs."""
    p1, p2 = a1[:, None], a2[:, None]
    p3, p4 = b1[None], b2[None]
    r13, r14, r23, r24 = p3 - p1, p4 - p1, p3 - p2, p4 - p2

    def unit(v):
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        return np.divide(v, n, out=np.zeros_like(v), where=n > 0)

    n1 = unit(np.cross(r13, r14))
    n2 = unit(np.cross(r14, r24))
    n3 = unit(np.cross(r24, r23))
    n4 = unit(np.cross(r23, r13))

    def asn(u, v):
        return np.arcsin(np.clip(np.einsum("...i,...i->...", u, v), -1.0, 1.0))

    omega = asn(n1, n2) + asn(n2, n3) + asn(n3, n4) + asn(n4, n1)
    sgn = np.sign(np.einsum("...i,...i->...", np.cross(p4 - p3, p2 - p1), r13))
    return float(np.sum(omega * sgn) / (4 * np.pi))


def linking_number(a: Polyline, b: Polyline, pole: np.ndarray | None = None,
                   pole_candidates: np.ndarray | None = None) -> IntegerInvariant:
    """Linking number of two disjoint closed polylines in R^3, or on S^3 after projection."""
    if not (a.closed and b.closed):
        raise TopologyError("linking number needs closed polylines")
    A, B = a.points, b.points
    if A.shape[1] == 4:
        if pole is None:
            cands = pole_candidates if pole_candidates is not None else sphere_samples(3, 512, seed=11)
            both = np.vstack([A, B])
            d, _ = cKDTree(both).query(cands)
            pole = cands[int(np.argmax(d))]
        A, B = stereographic(A, pole), stereographic(B, pole)
    elif A.shape[1] != 3:
        raise TopologyError("polylines must live in R^3 or on S^3 in R^4")
    a1, a2 = A, np.roll(A, -1, axis=0)
    b1, b2 = B, np.roll(B, -1, axis=0)
    return _round(_gauss_linking(a1, a2, b1, b2), "linking number")


def hopf_invariant(mesh: Mesh, values: np.ndarray, q=None) -> IntegerInvariant:
    """Hopf invariant of a sampled map S^3 -> S^2 as the linking of two fibers.

    Fibers over a regular value and its antipode; components are summed with
    their orientations.
    """
    values = np.asarray(values, dtype=float)
    first = None
    for c in regular_value_candidates(q):
        try:
            fa, used = preimage_fiber(mesh, values, c, perturb=False)
            fb, _ = preimage_fiber(mesh, values, -used, perturb=False)
            first = (fa, fb)
            break
        except RegularValueError:
            continue
    if first is None:
        raise RegularValueError("no regular value pair found")
    fa, fb = first
    if not fa or not fb:
        return IntegerInvariant(0, 0.0)
    pts = np.vstack([p.points for p in fa + fb])
    d, _ = cKDTree(pts).query(mesh.vertices)
    pole = mesh.vertices[int(np.argmax(d))]
    raw = 0.0
    for x in fa:
        for y in fb:
            Ax, By = stereographic(x.points, pole), stereographic(y.points, pole)
            raw += _gauss_linking(Ax, np.roll(Ax, -1, 0), By, np.roll(By, -1, 0))
    return _round(raw, "hopf invariant")


# -- witness probes --------------------------------------------------------------

def min_norm_locus(F: GraphFunction) -> tuple[float, int]:
    """Smallest |F| over the vertices and where it occurs."""
    norms = np.linalg.norm(F.values, axis=1)
    i = int(np.argmin(norms))
    return float(norms[i]), i


@dataclass(frozen=True)
class Containment:
    contained: bool
    max_dist: float
    witness: int
    sample_spacing: float


def neighborhood_containment(F: GraphFunction, samples: np.ndarray, epsilon: float) -> Containment:
    """Is every vertex value within epsilon of the sampled set R*N?

    ``sample_spacing`` is the largest nearest-neighbour gap in the cloud,
    reported so the caller can judge density against epsilon.
    """
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    if S.size == 0:
        raise TopologyError("empty sample cloud")
    tree = cKDTree(S)
    d, _ = tree.query(F.values)
    i = int(np.argmax(d))
    spacing = float(tree.query(S, k=2)[0][:, 1].max()) if len(S) > 1 else math.inf
    return Containment(bool(d[i] <= epsilon), float(d[i]), i, spacing)
