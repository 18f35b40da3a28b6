"""Measurements on piecewise-linear graphs x -> (x, F(x)).

Everything here works simplex by simplex with the constant Jacobian of the
PL map, reduced in simplex order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from .mesh import Mesh, ball_volume


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GraphFunction:
    """Per-vertex values of a PL map from a domain mesh into R^(m+1)."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.mesh.n_vertices:
            raise GeometryError(
                f"values has {v.shape[0]} rows, mesh has {self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(v)):
            raise GeometryError("GraphFunction values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def target_dimension(self) -> int:
        return self.values.shape[1]

    def lifted(self) -> np.ndarray:
        """Vertices of the graph in R^(n+1) x R^(m+1)."""
        return np.hstack([self.mesh.vertices, self.values])

    def with_values(self, values: np.ndarray) -> "GraphFunction":
        return GraphFunction(self.mesh, values)

    def to_dict(self) -> dict:
        return {
            "mesh": {"kind": self.mesh.kind, "params": self.mesh.params,
                     "n_vertices": self.mesh.n_vertices},
            "values": self.values.tolist(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path, mesh: Mesh) -> "GraphFunction":
        d = json.loads(Path(path).read_text())
        if d["mesh"]["n_vertices"] != mesh.n_vertices:
            raise GeometryError("stored GraphFunction does not match the given mesh")
        return cls(mesh, np.asarray(d["values"], dtype=float))


@dataclass(frozen=True)
class MetricSample:
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_g: float


@dataclass(frozen=True)
class DensityProfile:
    center: np.ndarray
    radii: np.ndarray
    theta: np.ndarray
    mass_in_ball: np.ndarray
    max_valid_radius: float

    def is_monotone(self, slack: float = 0.02) -> bool:
        return bool(np.all(np.diff(self.theta) >= -slack))


def induced_metric(jacobian: np.ndarray) -> MetricSample:
    """g = I + J^T J for a Jacobian J of shape (m+1, n+1)."""
    J = np.atleast_2d(np.asarray(jacobian, dtype=float))
    g = np.eye(J.shape[1]) + J.T @ J
    return MetricSample(g=g, g_inv=np.linalg.inv(g), sqrt_g=float(np.sqrt(np.linalg.det(g))))


# -- per-simplex quantities ---------------------------------------------------

def _edges(mesh: Mesh) -> np.ndarray:
    P = mesh.vertices[mesh.simplices]
    return np.swapaxes(P[:, 1:] - P[:, :1], 1, 2)  # (N, d, d), columns are edges


def simplex_jacobians(F: GraphFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (J, vol, grad_phi).

    J is (N, m+1, d), vol the domain volumes, grad_phi (N, d+1, d) the
    gradients of the hat functions of each simplex's vertices.
    """
    mesh = F.mesh
    if mesh.is_sphere:
        raise GeometryError("simplex_jacobians needs a top-dimensional domain mesh")
    E = _edges(mesh)
    d = E.shape[1]
    Einv = np.linalg.inv(E)  # rows: gradients of barycentric coords 1..d
    vals = F.values[mesh.simplices]
    dF = np.swapaxes(vals[:, 1:] - vals[:, :1], 1, 2)  # (N, m+1, d)
    J = dF @ Einv
    vol = np.abs(np.linalg.det(E)) / math.factorial(d)
    grad_phi = np.concatenate([-Einv.sum(axis=1, keepdims=True), Einv], axis=1)
    return J, vol, grad_phi


def sqrt_g_per_simplex(F: GraphFunction) -> np.ndarray:
    J, _, _ = simplex_jacobians(F)
    d = J.shape[2]
    g = np.eye(d) + np.einsum("nai,naj->nij", J, J)
    return np.sqrt(np.linalg.det(g))


def graph_simplex_volumes(F: GraphFunction) -> np.ndarray:
    """(n+1)-volumes of the graph simplices, from the Gram matrix of lifted edges."""
    P = F.lifted()[F.mesh.simplices]
    E = P[:, 1:] - P[:, :1]
    G = np.einsum("nai,nbi->nab", E, E)
    k = E.shape[1]
    return np.sqrt(np.clip(np.linalg.det(G), 0.0, None)) / math.factorial(k)


def graph_mass(F: GraphFunction) -> float:
    """Mass of the PL graph: sum of sqrt(det g_T) vol(T)."""
    if F.mesh.is_sphere:
        raise GeometryError("graph_mass needs a top-dimensional domain mesh")
    return float(np.sum(graph_simplex_volumes(F)))


def lipschitz_estimate(F: GraphFunction) -> float:
    J, _, _ = simplex_jacobians(F)
    return float(np.max(np.linalg.norm(J, ord=2, axis=(1, 2))))


# -- boundary mass formula ----------------------------------------------------

def boundary_conormals(F: GraphFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exterior unit conormals, facet areas and facet centroids on the graph boundary.

    The conormal of a facet is taken from its single adjacent simplex.
    """
    mesh = F.mesh
    if mesh.boundary_facets is None or len(mesh.boundary_facets) == 0:
        raise GeometryError("mesh has no boundary")
    L = F.lifted()
    P = L[mesh.boundary_facets]  # (B, n+1, N)
    opposite = mesh.simplices[mesh.boundary_owner, mesh.boundary_opposite]
    Q = L[opposite]
    T = P[:, 1:] - P[:, :1]  # (B, n, N)
    G = np.einsum("bai,bci->bac", T, T)
    detG = np.linalg.det(G)
    area = np.sqrt(np.clip(detG, 0.0, None)) / math.factorial(T.shape[1])
    bad = np.flatnonzero(area <= 1e-300)
    if len(bad):
        raise GeometryError(
            f"degenerate boundary facet {int(bad[0])} (vertices {mesh.boundary_facets[bad[0]].tolist()})"
        )
    w = Q - P[:, 0]
    coef = np.linalg.solve(G, np.einsum("bai,bi->ba", T, w)[..., None])[..., 0]
    w_perp = w - np.einsum("ba,bai->bi", coef, T)
    nu = -w_perp / np.linalg.norm(w_perp, axis=1, keepdims=True)
    return nu, area, P.mean(axis=1)


def boundary_mass_integral(F: GraphFunction) -> float:
    """(1/(n+1)) * integral over the graph boundary of <nu, p>.

    <nu, p> is affine on each facet, so the centroid rule is exact.
    """
    nu, area, centroid = boundary_conormals(F)
    d = F.mesh.dimension_top
    return float(np.sum(area * np.einsum("bi,bi->b", nu, centroid)) / d)


# -- weak residual -------------------------------------------------------------

def dual_volumes(mesh: Mesh) -> np.ndarray:
    vol = mesh.simplex_volumes()
    k = mesh.simplices.shape[1]
    out = np.zeros(mesh.n_vertices)
    np.add.at(out, mesh.simplices.ravel(), np.repeat(vol / k, k))
    return out


def weak_residual_vectors(F: GraphFunction) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex weak residuals of both equation groups (unnormalized).

    domain[v, j] = sum_T vol sqrt(g) (g^-1 grad phi_v)_j
    range[v, a]  = sum_T vol sqrt(g) (J g^-1 grad phi_v)_a
    """
    mesh = F.mesh
    J, vol, grad_phi = simplex_jacobians(F)
    d = J.shape[2]
    g = np.eye(d) + np.einsum("nai,naj->nij", J, J)
    ginv = np.linalg.inv(g)
    w = vol * np.sqrt(np.linalg.det(g))
    A = w[:, None, None] * ginv  # (N, d, d)
    dom = np.einsum("nij,nkj->nki", A, grad_phi)  # (N, d+1, d)
    rng = np.einsum("naj,nkj->nka", J, dom)  # (N, d+1, m+1)
    r_dom = np.zeros((mesh.n_vertices, d))
    r_rng = np.zeros((mesh.n_vertices, F.target_dimension))
    idx = mesh.simplices.ravel()
    np.add.at(r_dom, idx, dom.reshape(-1, d))
    np.add.at(r_rng, idx, rng.reshape(-1, F.target_dimension))
    return r_dom, r_rng


def msys_residual(F: GraphFunction, vertices: np.ndarray | None = None) -> tuple[float, float]:
    """Max weak residuals of the minimal surface system over interior vertices.

    Each vertex residual is divided by its dual volume so the numbers are
    comparable across mesh sizes.  ``vertices`` restricts the max to a subset.
    """
    r_dom, r_rng = weak_residual_vectors(F)
    dual = dual_volumes(F.mesh)
    v = F.mesh.interior_vertices if vertices is None else np.asarray(vertices)
    if len(v) == 0:
        return 0.0, 0.0
    rd = np.abs(r_dom[v]).max(axis=1) / dual[v]
    rr = np.abs(r_rng[v]).max(axis=1) / dual[v]
    return float(rd.max()), float(rr.max())


# -- density ratio -------------------------------------------------------------

def point_simplex_distance(points: np.ndarray, simplices_pts: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from points[i] to the simplex simplices_pts[i].

    Enumerates all faces; the nearest point lies in the relative interior of
    exactly one of them.
    """
    pts = np.atleast_2d(points)
    S = simplices_pts
    nb, k1, _ = S.shape
    best = np.full(nb, np.inf)
    for size in range(1, k1 + 1):
        for face in combinations(range(k1), size):
            V = S[:, list(face)]
            if size == 1:
                dist = np.linalg.norm(pts - V[:, 0], axis=1)
                best = np.minimum(best, dist)
                continue
            T = V[:, 1:] - V[:, :1]
            G = np.einsum("bai,bci->bac", T, T)
            rhs = np.einsum("bai,bi->ba", T, pts - V[:, 0])
            ok = np.abs(np.linalg.det(G)) > 1e-300
            lam = np.zeros((nb, size - 1))
            if np.any(ok):
                lam[ok] = np.linalg.solve(G[ok], rhs[ok][..., None])[..., 0]
            inside = ok & np.all(lam >= 0, axis=1) & (lam.sum(axis=1) <= 1)
            proj = V[:, 0] + np.einsum("ba,bai->bi", lam, T)
            dist = np.where(inside, np.linalg.norm(pts - proj, axis=1), np.inf)
            best = np.minimum(best, dist)
    return best


def locate(mesh: Mesh, x: np.ndarray, tol: float = 1e-12) -> tuple[int, np.ndarray]:
    """Simplex containing domain point x and its barycentric coordinates."""
    P = mesh.vertices[mesh.simplices]
    E = np.swapaxes(P[:, 1:] - P[:, :1], 1, 2)
    lam = np.linalg.solve(E, (np.asarray(x, float) - P[:, 0])[..., None])[..., 0]
    bary = np.hstack([1 - lam.sum(axis=1, keepdims=True), lam])
    hit = np.flatnonzero(np.all(bary >= -tol, axis=1))
    if len(hit) == 0:
        raise GeometryError(f"point {np.asarray(x).tolist()} is outside the mesh")
    return int(hit[0]), bary[hit[0]]


def evaluate(F: GraphFunction, x: np.ndarray) -> np.ndarray:
    s, bary = locate(F.mesh, x)
    return bary @ F.values[F.mesh.simplices[s]]


def distance_to_graph_boundary(F: GraphFunction, point: np.ndarray) -> float:
    P = F.lifted()[F.mesh.boundary_facets]
    pts = np.broadcast_to(point, (len(P), P.shape[2]))
    return float(point_simplex_distance(pts, P).min())


def _simplex_samples(k: int, count: int, n_simplices: int, seed: int) -> np.ndarray:
    """Barycentric coordinates, shape (n_simplices, count, k+1), uniform on a k-simplex.

    One scrambled Sobol set, given an independent random shift per simplex so
    that errors on structured meshes do not line up.
    """
    base = qmc.Sobol(d=k, scramble=True, seed=seed).random(count)
    shift = np.random.default_rng(seed).random((n_simplices, 1, k))
    u = np.sort((base[None] + shift) % 1.0, axis=2)
    z = np.zeros((n_simplices, count, 1))
    return np.diff(np.concatenate([z, u, z + 1.0], axis=2), axis=2)


def density_profile(F: GraphFunction, center_domain_point: np.ndarray, radii,
                    samples: int = 64, seed: int = 0) -> DensityProfile:
    """Density ratio mass(G cap B_d) / (omega d^(n+1)) about (x0, F(x0)).

    Simplices inside the ball count fully, simplices at distance > d not at
    all; the rest are sub-sampled with a fixed quasi-random point set.
    """
    x0 = np.asarray(center_domain_point, dtype=float)
    center = np.concatenate([x0, evaluate(F, x0)])
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or np.any(radii <= 0):
        raise GeometryError("radii must be positive and strictly increasing")
    dmax = distance_to_graph_boundary(F, center)
    if radii[-1] > dmax:
        raise GeometryError(
            f"radius {radii[-1]:.6g} exceeds distance to graph boundary; maximal valid radius is {dmax:.6g}"
        )
    P = F.lifted()[F.mesh.simplices]
    vols = graph_simplex_volumes(F)
    k = P.shape[1] - 1
    vdist = np.linalg.norm(P - center, axis=2)
    far = vdist.max(axis=1)
    near = point_simplex_distance(np.broadcast_to(center, (len(P), P.shape[2])), P)
    bary = _simplex_samples(k, samples, len(P), seed)
    dim = F.mesh.dimension_top
    omega = ball_volume(dim)
    mass = np.empty(len(radii))
    for i, d in enumerate(radii):
        full = far <= d
        part = np.flatnonzero((~full) & (near <= d))
        m = vols[full].sum()
        if len(part):
            pts = np.einsum("bsk,bki->bsi", bary[part], P[part])
            frac = (np.linalg.norm(pts - center, axis=2) <= d).mean(axis=1)
            m += np.sum(frac * vols[part])
        mass[i] = m
    theta = mass / (omega * radii ** dim)
    return DensityProfile(center=center, radii=radii, theta=theta,
                          mass_in_ball=mass, max_valid_radius=dmax)
