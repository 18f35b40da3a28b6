"""Closed-form boundary maps on spheres and the quantities the mass bounds need.

A ``BoundaryMap`` evaluates on points of the round sphere S^n(domain_radius);
annulus data bundle two such maps tagged "inner"/"outer", torus data
evaluate on ambient points of the solid torus boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtri
from scipy.stats import qmc

from .mesh import Mesh, torus_coordinates

FD_STEP = 1e-5


class BoundaryDataError(ValueError):
    pass


# -- Cayley-Dickson algebras ---------------------------------------------------

def cd_conj(a: np.ndarray) -> np.ndarray:
    out = -a
    out[..., 0] = a[..., 0]
    return out


def cd_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product, (p, q)(r, s) = (pr - s*q, sp + qr*).

    Dimension 1, 2, 4, 8 give reals, complexes, quaternions, octonions.
    """
    d = a.shape[-1]
    if d == 1:
        return a * b
    h = d // 2
    p, q = a[..., :h], a[..., h:]
    r, s = b[..., :h], b[..., h:]
    return np.concatenate(
        [cd_mul(p, r) - cd_mul(cd_conj(s), q), cd_mul(s, p) + cd_mul(q, cd_conj(r))],
        axis=-1,
    )


HOPF_FAMILIES = {"S3_S2": 2, "S7_S4": 4, "S15_S8": 8}


def hopf_map(family: str, x: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Hopf map (a, b) -> (|a|^2 - |b|^2, 2 a b*) over C, H or O.

    For S3_S2 with z1 = x1 + i x2, z2 = x3 + i x4 this is
    (|z1|^2 - |z2|^2, 2 Re(z1 conj z2), 2 Im(z1 conj z2)).
    """
    if family not in HOPF_FAMILIES:
        raise BoundaryDataError(f"unknown Hopf family {family!r}")
    h = HOPF_FAMILIES[family]
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[-1] != 2 * h:
        raise BoundaryDataError(f"{family} expects points in R^{2 * h}, got R^{X.shape[-1]}")
    norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise BoundaryDataError(
            f"hopf_map input must be a unit vector (max |norm - 1| = {np.abs(norms - 1).max():.3g})"
        )
    a, b = X[:, :h], X[:, h:]
    first = np.sum(a * a, axis=1) - np.sum(b * b, axis=1)
    out = np.hstack([first[:, None], 2.0 * cd_mul(a, cd_conj(b))])
    return out[0] if single else out


# -- sampling helpers ------------------------------------------------------------

def sphere_samples(n: int, count: int, radius: float = 1.0, seed: int = 0) -> np.ndarray:
    """Quasi-random points on S^n(radius): scrambled Sobol -> Gaussian -> normalize."""
    m = max(0, math.ceil(math.log2(max(count, 1))))
    u = qmc.Sobol(d=n + 1, scramble=True, seed=seed).random_base2(m)[:count]
    z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return radius * z / np.linalg.norm(z, axis=1, keepdims=True)


def tangent_frames(x: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the tangent spaces x^perp, shape (N, n, n+1).

    Built from the Householder reflection sending e_0 to a multiple of x.
    """
    X = np.atleast_2d(x)
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    d = X.shape[1]
    s = np.where(X[:, 0] >= 0, -1.0, 1.0)
    u = X.copy()
    u[:, 0] -= s
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    H = np.eye(d)[None] - 2.0 * u[:, :, None] * u[:, None, :]
    return np.swapaxes(H[:, :, 1:], 1, 2)


# -- boundary maps ---------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryMap:
    """Closed-form map on S^n(domain_radius) into R^(target_dim).

    ``image_radius`` is set for maps onto a round sphere centered at the
    origin (the full sphere of dimension target_dim - 1 when
    ``round_image`` holds).  ``ambient`` maps take points of the domain
    boundary in R^(n+1) directly (torus data).
    """

    name: str
    domain_dim: int
    target_dim: int
    image_dim: int
    evaluator: Callable[[np.ndarray], np.ndarray] | None
    domain_radius: float = 1.0
    image_radius: float | None = None
    round_image: bool = False
    ambient: bool = False
    components: tuple = field(default=())

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if self.components:
            raise BoundaryDataError(f"{self.name} has several components; use evaluate_on_boundary")
        P = np.asarray(points, dtype=float)
        single = P.ndim == 1
        P = np.atleast_2d(P)
        if P.shape[1] != self.domain_dim + 1:
            raise BoundaryDataError(
                f"{self.name} takes points in R^{self.domain_dim + 1}, got R^{P.shape[1]}"
            )
        if not self.ambient:
            r = np.linalg.norm(P, axis=1, keepdims=True)
            if np.any(np.abs(r - self.domain_radius) > 1e-8 * max(1.0, self.domain_radius)):
                raise BoundaryDataError(
                    f"{self.name} is defined on S^{self.domain_dim}({self.domain_radius}); "
                    f"input norm off by {np.abs(r - self.domain_radius).max():.3g}"
                )
            P = P * (self.domain_radius / r)
        out = np.asarray(self.evaluator(P), dtype=float)
        return out[0] if single else out

    def evaluate_on_boundary(self, mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
        """(vertex ids, values) on the boundary vertices of a domain mesh."""
        if self.components:
            ids, vals = [], []
            for tag, comp in self.components:
                v = mesh.boundary_vertices_tagged(tag)
                if len(v) == 0:
                    raise BoundaryDataError(f"mesh has no boundary component tagged {tag!r}")
                ids.append(v)
                vals.append(comp(mesh.vertices[v]))
            order = np.argsort(np.concatenate(ids), kind="stable")
            return np.concatenate(ids)[order], np.concatenate(vals)[order]
        v = mesh.boundary_vertices
        return v, self(mesh.vertices[v])

    def differential(self, x: np.ndarray, v: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        """Central difference of the map along tangent vectors v at points x."""
        r = self.domain_radius

        def proj(y):
            return r * y / np.linalg.norm(y, axis=-1, keepdims=True)

        return (self(proj(x + h * v)) - self(proj(x - h * v))) / (2 * h)


def _hopf_boundary_map(family: str) -> BoundaryMap:
    h = HOPF_FAMILIES[family]
    return BoundaryMap(
        name={"S3_S2": "hopf3", "S7_S4": "hopf7", "S15_S8": "hopf15"}[family],
        domain_dim=2 * h - 1,
        target_dim=h + 1,
        image_dim=h,
        evaluator=lambda P: hopf_map(family, P),
        image_radius=1.0,
        round_image=True,
    )


def scale_map(f: BoundaryMap, R: float) -> BoundaryMap:
    """Pointwise multiple R * f."""
    if not math.isfinite(R):
        raise BoundaryDataError("scale factor must be finite")
    comps = tuple((tag, scale_map(c, R)) for tag, c in f.components)
    ev = None if f.evaluator is None else (lambda P, ev=f.evaluator: R * ev(P))
    return replace(
        f,
        name=f"{R!r}*{f.name}",
        evaluator=ev,
        image_radius=None if f.image_radius is None else abs(R) * f.image_radius,
        round_image=f.round_image and R != 0,
        components=comps,
    )


def deform_map(f: BoundaryMap, A: np.ndarray) -> BoundaryMap:
    """Composition A o f with a square matrix A."""
    A = np.asarray(A, dtype=float)
    if A.shape != (f.target_dim, f.target_dim):
        raise BoundaryDataError(
            f"deformation matrix must be {f.target_dim}x{f.target_dim}, got {A.shape}"
        )
    comps = tuple((tag, deform_map(c, A)) for tag, c in f.components)
    ev = None if f.evaluator is None else (lambda P, ev=f.evaluator: ev(P) @ A.T)
    orthogonal = np.allclose(A.T @ A, np.eye(len(A)), atol=1e-12)
    return replace(
        f,
        name=f"A*{f.name}",
        evaluator=ev,
        image_radius=f.image_radius if orthogonal else None,
        round_image=f.round_image and orthogonal,
        components=comps,
    )


def verify_isometry(A: np.ndarray, f: BoundaryMap, samples: int = 256, seed: int = 0) -> float:
    """Largest violation of the three conditions that make A o f isometric to f.

    |‖A f‖ - ‖f‖|, |<A f, A df(v)>| and |<A df(v), A df(w)> - <df(v), df(w)>|
    over quasi-random x and orthonormal tangent frames v, w.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (f.target_dim, f.target_dim):
        raise BoundaryDataError(
            f"deformation matrix must be {f.target_dim}x{f.target_dim}, got {A.shape}"
        )
    x = sphere_samples(f.domain_dim, samples, f.domain_radius, seed)
    frames = tangent_frames(x)
    y = f(x)
    Ay = y @ A.T
    worst = np.abs(np.linalg.norm(Ay, axis=1) - np.linalg.norm(y, axis=1)).max()
    dfs = [f.differential(x, frames[:, k]) for k in range(frames.shape[1])]
    Adfs = [d @ A.T for d in dfs]
    for k, Ad in enumerate(Adfs):
        worst = max(worst, np.abs(np.einsum("ni,ni->n", Ay, Ad)).max())
        for j in range(k, len(dfs)):
            lhs = np.einsum("ni,ni->n", Ad, Adfs[j])
            rhs = np.einsum("ni,ni->n", dfs[k], dfs[j])
            worst = max(worst, np.abs(lhs - rhs).max())
    return float(worst)


# Degree-2 symmetric quadrature on an n-simplex (all weights equal).
def _stroud2(n: int) -> np.ndarray:
    s = math.sqrt(n + 2)
    b = (n + 2 - s) / ((n + 1) * (n + 2))
    a = 1.0 - n * b
    return np.full((n + 1, n + 1), b) + np.eye(n + 1) * (a - b)


def graph_volume(f: BoundaryMap, sphere: Mesh) -> float:
    """n-volume of the graph {(x, f(x))} over the round sphere meshed by ``sphere``.

    Each flat simplex parametrizes its radial projection; the pulled-back
    Jacobian of x -> (x, f(x)) is taken by central differences and
    integrated with a degree-2 rule.
    """
    if f.components:
        raise BoundaryDataError("graph_volume takes a single-component map")
    n = sphere.dimension_top
    if not sphere.is_sphere or n != f.domain_dim:
        raise BoundaryDataError(
            f"need a mesh of S^{f.domain_dim}, got {sphere.kind} with dimension {n}"
        )
    rho = float(np.mean(np.linalg.norm(sphere.vertices, axis=1)))
    if abs(rho - f.domain_radius) > 1e-8 * max(1.0, rho):
        raise BoundaryDataError(
            f"sphere radius {rho} does not match map domain radius {f.domain_radius}"
        )
    P = sphere.vertices[sphere.simplices]  # (N, n+1, n+1)
    E = P[:, 1:] - P[:, :1]  # (N, n, n+1)
    flat_vol_factor = 1.0 / math.factorial(n)
    total = np.zeros(len(P))
    rule = _stroud2(n)

    def lift(y):
        x = rho * y / np.linalg.norm(y, axis=-1, keepdims=True)
        return np.concatenate([x, f(x.reshape(-1, n + 1)).reshape(*x.shape[:-1], -1)], axis=-1)

    for lam in rule:
        y = np.einsum("k,nki->ni", lam, P)
        cols = []
        for k in range(n):
            e = E[:, k]
            L = np.linalg.norm(e, axis=1, keepdims=True)
            step = FD_STEP * e / L
            d = (lift(y + step) - lift(y - step)) / (2 * FD_STEP)
            cols.append(d * L)
        M = np.stack(cols, axis=1)  # (N, n, dim)
        G = np.einsum("nai,nbi->nab", M, M)
        total += np.sqrt(np.linalg.det(G)) * flat_vol_factor / len(rule)
    return float(np.sum(total))


# -- reach ---------------------------------------------------------------------

def _second_fundamental_norm(Y: np.ndarray, l: int, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local quadric fits: max |II(u,u)| per point, plus tangent bases and neighbours."""
    tree = cKDTree(Y)
    _, nbr = tree.query(Y, k=k + 1)
    nbr = nbr[:, 1:]
    D = Y[nbr] - Y[:, None, :]  # (N, k, dim)
    C = np.einsum("nki,nkj->nij", D, D)
    _, vecs = np.linalg.eigh(C)
    T = vecs[:, :, ::-1][:, :, :l]  # top-l principal directions
    Nrm = vecs[:, :, ::-1][:, :, l:]
    u = np.einsum("nki,nil->nkl", D, T)
    h = np.einsum("nki,nic->nkc", D, Nrm)
    iu, ju = np.triu_indices(l)
    quad = u[:, :, iu] * u[:, :, ju]
    design = np.concatenate([np.ones(u.shape[:2] + (1,)), u, quad], axis=2)
    pinv = np.linalg.pinv(design)  # (N, p, k)
    beta = np.einsum("npk,nkc->npc", pinv, h)[:, 1 + l:, :]  # quadratic coefficients
    # Hessian H_c with h = 1/2 u^T H u: diagonal coef*2, off-diagonal coef.
    H = np.zeros((len(Y), l, l, h.shape[2]))
    for t, (i, j) in enumerate(zip(iu, ju)):
        if i == j:
            H[:, i, i] = 2 * beta[:, t]
        else:
            H[:, i, j] = beta[:, t]
            H[:, j, i] = beta[:, t]
    if l == 1:
        dirs = np.ones((1, 1))
    else:
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((64, l))
        if l == 2:
            a = np.linspace(0, np.pi, 64, endpoint=False)
            dirs = np.stack([np.cos(a), np.sin(a)], axis=1)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    II = np.einsum("dl,nlmc,dm->ndc", dirs, H, dirs)
    return np.linalg.norm(II, axis=2).max(axis=1), T, nbr


def reach_estimate(f: BoundaryMap, samples: int = 2000, neighbors: int | None = None,
                   normal_tol: float = 0.1, seed: int = 0) -> float:
    """Estimate of the normal injectivity radius of the image of f.

    Round sphere images return their radius.  Otherwise the minimum of the
    focal bound 1/max curvature (local quadric fits) and half the shortest
    chord that is close to normal at both ends.
    """
    if f.components:
        raise BoundaryDataError("reach_estimate takes a single-component map")
    if f.round_image and f.image_radius is not None:
        return float(f.image_radius)
    if samples < 100:
        raise BoundaryDataError(f"reach_estimate needs at least 100 samples, got {samples}")
    l = f.image_dim
    k = neighbors or max(3 * (l + 1) * (l + 2) // 2, 20)
    if samples <= k:
        raise BoundaryDataError("too few samples for the quadric fit")
    Y = f(sphere_samples(f.domain_dim, samples, f.domain_radius, seed))
    Y = np.unique(np.round(Y, 12), axis=0)
    if len(Y) <= k:
        raise BoundaryDataError("too few distinct image samples for the quadric fit")
    kappa, T, nbr = _second_fundamental_norm(Y, l, k)
    focal = 1.0 / kappa.max() if kappa.max() > 0 else math.inf

    local = np.linalg.norm(Y[nbr[:, -1]] - Y, axis=1)
    best = math.inf
    for start in range(0, len(Y), 512):
        sl = slice(start, start + 512)
        D = Y[None, :, :] - Y[sl, None, :]  # (b, N, dim)
        dist = np.linalg.norm(D, axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            ti = np.linalg.norm(np.einsum("bni,bil->bnl", D, T[sl]), axis=2) / dist
            tj = np.linalg.norm(np.einsum("bni,nil->bnl", D, T), axis=2) / dist
        far = dist > 2 * np.maximum(local[sl, None], local[None, :])
        ok = far & (ti <= normal_tol) & (tj <= normal_tol)
        if np.any(ok):
            best = min(best, float(dist[ok].min()))
    return float(min(focal, 0.5 * best))


def image_distance(f1: BoundaryMap, f2: BoundaryMap, samples: int = 4096, seed: int = 0) -> float:
    """Minimum distance between sampled images of two maps.

    Both maps are sampled at the same directions, scaled to each domain radius.
    """
    if f1.domain_dim != f2.domain_dim:
        raise BoundaryDataError("component domain dimensions differ")
    u = sphere_samples(f1.domain_dim, samples, 1.0, seed)
    A = f1(u * f1.domain_radius)
    B = f2(u * f2.domain_radius)
    d, _ = cKDTree(B).query(A)
    return float(d.min())


def annulus_data(f1: BoundaryMap, f2: BoundaryMap) -> BoundaryMap:
    """Two-component boundary data: f1 on the inner sphere, f2 on the outer one."""
    if f1.domain_dim != f2.domain_dim:
        raise BoundaryDataError("component domain dimensions differ")
    if f1.target_dim != f2.target_dim:
        raise BoundaryDataError("component target dimensions differ")
    return BoundaryMap(
        name=f"annulus:{f1.name}|{f2.name}",
        domain_dim=f1.domain_dim,
        target_dim=f1.target_dim,
        image_dim=max(f1.image_dim, f2.image_dim),
        evaluator=None,
        domain_radius=f2.domain_radius,
        components=(("inner", f1), ("outer", f2)),
    )


def torus_data(n: int, cross_radius: float = 0.5, circle_radius: float = 1.0) -> BoundaryMap:
    """f(x, t) = x on the boundary S^(n-1)(1/2) x S^1 of the solid torus in R^(n+1)."""
    if n < 2:
        raise BoundaryDataError(f"torus data needs n >= 2, got {n}")

    def ev(P):
        x, _ = torus_coordinates(P, circle_radius)
        r = np.linalg.norm(x, axis=1, keepdims=True)
        if np.any(np.abs(r - cross_radius) > 1e-6):
            raise BoundaryDataError("torus data evaluated off the torus boundary")
        return x

    return BoundaryMap(
        name="torus",
        domain_dim=n,
        target_dim=n,
        image_dim=n - 1,
        evaluator=ev,
        image_radius=cross_radius,
        round_image=True,
        ambient=True,
    )


def _annulus_hopf12() -> BoundaryMap:
    f1 = _hopf_boundary_map("S3_S2")
    f2 = BoundaryMap(
        name="2*hopf3(x/|x|)",
        domain_dim=3,
        target_dim=3,
        image_dim=2,
        evaluator=lambda P: 2.0 * hopf_map("S3_S2", P / np.linalg.norm(P, axis=1, keepdims=True)),
        domain_radius=2.0,
        image_radius=2.0,
        round_image=True,
    )
    return annulus_data(f1, f2)


def _identity(n: int) -> BoundaryMap:
    return BoundaryMap(name=f"identity{n}", domain_dim=n, target_dim=n + 1, image_dim=n,
                       evaluator=lambda P: P.copy(), image_radius=1.0, round_image=True)


def _antipodal(n: int) -> BoundaryMap:
    return BoundaryMap(name=f"antipodal{n}", domain_dim=n, target_dim=n + 1, image_dim=n,
                       evaluator=lambda P: -P, image_radius=1.0, round_image=True)


def _zpow(k: int) -> BoundaryMap:
    """z -> z^k / |z|^k on the unit circle (k may be negative)."""
    def ev(P):
        t = k * np.arctan2(P[:, 1], P[:, 0])
        return np.stack([np.cos(t), np.sin(t)], axis=1)

    return BoundaryMap(name=f"zpow{k}", domain_dim=1, target_dim=2, image_dim=1 if k else 0,
                       evaluator=ev, image_radius=1.0, round_image=k != 0)


def _zero(n: int, target_dim: int = 3) -> BoundaryMap:
    return BoundaryMap(name="zero", domain_dim=n, target_dim=target_dim, image_dim=0,
                       evaluator=lambda P: np.zeros((len(P), target_dim)))


def _planar_z2(real_only: bool) -> BoundaryMap:
    """z -> z^2 on the unit circle, as (x^2 - y^2, 2xy) or just its real part."""
    if real_only:
        ev = lambda P: (P[:, 0] ** 2 - P[:, 1] ** 2)[:, None]
    else:
        ev = lambda P: np.stack([P[:, 0] ** 2 - P[:, 1] ** 2, 2 * P[:, 0] * P[:, 1]], axis=1)
    return BoundaryMap(name="re_z2" if real_only else "zsquare", domain_dim=1,
                       target_dim=1 if real_only else 2, image_dim=1, evaluator=ev)


MAP_REGISTRY: dict[str, Callable[..., BoundaryMap]] = {
    "hopf3": lambda **kw: _hopf_boundary_map("S3_S2"),
    "hopf7": lambda **kw: _hopf_boundary_map("S7_S4"),
    "hopf15": lambda **kw: _hopf_boundary_map("S15_S8"),
    "torus": lambda n=2, **kw: torus_data(n),
    "annulus:hopf12": lambda **kw: _annulus_hopf12(),
    "identity": lambda n=2, **kw: _identity(n),
    "zsquare": lambda **kw: _planar_z2(False),
    "re_z2": lambda **kw: _planar_z2(True),
    "antipodal": lambda n=2, **kw: _antipodal(n),
    "zpow": lambda k=2, **kw: _zpow(k),
    "zero": lambda n=3, target_dim=3, **kw: _zero(n, target_dim),
}


def get_map(name: str, **kwargs) -> BoundaryMap:
    try:
        factory = MAP_REGISTRY[name]
    except KeyError:
        raise BoundaryDataError(
            f"unknown map id {name!r}; known: {', '.join(sorted(MAP_REGISTRY))}"
        ) from None
    return factory(**kwargs)
