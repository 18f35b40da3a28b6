"""Oriented simplicial meshes of spheres and of the ball, annulus and solid torus.

Sphere meshes start from the boundary of the cross-polytope and are refined by
edge-midpoint subdivision followed by radial projection.  Domain meshes are
built from radial shells of a sphere mesh (ball, annulus) or by sweeping a
cross-section ball mesh around a circle (solid torus).  Prisms are split into
simplices with the staircase rule on global vertex indices, which keeps the
result conforming.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any

import numpy as np

MESH_FORMAT_VERSION = 1
MAX_SIMPLICES = 4_000_000


class MeshError(ValueError):
    pass


class MeshBudgetError(MeshError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable simplicial complex with boundary bookkeeping.

    ``simplices`` are positively oriented: for domain meshes the edge
    determinant is positive, for sphere meshes ``det[v0, ..., vn] > 0``
    (outward normal first).
    """

    dimension_ambient: int
    dimension_top: int
    vertices: np.ndarray
    simplices: np.ndarray
    kind: str = "sphere"
    params: dict = field(default_factory=dict)
    shell_index: np.ndarray | None = None
    boundary_facets: np.ndarray = field(default=None)
    boundary_owner: np.ndarray = field(default=None)
    boundary_opposite: np.ndarray = field(default=None)
    boundary_tags: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("vertices", "simplices", "shell_index", "boundary_facets",
                     "boundary_owner", "boundary_opposite", "boundary_tags"):
            arr = getattr(self, name)
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_simplices(self) -> int:
        return len(self.simplices)

    @property
    def is_sphere(self) -> bool:
        return self.dimension_top < self.dimension_ambient

    @property
    def boundary_vertices(self) -> np.ndarray:
        if self.boundary_facets is None or len(self.boundary_facets) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.boundary_facets)

    @property
    def interior_vertices(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.flatnonzero(mask)

    def boundary_vertices_tagged(self, tag: str) -> np.ndarray:
        sel = self.boundary_facets[self.boundary_tags == tag]
        return np.unique(sel)

    def simplex_volumes(self) -> np.ndarray:
        return simplex_volumes(self.vertices, self.simplices)

    def volume(self) -> float:
        return float(np.sum(self.simplex_volumes()))

    def signed_volumes(self) -> np.ndarray:
        """Signed top-dimensional volumes (positive for a valid mesh)."""
        P = self.vertices[self.simplices]
        if self.is_sphere:
            return np.linalg.det(P) / math.factorial(self.dimension_top)
        E = P[:, 1:] - P[:, :1]
        return np.linalg.det(E) / math.factorial(self.dimension_top)

    def edge_lengths(self) -> np.ndarray:
        k = self.dimension_top + 1
        pairs = np.array(list(combinations(range(k), 2)))
        e = self.simplices[:, pairs].reshape(-1, 2)
        e = np.unique(np.sort(e, axis=1), axis=0)
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def max_edge_length(self) -> float:
        return float(self.edge_lengths().max())

    def scaled(self, factor: float) -> "Mesh":
        """Dilate the mesh about the origin (factor > 0 keeps orientation)."""
        if factor <= 0:
            raise MeshError("dilation factor must be positive")
        params = dict(self.params)
        params["dilation"] = params.get("dilation", 1.0) * factor
        return Mesh(
            dimension_ambient=self.dimension_ambient,
            dimension_top=self.dimension_top,
            vertices=self.vertices * factor,
            simplices=self.simplices.copy(),
            kind=self.kind,
            params=params,
            shell_index=None if self.shell_index is None else self.shell_index.copy(),
            boundary_facets=None if self.boundary_facets is None else self.boundary_facets.copy(),
            boundary_owner=None if self.boundary_owner is None else self.boundary_owner.copy(),
            boundary_opposite=None if self.boundary_opposite is None else self.boundary_opposite.copy(),
            boundary_tags=None if self.boundary_tags is None else self.boundary_tags.copy(),
        )

    def boundary_mesh(self) -> "Mesh":
        """The boundary facets as a closed sphere-type mesh (same vertex array)."""
        return Mesh(
            dimension_ambient=self.dimension_ambient,
            dimension_top=self.dimension_top - 1,
            vertices=self.vertices.copy(),
            simplices=self.boundary_facets.copy(),
            kind=f"{self.kind}:boundary",
            params=dict(self.params),
        )

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "version": MESH_FORMAT_VERSION,
            "kind": self.kind,
            "params": self.params,
            "dimension_ambient": self.dimension_ambient,
            "dimension_top": self.dimension_top,
            "vertices": self.vertices.tolist(),
            "simplices": self.simplices.tolist(),
            "shell_index": None if self.shell_index is None else self.shell_index.tolist(),
            "boundary": {
                "facets": [] if self.boundary_facets is None else self.boundary_facets.tolist(),
                "owner": [] if self.boundary_owner is None else self.boundary_owner.tolist(),
                "opposite": [] if self.boundary_opposite is None else self.boundary_opposite.tolist(),
                "tags": [] if self.boundary_tags is None else self.boundary_tags.tolist(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Mesh":
        if d.get("version") != MESH_FORMAT_VERSION:
            raise MeshError(f"unsupported mesh file version {d.get('version')!r}")
        b = d["boundary"]
        top = d["dimension_top"]
        facets = np.asarray(b["facets"], dtype=np.int64).reshape(-1, top)
        return cls(
            dimension_ambient=d["dimension_ambient"],
            dimension_top=top,
            vertices=np.asarray(d["vertices"], dtype=float),
            simplices=np.asarray(d["simplices"], dtype=np.int64),
            kind=d["kind"],
            params=d["params"],
            shell_index=None if d["shell_index"] is None else np.asarray(d["shell_index"], dtype=np.int64),
            boundary_facets=facets,
            boundary_owner=np.asarray(b["owner"], dtype=np.int64),
            boundary_opposite=np.asarray(b["opposite"], dtype=np.int64),
            boundary_tags=np.asarray(b["tags"], dtype=str),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Mesh":
        return cls.from_dict(json.loads(Path(path).read_text()))


def simplex_volumes(vertices: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    """Unsigned k-volumes of simplices embedded in any ambient dimension."""
    P = vertices[simplices]
    E = P[:, 1:] - P[:, :1]
    k = simplices.shape[1] - 1
    G = np.einsum("nai,nbi->nab", E, E)
    return np.sqrt(np.clip(np.linalg.det(G), 0.0, None)) / math.factorial(k)


def ball_volume(dim: int) -> float:
    """Volume of the unit ball in R^dim."""
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


def sphere_area(n: int, radius: float = 1.0) -> float:
    """n-volume of the round sphere S^n(radius) in R^(n+1)."""
    return (n + 1) * ball_volume(n + 1) * radius ** n


# -- refinement ---------------------------------------------------------

# Children of the regular (red) subdivision, written in local labels: corner i
# is i, the midpoint of edge (i, j) is the tuple (i, j).
_CHILDREN = {
    1: [(0, (0, 1)), ((0, 1), 1)],
    2: [
        (0, (0, 1), (0, 2)),
        ((0, 1), 1, (1, 2)),
        ((0, 2), (1, 2), 2),
        ((0, 1), (1, 2), (0, 2)),
    ],
    3: [
        (0, (0, 1), (0, 2), (0, 3)),
        ((0, 1), 1, (1, 2), (1, 3)),
        ((0, 2), (1, 2), 2, (2, 3)),
        ((0, 3), (1, 3), (2, 3), 3),
        ((0, 1), (0, 2), (0, 3), (1, 3)),
        ((0, 1), (0, 2), (1, 2), (1, 3)),
        ((0, 2), (0, 3), (1, 3), (2, 3)),
        ((0, 2), (1, 2), (1, 3), (2, 3)),
    ],
}


def _subdivide(vertices: np.ndarray, simplices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = simplices.shape[1] - 1
    pairs = list(combinations(range(k + 1), 2))
    edges = np.sort(simplices[:, pairs], axis=2).reshape(-1, 2)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.reshape(len(simplices), len(pairs))
    mids = 0.5 * (vertices[uniq[:, 0]] + vertices[uniq[:, 1]])
    new_vertices = np.vstack([vertices, mids])
    local = np.hstack([simplices, len(vertices) + inv])
    label = {i: i for i in range(k + 1)}
    label.update({p: k + 1 + j for j, p in enumerate(pairs)})
    children = [local[:, [label[c] for c in child]] for child in _CHILDREN[k]]
    return new_vertices, np.concatenate(children, axis=0)


def _orient_sphere(vertices: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    s = simplices.copy()
    flip = np.linalg.det(vertices[s]) < 0
    s[flip, 0], s[flip, 1] = simplices[flip, 1], simplices[flip, 0]
    return s


def _orient_domain(vertices: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    s = simplices.copy()
    P = vertices[s]
    flip = np.linalg.det(P[:, 1:] - P[:, :1]) < 0
    s[flip, 0], s[flip, 1] = simplices[flip, 1], simplices[flip, 0]
    return s


def _check_budget(count: float, max_simplices: int) -> None:
    if count > max_simplices:
        raise MeshBudgetError(
            f"requested mesh has {int(count)} simplices, budget is {max_simplices}"
        )


def sphere_mesh(n: int, refinement_level: int = 0, radius: float = 1.0,
                max_simplices: int = MAX_SIMPLICES) -> Mesh:
    """Mesh of S^n(radius) from the refined boundary of the (n+1)-cross-polytope."""
    if n not in (1, 2, 3):
        raise MeshError(f"sphere_mesh supports 1 <= n <= 3, got n={n}")
    if refinement_level < 0:
        raise MeshError("refinement_level must be >= 0")
    _check_budget(2 ** (n + 1) * float(2 ** n) ** refinement_level, max_simplices)

    d = n + 1
    V = np.vstack([np.eye(d), -np.eye(d)])
    signs = np.array(list(np.ndindex(*([2] * d))))
    S = np.arange(d)[None, :] + d * signs
    S = _orient_sphere(V, S)
    for _ in range(refinement_level):
        V, S = _subdivide(V, S)
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        S = _orient_sphere(V, S)
    V = V * radius
    return Mesh(
        dimension_ambient=d,
        dimension_top=n,
        vertices=V,
        simplices=S.astype(np.int64),
        kind="sphere",
        params={"n": n, "refinement_level": refinement_level, "radius": radius},
        boundary_facets=np.zeros((0, n), dtype=np.int64),
        boundary_owner=np.zeros(0, dtype=np.int64),
        boundary_opposite=np.zeros(0, dtype=np.int64),
        boundary_tags=np.zeros(0, dtype=str),
    )


def _staircase(lower: np.ndarray, upper: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Split prisms (simplex x interval) into simplices.

    ``lower``/``upper`` hold the global ids of the prism's two copies of each
    base vertex, ``order`` the base ids used to sort.  Sorting by base id makes
    neighbouring prisms agree on shared faces.
    """
    idx = np.argsort(order, axis=1, kind="stable")
    lo = np.take_along_axis(lower, idx, axis=1)
    up = np.take_along_axis(upper, idx, axis=1)
    k = lo.shape[1]
    parts = [np.hstack([lo[:, : j + 1], up[:, j:]]) for j in range(k)]
    return np.concatenate(parts, axis=0)


def _boundary(vertices: np.ndarray, simplices: np.ndarray):
    """Boundary facets with induced (outward) orientation, owner simplex and opposite local vertex."""
    ns, k1 = simplices.shape
    faces, owners, opp = [], [], []
    for i in range(k1):
        f = np.delete(simplices, i, axis=1)
        if i % 2 == 1:
            f = f.copy()
            f[:, [0, 1]] = f[:, [1, 0]]
        faces.append(f)
        owners.append(np.arange(ns))
        opp.append(np.full(ns, i))
    faces = np.concatenate(faces)
    owners = np.concatenate(owners)
    opp = np.concatenate(opp)
    key = np.sort(faces, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if np.any(counts > 2):
        raise MeshError("non-manifold mesh: facet shared by more than two simplices")
    once = counts[inv] == 1
    order = np.argsort(owners[once] * k1 + opp[once], kind="stable")
    return faces[once][order], owners[once][order], opp[once][order]


def _finish_domain(vertices, simplices, kind, params, shell_index=None, tagger=None) -> Mesh:
    simplices = _orient_domain(vertices, simplices.astype(np.int64))
    facets, owner, opp = _boundary(vertices, simplices)
    if tagger is None:
        tags = np.full(len(facets), "outer")
    else:
        tags = tagger(vertices[facets].mean(axis=1))
    return Mesh(
        dimension_ambient=vertices.shape[1],
        dimension_top=vertices.shape[1],
        vertices=vertices,
        simplices=simplices,
        kind=kind,
        params=params,
        shell_index=shell_index,
        boundary_facets=facets,
        boundary_owner=owner,
        boundary_opposite=opp,
        boundary_tags=np.asarray(tags, dtype=str),
    )


def shell_radii(r0: float, r1: float, shells: int, spacing: str = "uniform",
                ratio: float = 0.7) -> np.ndarray:
    """Radii of ``shells + 1`` shells from r0 to r1 (r0 = 0 allowed for uniform)."""
    if spacing == "uniform":
        return np.linspace(r0, r1, shells + 1)
    if spacing == "geometric":
        if r0 > 0:
            return r0 * (r1 / r0) ** (np.arange(shells + 1) / shells)
        r = r1 * ratio ** np.arange(shells - 1, -1, -1.0)
        return np.concatenate([[0.0], r])
    raise MeshError(f"unknown shell spacing {spacing!r}")


def _radial_mesh(sphere: Mesh, radii: np.ndarray, with_center: bool):
    nv = sphere.n_vertices
    unit = sphere.vertices / np.linalg.norm(sphere.vertices, axis=1, keepdims=True)
    shells = radii[1:] if with_center else radii
    V = [np.zeros((1, unit.shape[1]))] if with_center else []
    V += [r * unit for r in shells]
    V = np.vstack(V)
    off = 1 if with_center else 0
    first = 1 if with_center else 0
    shell_index = np.repeat(np.arange(first, first + len(shells)), nv)
    if with_center:
        shell_index = np.concatenate([[0], shell_index])
    shell_index = shell_index.astype(np.int64)
    base = sphere.simplices
    parts = []
    if with_center:
        parts.append(np.hstack([np.zeros((len(base), 1), dtype=np.int64), base + off]))
    for k in range(len(shells) - 1):
        lower = base + off + k * nv
        upper = base + off + (k + 1) * nv
        parts.append(_staircase(lower, upper, base))
    return V, np.concatenate(parts, axis=0), shell_index


def domain_mesh(kind: str, params: dict | None = None, shells: int = 4,
                refinement_level: int = 1, *, spacing: str = "uniform",
                max_simplices: int = MAX_SIMPLICES) -> Mesh:
    """Mesh of a ball, annulus or solid torus in R^(n+1).

    params:
      ball:        {"dim": n+1, "radius": 1.0}
      annulus:     {"dim": n+1, "r_in": 1.0, "r_out": 2.0}
      solid_torus: {"dim": n+1, "cross_radius": 0.5, "circle_radius": 1.0,
                    "segments": optional number of slices around the circle}
    """
    p = dict(params or {})
    dim = int(p.get("dim", 2))
    if shells < 1:
        raise MeshError("shells must be >= 1")
    if kind == "ball":
        radius = float(p.get("radius", 1.0))
        if radius <= 0:
            raise MeshError("ball radius must be positive")
        _check_budget(2 ** dim * float(2 ** (dim - 1)) ** refinement_level * (1 + (shells - 1) * dim), max_simplices)
        sph = sphere_mesh(dim - 1, refinement_level)
        radii = shell_radii(0.0, radius, shells, spacing, p.get("ratio", 0.7))
        V, S, sh = _radial_mesh(sph, radii, with_center=True)
        rec = {"dim": dim, "radius": radius, "shells": shells,
               "refinement_level": refinement_level, "spacing": spacing}
        return _finish_domain(V, S, "ball", rec, sh)
    if kind == "annulus":
        r_in = float(p.get("r_in", 1.0))
        r_out = float(p.get("r_out", 2.0))
        if not (0 < r_in < r_out):
            raise MeshError(f"annulus needs 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}")
        _check_budget(2 ** dim * float(2 ** (dim - 1)) ** refinement_level * shells * dim, max_simplices)
        sph = sphere_mesh(dim - 1, refinement_level)
        radii = shell_radii(r_in, r_out, shells, spacing)
        V, S, sh = _radial_mesh(sph, radii, with_center=False)
        mid = 0.5 * (r_in + r_out)
        rec = {"dim": dim, "r_in": r_in, "r_out": r_out, "shells": shells,
               "refinement_level": refinement_level, "spacing": spacing}
        return _finish_domain(
            V, S, "annulus", rec, sh,
            tagger=lambda c: np.where(np.linalg.norm(c, axis=1) < mid, "inner", "outer"),
        )
    if kind == "solid_torus":
        return _solid_torus(p, dim, shells, refinement_level, max_simplices)
    raise MeshError(f"unknown domain kind {kind!r}")


def _solid_torus(p: dict, dim: int, shells: int, level: int, max_simplices: int) -> Mesh:
    a = float(p.get("cross_radius", 0.5))
    b = float(p.get("circle_radius", 1.0))
    if a <= 0 or b <= 0:
        raise MeshError("solid torus radii must be positive")
    if a >= b:
        raise MeshError("solid torus needs cross_radius < circle_radius to embed")
    if dim not in (3, 4):
        raise MeshError(f"solid torus supported for ambient dimension 3 or 4, got {dim}")
    segments = int(p.get("segments", 8 * 2 ** level))
    if segments < 3:
        raise MeshError("solid torus needs at least 3 segments")
    cross = domain_mesh("ball", {"dim": dim - 1, "radius": a}, shells, level,
                        max_simplices=max_simplices)
    _check_budget(cross.n_simplices * dim * segments, max_simplices)
    nv = cross.n_vertices
    t = 2 * np.pi * np.arange(segments) / segments
    X = cross.vertices
    rho = b + X[:, -1]
    V = np.concatenate([
        np.hstack([X[:, :-1], (rho * np.cos(tk))[:, None], (rho * np.sin(tk))[:, None]])
        for tk in t
    ])
    base = cross.simplices
    parts = []
    for k in range(segments):
        kk = (k + 1) % segments
        parts.append(_staircase(base + k * nv, base + kk * nv, base))
    S = np.concatenate(parts, axis=0)
    rec = {"dim": dim, "cross_radius": a, "circle_radius": b, "shells": shells,
           "refinement_level": level, "segments": segments}
    return _finish_domain(V, S, "solid_torus", rec,
                          tagger=lambda c: np.full(len(c), "outer"))


def torus_coordinates(points: np.ndarray, circle_radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Split points of the swept solid torus into cross-section coordinates and angle.

    Inverse of the embedding (y, s, t) -> (y, (b + s) cos t, (b + s) sin t).
    """
    P = np.atleast_2d(points)
    u, v = P[:, -2], P[:, -1]
    rho = np.hypot(u, v)
    x = np.hstack([P[:, :-2], (rho - circle_radius)[:, None]])
    return x, np.arctan2(v, u)
