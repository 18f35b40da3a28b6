"""Closed-form graphs used as oracles: flat, affine, and the holomorphic z^2."""

from __future__ import annotations

import math

import numpy as np

from .geometry import GraphFunction
from .mesh import Mesh, domain_mesh

FIXTURES = ("flat", "affine", "plane", "zsquare")

# a fixed generic affine map R^2 -> R^3
AFFINE_A = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]])
AFFINE_B = np.array([1.5, 0.0, -0.5])


def disk_mesh(level: int, dim: int = 2) -> Mesh:
    """Reference ball mesh: 2^level shells and sphere refinement ``level``."""
    return domain_mesh("ball", {"dim": dim}, shells=2 ** level, refinement_level=level)


def zsquare(X: np.ndarray) -> np.ndarray:
    x, y = X[:, 0], X[:, 1]
    return np.stack([x * x - y * y, 2 * x * y], axis=1)


def fixture(name: str, mesh: Mesh) -> GraphFunction:
    X = mesh.vertices
    if name == "flat":
        return GraphFunction(mesh, np.zeros((mesh.n_vertices, 1)))
    if name == "affine":
        return GraphFunction(mesh, X @ AFFINE_A[: X.shape[1]] + AFFINE_B)
    if name == "plane":
        # z = (x, y) tilted: the graph is a flat 2-plane in R^4
        return GraphFunction(mesh, X @ np.array([[0.3, -0.2], [0.1, 0.4]])[: X.shape[1]])
    if name == "zsquare":
        if X.shape[1] != 2:
            raise ValueError("zsquare lives on a planar disk")
        return GraphFunction(mesh, zsquare(X))
    raise ValueError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")


def exact_mass(name: str, mesh: Mesh) -> float:
    """Mass of the smooth graph over the smooth domain the mesh approximates."""
    dim = mesh.dimension_top
    vol = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)
    if name == "flat":
        return vol
    if name == "zsquare":
        return 3 * math.pi
    A = AFFINE_A[:dim] if name == "affine" else np.array([[0.3, -0.2], [0.1, 0.4]])[:dim]
    return vol * math.sqrt(np.linalg.det(np.eye(dim) + A @ A.T))
