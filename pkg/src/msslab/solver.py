"""Discrete area minimization for graphs with Dirichlet data.

The energy is the PL graph mass; its gradient with respect to the vertex
values is the weak residual of the range equations, so a minimizer is a
discrete solution of the minimal surface system.  The optimizer is a
nonlinear conjugate gradient (Polak-Ribiere+, lumped-mass preconditioned)
with a quadratic-interpolation first trial and Armijo backtracking.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary_data import BoundaryMap
from .geometry import (
    GraphFunction,
    dual_volumes,
    graph_mass,
    lipschitz_estimate,
    msys_residual,
    weak_residual_vectors,
    simplex_jacobians,
)
from .mesh import Mesh, torus_coordinates


class SolverError(ValueError):
    pass


@dataclass
class SolverOptions:
    tol: float = 1e-8  # on |grad| relative to the initial |grad|
    abs_tol: float = 1e-13
    max_iter: int = 20000
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    restart_every: int = 200
    lipschitz_blowup: float = 1e3
    trace_every: int = 1


@dataclass
class SolveResult:
    converged: bool
    iterations: int
    final_gradient_norm: float
    mass: float
    lipschitz: float
    min_norm_interior: float
    wall_time: float
    R: float
    status: str = "ok"
    F: GraphFunction | None = field(default=None, repr=False)
    trace: list = field(default_factory=list, repr=False)
    flag: str = ""
    annotations: dict = field(default_factory=dict)

    def summary(self) -> dict:
        """Numerical fields only (no wall time, no arrays)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("F", "trace", "wall_time")}
        return d

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "gradient_norm"])
        for it, e, g in self.trace:
            w.writerow([it, repr(e), repr(g)])
        return buf.getvalue()


@dataclass(frozen=True)
class ConeScan:
    theta_grid: list
    residuals: list  # (r_domain, r_range) per theta
    theta_star: float
    projected: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "r_domain", "r_range", "projected"])
        for t, (rd, rr), p in zip(self.theta_grid, self.residuals, self.projected):
            w.writerow([repr(t), repr(rd), repr(rr), repr(p)])
        return buf.getvalue()


# -- energy -----------------------------------------------------------------------

def area_energy_and_gradient(F: GraphFunction, free_vertices=None) -> tuple[float, np.ndarray]:
    """Graph mass and its gradient with respect to the values at free vertices.

    d/dF_v of vol*sqrt(det(I + J^T J)) is vol*sqrt(det g) * J g^-1 grad(phi_v),
    summed over the simplices around v in simplex order.
    """
    mesh = F.mesh
    J, vol, grad_phi = simplex_jacobians(F)
    d = J.shape[2]
    g = np.eye(d) + np.einsum("nai,naj->nij", J, J)
    sqrt_g = np.sqrt(np.linalg.det(g))
    energy = float(np.sum(vol * sqrt_g))
    A = (vol * sqrt_g)[:, None, None] * np.linalg.inv(g)
    per = np.einsum("naj,nkj->nka", J, np.einsum("nij,nkj->nki", A, grad_phi))
    grad = np.zeros((mesh.n_vertices, F.target_dimension))
    np.add.at(grad, mesh.simplices.ravel(), per.reshape(-1, F.target_dimension))
    if free_vertices is None:
        free_vertices = mesh.interior_vertices
    return energy, grad[np.asarray(free_vertices)]


def _det_identity_plus_minus_one(M: np.ndarray) -> np.ndarray:
    """det(I + M) - 1 per stacked matrix, without cancellation for small M.

    Sum of the elementary symmetric polynomials of M, from power traces by
    Newton's identities.
    """
    d = M.shape[-1]
    p, Mk = [], M
    for _ in range(d):
        p.append(np.trace(Mk, axis1=-2, axis2=-1))
        Mk = Mk @ M
    e = [np.ones(M.shape[0])]
    for k in range(1, d + 1):
        acc = np.zeros(M.shape[0])
        for i in range(1, k + 1):
            acc = acc + (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e.append(acc / k)
    return sum(e[1:])


def _energy_change(mesh: Mesh, V: np.ndarray, free: np.ndarray, d: np.ndarray,
                   Einv: np.ndarray, vol: np.ndarray):
    """phi(a) = E(V + a d) - E(V), accurate even when far below eps * E."""
    def jac(values):
        vals = values[mesh.simplices]
        return np.swapaxes(vals[:, 1:] - vals[:, :1], 1, 2) @ Einv

    D = np.zeros_like(V)
    D[free] = d
    J, dJ = jac(V), jac(D)
    k = J.shape[2]
    g = np.eye(k) + np.einsum("nai,naj->nij", J, J)
    ginv = np.linalg.inv(g)
    w = vol * np.sqrt(np.linalg.det(g))
    cross = np.einsum("nai,naj->nij", J, dJ)
    A = ginv @ (cross + np.swapaxes(cross, 1, 2))
    B = ginv @ np.einsum("nai,naj->nij", dJ, dJ)

    def phi(a: float) -> float:
        s = _det_identity_plus_minus_one(a * A + (a * a) * B)
        if not np.all(np.isfinite(s)) or np.any(s <= -1):
            return math.inf
        return float(np.sum(w * s / (np.sqrt(1 + s) + 1)))

    return phi


# -- boundary values and initial guesses ------------------------------------------

def boundary_values(mesh: Mesh, data: BoundaryMap, R: float) -> tuple[np.ndarray, np.ndarray]:
    """(ids, R * data) on the boundary vertices.

    Single-sphere data are extended radially (degree 0) so that a dilated
    ball sees the same data; annulus data use the boundary tags.
    """
    if data.components or data.ambient:
        ids, vals = data.evaluate_on_boundary(mesh)
        return ids, R * vals
    ids = mesh.boundary_vertices
    P = mesh.vertices[ids]
    P = P * (data.domain_radius / np.linalg.norm(P, axis=1, keepdims=True))
    return ids, R * data(P)


def _on_sphere(data: BoundaryMap, P: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(P, axis=1, keepdims=True)
    return data(P * (data.domain_radius / np.where(r > 0, r, 1.0)))


def initial_values(mesh: Mesh, data: BoundaryMap, R: float, init: str = "radial",
                   warm_start: np.ndarray | None = None) -> np.ndarray:
    m1 = data.target_dim
    X = mesh.vertices
    if init == "zero":
        V = np.zeros((mesh.n_vertices, m1))
    elif init == "warm_start":
        if warm_start is None:
            raise SolverError("init=warm_start needs previous values")
        V = np.array(warm_start, dtype=float)
        if V.shape != (mesh.n_vertices, m1):
            raise SolverError(f"warm start has shape {V.shape}, expected {(mesh.n_vertices, m1)}")
    elif init == "radial":
        V = np.zeros((mesh.n_vertices, m1))
        r = np.linalg.norm(X, axis=1)
        if mesh.kind == "ball":
            rho = float(mesh.params.get("radius", 1.0))
            nz = r > 0
            V[nz] = R * (r[nz] / rho)[:, None] * _on_sphere(data, X[nz])
        elif mesh.kind == "annulus" and data.components:
            f1, f2 = (c for _, c in data.components)
            r_in, r_out = mesh.params["r_in"], mesh.params["r_out"]
            t = ((r - r_in) / (r_out - r_in))[:, None]
            V = R * ((1 - t) * _on_sphere(f1, X) + t * _on_sphere(f2, X))
        elif mesh.kind == "solid_torus" and data.name == "torus":
            x, _ = torus_coordinates(X, float(mesh.params.get("circle_radius", 1.0)))
            V = R * x
        elif mesh.kind == "annulus":
            V = R * _on_sphere(data, X)
    else:
        raise SolverError(f"unknown init {init!r}; use zero, radial or warm_start")
    return V


# -- minimization -----------------------------------------------------------------

def minimize(mesh: Mesh, data: BoundaryMap, R: float, init: str = "radial",
             opts: SolverOptions | None = None, warm_start: np.ndarray | None = None) -> SolveResult:
    """Minimize graph mass with F = R * data on the boundary.

    Non-finite energies end the run with converged=False (status
    "diverged" or "line_search_failed"); they are never raised.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _minimize(mesh, data, R, init, opts, warm_start)


def _minimize(mesh, data, R, init, opts, warm_start) -> SolveResult:
    opts = opts or SolverOptions()
    if not math.isfinite(R):
        raise SolverError("R must be finite")
    t0 = time.perf_counter()
    ids, bvals = boundary_values(mesh, data, R)
    V = initial_values(mesh, data, R, init, warm_start)
    V[ids] = bvals
    free = mesh.interior_vertices
    P = mesh.vertices[mesh.simplices]
    E = np.swapaxes(P[:, 1:] - P[:, :1], 1, 2)
    Einv = np.linalg.inv(E)
    vol = np.abs(np.linalg.det(E)) / math.factorial(E.shape[1])
    precond = dual_volumes(mesh)[free][:, None]

    def energy_grad(values):
        return area_energy_and_gradient(GraphFunction(mesh, values), free)

    e, g = energy_grad(V)
    gnorm0 = gnorm = float(np.linalg.norm(g))
    target = max(opts.tol * gnorm0, opts.abs_tol)
    trace = [(0, e, gnorm)]
    status, converged, it = "max_iter", False, 0
    if gnorm <= target or len(free) == 0:
        status, converged = "ok", True
    else:
        z = g / precond
        d = -z
        gz = float(np.sum(g * z))
        alpha = 1.0 / max(float(np.abs(z).max()), 1e-300) * 1e-2
        for it in range(1, opts.max_iter + 1):
            slope = float(np.sum(g * d))
            if slope >= 0:
                d, slope = -z, -gz
            step, de = _line_search(_energy_change(mesh, V, free, d, Einv, vol), slope, alpha, opts)
            if step is None:
                status = "line_search_failed" if math.isfinite(e) else "diverged"
                break
            V = _shift(V, free, step, d)
            e, g_new = energy_grad(V)
            if not math.isfinite(e) or not np.all(np.isfinite(g_new)):
                status = "diverged"
                break
            gnorm = float(np.linalg.norm(g_new))
            if it % opts.trace_every == 0:
                trace.append((it, e, gnorm))
            if gnorm <= target:
                status, converged = "ok", True
                break
            z_new = g_new / precond
            gz_new = float(np.sum(g_new * z_new))
            beta = max(0.0, float(np.sum(z_new * (g_new - g))) / gz)
            if it % opts.restart_every == 0:
                beta = 0.0
            d_new = -z_new + beta * d
            slope_new = float(np.sum(g_new * d_new))
            if slope_new < 0:
                alpha = step * min(10.0, max(0.1, slope / slope_new))
            else:
                alpha = step
            d = d_new
            g, z, gz = g_new, z_new, gz_new
    F = GraphFunction(mesh, V)
    if trace[-1][0] != it and it > 0:
        trace.append((it, e, gnorm))
    lip = lipschitz_estimate(F)
    interior = mesh.interior_vertices
    mn = float(np.linalg.norm(V[interior], axis=1).min()) if len(interior) else math.inf
    return SolveResult(
        converged=converged, iterations=it, final_gradient_norm=gnorm,
        mass=graph_mass(F) if math.isfinite(e) else math.inf, lipschitz=lip,
        min_norm_interior=mn, wall_time=time.perf_counter() - t0, R=float(R),
        status=status, F=F, trace=trace,
    )


def _shift(V, free, a, d):
    out = V.copy()
    out[free] += a * d
    return out


def _line_search(phi, slope: float, alpha0: float, opts: SolverOptions):
    """Quadratic-interpolation trial, then Armijo backtracking on the energy change.

    Returns (step, change) with change <= 0, or (None, last change).
    """
    a = alpha0
    ea = phi(a)
    if math.isfinite(ea):
        curv = ea - slope * a
        if curv > 0:
            a_q = -slope * a * a / (2 * curv)
            a_q = min(max(a_q, 0.1 * a), 10 * a)
            eq = phi(a_q)
            if math.isfinite(eq) and eq < ea:
                a, ea = a_q, eq
    for _ in range(opts.max_backtracks):
        if math.isfinite(ea) and ea <= opts.armijo * a * slope and ea <= 0:
            return a, ea
        a *= opts.backtrack
        ea = phi(a)
    return None, ea


# -- continuation -----------------------------------------------------------------

def continuation(mesh: Mesh, data: BoundaryMap, R_schedule, opts: SolverOptions | None = None,
                 init: str = "radial", report=None) -> list[SolveResult]:
    """Solve along an increasing schedule, warm-starting from the previous R.

    Each result carries ``flag``: "" when fine, "not_converged",
    "lipschitz_blowup", or "artifact_suspect" (a converged mass below the
    lower bound L(R) while within U(R)).  Non-rigorous; failures are data.
    """
    opts = opts or SolverOptions()
    sched = [float(r) for r in R_schedule]
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise SolverError("R schedule must be strictly increasing")
    out: list[SolveResult] = []
    prev: np.ndarray | None = None
    prev_R = None
    for R in sched:
        if prev is None:
            res = minimize(mesh, data, R, init=init, opts=opts)
        else:
            # rescale the previous solution so the boundary matches exactly
            ws = prev * (R / prev_R) if prev_R else initial_values(mesh, data, R, init)
            res = minimize(mesh, data, R, init="warm_start", opts=opts, warm_start=ws)
        if not res.converged:
            res.flag = "not_converged"
        elif res.lipschitz > opts.lipschitz_blowup:
            res.flag = "lipschitz_blowup"
        if report is not None:
            from .bounds import annulus_lower_bound, annulus_upper_bound, lower_bound_curve, upper_bound_curve
            if report.regime == "annulus":
                U = annulus_upper_bound(R, report.n, report.l, report.V_eta)
                L = annulus_lower_bound(R, report.n, report.inputs["d"])
            else:
                U = upper_bound_curve(R, report.n, report.l, report.V_eta)
                L = lower_bound_curve(R, report.n, report.epsilon0)
            res.annotations = {"U": U, "L": L, "U_valid": R >= 1 or report.regime != "disk"}
            if res.converged and res.mass < L and res.mass <= U and R > report.R_star:
                res.flag = "artifact_suspect"
        out.append(res)
        prev, prev_R = res.F.values, R
    return out


# -- cone candidates ----------------------------------------------------------------

def cone_candidate(theta: float, eta: BoundaryMap, mesh: Mesh) -> GraphFunction:
    """F(x) = tan(theta) |x| eta(x/|x|), with F = 0 at the origin."""
    if not (0 < theta < math.pi / 2):
        raise SolverError(f"theta must lie in (0, pi/2), got {theta}")
    if eta.components or eta.ambient:
        raise SolverError("cone candidates need single-sphere data")
    X = mesh.vertices
    r = np.linalg.norm(X, axis=1)
    V = np.zeros((mesh.n_vertices, eta.target_dim))
    nz = r > 1e-14
    V[nz] = math.tan(theta) * (r[nz] / eta.domain_radius)[:, None] * _on_sphere(eta, X[nz])
    return GraphFunction(mesh, V)


def cone_scan(eta: BoundaryMap, theta_grid, mesh: Mesh) -> ConeScan:
    """Residuals of the cone over a theta grid on an annulus.

    ``residuals`` holds the max-norm weak residuals over interior vertices.
    They are dominated by mesh irregularity, so theta_star comes from the
    first variation along psi(|x|) eta(x/|x|), psi a bump vanishing on both
    boundary spheres, divided by tan(theta): by symmetry this is the only
    mode in which the cone can fail to be stationary, and it changes sign
    at the stationary angle.  theta_star is the interpolated sign change,
    or the grid point of smallest |projected| when there is none.
    """
    grid = [float(t) for t in theta_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise SolverError("theta grid must be strictly increasing")
    if mesh.kind != "annulus":
        raise SolverError("cone_scan runs on an annulus mesh (away from the cone point)")
    r = np.linalg.norm(mesh.vertices, axis=1)
    r_in, r_out = mesh.params["r_in"], mesh.params["r_out"]
    psi = np.sin(math.pi * (r - r_in) / (r_out - r_in))
    mode = psi[:, None] * _on_sphere(eta, mesh.vertices)
    res, proj = [], []
    for t in grid:
        F = cone_candidate(t, eta, mesh)
        res.append(msys_residual(F))
        _, rr = weak_residual_vectors(F)
        proj.append(float(np.sum(rr * mode)) / math.tan(t))
    p = np.asarray(proj)
    flips = np.flatnonzero(np.sign(p[:-1]) * np.sign(p[1:]) < 0)
    if len(flips):
        j = int(flips[0])
        star = grid[j] - p[j] * (grid[j + 1] - grid[j]) / (p[j + 1] - p[j])
    else:
        star = grid[int(np.argmin(np.abs(p)))]
    return ConeScan(theta_grid=grid, residuals=res, theta_star=float(star), projected=proj)


def richardson(coarse: float, fine: float, order: float = 1.0) -> float:
    """Extrapolate two estimates at mesh sizes h and h/2."""
    k = 2.0 ** order
    return (k * fine - coarse) / (k - 1)
