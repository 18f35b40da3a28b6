"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from msslab.boundary_data import get_map, graph_volume, image_distance, reach_estimate, scale_map
from msslab.bounds import (
    CrossingBelowUnitWarning,
    annulus_threshold,
    boundary_upper_bound,
    nonexistence_threshold,
)
from msslab.cli import run
from msslab.fixtures import disk_mesh, fixture
from msslab.geometry import GraphFunction, boundary_mass_integral, density_profile, graph_mass, msys_residual
from msslab.mesh import ball_volume, domain_mesh, sphere_mesh
from msslab.solver import continuation, minimize
from msslab.topology import hopf_invariant, sphere_degree

V_HOPF = 10 * math.pi ** 2
R_QUARTIC = math.sqrt((25 + math.sqrt(725)) / 2)


def record(num: int, title: str, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    ok = ok and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} | {detail} | {elapsed:.2f}s (limit {limit:g}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_1_mass_formula_equivalence():
    t0 = time.perf_counter()
    m = disk_mesh(4)
    flat = boundary_mass_integral(fixture("flat", m))
    flat_err = abs(flat - ball_volume(2)) / ball_volume(2)
    F = fixture("zsquare", m)
    direct, bdry = graph_mass(F), boundary_mass_integral(F)
    e_d = abs(direct - 3 * math.pi) / (3 * math.pi)
    e_b = abs(bdry - 3 * math.pi) / (3 * math.pi)
    gap = abs(direct - bdry) / direct
    ok = flat_err <= 0.01 and e_d <= 0.02 and e_b <= 0.02 and gap <= 0.02
    record(1, "mass formula", ok,
           f"flat err {flat_err:.2e}, z^2 direct err {e_d:.2e}, boundary err {e_b:.2e}, gap {gap:.2e}",
           time.perf_counter() - t0, 10)


def test_2_msys_residual():
    t0 = time.perf_counter()
    aff = max(msys_residual(fixture("affine", disk_mesh(2))))
    res = [max(msys_residual(fixture("zsquare", disk_mesh(k)))) for k in (4, 5, 6)]
    factors = [res[0] / res[1], res[1] / res[2]]
    ok = aff <= 1e-12 and min(factors) >= 1.8
    record(2, "MSS residual", ok,
           f"affine {aff:.1e}, z^2 residuals {[f'{r:.4f}' for r in res]}, factors {[f'{f:.3f}' for f in factors]}",
           time.perf_counter() - t0, 30)


def test_3_density_monotonicity():
    t0 = time.perf_counter()
    m = disk_mesh(4)
    details, ok = [], True
    for name in ("plane", "zsquare"):
        F = fixture(name, m)
        radii = np.geomspace(0.125, 1.0, 12)  # smallest radius = two mesh cells
        prof = density_profile(F, [0.0, 0.0], radii)
        mono = prof.is_monotone(0.02)
        first = float(prof.theta[0])
        ok &= mono and 0.98 <= first <= 1.05
        details.append(f"{name}: monotone={mono} theta(0+)={first:.4f}")
    record(3, "density monotonicity", ok, ", ".join(details), time.perf_counter() - t0, 30)


def test_4_topological_obstructions():
    t0 = time.perf_counter()
    ok, notes = True, []
    s2 = sphere_mesh(2, 2)
    for name, vals, want in (("identity", s2.vertices, 1), ("antipodal", -s2.vertices, -1)):
        d = sphere_degree(s2, vals)
        ok &= d.value == want and abs(d.raw - want) < 0.2
        notes.append(f"{name}={d.value}")
    s1 = sphere_mesh(1, 4)
    z = s1.vertices[:, 0] + 1j * s1.vertices[:, 1]
    for k in range(-2, 4):
        w = z ** k
        d = sphere_degree(s1, np.stack([w.real, w.imag], axis=1))
        ok &= d.value == k and abs(d.raw - k) < 0.2
    notes.append("z^k k=-2..3 exact" if ok else "z^k mismatch")
    s3 = sphere_mesh(3, 3)
    h = get_map("hopf3")
    H = hopf_invariant(s3, h(s3.vertices))
    C = hopf_invariant(s3, np.tile([0.0, 0.0, 1.0], (s3.n_vertices, 1)))
    ok &= H.value == 1 and abs(H.raw - 1) < 0.2 and C.value == 0 and abs(C.raw) < 0.2
    notes.append(f"H(hopf)={H.value} raw {H.raw:.4f}, H(const)={C.value}")
    record(4, "topological obstructions", ok, ", ".join(notes), time.perf_counter() - t0, 60)


def test_5_threshold_reproduction():
    t0 = time.perf_counter()
    h = get_map("hopf3")
    V = graph_volume(h, sphere_mesh(3, 3))
    v_err = abs(V - V_HOPF) / V_HOPF
    eps = reach_estimate(h)
    R_q = nonexistence_threshold(3, 2, V, eps)
    lo, hi = nonexistence_threshold(3, 2, 0.98 * V_HOPF, 1.0), nonexistence_threshold(3, 2, 1.02 * V_HOPF, 1.0)
    R_exact = nonexistence_threshold(3, 2, V_HOPF, 1.0)
    ok = v_err <= 0.02 and eps == 1.0 and lo <= R_q <= hi and abs(R_exact - R_QUARTIC) <= 1e-6
    record(5, "threshold reproduction", ok,
           f"V err {v_err:.2e}, R*(quadrature) {R_q:.5f} in [{lo:.5f}, {hi:.5f}], "
           f"R*(exact V) - quartic root = {R_exact - R_QUARTIC:.1e}",
           time.perf_counter() - t0, 1)


def _sharp_U(data, R):
    """max|p|/(n+1) * graph volume of R*data over the boundary sphere(s)."""
    if data.components:
        vol, pmax = 0.0, 0.0
        for _, f in data.components:
            vol += graph_volume(scale_map(f, R), sphere_mesh(f.domain_dim, 3, radius=f.domain_radius))
            pmax = max(pmax, math.hypot(f.domain_radius, R * f.image_radius))
        return boundary_upper_bound(R, data.domain_dim, vol, position_bound=pmax)
    vol = graph_volume(scale_map(data, R), sphere_mesh(data.domain_dim, 3, radius=data.domain_radius))
    return boundary_upper_bound(R, data.domain_dim, vol,
                                position_bound=math.hypot(data.domain_radius, R * data.image_radius))


def test_6_bounds_consistency():
    t0 = time.perf_counter()
    h = get_map("hopf3")
    ball = domain_mesh("ball", {"dim": 4}, shells=4, refinement_level=1)
    cont = continuation(ball, h, [0.1, 0.2, 0.4])
    cont_ok = all(r.converged for r in cont)
    cont_time = time.perf_counter() - t0
    runs = [(h, r) for r in cont]
    runs.append((h, minimize(ball, h, 0.5)))
    runs.append((h, minimize(ball, h, 1.0)))
    disk = domain_mesh("ball", {"dim": 2}, shells=8, refinement_level=3)
    ident = get_map("identity", n=1)
    runs += [(ident, minimize(disk, ident, R)) for R in (0.3, 1.0, 2.0)]
    ann_data = get_map("annulus:hopf12")
    ann = domain_mesh("annulus", {"dim": 4, "r_in": 1.0, "r_out": 2.0}, shells=3, refinement_level=1)
    runs.append((ann_data, minimize(ann, ann_data, 0.2)))
    violations, checked = 0, 0
    for data, r in runs:
        if r.converged:
            checked += 1
            violations += r.mass > _sharp_U(data, r.R)
    ok = cont_ok and violations == 0 and cont_time < 600
    record(6, "bounds consistency", ok,
           f"continuation converged={cont_ok} in {cont_time:.1f}s, masses {[round(r.mass, 4) for r in cont]}, "
           f"{violations} violations over {checked} converged solves",
           time.perf_counter() - t0, 600)


def test_7_gradient_correctness():
    from msslab.solver import area_energy_and_gradient

    t0 = time.perf_counter()
    worst = 0.0
    for dim, m1 in ((2, 2), (4, 3)):
        mesh = domain_mesh("ball", {"dim": dim}, shells=3, refinement_level=2 if dim == 2 else 1)
        free = mesh.interior_vertices
        for seed in range(10):
            rng = np.random.default_rng(seed)
            V = rng.normal(scale=0.7, size=(mesh.n_vertices, m1))
            _, g = area_energy_and_gradient(GraphFunction(mesh, V), free)
            D = rng.normal(size=(len(free), m1))
            Vp, Vm = V.copy(), V.copy()
            Vp[free] += 1e-6 * D
            Vm[free] -= 1e-6 * D
            fd = (graph_mass(GraphFunction(mesh, Vp)) - graph_mass(GraphFunction(mesh, Vm))) / 2e-6
            an = float(np.sum(g * D))
            worst = max(worst, abs(fd - an) / abs(an))
    record(7, "gradient correctness", worst <= 1e-5, f"max relative error {worst:.2e} over 20 configurations",
           time.perf_counter() - t0, 60)


def test_8_annulus_regime():
    t0 = time.perf_counter()
    data = get_map("annulus:hopf12")
    (_, f1), (_, f2) = data.components
    d = image_distance(f1, f2)
    V = sum(graph_volume(f, sphere_mesh(3, 3, radius=f.domain_radius)) for f in (f1, f2))
    grid = [0.25, 0.5, 1.0, 1.5, 2.0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CrossingBelowUnitWarning)
        Rs = [annulus_threshold(3, 2, V, dd, outer_radius=2.0, outer_image_radius=2.0) for dd in grid]
    ok = abs(d - 1.0) <= 1e-12 and all(math.isfinite(r) for r in Rs) and all(a > b for a, b in zip(Rs, Rs[1:]))
    record(8, "annulus regime", ok, f"d = {d!r}, R*(d) on {grid}: {[round(r, 3) for r in Rs]}",
           time.perf_counter() - t0, 30)


CLI_RUNS = {
    "bounds": ["--map", "hopf3", "--domain", "ball", "--n", "3"],
    "solve": ["--R", "0.2"],
    "continue": ["--schedule", "0.1,0.2"],
    "invariant": ["--map", "hopf3", "--kind", "hopf", "--level", "2"],
    "density": ["--fixture", "zsquare", "--level", "3"],
    "mass-check": ["--fixture", "zsquare", "--level", "4"],
    "cone-scan": ["--levels", "1", "--points", "9"],
    "reach": ["--map", "hopf3"],
}


def test_9_determinism(tmp_path):
    t0 = time.perf_counter()
    bad = []
    for cmd, extra in CLI_RUNS.items():
        outs = []
        for k in range(2):
            out = tmp_path / f"{cmd}-{k}"
            assert run([cmd, *extra, "--out", str(out), "--plot"]) == 0
            rep = json.loads((out / "report.json").read_text())
            rep.pop("timestamp")
            rep["config"].pop("out")
            files = {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "report.json"}
            outs.append((json.dumps(rep, sort_keys=True), files))
        if outs[0] != outs[1]:
            bad.append(cmd)
    record(9, "determinism", not bad, f"{len(CLI_RUNS)} subcommands, non-identical: {bad or 'none'}",
           time.perf_counter() - t0, 300)
