"""Batch driver: one subcommand per measurement, artifacts written to an output directory.

Every run writes report.json (resolved config, results, version, timestamp)
plus command-specific CSV tables and, with --plot, a small SVG.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary_data import (
    BoundaryDataError,
    MAP_REGISTRY,
    get_map,
    graph_volume,
    image_distance,
    reach_estimate,
    scale_map,
)
from .bounds import (
    BoundsError,
    NoCrossingError,
    annulus_threshold,
    boundary_upper_bound,
    bounds_report,
    lower_bound_curve,
    upper_bound_curve,
)
from .fixtures import FIXTURES, disk_mesh, exact_mass, fixture
from .geometry import GeometryError, boundary_mass_integral, density_profile, graph_mass, msys_residual
from .mesh import MeshError, domain_mesh, sphere_mesh
from .solver import SolverError, SolverOptions, cone_scan, continuation, minimize, richardson
from .topology import RegularValueError, ResolutionError, TopologyError, hopf_invariant, sphere_degree

SCHEMA_VERSION = 1

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_RESOLUTION = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# defaults per command; every key is also a --flag (underscores become dashes)
DEFAULTS: dict[str, dict] = {
    "bounds": {"map": "hopf3", "domain": "ball", "n": None, "l": None, "epsilon0": None,
               "v_eta": None, "d": None, "quad_level": 3, "grid_points": 201, "r_max": None,
               "samples": 2000, "seed": 0},
    "solve": {"map": "hopf3", "domain": "ball", "dim": None, "R": 0.2, "level": 1, "shells": 4,
              "init": "radial", "tol": 1e-8, "max_iter": 20000, "quad_level": 3},
    "continue": {"map": "hopf3", "domain": "ball", "dim": None, "schedule": [0.1, 0.2, 0.4],
                 "level": 1, "shells": 4, "init": "radial", "tol": 1e-8, "max_iter": 20000,
                 "lipschitz_blowup": 1e3, "quad_level": 3},
    "invariant": {"map": "hopf3", "kind": "hopf", "level": 3, "n": None, "k": None},
    "density": {"fixture": "zsquare", "level": 4, "center": None, "radii": None,
                "samples": 64, "seed": 0, "slack": 0.02},
    "mass-check": {"fixture": "zsquare", "level": 4, "tol": 0.02},
    "cone-scan": {"map": "hopf3", "theta_min": 0.6, "theta_max": 1.3, "points": 29,
                  "levels": [1, 2], "shells": 2, "r_in": 0.5, "r_out": 1.0},
    "reach": {"map": "hopf3", "samples": 2000, "seed": 0},
}

_LIST_KEYS = {"schedule": float, "center": float, "radii": float, "levels": int}


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    out: Path
    plot: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        p = self.params
        if "map" in p and p["map"] not in MAP_REGISTRY:
            raise ConfigError(f"unknown map id {p['map']!r}")
        if "fixture" in p and p["fixture"] not in FIXTURES:
            raise ConfigError(f"unknown fixture {p['fixture']!r}")
        for key in ("tol", "samples", "points", "shells", "grid_points", "max_iter"):
            if p.get(key) is not None and not p[key] > 0:
                raise ConfigError(f"{key} must be positive")
        if "domain" in p and p["domain"] not in ("ball", "annulus", "solid_torus"):
            raise ConfigError(f"unknown domain {p['domain']!r}")


# -- argument handling -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(EXIT_USAGE, "usage", message)


def _fail(code: int, kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "code": code, "message": " ".join(str(message).split())}) + "\n")
    raise SystemExit(code)


def _list(conv):
    def parse(text):
        return [conv(t) for t in str(text).replace(",", " ").split()]
    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="msslab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"msslab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, defaults in DEFAULTS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", type=Path, help="TOML file; flags override it")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--plot", action="store_true", default=None)
        for key, val in defaults.items():
            flag = "--" + key.replace("_", "-")
            if key in _LIST_KEYS:
                sp.add_argument(flag, dest=key, type=_list(_LIST_KEYS[key]), default=None)
            elif isinstance(val, bool):
                sp.add_argument(flag, dest=key, action="store_true", default=None)
            elif isinstance(val, int) and not isinstance(val, bool):
                sp.add_argument(flag, dest=key, type=int, default=None)
            elif isinstance(val, float):
                sp.add_argument(flag, dest=key, type=float, default=None)
            elif key in ("n", "l", "dim", "k"):
                sp.add_argument(flag, dest=key, type=int, default=None)
            elif key in ("epsilon0", "v_eta", "d", "r_max"):
                sp.add_argument(flag, dest=key, type=float, default=None)
            else:
                sp.add_argument(flag, dest=key, type=str, default=None)
    return ap


def _load_toml(path: Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """defaults < TOML (top level, then the [command] table) < flags."""
    cmd = args.command
    params = dict(DEFAULTS[cmd])
    file_cfg: dict = {}
    if args.config is not None:
        raw = _load_toml(args.config)
        file_cfg = {k: v for k, v in raw.items() if not isinstance(v, dict)}
        file_cfg.update(raw.get(cmd, {}))
    out, plot = Path(file_cfg.pop("out", "out")), bool(file_cfg.pop("plot", False))
    unknown = set(file_cfg) - set(params)
    if unknown:
        raise ConfigError(f"unknown config keys for {cmd}: {', '.join(sorted(unknown))}")
    params.update(file_cfg)
    for key in DEFAULTS[cmd]:
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    if args.out is not None:
        out = args.out
    if args.plot:
        plot = True
    cfg = ExperimentConfig(cmd, params, out, plot)
    cfg.validate()
    return cfg


# -- output ----------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Path):
        return str(x)
    return x


def write_report(cfg: ExperimentConfig, results: dict) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": "msslab",
        "version": __version__,
        "command": cfg.command,
        "config": {**cfg.params, "out": str(cfg.out), "plot": cfg.plot},
        "results": results,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path = cfg.out / "report.json"
    path.write_text(json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n")
    return path


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def svg_plot(series: dict[str, tuple], xlabel: str, ylabel: str, title: str = "",
             logy: bool = False, width: int = 560, height: int = 380) -> str:
    """Line plot as a standalone SVG string; series maps label -> (x, y)."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    tf = (lambda v: np.log10(np.maximum(v, 1e-300))) if logy else (lambda v: v)
    ok = np.isfinite(tf(ys))
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(tf(ys[ok]).min()), float(tf(ys[ok]).max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    L, R, T, B = 60, 20, 30, 45
    sx = lambda v: L + (v - x0) / (x1 - x0) * (width - L - R)
    sy = lambda v: height - B - (v - y0) / (y1 - y0) * (height - T - B)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{L}" y1="{height - B}" x2="{width - R}" y2="{height - B}" stroke="black"/>',
           f'<line x1="{L}" y1="{T}" x2="{L}" y2="{height - B}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">{xlabel}</text>',
           f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">{ylabel}{" (log10)" if logy else ""}</text>',
           f'<text x="{width / 2}" y="18" text-anchor="middle">{title}</text>']
    for i in range(5):
        xv = x0 + i * (x1 - x0) / 4
        yv = y0 + i * (y1 - y0) / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{height - B + 14}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{L - 4}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for j, (label, (x, y)) in enumerate(series.items()):
        x, y = np.asarray(x, float), tf(np.asarray(y, float))
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if np.isfinite(b))
        c = colors[j % len(colors)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - R - 4}" y="{T + 14 * (j + 1)}" text-anchor="end" fill="{c}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- helpers -----------------------------------------------------------------------------

def _map_kwargs(p: dict) -> dict:
    return {k: p[k] for k in ("n", "k") if p.get(k) is not None}


def _domain_for(p: dict, data) -> object:
    dim = p.get("dim") or data.domain_dim + 1
    if p["domain"] == "ball":
        return domain_mesh("ball", {"dim": dim, "radius": data.domain_radius}, p["shells"], p["level"])
    if p["domain"] == "annulus":
        if not data.components:
            raise ConfigError("annulus domain needs two-component data (e.g. annulus:hopf12)")
        r_in, r_out = (c.domain_radius for _, c in data.components)
        return domain_mesh("annulus", {"dim": dim, "r_in": r_in, "r_out": r_out}, p["shells"], p["level"])
    return domain_mesh("solid_torus", {"dim": dim}, p["shells"], p["level"])


def _sharp_upper(data, R: float, quad_level: int) -> float | None:
    """Boundary-integral bound from the graph volume of R * data (valid for every R)."""
    if data.components or data.ambient or data.image_radius is None:
        return None
    sph = sphere_mesh(data.domain_dim, quad_level, radius=data.domain_radius)
    vol = graph_volume(scale_map(data, R), sph)
    p = math.sqrt(data.domain_radius ** 2 + (R * data.image_radius) ** 2)
    return boundary_upper_bound(R, data.domain_dim, vol, position_bound=p)


def _torus_graph_volume(mesh, data) -> float:
    ids, vals = data.evaluate_on_boundary(mesh)
    lifted = np.zeros((mesh.n_vertices, mesh.dimension_ambient + vals.shape[1]))
    lifted[ids] = np.concatenate([mesh.vertices[ids], vals], axis=1)
    P = lifted[mesh.boundary_facets]
    E = P[:, 1:] - P[:, :1]
    G = np.einsum("nai,nbi->nab", E, E)
    return float(np.sum(np.sqrt(np.clip(np.linalg.det(G), 0, None))) / math.factorial(E.shape[1]))


# -- commands ----------------------------------------------------------------------------

def cmd_bounds(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    data = get_map(p["map"], **_map_kwargs(p))
    n = p["n"] if p["n"] is not None else data.domain_dim
    l = p["l"] if p["l"] is not None else data.image_dim
    regime = {"ball": "disk", "annulus": "annulus", "solid_torus": "torus"}[p["domain"]]
    extra: dict = {}
    if regime == "disk":
        if data.components or data.ambient:
            raise ConfigError(f"map {p['map']} is not disk data")
        V = p["v_eta"]
        if V is None:
            V = graph_volume(data, sphere_mesh(data.domain_dim, p["quad_level"], radius=data.domain_radius))
        eps = p["epsilon0"] if p["epsilon0"] is not None else reach_estimate(data, p["samples"], seed=p["seed"])
        grid = None if p["r_max"] is None else np.linspace(0, p["r_max"], p["grid_points"])
        rep = bounds_report(n, l, V, eps, grid, map=p["map"])
        if grid is None:
            rep = bounds_report(n, l, V, eps, np.linspace(0, 2 * rep.R_star, p["grid_points"]), map=p["map"])
    elif regime == "annulus":
        if not data.components:
            raise ConfigError("annulus regime needs two-component data")
        (_, f1), (_, f2) = data.components
        V = p["v_eta"]
        if V is None:
            V = sum(graph_volume(f, sphere_mesh(f.domain_dim, p["quad_level"], radius=f.domain_radius))
                    for f in (f1, f2))
        d = p["d"] if p["d"] is not None else image_distance(f1, f2, seed=p["seed"])
        kw = {"outer_radius": f2.domain_radius, "outer_image_radius": f2.image_radius or 1.0}
        R_star = annulus_threshold(n, l, V, d, **kw)
        R_grid = np.linspace(0, p["r_max"] or 2 * R_star, p["grid_points"])
        rep = bounds_report(n, l, V, 0.5 * d, R_grid, regime="annulus", d=d, map=p["map"], **kw)
        extra["d"] = d
    else:
        mesh = domain_mesh("solid_torus", {"dim": n + 1}, 2, p["quad_level"])
        torus = get_map("torus", n=n)
        V = p["v_eta"] if p["v_eta"] is not None else _torus_graph_volume(mesh, torus)
        eps = p["epsilon0"] if p["epsilon0"] is not None else reach_estimate(torus)
        l = torus.image_dim if p["l"] is None else l
        a, b = mesh.params["cross_radius"], mesh.params["circle_radius"]
        kw = {"outer_radius": a + b, "outer_image_radius": a}
        R_star = annulus_threshold(n, l, V, 2 * eps, **kw)
        R_grid = np.linspace(0, p["r_max"] or 2 * R_star, p["grid_points"])
        rep = bounds_report(n, l, V, eps, R_grid, regime="annulus", d=2 * eps, map="torus", **kw)
        rep.regime = "torus"
    _write_csv(cfg.out / "bounds.csv", ["R", "U", "L"], zip(rep.R_grid, rep.upper, rep.lower))
    if cfg.plot:
        (cfg.out / "plot.svg").write_text(svg_plot(
            {"U(R)": (rep.R_grid, rep.upper), "L(R)": (rep.R_grid, rep.lower)}, "R", "mass",
            f"R* = {rep.R_star:.6g}", logy=True))
    res = {"n": rep.n, "l": rep.l, "V_eta": rep.V_eta, "epsilon0": rep.epsilon0, "omega": rep.omega,
           "R_star": rep.R_star, "regime": rep.regime, "crossing_below_unit": rep.crossing_below_unit}
    res.update(extra)
    return res


def _solve_certificate(data, res, p, mesh) -> dict:
    n = mesh.dimension_top - 1
    out = {"U_sharp": _sharp_upper(data, res.R, p["quad_level"])}
    if data.image_radius is not None and not data.components and not data.ambient and data.image_dim < n:
        V = graph_volume(data, sphere_mesh(data.domain_dim, p["quad_level"], radius=data.domain_radius))
        eps = reach_estimate(data)
        out["U_curve"] = upper_bound_curve(res.R, n, data.image_dim, V) if res.R >= 1 else None
        out["L"] = lower_bound_curve(res.R, n, eps)
    U = out["U_sharp"] if out["U_sharp"] is not None else out.get("U_curve")
    out["mass_within_upper"] = None if U is None else bool(res.mass <= U)
    return out


def cmd_solve(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    data = get_map(p["map"], **_map_kwargs(p))
    mesh = _domain_for(p, data)
    opts = SolverOptions(tol=p["tol"], max_iter=p["max_iter"])
    res = minimize(mesh, data, p["R"], init=p["init"], opts=opts)
    (cfg.out).mkdir(parents=True, exist_ok=True)
    (cfg.out / "trace.csv").write_text(res.trace_csv())
    res.F.save(cfg.out / "solution.json")
    r_dom, r_rng = msys_residual(res.F)
    out = {"mesh": {"kind": mesh.kind, "n_vertices": mesh.n_vertices, "n_simplices": mesh.n_simplices},
           "result": res.summary(), "residual": {"domain": r_dom, "range": r_rng},
           "certificate": _solve_certificate(data, res, p, mesh)}
    if cfg.plot:
        it, e, g = zip(*res.trace)
        (cfg.out / "plot.svg").write_text(svg_plot({"|grad|": (it, g)}, "iteration", "gradient norm", logy=True))
    return out


def cmd_continue(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    data = get_map(p["map"], **_map_kwargs(p))
    mesh = _domain_for(p, data)
    opts = SolverOptions(tol=p["tol"], max_iter=p["max_iter"], lipschitz_blowup=p["lipschitz_blowup"])
    results = continuation(mesh, data, p["schedule"], opts, init=p["init"])
    rows, summaries = [], []
    for r in results:
        cert = _solve_certificate(data, r, p, mesh)
        s = {**r.summary(), "certificate": cert}
        summaries.append(s)
        U = cert["U_sharp"] if cert["U_sharp"] is not None else cert.get("U_curve")
        rows.append([r.R, int(r.converged), r.iterations, r.final_gradient_norm, r.mass, r.lipschitz,
                     r.min_norm_interior, "" if U is None else U, cert.get("L", ""), r.flag or "ok"])
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out / "continuation.csv",
               ["R", "converged", "iterations", "final_gradient_norm", "mass", "lipschitz",
                "min_norm_interior", "U", "L", "flag"], rows)
    first = next((r.R for r in results if r.flag), None)
    if cfg.plot:
        (cfg.out / "plot.svg").write_text(svg_plot({"mass": ([r.R for r in results], [r.mass for r in results])},
                                                   "R", "mass"))
    return {"results": summaries, "first_flagged_R": first, "note": "empirical probe, not a proof"}


def cmd_invariant(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    data = get_map(p["map"], **_map_kwargs(p))
    sph = sphere_mesh(data.domain_dim, p["level"], radius=data.domain_radius)
    vals = data(sph.vertices)
    if p["kind"] == "degree":
        if data.target_dim != data.domain_dim + 1:
            raise ConfigError("degree needs a map S^n -> S^n")
        inv = sphere_degree(sph, vals)
        return {"degree": inv.value, "raw": inv.raw}
    if p["kind"] == "hopf":
        if (data.domain_dim, data.target_dim) != (3, 3):
            raise ConfigError("hopf invariant needs a map S^3 -> S^2")
        inv = hopf_invariant(sph, vals)
        return {"hopf_invariant": inv.value, "raw": inv.raw}
    raise ConfigError(f"unknown invariant kind {p['kind']!r}; use degree or hopf")


def cmd_density(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    mesh = disk_mesh(p["level"])
    F = fixture(p["fixture"], mesh)
    center = np.zeros(2) if p["center"] is None else np.asarray(p["center"], float)
    if p["radii"] is None:
        from .geometry import distance_to_graph_boundary, evaluate
        c = np.concatenate([center, evaluate(F, center)])
        dmax = distance_to_graph_boundary(F, c)
        radii = np.geomspace(0.05, 0.95, 12) * dmax
    else:
        radii = np.asarray(p["radii"], float)
    prof = density_profile(F, center, radii, samples=p["samples"], seed=p["seed"])
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out / "density.csv", ["radius", "theta", "mass_in_ball"],
               zip(prof.radii, prof.theta, prof.mass_in_ball))
    if cfg.plot:
        (cfg.out / "plot.svg").write_text(svg_plot({"theta": (prof.radii, prof.theta)}, "radius", "density ratio"))
    mono = prof.is_monotone(p["slack"])
    out = {"theta": prof.theta, "radii": prof.radii, "monotone": mono, "max_valid_radius": prof.max_valid_radius}
    if not mono:
        cfg.extra["failure"] = f"density ratio decreases by more than {p['slack']}"
    return out


def cmd_mass_check(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    mesh = disk_mesh(p["level"])
    F = fixture(p["fixture"], mesh)
    direct, bdry = graph_mass(F), boundary_mass_integral(F)
    exact = exact_mass(p["fixture"], mesh)
    out = {"direct": direct, "boundary": bdry, "exact": exact,
           "direct_rel_err": abs(direct - exact) / exact, "boundary_rel_err": abs(bdry - exact) / exact,
           "gap": abs(direct - bdry) / direct}
    out["pass"] = bool(max(out["direct_rel_err"], out["boundary_rel_err"], out["gap"]) <= p["tol"])
    if not out["pass"]:
        cfg.extra["failure"] = f"mass check outside tolerance {p['tol']}"
    return out


def cmd_cone_scan(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    eta = get_map(p["map"], **_map_kwargs(p))
    grid = np.linspace(p["theta_min"], p["theta_max"], p["points"])
    stars, scans = [], []
    for lv in p["levels"]:
        mesh = domain_mesh("annulus", {"dim": eta.domain_dim + 1, "r_in": p["r_in"], "r_out": p["r_out"]},
                           p["shells"], lv)
        sc = cone_scan(eta, grid, mesh)
        scans.append(sc)
        stars.append(sc.theta_star)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "cone_scan.csv").write_text(scans[-1].to_csv())
    if cfg.plot:
        (cfg.out / "plot.svg").write_text(svg_plot(
            {f"level {lv}": (s.theta_grid, s.projected) for lv, s in zip(p["levels"], scans)},
            "theta", "projected residual / tan(theta)"))
    out = {"theta_star_per_level": stars, "theta_star": stars[-1],
           "tan_theta_star": math.tan(stars[-1])}
    if len(stars) >= 2:
        out["theta_star_richardson"] = richardson(stars[-2], stars[-1])
    return out


def cmd_reach(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    data = get_map(p["map"], **_map_kwargs(p))
    return {"epsilon0": reach_estimate(data, p["samples"], seed=p["seed"]), "round_image": data.round_image}


COMMANDS = {
    "bounds": cmd_bounds, "solve": cmd_solve, "continue": cmd_continue, "invariant": cmd_invariant,
    "density": cmd_density, "mass-check": cmd_mass_check, "cone-scan": cmd_cone_scan, "reach": cmd_reach,
}


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        cfg.out.mkdir(parents=True, exist_ok=True)
        results = COMMANDS[cfg.command](cfg)
        if cfg.command in ("solve",) and not results["result"]["converged"]:
            cfg.extra["failure"] = f"solver did not converge ({results['result']['status']})"
        write_report(cfg, results)
    except (ConfigError, MeshError, BoundaryDataError, GeometryError, SolverError) as exc:
        _fail(EXIT_USAGE, type(exc).__name__, exc)
    except NoCrossingError as exc:
        _fail(EXIT_NUMERICAL, type(exc).__name__, exc)
    except BoundsError as exc:
        _fail(EXIT_USAGE, type(exc).__name__, exc)
    except (ResolutionError, RegularValueError) as exc:
        _fail(EXIT_RESOLUTION, type(exc).__name__, exc)
    except TopologyError as exc:
        _fail(EXIT_USAGE, type(exc).__name__, exc)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        _fail(EXIT_NUMERICAL, type(exc).__name__, exc)
    if "failure" in cfg.extra:
        _fail(EXIT_NUMERICAL, "NumericalFailure", cfg.extra["failure"])
    return EXIT_OK


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
