"""Upper and lower mass bounds for graphs with rescaled boundary data, and their crossing.

Upper bound (boundary integral, R >= 1):
    U(R) = sqrt(1 + R^2) / (n + 1) * R^l * V_eta
Lower bound (density monotonicity about a point far from the boundary):
    L(R) = omega_{n+1} * eps0^(n+1) * R^(n+1)
For l < n the two are inconsistent beyond a finite R_star.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .mesh import ball_volume


class BoundsError(ValueError):
    pass


class NoCrossingError(BoundsError):
    pass


class CrossingBelowUnitWarning(UserWarning):
    """The crossing lies below R = 1, where the R^l form of U is not a valid bound."""


def omega(dim: int) -> float:
    return ball_volume(dim)


def upper_bound_curve(R, n: int, l: int, V_eta: float):
    """Exact boundary-integral bound sqrt(1+R^2)/(n+1) * R^l * V_eta (valid for R >= 1)."""
    if V_eta <= 0:
        raise BoundsError("V_eta must be positive")
    if l >= n:
        raise BoundsError(f"upper bound needs l < n, got l={l}, n={n}")
    R = np.asarray(R, dtype=float)
    out = np.sqrt(1 + R ** 2) / (n + 1) * R ** l * V_eta
    return float(out) if out.ndim == 0 else out


def simplified_constant(n: int, V_eta: float) -> float:
    """C with U(R) <= C R^(l+1) for R >= 1, namely sqrt(2)/(n+1) * V_eta."""
    return math.sqrt(2) / (n + 1) * V_eta


def simplified_upper_bound(R, n: int, l: int, V_eta: float):
    R = np.asarray(R, dtype=float)
    out = simplified_constant(n, V_eta) * R ** (l + 1)
    return float(out) if out.ndim == 0 else out


def boundary_upper_bound(R: float, n: int, graph_volume_R: float, position_bound: float | None = None) -> float:
    """Bound valid for every R: max|p| / (n+1) * (graph volume of R*eta).

    ``position_bound`` defaults to sqrt(1 + R^2), the bound on |p| for unit
    sphere-valued data over the unit ball.
    """
    p = math.sqrt(1 + R * R) if position_bound is None else position_bound
    return p / (n + 1) * graph_volume_R


def lower_bound_curve(R, n: int, epsilon0: float):
    """omega_{n+1} * eps0^(n+1) * R^(n+1)."""
    if epsilon0 <= 0:
        raise BoundsError("epsilon0 must be positive")
    R = np.asarray(R, dtype=float)
    out = omega(n + 1) * epsilon0 ** (n + 1) * R ** (n + 1)
    return float(out) if out.ndim == 0 else out


def _bisect(g, lo: float, hi: float, rel: float = 1e-10, scale=None) -> float:
    """Root of g on [lo, hi] with g(lo) < 0 < g(hi), stopped on |g| <= rel*scale."""
    glo, ghi = g(lo), g(hi)
    if not (glo < 0 < ghi):
        raise NoCrossingError("no sign change on the bracket")
    mid = 0.5 * (lo + hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        s = scale(mid) if scale else 1.0
        if abs(gm) <= rel * s or hi - lo <= 4 * np.finfo(float).eps * mid:
            break
        if gm < 0:
            lo = mid
        else:
            hi = mid
    return mid


def _crossing(U, L, r_max: float) -> tuple[float, bool]:
    g = lambda R: L(R) - U(R)
    below = g(1.0) > 0
    if below:
        lo, hi = 1e-12, 1.0
        if g(lo) >= 0:
            raise NoCrossingError("lower bound exceeds upper bound at every R > 0")
    else:
        lo, hi = 1.0, 2.0
        while g(hi) <= 0:
            hi *= 2
            if hi > r_max:
                raise NoCrossingError(f"no crossing below R_max={r_max:g}")
    return _bisect(g, lo, hi, 1e-10, L), below


def nonexistence_threshold(n: int, l: int, V_eta: float, epsilon0: float,
                           r_max: float = 1e12) -> float:
    """R_star where L(R) = U(R); above it the bounds are inconsistent.

    An upper estimate of the true non-existence threshold, not a sharp one.
    """
    if l >= n:
        raise NoCrossingError(f"no crossing for l >= n (l={l}, n={n})")
    R, below = _crossing(lambda R: upper_bound_curve(R, n, l, V_eta),
                         lambda R: lower_bound_curve(R, n, epsilon0), r_max)
    if below:
        warnings.warn(f"crossing at R={R:.6g} < 1", CrossingBelowUnitWarning, stacklevel=2)
    return R


def annulus_upper_bound(R, n: int, l: int, V_total: float, outer_radius: float = 2.0,
                        outer_image_radius: float = 2.0):
    """Boundary integral over both annulus components, |p| bounded by the outer data."""
    R = np.asarray(R, dtype=float)
    p = np.sqrt(outer_radius ** 2 + (outer_image_radius * R) ** 2)
    out = p / (n + 1) * R ** l * V_total
    return float(out) if out.ndim == 0 else out


def annulus_lower_bound(R, n: int, d: float):
    R = np.asarray(R, dtype=float)
    out = omega(n + 1) * (R * d / 2) ** (n + 1)
    return float(out) if out.ndim == 0 else out


def annulus_threshold(n: int, l: int, V_total: float, d: float, outer_radius: float = 2.0,
                      outer_image_radius: float = 2.0, r_max: float = 1e15) -> float:
    """Crossing of the annulus upper bound with omega (R d / 2)^(n+1)."""
    if d <= 0:
        raise BoundsError("image distance d must be positive")
    if l >= n:
        raise NoCrossingError(f"no crossing for l >= n (l={l}, n={n})")
    R, below = _crossing(
        lambda R: annulus_upper_bound(R, n, l, V_total, outer_radius, outer_image_radius),
        lambda R: annulus_lower_bound(R, n, d), r_max)
    if below:
        warnings.warn(f"crossing at R={R:.6g} < 1", CrossingBelowUnitWarning, stacklevel=2)
    return R


@dataclass
class BoundsReport:
    n: int
    l: int
    V_eta: float
    epsilon0: float
    R_grid: list
    upper: list
    lower: list
    R_star: float
    regime: str = "disk"
    omega: float = field(init=False)
    crossing_below_unit: bool = False
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega = omega(self.n + 1)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "U", "L"])
        for r, u, lo in zip(self.R_grid, self.upper, self.lower):
            w.writerow([repr(float(r)), repr(float(u)), repr(float(lo))])
        return buf.getvalue()


def bounds_report(n: int, l: int, V_eta: float, epsilon0: float, R_grid=None,
                  regime: str = "disk", d: float | None = None, **inputs) -> BoundsReport:
    """Evaluate both curves on a grid and locate the crossing."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CrossingBelowUnitWarning)
        if regime == "annulus":
            if d is None:
                raise BoundsError("annulus regime needs the image distance d")
            R_star = annulus_threshold(n, l, V_eta, d, **{k: inputs[k] for k in ("outer_radius", "outer_image_radius") if k in inputs})
        else:
            R_star = nonexistence_threshold(n, l, V_eta, epsilon0)
    below = any(issubclass(w.category, CrossingBelowUnitWarning) for w in caught)
    if R_grid is None:
        R_grid = np.linspace(0.0, 2.0 * R_star, 201)
    R_grid = np.asarray(R_grid, dtype=float)
    if regime == "annulus":
        kw = {k: inputs[k] for k in ("outer_radius", "outer_image_radius") if k in inputs}
        U = annulus_upper_bound(R_grid, n, l, V_eta, **kw)
        L = annulus_lower_bound(R_grid, n, d)
    else:
        U = upper_bound_curve(R_grid, n, l, V_eta)
        L = lower_bound_curve(R_grid, n, epsilon0)
    if d is not None:
        inputs["d"] = d
    return BoundsReport(n=n, l=l, V_eta=float(V_eta), epsilon0=float(epsilon0),
                        R_grid=R_grid.tolist(), upper=np.atleast_1d(U).tolist(),
                        lower=np.atleast_1d(L).tolist(), R_star=float(R_star), regime=regime,
                        crossing_below_unit=below, inputs=inputs)


@dataclass(frozen=True)
class CertBundle:
    R: float
    measured_mass: float
    upper: float | None
    lower: float | None
    mass_within_upper: bool | None
    min_norm: float
    containment_max_dist: float | None
    regime: str

    def to_dict(self) -> dict:
        return asdict(self)


def certify(F, report: BoundsReport | None, R: float, upper: float | None = None,
            image_samples: np.ndarray | None = None) -> CertBundle:
    """Join a measured graph mass to the bound curves at scaling R.

    ``upper`` overrides the curve value; below R = 1 the R^l curve is not a
    bound, so callers pass the boundary bound from the graph volume of R*eta.
    With no report (eta constant) the bounds do not apply.
    """
    from .geometry import graph_mass
    from .topology import min_norm_locus, neighborhood_containment

    mass = graph_mass(F)
    mn, _ = min_norm_locus(F)
    if report is None:
        return CertBundle(R, mass, None, None, None, mn, None, "degenerate")
    if upper is None:
        if R < 1 and report.regime == "disk":
            raise BoundsError("below R = 1 pass the boundary bound explicitly as `upper`")
        if report.regime == "annulus":
            upper = annulus_upper_bound(R, report.n, report.l, report.V_eta,
                                        **{k: report.inputs[k] for k in ("outer_radius", "outer_image_radius") if k in report.inputs})
        else:
            upper = upper_bound_curve(R, report.n, report.l, report.V_eta)
    if report.regime == "annulus":
        lower = annulus_lower_bound(R, report.n, report.inputs["d"])
    else:
        lower = lower_bound_curve(R, report.n, report.epsilon0)
    cont = None
    if image_samples is not None:
        cont = neighborhood_containment(F, image_samples, report.epsilon0 * R).max_dist
    return CertBundle(R, mass, float(upper), float(lower), bool(mass <= upper), mn, cont, report.regime)
