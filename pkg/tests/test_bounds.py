import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msslab.bounds import (
    BoundsError,
    CrossingBelowUnitWarning,
    NoCrossingError,
    annulus_threshold,
    annulus_upper_bound,
    bounds_report,
    certify,
    lower_bound_curve,
    nonexistence_threshold,
    omega,
    simplified_constant,
    simplified_upper_bound,
    upper_bound_curve,
)
from msslab.fixtures import fixture
from msslab.mesh import ball_volume, domain_mesh

V_HOPF = 10 * math.pi ** 2
R_QUARTIC = math.sqrt((25 + math.sqrt(725)) / 2)


def test_upper_curve_values():
    assert upper_bound_curve(0.0, 3, 2, V_HOPF) == 0.0
    assert math.isclose(upper_bound_curve(1.0, 3, 2, V_HOPF), math.sqrt(2) / 4 * V_HOPF)
    assert math.isclose(upper_bound_curve(1.0, 3, 2, V_HOPF), 34.894, rel_tol=1e-4)
    assert math.isclose(simplified_upper_bound(1.0, 3, 2, V_HOPF), upper_bound_curve(1.0, 3, 2, V_HOPF))
    assert simplified_constant(3, V_HOPF) == math.sqrt(2) / 4 * V_HOPF


def test_lower_curve_values():
    assert math.isclose(lower_bound_curve(1.0, 3, 1.0), math.pi ** 2 / 2)
    assert math.isclose(lower_bound_curve(2.0, 1, 1.0), 4 * math.pi)
    assert math.isclose(lower_bound_curve(1.7, 3, 0.5) / lower_bound_curve(1.7, 3, 1.0), 1 / 16)


def test_omega_matches_mesh_volume():
    m = domain_mesh("ball", {"dim": 2}, shells=16, refinement_level=5)
    assert abs(m.volume() - omega(2)) / omega(2) < 0.002
    assert omega(4) == ball_volume(4)


def test_hopf_threshold_quartic():
    R = nonexistence_threshold(3, 2, V_HOPF, 1.0)
    assert abs(R - R_QUARTIC) <= 1e-6
    L, U = lower_bound_curve(R, 3, 1.0), upper_bound_curve(R, 3, 2, V_HOPF)
    assert abs(L - U) / L <= 1e-10
    grid = np.arange(1.0, 10.0, 1e-3)
    diff = lower_bound_curve(grid, 3, 1.0) - upper_bound_curve(grid, 3, 2, V_HOPF)
    assert np.all(diff[grid > R] > 0) and np.all(diff[grid < R] < 0)


def test_halved_reach_threshold():
    # 5 sqrt(1+R^2) = R^2 / 16  ->  R^4 = 6400 (1 + R^2)
    R = nonexistence_threshold(3, 2, V_HOPF, 0.5)
    closed = math.sqrt((6400 + math.sqrt(6400 ** 2 + 4 * 6400)) / 2)
    assert abs(R - closed) <= 1e-6


def test_threshold_monotone_in_volume():
    assert nonexistence_threshold(3, 2, 2 * V_HOPF, 1.0) > nonexistence_threshold(3, 2, V_HOPF, 1.0)


def test_threshold_errors():
    with pytest.raises(NoCrossingError):
        nonexistence_threshold(3, 3, V_HOPF, 1.0)
    with pytest.raises(BoundsError):
        upper_bound_curve(1.0, 3, 2, 0.0)


def test_crossing_below_unit_flagged():
    with pytest.warns(CrossingBelowUnitWarning):
        R = nonexistence_threshold(3, 2, V_HOPF, 5.0)
    assert R < 1
    rep = bounds_report(3, 2, V_HOPF, 5.0)
    assert rep.crossing_below_unit


@settings(max_examples=30, deadline=None)
@given(V=st.floats(1.0, 1e4), eps=st.floats(0.05, 1.5), l=st.integers(0, 2))
def test_crossing_property(V, eps, l):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CrossingBelowUnitWarning)
        R = nonexistence_threshold(3, l, V, eps)
    L, U = lower_bound_curve(R, 3, eps), upper_bound_curve(R, 3, l, V)
    assert abs(L - U) / L <= 1e-10


@settings(max_examples=20, deadline=None)
@given(R=st.floats(1.0, 1e3))
def test_curves_increasing(R):
    assert upper_bound_curve(R * 1.01, 3, 2, V_HOPF) > upper_bound_curve(R, 3, 2, V_HOPF)
    assert lower_bound_curve(R * 1.01, 3, 1.0) > lower_bound_curve(R, 3, 1.0)


def test_annulus_threshold_monotone_in_d():
    V = 90 * math.pi ** 2
    ds = [0.25, 0.5, 1.0, 2.0, 4.0]
    Rs = [annulus_threshold(3, 2, V, d) for d in ds]
    assert all(math.isfinite(r) for r in Rs)
    assert all(a > b for a, b in zip(Rs, Rs[1:]))


def test_annulus_doubling_in_pure_power_regime():
    # for R >> 1 the upper bound is ~ C R^(l+1), so doubling d divides R by 2^((n+1)/(n-l))
    V = 90 * math.pi ** 2
    r1, r2 = annulus_threshold(3, 2, V, 0.01), annulus_threshold(3, 2, V, 0.02)
    assert math.isclose(r1 / r2, 2 ** 4, rel_tol=1e-3)
    # with l = 1 the factor is 2^2
    r1, r2 = annulus_threshold(3, 1, V, 0.01), annulus_threshold(3, 1, V, 0.02)
    assert math.isclose(r1 / r2, 4.0, rel_tol=1e-3)


def test_annulus_upper_reduces_to_disk():
    R = np.linspace(1, 5, 9)
    assert np.allclose(annulus_upper_bound(R, 3, 2, V_HOPF, 1.0, 1.0), upper_bound_curve(R, 3, 2, V_HOPF))


def test_report_serialization():
    rep = bounds_report(3, 2, V_HOPF, 1.0, np.linspace(0, 10, 11), map="hopf3")
    d = json.loads(rep.to_json())
    assert d["omega"] == omega(4) and d["inputs"]["map"] == "hopf3"
    lines = rep.to_csv().splitlines()
    assert lines[0] == "R,U,L" and len(lines) == 12
    assert rep.to_json() == bounds_report(3, 2, V_HOPF, 1.0, np.linspace(0, 10, 11), map="hopf3").to_json()


def test_certify_degenerate():
    m = domain_mesh("ball", {"dim": 4}, shells=2, refinement_level=1)
    F = fixture("flat", m)
    c = certify(F, None, 1.0)
    assert c.regime == "degenerate" and c.upper is None
    assert math.isclose(c.measured_mass, m.volume(), rel_tol=1e-12)


def test_certify_requires_sharp_bound_below_one():
    m = domain_mesh("ball", {"dim": 4}, shells=2, refinement_level=1)
    rep = bounds_report(3, 2, V_HOPF, 1.0)
    F = fixture("flat", m)
    with pytest.raises(BoundsError):
        certify(F, rep, 0.5)
    c = certify(F, rep, 2.0)
    assert c.mass_within_upper
