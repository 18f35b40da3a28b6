import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msslab.boundary_data import sphere_samples
from msslab.geometry import GraphFunction
from msslab.mesh import domain_mesh, sphere_mesh
from msslab.solver import initial_values
from msslab.topology import (
    Polyline,
    ResolutionError,
    TopologyError,
    fibers_to_json,
    hopf_invariant,
    linking_number,
    min_norm_locus,
    neighborhood_containment,
    preimage_fiber,
    sphere_degree,
)


def circle(center, u, v, n=200):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return Polyline(np.asarray(center) + np.outer(np.cos(t), u) + np.outer(np.sin(t), v))


def test_degree_identity_antipodal():
    s2 = sphere_mesh(2, 2)
    assert sphere_degree(s2, s2.vertices).value == 1
    assert sphere_degree(s2, -s2.vertices).value == -1
    s3 = sphere_mesh(3, 2)
    d = sphere_degree(s3, s3.vertices)
    assert d.value == 1 and abs(d.raw - 1) < 0.2


@pytest.mark.parametrize("k", [-2, -1, 0, 1, 2, 3])
def test_degree_zk(k):
    s1 = sphere_mesh(1, 4)
    z = s1.vertices[:, 0] + 1j * s1.vertices[:, 1]
    w = z ** k
    assert sphere_degree(s1, np.stack([w.real, w.imag], axis=1)).value == k


def test_degree_refinement_invariant():
    vals = []
    for lv in (2, 3):
        s2 = sphere_mesh(2, lv)
        V = s2.vertices.copy()
        V[:, 2] *= -1  # reflection
        vals.append(sphere_degree(s2, V).value)
    assert vals == [-1, -1]


def test_degree_needs_resolution():
    s1 = sphere_mesh(1, 1)
    z = s1.vertices[:, 0] + 1j * s1.vertices[:, 1]
    w = z ** 5
    with pytest.raises(ResolutionError, match="refine"):
        sphere_degree(s1, np.stack([w.real, w.imag], axis=1))


def test_hopf_fibers(hopf, s3_level3):
    vals = hopf(s3_level3.vertices)
    h = s3_level3.max_edge_length()
    north, _ = preimage_fiber(s3_level3, vals, [1, 0, 0])
    assert len(north) == 1 and north[0].closed
    assert np.linalg.norm(north[0].points[:, 2:], axis=1).max() <= 2 * h
    south, _ = preimage_fiber(s3_level3, vals, [-1, 0, 0])
    assert len(south) == 1
    assert np.linalg.norm(south[0].points[:, :2], axis=1).max() <= 2 * h
    lk = linking_number(north[0], south[0]).value
    assert abs(lk) == 1
    assert linking_number(south[0], north[0]).value == lk


def test_constant_map_has_empty_fiber(s3_level2):
    vals = np.tile([0.0, 0.0, 1.0], (s3_level2.n_vertices, 1))
    lines, _ = preimage_fiber(s3_level2, vals, [1, 0, 0])
    assert lines == []


def test_hopf_invariant(hopf, s3_level3):
    H = hopf_invariant(s3_level3, hopf(s3_level3.vertices))
    assert H.value == 1 and abs(H.raw - 1) < 0.2
    assert hopf_invariant(s3_level3, hopf(-s3_level3.vertices)).value == 1
    const = np.tile([0.0, 0.0, 1.0], (s3_level3.n_vertices, 1))
    assert hopf_invariant(s3_level3, const).value == 0


def test_hopf_invariant_refinement_and_perturbation(hopf, s3_level2, s3_level3):
    assert hopf_invariant(s3_level2, hopf(s3_level2.vertices)).value == 1
    for q in ([0.3, 0.8, 0.52], [0.0, 0.0, 1.0]):
        assert hopf_invariant(s3_level3, hopf(s3_level3.vertices), q=q).value == 1


def test_linking_unit_examples():
    a = circle([0, 0, 0], [1, 0, 0], [0, 1, 0])
    b = circle([1, 0, 0], [1, 0, 0], [0, 0, 1])
    c = circle([3, 0, 0], [1, 0, 0], [0, 1, 0])
    ab = linking_number(a, b)
    assert abs(ab.value) == 1 and abs(abs(ab.raw) - 1) < 0.2
    assert linking_number(b, a).value == ab.value
    assert linking_number(a, c).value == 0


def test_polyline_validation():
    with pytest.raises(TopologyError):
        Polyline(np.array([[0.0, 0, 0], [1, 0, 0]]), closed=True)


def test_fiber_json(hopf, s3_level2):
    lines, _ = preimage_fiber(s3_level2, hopf(s3_level2.vertices), [1, 0, 0])
    text = fibers_to_json({"north": lines})
    assert len(json.loads(text)["north"]) == 1
    assert fibers_to_json({"north": lines}) == text


def test_min_norm_locus(hopf):
    m = domain_mesh("ball", {"dim": 4}, shells=2, refinement_level=1)
    F = GraphFunction(m, initial_values(m, hopf, 2.0, "radial"))
    val, idx = min_norm_locus(F)
    assert val == 0.0 and np.linalg.norm(m.vertices[idx]) == 0.0
    c = GraphFunction(m, np.tile([3.0, 4.0, 0.0], (m.n_vertices, 1)))
    assert min_norm_locus(c)[0] == 5.0


@settings(max_examples=15, deadline=None)
@given(R=st.floats(0.01, 100.0))
def test_min_norm_scales(R, hopf):
    m = domain_mesh("ball", {"dim": 2}, shells=2, refinement_level=2)
    vals = np.random.default_rng(0).normal(size=(m.n_vertices, 3)) + 2.0
    a = min_norm_locus(GraphFunction(m, vals))
    b = min_norm_locus(GraphFunction(m, R * vals))
    assert b[1] == a[1] and np.isclose(b[0], R * a[0], rtol=1e-12)


def test_containment(hopf):
    R = 2.0
    m = domain_mesh("ball", {"dim": 4}, shells=2, refinement_level=1)
    X = m.vertices
    r = np.linalg.norm(X, axis=1)
    # R * eta(x/|x|) for |x| >= 1/2, blended linearly to 0 at the center
    w = np.clip(r / 0.5, 0.0, 1.0)
    dirs = np.where((r > 0)[:, None], X / np.where(r > 0, r, 1.0)[:, None], [1.0, 0, 0, 0])
    F = GraphFunction(m, R * w[:, None] * hopf(dirs))
    cloud = R * hopf(sphere_samples(3, 4096, seed=0))
    c = neighborhood_containment(F, cloud, epsilon=0.5 * R)
    assert not c.contained and c.max_dist >= R - 1e-12
    inside = GraphFunction(m, cloud[: m.n_vertices])
    assert neighborhood_containment(inside, cloud, 1e-9).contained
    with pytest.raises(TopologyError):
        neighborhood_containment(F, np.empty((0, 3)), 1.0)
