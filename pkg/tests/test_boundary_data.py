import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from msslab.boundary_data import (
    HOPF_FAMILIES,
    BoundaryDataError,
    annulus_data,
    cd_conj,
    cd_mul,
    deform_map,
    get_map,
    graph_volume,
    hopf_map,
    image_distance,
    reach_estimate,
    scale_map,
    sphere_samples,
    torus_data,
    verify_isometry,
)
from msslab.mesh import sphere_mesh


def test_hopf_values():
    assert np.allclose(hopf_map("S3_S2", np.array([1.0, 0, 0, 0])), [1, 0, 0])
    assert np.allclose(hopf_map("S3_S2", np.array([0, 0, 1.0, 0])), [-1, 0, 0])
    s = 1 / math.sqrt(2)
    assert np.allclose(hopf_map("S3_S2", np.array([s, 0, s, 0])), [0, 1, 0], atol=1e-15)


def test_hopf_matches_complex_formula():
    x = sphere_samples(3, 256, seed=4)
    z1, z2 = x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3]
    w = z1 * np.conj(z2)
    ref = np.stack([abs(z1) ** 2 - abs(z2) ** 2, 2 * w.real, 2 * w.imag], axis=1)
    assert np.allclose(hopf_map("S3_S2", x), ref, atol=1e-14)


@pytest.mark.parametrize("family", list(HOPF_FAMILIES))
def test_hopf_norm_preserved(family):
    h = HOPF_FAMILIES[family]
    x = sphere_samples(2 * h - 1, 2 ** 14 if h < 8 else 2 ** 12, seed=1)
    out = hopf_map(family, x)
    assert out.shape[1] == h + 1
    assert np.abs(np.linalg.norm(out, axis=1) - 1).max() <= 1e-12


def test_hopf_norm_1e5_samples():
    x = sphere_samples(3, 100_000, seed=2)
    assert np.abs(np.linalg.norm(hopf_map("S3_S2", x), axis=1) - 1).max() <= 1e-12


def test_hopf_circle_invariance():
    x = sphere_samples(3, 64, seed=5)
    z = np.stack([x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3]], axis=1)
    base = hopf_map("S3_S2", x)
    for t in np.linspace(0, 2 * np.pi, 13):
        w = np.exp(1j * t) * z
        y = np.stack([w[:, 0].real, w[:, 0].imag, w[:, 1].real, w[:, 1].imag], axis=1)
        assert np.allclose(hopf_map("S3_S2", y), base, atol=1e-14)


def test_hopf_rejects_non_unit():
    with pytest.raises(BoundaryDataError):
        hopf_map("S3_S2", np.array([2.0, 0, 0, 0]))


def test_octonions_alternative(rng):
    a, b = rng.normal(size=(2, 8))
    # alternativity: (aa)b = a(ab), (ab)b = a(bb); norm is multiplicative
    assert np.allclose(cd_mul(cd_mul(a, a), b), cd_mul(a, cd_mul(a, b)), atol=1e-12)
    assert np.allclose(cd_mul(cd_mul(a, b), b), cd_mul(a, cd_mul(b, b)), atol=1e-12)
    assert math.isclose(np.linalg.norm(cd_mul(a, b)), np.linalg.norm(a) * np.linalg.norm(b), rel_tol=1e-12)
    assert np.allclose(cd_mul(a, cd_conj(a)), np.r_[a @ a, np.zeros(7)], atol=1e-12)


def test_scale_map(hopf):
    x = sphere_samples(3, 10_000, seed=3)
    assert np.array_equal(scale_map(hopf, 1.0)(x), hopf(x))
    assert np.all(scale_map(hopf, 0.0)(x) == 0)
    f5 = scale_map(hopf, 5.0)
    assert np.allclose(np.linalg.norm(f5(x), axis=1), 5.0, atol=1e-12)
    assert f5.image_radius == 5.0 and f5.image_dim == hopf.image_dim


def test_isometry_checks(hopf):
    assert verify_isometry(np.eye(3), hopf) <= 1e-9
    Q = special_ortho_group.rvs(3, random_state=1)
    assert verify_isometry(Q, hopf) <= 1e-8
    assert verify_isometry(np.diag([2.0, 1, 1]), hopf) > 0.1
    with pytest.raises(BoundaryDataError):
        verify_isometry(np.eye(4), hopf)


def test_graph_volumes(hopf):
    assert abs(graph_volume(get_map("zero", n=2), sphere_mesh(2, 3)) - 4 * math.pi) / (4 * math.pi) < 0.01
    ident = graph_volume(get_map("identity", n=1), sphere_mesh(1, 4))
    assert abs(ident - 2 * math.pi * math.sqrt(2)) / (2 * math.pi * math.sqrt(2)) < 0.01
    v = graph_volume(hopf, sphere_mesh(3, 2))
    assert abs(v - 10 * math.pi ** 2) / (10 * math.pi ** 2) < 0.02


@pytest.mark.parametrize("R", [0.0, 1.0, 2.0])
def test_graph_volume_scaling(hopf, R, s3_level2):
    # sqrt det(I + R^2 J^T J) = 1 + 4 R^2 for the Hopf map
    v = graph_volume(scale_map(hopf, R), s3_level2)
    area = graph_volume(get_map("zero", n=3), s3_level2)
    assert math.isclose(v, (1 + 4 * R * R) * area, rel_tol=1e-6)


def test_graph_volume_dimension_mismatch(hopf):
    with pytest.raises(BoundaryDataError):
        graph_volume(hopf, sphere_mesh(2, 1))


def test_reach_round_and_scaled(hopf):
    assert reach_estimate(hopf) == 1.0
    assert reach_estimate(scale_map(hopf, 0.5)) == 0.5
    for R in (0.3, 2.0, 7.0):
        assert math.isclose(reach_estimate(scale_map(hopf, R)), R * reach_estimate(hopf), rel_tol=0.01)


def test_reach_ellipsoid(hopf):
    # ellipsoid with semi-axes (1, 1, 1/2): the reach is the smallest
    # curvature radius c^2 / a = 1/4, attained on the equator
    est = reach_estimate(deform_map(hopf, np.diag([1.0, 1.0, 0.5])), samples=3000)
    assert abs(est - 0.25) / 0.25 < 0.1


def test_reach_needs_samples(hopf):
    with pytest.raises(BoundaryDataError, match="100"):
        reach_estimate(deform_map(hopf, np.diag([1.0, 1.0, 0.5])), samples=50)


def test_image_distance_example_1():
    f = get_map("annulus:hopf12")
    (_, f1), (_, f2) = f.components
    assert abs(image_distance(f1, f2) - 1.0) <= 1e-12
    assert image_distance(f1, f1) == 0.0


def test_image_distance_radius_5(hopf):
    from dataclasses import replace

    f5 = replace(hopf, evaluator=lambda P: 5.0 * hopf.evaluator(P), image_radius=5.0)
    assert abs(image_distance(hopf, f5) - 4.0) <= 1e-12


def test_annulus_data_rejects_mismatch(hopf):
    with pytest.raises(BoundaryDataError):
        annulus_data(hopf, get_map("identity", n=2))


def test_torus_data():
    f = torus_data(3)
    t = np.linspace(0, 2 * np.pi, 7)
    x = sphere_samples(2, 7, radius=0.5, seed=0)
    P = np.stack([x[:, 0], x[:, 1], (1 + x[:, 2]) * np.cos(t), (1 + x[:, 2]) * np.sin(t)], axis=1)
    assert np.allclose(f(P), x, atol=1e-12)
    assert np.allclose(np.linalg.norm(f(P), axis=1), 0.5)


def test_torus_slice_degree_one():
    from msslab.topology import sphere_degree

    f = torus_data(3)
    s = sphere_mesh(2, 2)
    x = 0.5 * s.vertices
    P = np.stack([x[:, 0], x[:, 1], 1 + x[:, 2], 0 * x[:, 2]], axis=1)  # t0 = 0
    assert sphere_degree(s, f(P)).value == 1


def test_registry():
    with pytest.raises(BoundaryDataError, match="known"):
        get_map("nope")
    for name in ("hopf3", "hopf7", "hopf15", "torus", "annulus:hopf12"):
        assert get_map(name).name


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), R=st.floats(-10, 10))
def test_scale_is_pointwise(seed, R, hopf):
    x = sphere_samples(3, 8, seed=seed)
    assert np.allclose(scale_map(hopf, R)(x), R * hopf(x), atol=1e-12)
