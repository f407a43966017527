import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from legendrian import knots
from legendrian.dynamics import (
    curve_samples_r3, escape_time, evolve_frames, flow_by_ode, phi0, phi_t_forward, phi_t_inverse,
    phi_t_inverse_jacobian, poynting_from_gradients, poynting_V, s3_distance_to_pole,
)
from legendrian.errors import AtInfinity, NotEscapedInGrid
from legendrian.fixtures import degree11_figure8
from legendrian.legendrify import gauss_code
from legendrian.tangency import alpha_beta
from legendrian.trigpoly import fourier_project

rng = np.random.default_rng(11)
P100 = rng.uniform(-3, 3, size=(100, 3))


@pytest.fixture(scope="module")
def fig8():
    return degree11_figure8()


def test_phi0_is_inverse_of_alpha_beta_at_zero():
    a, b = alpha_beta(*P100.T, 0.0)
    assert np.allclose(np.abs(a) ** 2 + np.abs(b) ** 2, 1.0, atol=1e-12)
    assert np.max(np.abs(phi0(a, b) - P100)) <= 1e-10


def test_phi0_pole():
    with pytest.raises(AtInfinity):
        phi0(1.0, 0.0)


def test_inverse_at_zero_is_identity():
    assert np.max(np.abs(phi_t_inverse(P100, 0.0) - P100)) <= 1e-13


def test_inverse_origin_at_one():
    assert np.allclose(phi_t_inverse([0.0, 0.0, 0.0], 1.0), [0.0, 0.0, 1.0], atol=0)


@pytest.mark.parametrize("t", [-3.0, 0.7, 5.0])
def test_inverse_matches_composition(t):
    a, b = alpha_beta(*P100.T, t)
    assert np.max(np.abs(phi0(a, b) - phi_t_inverse(P100, t))) <= 1e-10


def test_jacobian_against_central_differences():
    q, t, h = P100[:10], 1.3, 1e-6
    J = phi_t_inverse_jacobian(q, t)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (phi_t_inverse(q + e, t) - phi_t_inverse(q - e, t)) / (2 * h)
        assert np.allclose(J[:, :, k], fd, atol=1e-7)


def test_poynting_unit_norm():
    P = rng.uniform(-5, 5, size=(1000, 4))
    V = poynting_V(*P.T)
    assert np.max(np.abs(np.linalg.norm(V, axis=1) - 1.0)) <= 1e-12


def test_poynting_matches_gradient_construction():
    P = rng.uniform(-2, 2, size=(200, 4))
    assert np.max(np.abs(poynting_V(*P.T) - poynting_from_gradients(*P.T))) <= 1e-10


def test_poynting_on_z_axis():
    z = np.linspace(-4, 4, 17)
    for t in (-2.0, 0.0, 3.0):
        V = poynting_V(0.0 * z, 0.0 * z, z, t)
        assert np.array_equal(V, np.tile([0.0, 0.0, -1.0], (17, 1)))


def test_poynting_large_time_limit():
    V = poynting_V(*P100.T, 1e6)
    assert np.max(np.abs(V - [0.0, 0.0, -1.0])) <= 1e-4


def test_forward_at_zero():
    assert np.array_equal(phi_t_forward(P100, 0.0), P100)


@pytest.mark.parametrize("t", [0.5, -0.5, 2.0, -2.0, 100.0, -100.0])
def test_forward_roundtrip(t):
    p = P100[:30]
    q = phi_t_forward(p, t)
    assert np.max(np.linalg.norm(phi_t_inverse(q, t) - p, axis=1)) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(-2, 2))
def test_forward_agrees_with_poynting_ode(p, t):
    p = np.array(p)
    assert np.max(np.abs(flow_by_ode(p, t) - phi_t_forward(p, t))) <= 1e-6


def test_composition_invariant():
    q = P100[:20]
    assert np.max(np.abs(phi_t_forward(phi_t_inverse(q, 1.5), 1.5) - q)) <= 1e-9


def test_frame_at_zero_is_phi0_image(fig8):
    (f,) = evolve_frames(fig8, [0.0], 64)
    assert np.array_equal(f.points, curve_samples_r3(fig8, 64)) and f.all_converged


def test_frames_follow_input_order(fig8):
    times = [2.0, -1.0, 0.0, 1.0]
    assert [f.t for f in evolve_frames(fig8, times, 16)] == times


def test_figure8_sinks_at_large_time(fig8):
    (f,) = evolve_frames(fig8, [1e6], 128)
    assert f.all_converged
    assert float(np.mean(f.points[:, 2])) < -1e5


def test_escape_time_radius_ten(fig8):
    rep = escape_time(fig8, 10.0, samples=128)
    assert 0 < rep.T_plus <= 1e4 and 0 < rep.T_minus <= 1e4
    d = dict(rep.profile)
    assert all(v > 10 for t, v in d.items() if abs(t) >= max(rep.T_plus, rep.T_minus))


def test_escape_time_degenerate_ball(fig8):
    rep = escape_time(fig8, 0.0, [-1.0, 0.0, 1.0], samples=32)
    assert rep.T_plus == 0.0 and rep.T_minus == 0.0


def test_escape_grid_too_short(fig8):
    with pytest.raises(NotEscapedInGrid):
        escape_time(fig8, 10.0, [-1.0, 0.0, 1.0], samples=32)


def test_preimage_of_ball_shrinks_to_pole():
    # sample the ball of radius 10 and pull back at |t| = 1000
    u = rng.standard_normal((5000, 3))
    u = u / np.linalg.norm(u, axis=1, keepdims=True) * 10 * rng.uniform(0, 1, (5000, 1)) ** (1 / 3)
    for t in (1e3, -1e3):
        assert np.max(s3_distance_to_pole(*u.T, t)) < 0.1


@pytest.mark.slow
def test_link_type_preserved_at_unit_time(fig8):
    def signature(points):
        X, Y, Z = (fourier_project(points[:, k], 200) for k in range(3))
        return knots.signature(gauss_code(X, Y, Z))

    f0, f1 = evolve_frames(fig8, [0.0, 1.0], 2048)
    assert f1.all_converged
    # the crossing count depends on the projection (RM2/RM3 are not reduced); the determinant does not
    (n0, d0), (n1, d1) = signature(f0.points), signature(f1.points)
    assert d0 == d1 == 5
    assert min(n0, n1) >= 4
