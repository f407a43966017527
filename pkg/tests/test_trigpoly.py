import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from legendrian.errors import AllCoefficientsZero, DegreeTooLowWarning, SingularSystem
from legendrian.trigpoly import (
    ComplexTrigPoly, TrigPoly, area_integral, balance_defect, fourier_project, rebalance,
    trig_hermite_interpolate,
)
from tests.fixtures import best_fig8_xy, fig8_xy


def direct_sum(p, t):
    """Term-by-term oracle with Python floats."""
    v = p.a0
    for j, (a, b) in enumerate(zip(p.cos, p.sin), start=1):
        v += a * math.cos(j * t) + b * math.sin(j * t)
    return v


def quad_defect(X, Y):
    dX, dY = X.derivative(), Y.derivative()
    f = lambda t: Y(t) * dX(t) - X(t) * dY(t)
    return quad(f, 0, 2 * np.pi, limit=400, epsabs=1e-12, epsrel=1e-12)[0]


coef = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


@st.composite
def trigpolys(draw, max_degree=8):
    m = draw(st.integers(0, max_degree))
    return TrigPoly(draw(coef), draw(st.lists(coef, min_size=m, max_size=m)),
                    draw(st.lists(coef, min_size=m, max_size=m)))


def test_evaluate_examples():
    assert TrigPoly(0, [1.0])(np.pi) == pytest.approx(-1.0, abs=1e-15)
    X, _ = fig8_xy()
    assert X(0.0) == pytest.approx(3.0, abs=1e-14)


def test_evaluate_matches_direct_sum():
    rng = np.random.default_rng(1)
    p = TrigPoly(rng.normal(), rng.normal(size=25), rng.normal(size=25))
    for t in rng.uniform(-10, 10, 50):
        assert p(t) == pytest.approx(direct_sum(p, t), abs=1e-14 * 25)


def test_sample_agrees_with_pointwise():
    rng = np.random.default_rng(2)
    p = TrigPoly(rng.normal(), rng.normal(size=40), rng.normal(size=40))
    for n in (7, 81, 256):
        t = 2 * np.pi * np.arange(n) / n
        assert np.allclose(p.sample(n), p(t), atol=1e-12)


def test_degree_is_canonical():
    assert TrigPoly(1.0, [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]).degree == 2
    assert TrigPoly(3.0).derivative().degree == 0


def test_derivative_examples():
    d = TrigPoly(0, [1.0]).derivative()
    assert d.allclose(TrigPoly(0, [0.0], [-1.0]))
    assert TrigPoly(5.0).derivative().allclose(TrigPoly(0.0))


def test_derivative_central_difference():
    rng = np.random.default_rng(3)
    p = TrigPoly(rng.normal(), rng.normal(size=6), rng.normal(size=6))
    t = rng.uniform(0, 2 * np.pi, 100)
    h = 1e-6
    fd = (p(t + h) - p(t - h)) / (2 * h)
    assert np.max(np.abs(fd - p.derivative()(t))) < 1e-6


def test_multiply_examples():
    c = TrigPoly(0, [1.0])
    assert (c * c).allclose(TrigPoly(0.5, [0.0, 0.5]), atol=1e-15)
    rng = np.random.default_rng(4)
    p = TrigPoly(rng.normal(), rng.normal(size=5), rng.normal(size=5))
    assert (p * TrigPoly(1.0)).allclose(p)
    _, Y = best_fig8_xy()
    assert Y.degree == 8


def test_large_products_use_fft_path_accurately():
    rng = np.random.default_rng(5)
    p = TrigPoly(rng.normal(), rng.normal(size=300), rng.normal(size=300))
    q = TrigPoly(rng.normal(), rng.normal(size=200), rng.normal(size=200))
    t = rng.uniform(0, 2 * np.pi, 30)
    assert np.allclose((p * q)(t), p(t) * q(t), atol=1e-9)
    assert (p * q).degree == 500


def test_power_matches_repeated_product():
    p = TrigPoly(0.3, [1.0, -0.5], [0.2])
    assert (p ** 3).allclose(p * p * p, atol=1e-13)
    assert (p ** 0).allclose(TrigPoly(1.0))


def test_complex_roundtrip_and_conjugate_symmetry():
    p = TrigPoly(0.5, [1.0, 2.0], [-1.0, 0.25])
    c = p.to_complex()
    assert np.allclose(c.coeffs, np.conj(c.coeffs[::-1]))
    assert TrigPoly.from_complex(c).allclose(p)
    t = np.linspace(0, 6, 11)
    assert np.allclose(c(t).real, p(t)) and np.allclose(c(t).imag, 0)


def test_complex_product_degree_adds():
    a = ComplexTrigPoly.from_modes({2: 1.0, -1: 1j})
    b = ComplexTrigPoly.from_modes({3: 2.0})
    assert (a * b).degree == 5
    t = 0.7
    assert (a * b)(t) == pytest.approx(a(t) * b(t))


def test_complex_conj_real_imag():
    a = ComplexTrigPoly.from_modes({2: 1 + 2j, -1: 0.5j, 0: 3.0})
    t = np.linspace(0, 6, 7)
    assert np.allclose(a.conj()(t), np.conj(a(t)))
    assert np.allclose(a.real()(t), a(t).real)
    assert np.allclose(a.imag()(t), a(t).imag)


def test_shift_and_reverse():
    p = TrigPoly(0.1, [1.0, 0.3], [0.4, -2.0])
    t = np.linspace(0, 6, 9)
    assert np.allclose(p.shift(0.8)(t), p(t + 0.8))
    assert np.allclose(p.reverse()(t), p(-t))


def test_serialisation_roundtrip():
    p = TrigPoly(0.1, [1.0, 0.3], [0.4, -2.0])
    assert TrigPoly.from_dict(p.to_dict()).allclose(p, atol=0)


# -- area integral ----------------------------------------------------------

@pytest.mark.parametrize("r", [0.25, 1.0, 2.0])
def test_circle_area_closed_form(r):
    X, Y = TrigPoly(0.3, [r]), TrigPoly(-1.2, [], [r])
    Z = area_integral(X, Y)
    assert Z(0.0) == 0.0
    assert Z(2 * np.pi) == pytest.approx(-2 * np.pi * r * r, abs=1e-12)


def test_area_integral_constants():
    Z = area_integral(TrigPoly(1.0), TrigPoly(-2.0))
    assert Z.trig.degree == 0 and Z.drift == 0 and Z(1.3) == 0


def test_area_integral_fig8_value():
    Z = area_integral(*fig8_xy())
    assert Z(np.pi / 6) == pytest.approx(-7493 / 1260, abs=1e-12)
    assert Z(7 * np.pi / 6) == pytest.approx(7493 / 1260, abs=1e-12)
    assert Z.is_periodic()


def test_area_integral_derivative_identity():
    rng = np.random.default_rng(6)
    X = TrigPoly(rng.normal(), rng.normal(size=7), rng.normal(size=7))
    Y = TrigPoly(rng.normal(), rng.normal(size=4), rng.normal(size=4))
    Z = area_integral(X, Y)
    resid = Z.derivative() + X * Y.derivative() - Y * X.derivative()
    assert max(abs(resid.a0), np.max(np.abs(resid.cos)), np.max(np.abs(resid.sin))) < 1e-12


# -- balance ----------------------------------------------------------------

def test_balance_defect_examples():
    assert balance_defect(TrigPoly(0, [1.0]), TrigPoly(0, [], [1.0])) == pytest.approx(-2 * np.pi)
    assert balance_defect(TrigPoly(0, [1.0]), TrigPoly(0, [1.0])) == 0.0
    assert abs(balance_defect(*best_fig8_xy())) < 1e-3


def test_balance_defect_circle_quadrature():
    X, Y = TrigPoly(0, [1.0]), TrigPoly(0, [], [1.0])
    assert quad_defect(X, Y) == pytest.approx(-2 * np.pi, abs=1e-12)


def test_balance_defect_matches_quadrature_random():
    rng = np.random.default_rng(7)
    for _ in range(30):
        m = rng.integers(1, 21)
        X = TrigPoly(rng.uniform(-2, 2), rng.uniform(-2, 2, m), rng.uniform(-2, 2, m))
        Y = TrigPoly(rng.uniform(-2, 2), rng.uniform(-2, 2, m), rng.uniform(-2, 2, m))
        assert balance_defect(X, Y) == pytest.approx(quad_defect(X, Y), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(trigpolys(), trigpolys())
def test_closed_form_equals_antiderivative(X, Y):
    Z = area_integral(X, Y)
    assert Z(2 * np.pi) == pytest.approx(balance_defect(X, Y), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(trigpolys(6), trigpolys(6), st.floats(0, 2 * np.pi))
def test_leibniz(p, q, t):
    lhs = (p * q).derivative()(t)
    rhs = p.derivative()(t) * q(t) + p(t) * q.derivative()(t)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_rebalance_balanced_input_unchanged():
    X, Y = fig8_xy()
    X2, Y2 = rebalance(X, Y)
    assert X2 is X and Y2 is Y


def test_rebalance_unit_circle():
    X, Y = TrigPoly(0, [1.0]), TrigPoly(0, [], [1.0])
    X2, Y2 = rebalance(X, Y)
    assert X2.allclose(X)
    # d_1 moves by defect / (2*pi*a_1) = -1, so Y collapses to a constant
    assert Y2.degree == 0
    assert quad_defect(X2, Y2) == pytest.approx(0.0, abs=1e-12)


def test_rebalance_explicit_coefficient():
    rng = np.random.default_rng(8)
    X = TrigPoly(0, rng.normal(size=5), rng.normal(size=5))
    Y = TrigPoly(0, rng.normal(size=5), rng.normal(size=5))
    for key in "abcd":
        X2, Y2 = rebalance(X, Y, coefficient=(key, 4))
        assert abs(balance_defect(X2, Y2)) < 1e-12
        changed = np.concatenate([X2.cos != X.cos, X2.sin != X.sin, Y2.cos != Y.cos, Y2.sin != Y.sin])
        assert changed.sum() == 1


def test_rebalance_all_zero_raises():
    with pytest.raises(AllCoefficientsZero):
        rebalance(TrigPoly(1.0), TrigPoly(2.0, [0.0]), coefficient=None, tol=-1.0)


@settings(max_examples=40, deadline=None)
@given(trigpolys(6), trigpolys(6))
def test_rebalance_property(X, Y):
    if abs(balance_defect(X, Y)) < 1e-6:
        return
    X2, Y2 = rebalance(X, Y)
    m = max(X.degree, Y.degree, X2.degree, Y2.degree)
    flat = lambda p: np.concatenate(p.coefficients(m)[1:])
    changed = np.concatenate([flat(X2) != flat(X), flat(Y2) != flat(Y)])
    assert changed.sum() == 1
    assert abs(balance_defect(X2, Y2)) < 1e-10 * max(1.0, abs(balance_defect(X, Y)))


def test_rebalance_perturbation_size():
    X = TrigPoly(0, [0.5, 3.0], [0.1])
    Y = TrigPoly(0, [0.2, 0.3], [1.0, 0.7])
    delta = balance_defect(X, Y)
    _, Y2 = rebalance(X, Y)
    # largest |a_j| is a_2 = 3, so d_2 moves by |delta| / (2*pi*2*3)
    assert abs(Y2.sin[1] - Y.sin[1]) == pytest.approx(abs(delta) / (2 * np.pi * 2 * 3.0))


# -- projection -------------------------------------------------------------

def test_fourier_project_identity_on_subspace():
    p = fourier_project(lambda t: np.cos(3 * t), 5)
    assert p.allclose(TrigPoly(0, [0, 0, 1.0]), atol=1e-12)


def test_fourier_project_trigpoly_input_exact():
    p = TrigPoly(0.2, [1.0, -0.5], [0.3])
    assert fourier_project(p, 4).allclose(p, atol=0)
    assert fourier_project(p, 4, min_samples=0).allclose(p, atol=0)
    assert fourier_project(lambda t: p(t), 4).allclose(p, atol=1e-12)


def test_fourier_project_square_wave():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegreeTooLowWarning)
        p = fourier_project(lambda t: np.sign(np.sin(t)), 1, min_samples=4096)
    assert p.sin[0] == pytest.approx(4 / np.pi, abs=1e-5)


def test_fourier_project_warns_on_tail():
    with pytest.warns(DegreeTooLowWarning):
        fourier_project(lambda t: np.sign(np.sin(t)), 3)


def test_fourier_project_point_list():
    t = 2 * np.pi * np.arange(64) / 64
    p = fourier_project(np.sin(2 * t) + 0.5, 4)
    assert p.allclose(TrigPoly(0.5, [], [0, 1.0]), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(trigpolys(10), st.integers(1, 12))
def test_fourier_project_idempotent(p, d):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegreeTooLowWarning)
        once = fourier_project(p, d)
        twice = fourier_project(lambda t: once(t), d)
    assert twice.allclose(once, atol=1e-11)


# -- interpolation ----------------------------------------------------------

def test_hermite_constant():
    p = trig_hermite_interpolate([(0.0, 0, 1.0)])
    assert p.degree == 0 and p.a0 == pytest.approx(1.0)


def test_hermite_value_and_derivative():
    p = trig_hermite_interpolate([(0.0, 0, 0.0), (0.0, 1, 0.0), (np.pi, 0, 1.0)])
    assert p(0.0) == pytest.approx(0.0, abs=1e-12)
    assert p.derivative()(0.0) == pytest.approx(0.0, abs=1e-12)
    assert p(np.pi) == pytest.approx(1.0, abs=1e-12)
    assert p.degree == 1


def test_hermite_cusp_arc():
    # semicubical cusp at t=1: y ~ (t-1)^2, z ~ (t-1)^3 locally
    t0, tc, t1 = 0.5, 1.0, 1.6
    cons_y = [(t0, 0, 0.25), (t0, 1, -1.0), (tc, 0, 0.0), (tc, 1, 0.0), (tc, 2, 2.0),
              (t1, 0, 0.36), (t1, 1, 1.2)]
    y = trig_hermite_interpolate(cons_y)
    for t, k, v in cons_y:
        assert y.derivative(k)(t) == pytest.approx(v, abs=1e-9)
    cons_z = [(tc, 0, 0.0), (tc, 1, 0.0), (tc, 2, 0.0), (tc, 3, 6.0), (t0, 0, -0.125), (t1, 0, 0.216)]
    z = trig_hermite_interpolate(cons_z)
    for t, k, v in cons_z:
        assert z.derivative(k)(t) == pytest.approx(v, abs=1e-9)


def test_hermite_inconsistent():
    with pytest.raises(SingularSystem):
        trig_hermite_interpolate([(0.0, 0, 1.0), (2 * np.pi, 0, 2.0)])
    with pytest.raises(SingularSystem):
        trig_hermite_interpolate([(0.0, 0, 1.0), (0.0, 0, 1.0)])
