import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from legendrian.errors import DegreeTooSmall, NotLegendrian
from legendrian.fixtures import degree11_figure8, torus_curve, torus_G_constant
from legendrian.legendrify import S3Curve
from legendrian.tangency import (
    PolyC2, assemble_A, assemble_y, bateman_field, bateman_identity_residual, least_squares,
    maxwell_residuals, monomial_index, nullspace, solvability_bound, synthesize, tangent_section,
    verify_candidate_G, verify_candidate_h,
)
from legendrian.trigpoly import TWO_PI, TrigPoly
from tests.fixtures import cos_k, sin_k


@pytest.fixture(scope="module")
def torus():
    return torus_curve()


@pytest.fixture(scope="module")
def torus_G():
    return PolyC2.from_terms({(2, 3): 1.0, (0, 0): -torus_G_constant()}, 3)


def test_polyc2_evaluation_and_derivatives():
    g = PolyC2.from_terms({(2, 1): 2 - 1j, (0, 3): 0.5, (1, 0): 1j})
    z1, z2 = 0.3 + 0.2j, -0.7 + 0.1j
    assert g(z1, z2) == pytest.approx((2 - 1j) * z1 ** 2 * z2 + 0.5 * z2 ** 3 + 1j * z1)
    assert g.d1()(z1, z2) == pytest.approx(2 * (2 - 1j) * z1 * z2 + 1j)
    assert g.d2()(z1, z2) == pytest.approx((2 - 1j) * z1 ** 2 + 1.5 * z2 ** 2)
    assert PolyC2.from_table(g.to_table(), g.n).coeffs.tolist() == g.coeffs.tolist()


def test_monomial_counts():
    assert len(monomial_index(3, "all")) == 16
    assert len(monomial_index(87, "even")) == 3872
    assert len(monomial_index(4, "even")) == 13


def test_solvability_bound_formula():
    # floor(4m - 1 + sqrt(2) sqrt(4m - 1 + 8 m^2))
    assert solvability_bound(1) == 7  # 3 + sqrt(22) = 7.69
    assert solvability_bound(11) == 87
    assert solvability_bound(370) == 2959


def test_torus_G_in_nullspace(torus, torus_G):
    sys = assemble_A(torus, 3)
    assert sys.parity == "all" and sys.shape == (37, 16)
    x = sys.poly_to_vector(torus_G)
    assert np.linalg.norm(sys.A @ x) <= 1e-9
    cands = nullspace(sys)
    assert cands
    cos = [abs(np.vdot(sys.poly_to_vector(c.poly), x)) / np.linalg.norm(x) for c in cands]
    assert max(cos) >= 1 - 1e-8
    for c in cands:
        assert verify_candidate_G(c.poly, torus)["max_abs_on_curve"] <= 1e-6


def test_constant_degree_has_no_candidates(torus):
    assert nullspace(assemble_A(torus, 0)) == []


def test_assembly_matches_direct_evaluation():
    c = degree11_figure8()
    sys = assemble_A(c, 2)
    assert sys.parity == "even"
    rng = np.random.default_rng(3)
    x = rng.standard_normal(sys.shape[1]) + 1j * rng.standard_normal(sys.shape[1])
    t = np.linspace(0, TWO_PI, 37)
    g = sys.vector_to_poly(x)
    z1, z2 = c.z(t)
    direct = (sys.rho_scale * c.rho(t)) ** 2 * g(z1, z2)
    assert np.allclose(synthesize(sys, x, t), direct, rtol=1e-10, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_parseval_bound(seed):
    c = torus_curve()
    sys = assemble_A(c, 3)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(sys.shape[1]) + 1j * rng.standard_normal(sys.shape[1])
    t = np.linspace(0, TWO_PI, 500)
    z1, z2 = c.z(t)
    lhs = np.max(np.abs(sys.vector_to_poly(x)(z1, z2)))
    assert lhs <= np.linalg.norm(sys.A @ x) * np.sqrt(2 * sys.D + 1) * (1 + 1e-12)


def test_m11_n87_dimensions():
    c = degree11_figure8()
    assert c.degree == 11
    sys = assemble_A(c, 87)
    assert sys.shape == (3829, 3872)


def test_tangent_section_matches_frame(torus):
    data = tangent_section(torus)
    assert data.check < 1e-12


def test_not_legendrian_guard():
    c = S3Curve.from_numerators(cos_k(1), sin_k(1, 0.5), sin_k(2, 0.3), TrigPoly.constant(0.2))
    with pytest.raises(NotLegendrian):
        tangent_section(c)


def test_solve_h_torus(torus):
    sys = assemble_y(torus, 3, assemble_A(torus, 3))
    h, res = least_squares(sys)
    assert res <= 1e-10
    # the solution is a multiple of z1 z2^2
    others = np.delete(h.coeffs.ravel(), 1 * 4 + 2)
    assert np.max(np.abs(others)) < 1e-10 * abs(h.coeffs[1, 2])
    rep = verify_candidate_h(h, torus)
    assert rep["passes"] and rep["parallelism"] <= 1e-6
    assert rep["max_h_minus_H"] <= 1e-10


def test_degree_too_small(torus):
    with pytest.raises(DegreeTooSmall):
        assemble_y(torus, 1, assemble_A(torus, 1))


def test_torus_h_field_is_tangent(torus):
    h = PolyC2.from_terms({(1, 2): 1.0})
    rep = verify_candidate_h(h, torus, 256)
    assert rep["parallelism"] <= 1e-6


def test_bateman_field_is_null_and_solves_maxwell():
    h = PolyC2.from_terms({(1, 2): 1.0})
    rng = np.random.default_rng(7)
    P = rng.uniform(-1.5, 1.5, size=(100, 4))
    assert bateman_identity_residual(*P.T).max() <= 1e-5
    F = bateman_field(h, *P.T)
    null = np.abs(np.sum(F * F, axis=-1)) / np.sum(np.abs(F) ** 2, axis=-1)
    assert null.max() <= 1e-5
    worst = max(max(maxwell_residuals(h, *p).values()) for p in P)
    assert worst <= 1e-5


def test_degenerate_curve_gives_zero_h():
    c = S3Curve.from_numerators(0.0, 1.0, 0.0, 0.0)
    sys = assemble_y(c, 2, assemble_A(c, 2))
    h, res = least_squares(sys)
    assert h.is_zero() and res == 0.0
    assert "DegenerateField" in verify_candidate_h(h, c)["flags"]


def test_trivial_candidate_flag(torus):
    assert verify_candidate_G(PolyC2(np.zeros((2, 2))), torus)["flags"] == ["TrivialCandidate"]
