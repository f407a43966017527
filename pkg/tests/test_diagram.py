import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from legendrian import knots
from legendrian.diagram import (
    CircleArc, DiagramCurve, TrigCurve2D, assemble, classify_signs, closure_radius, crossing_sign,
    detect_crossings, find_double_points, induced_code, plan_closure, plan_insertions,
    tangent_disc_radius,
)
from legendrian.errors import MalformedCode, TangentialCrossing
from legendrian.fixtures import FIGURE8_CODE, figure8_diagram, tacnode_diagram, unknot_diagram
from legendrian.trigpoly import TWO_PI
from tests.fixtures import cos_k, fig8_xy, sin_k

FIG8_INDUCED = "U1- U2+ U3- U4+ U5- U6+ U7- U8+ U9- O1- O6+ O7- O8+ O5- O2+ O3- O4+ O9-"


@pytest.fixture(scope="module")
def fig8():
    return figure8_diagram()


@pytest.fixture(scope="module")
def fig8_crossings(fig8):
    return detect_crossings(fig8)


def test_lemniscate_single_crossing():
    curve = TrigCurve2D(cos_k(1), sin_k(2, 0.5))
    cs = find_double_points(curve)
    assert len(cs) == 1
    c = cs[0]
    assert np.allclose(c.position, 0.0, atol=1e-12)
    assert c.t_lo == pytest.approx(math.pi / 2, abs=1e-12)
    assert c.t_hi == pytest.approx(3 * math.pi / 2, abs=1e-12)


def test_circle_has_no_crossings():
    assert find_double_points(TrigCurve2D(cos_k(1), sin_k(1))) == []


def test_fig8_crossings(fig8_crossings):
    assert len(fig8_crossings) == 9
    X, Y = fig8_xy()
    for c in fig8_crossings:
        p_lo = np.array([X(c.t_lo), Y(c.t_lo)])
        p_hi = np.array([X(c.t_hi), Y(c.t_hi)])
        assert np.linalg.norm(p_lo - p_hi) < 1e-10


def test_fig8_induced_code(fig8):
    code = induced_code(DiagramCurve(fig8.X, fig8.Y))
    assert knots.format_code(code) == FIG8_INDUCED


def test_fig8_only_origin_crossing_wrong(fig8, fig8_crossings):
    checks = classify_signs(fig8, crossings=fig8_crossings)
    wrong = [s for s in checks if not s.correct]
    assert len(wrong) == 1
    c = wrong[0].crossing
    assert np.allclose(c.position, 0.0, atol=1e-10)
    assert (c.t_lo, c.t_hi) == pytest.approx((math.pi / 2, 3 * math.pi / 2), abs=1e-10)


def test_fig8_height_value():
    Z = figure8_diagram().Z()
    assert float(Z(math.pi / 6)) == pytest.approx(-7493 / 1260, abs=1e-10)


def test_fig8_insertion_plan(fig8, fig8_crossings):
    plan = plan_insertions(fig8, crossings=fig8_crossings)
    assert [p.role for p in plan] == ["wind", "unwind"]
    for p in plan:
        assert p.radius == pytest.approx(0.25)
        assert p.traversals == 52
        assert abs(p.dz) == pytest.approx(52 * math.pi / 8, rel=1e-12)
    assert plan[0].dz == -plan[1].dz


def test_tangent_disc_radius_circle():
    d = unknot_diagram(1.0)
    # inside the unit circle the largest tangent disc is the circle itself
    assert tangent_disc_radius(d, 0.3, "left") == pytest.approx(1.0, rel=1e-6)
    assert tangent_disc_radius(d, 0.3, "right") == math.inf


@pytest.mark.parametrize("r", [0.25, 1.0, 2.0])
def test_circle_arc_increment(r):
    # one counter-clockwise turn about the origin
    arc = CircleArc((0.0, 0.0), r, 0.0, 1, 1.0, TWO_PI)
    assert arc.dz() == pytest.approx(-TWO_PI * r * r, abs=1e-12)


def test_circle_arc_off_centre_matches_quadrature():
    arc = CircleArc((0.7, -0.3), 0.25, 0.4, -1, 2.0, 5.0)
    def rate(u):
        p, v = arc.points(np.array([u]))[0], arc.velocity(np.array([u]))[0]
        return p[1] * v[0] - p[0] * v[1]
    ref, _ = quad(rate, 0, 2.0, epsabs=1e-13)
    assert arc.dz(0.0, 2.0) == pytest.approx(ref, abs=1e-11)


def test_per_traversal_increment_quarter_radius():
    assert TWO_PI * 0.25 ** 2 == pytest.approx(math.pi / 8)
    assert CircleArc((1.0, 2.0), 0.25, 0.0, -1, 1.0, TWO_PI).dz() == pytest.approx(math.pi / 8, abs=1e-12)


def test_crossing_sign_convention():
    assert crossing_sign((1.0, 0.0), (0.0, 1.0)) == 1
    assert crossing_sign((0.0, 1.0), (1.0, 0.0)) == -1


def test_tangential_crossing_detected():
    with pytest.raises(TangentialCrossing):
        detect_crossings(tacnode_diagram())


def test_target_code_count_mismatch():
    X, Y = fig8_xy()
    d = DiagramCurve(X, Y, tuple(knots.parse_code("O1+ U2+ O3+ U1+ O2+ U3+")))
    with pytest.raises(MalformedCode):
        detect_crossings(d)


def test_closure_radius():
    m, r = closure_radius(1.0, 0.25)
    assert m == math.ceil(1.0 / (TWO_PI / 16))
    assert m * TWO_PI * r * r == pytest.approx(1.0)
    assert r <= 0.25


def test_unknot_assembly_periodic():
    d = unknot_diagram()
    close = plan_closure(d)
    assert close is not None and close.role == "close"
    pc = assemble(d, [close])
    assert abs(pc.z_period()) < 1e-10
    assert np.allclose(pc.points(np.array([0.0])), pc.points(np.array([TWO_PI - 1e-12])), atol=1e-9)


@pytest.mark.slow
def test_fig8_assembly_signs(fig8, fig8_crossings):
    Z = fig8.Z()
    plan = plan_insertions(fig8, Z, crossings=fig8_crossings)
    # the figure-eight height function is already periodic
    assert plan_closure(fig8, Z, crossings=fig8_crossings) is None
    pc = assemble(fig8, plan, Z=Z)  # verify=True checks every original crossing sign
    assert abs(pc.z_period()) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(0, TWO_PI), st.floats(0.3, 3.0), st.floats(-2, 2), st.floats(-2, 2))
def test_crossing_count_invariant_under_similarity(theta, s, dx, dy):
    X, Y = fig8_xy()
    c, si = math.cos(theta), math.sin(theta)
    Xr = (X * c - Y * si) * s + dx
    Yr = (X * si + Y * c) * s + dy
    assert len(find_double_points(TrigCurve2D(Xr, Yr))) == 9


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, TWO_PI))
def test_crossings_invariant_under_shift(shift):
    X, Y = fig8_xy()
    cs = find_double_points(TrigCurve2D(X.shift(shift), Y.shift(shift)))
    assert len(cs) == 9
