"""Contact-geometric maps, residuals and front projections.

Two contact structures on R^3 appear here. ``xi1`` is the kernel of
``dz + x dy`` and ``xi2`` the kernel of ``dZ + X dY - Y dX``; the map
:func:`xi1_to_xi2` carries one to the other. In ``xi1`` a Legendrian curve is
determined by its front ``(y, z)`` through ``x = -z'/y'``, and the strand with
the smaller slope passes over.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import CuspIllConditioned, EqualSlopes, NotInRightHalfSphere
from .legendrify import LegendrianR3Curve, S3Curve
from .trigpoly import TWO_PI, TrigPoly, trig_hermite_interpolate

_FD_STEP = 1e-5


def _deriv(f):
    if isinstance(f, TrigPoly):
        return f.derivative()
    if hasattr(f, "derivative"):
        return f.derivative()
    h = _FD_STEP
    return lambda t: (f(np.asarray(t) + h) - f(np.asarray(t) - h)) / (2 * h)


@dataclass(frozen=True)
class SpaceCurveR3:
    """Closed space curve in one of the two contact models.

    Coordinates are callables of ``t``. Derivatives default to exact ones for
    TrigPoly coordinates and to central differences otherwise.
    """

    x: Callable
    y: Callable
    z: Callable
    model: str = "xi2"
    dx: Callable | None = None
    dy: Callable | None = None
    dz: Callable | None = None

    def __post_init__(self):
        if self.model not in ("xi1", "xi2"):
            raise ValueError(f"unknown contact model {self.model!r}")

    def points(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([self.x(t), self.y(t), self.z(t)], axis=-1)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        d = [g if g is not None else _deriv(f) for f, g in
             ((self.x, self.dx), (self.y, self.dy), (self.z, self.dz))]
        return np.stack([g(t) for g in d], axis=-1)

    def closure_gap(self) -> float:
        return float(np.linalg.norm(self.points(np.array([TWO_PI]))[0] - self.points(np.array([0.0]))[0]))

    @classmethod
    def from_legendrian(cls, c: LegendrianR3Curve) -> "SpaceCurveR3":
        return cls(c.X, c.Y, c.Z, "xi2")


def legendrian_residual_r3(c, n: int = 2048) -> float:
    """``max |z' + x y'|`` (xi1) or ``max |Z' + X Y' - Y X'|`` (xi2) on ``n`` samples."""
    if isinstance(c, LegendrianR3Curve):
        c = SpaceCurveR3.from_legendrian(c)
    t = TWO_PI * np.arange(n) / n
    P, V = c.points(t), c.velocity(t)
    if c.model == "xi1":
        r = V[:, 2] + P[:, 0] * V[:, 1]
    else:
        r = V[:, 2] + P[:, 0] * V[:, 1] - P[:, 1] * V[:, 0]
    return float(np.max(np.abs(r)))


def legendrian_residual_s3(c: S3Curve, n: int = 2048) -> tuple[float, float]:
    """Suprema of the real and imaginary parts of ``conj(z1) z1' + conj(z2) z2'``."""
    r = c.residuals(n)
    return r["real"], r["imag"]


def xi1_to_xi2(p):
    """``(x, y, z) -> ((x + y)/2, (y - x)/2, z + x y / 2)`` on points of shape ``(..., 3)``."""
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.stack([(x + y) / 2, (y - x) / 2, z + x * y / 2], axis=-1)


def xi2_to_xi1(P):
    """Inverse of :func:`xi1_to_xi2`."""
    P = np.asarray(P, dtype=float)
    X, Y, Z = P[..., 0], P[..., 1], P[..., 2]
    x, y = X - Y, X + Y
    return np.stack([x, y, Z - x * y / 2], axis=-1)


def map_curve_xi1_to_xi2(c: SpaceCurveR3) -> SpaceCurveR3:
    """Push a xi1 curve forward; TrigPoly coordinates stay exact."""
    if c.model != "xi1":
        raise ValueError("expected a xi1 curve")
    if all(isinstance(f, TrigPoly) for f in (c.x, c.y, c.z)):
        return SpaceCurveR3((c.x + c.y) * 0.5, (c.y - c.x) * 0.5, c.z + c.x * c.y * 0.5, "xi2")
    dx, dy, dz = (g if g is not None else _deriv(f) for f, g in
                  ((c.x, c.dx), (c.y, c.dy), (c.z, c.dz)))
    return SpaceCurveR3(
        lambda t: (c.x(t) + c.y(t)) / 2, lambda t: (c.y(t) - c.x(t)) / 2,
        lambda t: c.z(t) + c.x(t) * c.y(t) / 2, "xi2",
        lambda t: (dx(t) + dy(t)) / 2, lambda t: (dy(t) - dx(t)) / 2,
        lambda t: dz(t) + (dx(t) * c.y(t) + c.x(t) * dy(t)) / 2)


def crossing_sign_front(slope_over: float, slope_under: float) -> bool:
    """Whether an over/under choice agrees with the xi1 front convention.

    The over strand must have the smaller slope ``dz/dy``.
    """
    if slope_over == slope_under:
        raise EqualSlopes(f"both strands have slope {slope_over}")
    return slope_over < slope_under


# ---------------------------------------------------------------------------
# Fronts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontPiece:
    """``(y, z)`` on ``[t0, t1]``, both trigonometric in the global parameter."""

    t0: float
    t1: float
    y: TrigPoly
    z: TrigPoly


@dataclass(frozen=True)
class FrontCurve:
    """Piecewise trigonometric front with declared cusp parameters."""

    pieces: tuple
    cusps: tuple = ()

    def __post_init__(self):
        ps = tuple(sorted(self.pieces, key=lambda p: p.t0))
        object.__setattr__(self, "pieces", ps)
        object.__setattr__(self, "cusps", tuple(sorted(float(c) % TWO_PI for c in self.cusps)))
        if abs(ps[0].t0) > 1e-12 or abs(ps[-1].t1 - TWO_PI) > 1e-12:
            raise ValueError("pieces must cover [0, 2*pi]")
        for a, b in zip(ps, ps[1:]):
            if abs(a.t1 - b.t0) > 1e-12:
                raise ValueError("pieces must be contiguous")

    @classmethod
    def from_trig(cls, y: TrigPoly, z: TrigPoly, n: int = 8192) -> "FrontCurve":
        """Single-piece front; cusps are located at the zeros of ``y'``."""
        dy = y.derivative()
        grid = TWO_PI * np.arange(n + 1) / n
        v = dy(grid)
        cusps = []
        for k in range(n):
            if v[k] == 0.0:
                cusps.append(float(grid[k]))
            elif v[k + 1] != 0.0 and np.sign(v[k]) != np.sign(v[k + 1]):
                cusps.append(brentq(dy, grid[k], grid[k + 1], xtol=1e-15))
        return cls((FrontPiece(0.0, TWO_PI, y, z),), tuple(cusps))

    def _eval(self, t, attr, order):
        t = np.atleast_1d(np.asarray(t, dtype=float)) % TWO_PI
        edges = np.array([p.t0 for p in self.pieces])
        k = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty_like(t)
        for i in np.unique(k):
            f = getattr(self.pieces[i], attr)
            out[k == i] = (f.derivative(order) if order else f)(t[k == i])
        return out

    def y(self, t, order=0):
        return self._eval(t, "y", order)

    def z(self, t, order=0):
        return self._eval(t, "z", order)


def cusp_piece(t0: float, t1: float, tc: float, start, end, cusp, *, y2: float = 1.0,
               z3: float = 1.0, x_cusp: float = 0.0) -> FrontPiece:
    """Trigonometric arc joining two front ends through a semicubical cusp.

    ``start`` and ``end`` are ``(y, z, y', z')`` at ``t0`` and ``t1``; ``cusp``
    is ``(y, z)`` at ``tc``. At the cusp ``y' = z' = 0``, ``y'' = y2``,
    ``z'' = -x_cusp * y2`` (so ``-z'/y'`` tends to ``x_cusp``) and ``z''' = z3``.
    """
    ya, za, dya, dza = start
    yb, zb, dyb, dzb = end
    y = trig_hermite_interpolate([(t0, 0, ya), (t0, 1, dya), (t1, 0, yb), (t1, 1, dyb),
                                  (tc, 0, cusp[0]), (tc, 1, 0.0), (tc, 2, y2)])
    z = trig_hermite_interpolate([(t0, 0, za), (t0, 1, dza), (t1, 0, zb), (t1, 1, dzb),
                                  (tc, 0, cusp[1]), (tc, 1, 0.0), (tc, 2, -x_cusp * y2), (tc, 3, z3)])
    return FrontPiece(t0, t1, y, z)


@dataclass(frozen=True)
class CuspReport:
    t: float
    dy: float
    dz: float
    d2y: float
    d2z: float
    x: float


def front_lift(f: FrontCurve, *, guard: float = 1e-3, deriv_tol: float = 1e-8,
               curvature_tol: float = 1e-8, n_check: int = 8192) -> SpaceCurveR3:
    """Legendrian xi1 curve ``(x, y, z)`` with ``x = -z'/y'``.

    Near each cusp (within ``guard`` in parameter) ``x`` is replaced by the
    quadratic through its values at the band edges and the limit
    ``-z''/y''`` at the cusp.

    Raises
    ------
    CuspIllConditioned
        If ``y'`` vanishes away from the declared cusps, or at a cusp ``z'``
        does not vanish with ``y'`` or ``y''`` vanishes too, so the limit of
        ``-z'/y'`` is undefined. ``diagnostics`` holds the derivative values.
    """
    t = TWO_PI * np.arange(n_check) / n_check
    scale = max(1.0, float(np.max(np.abs(f.y(t, 1)))), float(np.max(np.abs(f.z(t, 1)))))
    reports = []
    for c in f.cusps:
        c_arr = np.array([c])
        dy, dz = float(f.y(c_arr, 1)[0]), float(f.z(c_arr, 1)[0])
        d2y, d2z = float(f.y(c_arr, 2)[0]), float(f.z(c_arr, 2)[0])
        diag = {"t": c, "dy": dy, "dz": dz, "d2y": d2y, "d2z": d2z}
        if abs(dy) > deriv_tol * scale or abs(dz) > deriv_tol * scale or abs(d2y) < curvature_tol * scale:
            raise CuspIllConditioned(f"cusp at t={c:.6f} is ill-conditioned: y'={dy:.2e}, z'={dz:.2e}, "
                                     f"y''={d2y:.2e}", diag)
        reports.append(CuspReport(c, dy, dz, d2y, d2z, -d2z / d2y))
    cusps = np.array(f.cusps)
    if len(cusps):
        dist = np.min(np.abs((t[:, None] - cusps[None, :] + np.pi) % TWO_PI - np.pi), axis=1)
        away = dist > guard
    else:
        away = np.ones_like(t, dtype=bool)
    dyv = f.y(t, 1)[away]
    if np.any(np.abs(dyv) < deriv_tol * scale):
        k = int(np.argmin(np.abs(dyv)))
        raise CuspIllConditioned(f"vertical tangent away from declared cusps near t={t[away][k]:.6f}",
                                 {"t": float(t[away][k]), "dy": float(dyv[k])})

    def raw_x(s):
        return -f.z(s, 1) / f.y(s, 1)

    bands = []
    for r in reports:
        lo, hi = r.t - guard, r.t + guard
        xs = np.array([raw_x(np.array([lo]))[0], r.x, raw_x(np.array([hi]))[0]])
        bands.append((r.t, np.polyfit([-guard, 0.0, guard], xs, 2)))

    def x(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s)
        inside = np.zeros(s.shape, dtype=bool)
        for tc, coef in bands:
            off = (s - tc + np.pi) % TWO_PI - np.pi
            sel = np.abs(off) <= guard
            out[sel] = np.polyval(coef, off[sel])
            inside |= sel
        if np.any(~inside):
            out[~inside] = raw_x(s[~inside])
        return out

    curve = SpaceCurveR3(x, lambda s: f.y(s), lambda s: f.z(s), "xi1",
                         dy=lambda s: f.y(s, 1), dz=lambda s: f.z(s, 1))
    object.__setattr__(curve, "cusp_reports", tuple(reports))
    return curve


# ---------------------------------------------------------------------------
# S^3 and the tangent space
# ---------------------------------------------------------------------------

def tangent_space_project(c: S3Curve, n: int = 4096) -> SpaceCurveR3:
    """Radial projection of an S^3 curve to the tangent space at ``(1, 0)``.

    Returns ``(X, Y, Z) = (x2/x1, y2/x1, y1/x1)``, exact TrigPolys when the
    first numerator is a positive constant.

    Raises
    ------
    NotInRightHalfSphere
        If ``x1`` is not positive on ``n`` samples.
    """
    n1 = c.n1.sample(max(n, 4 * c.n1.degree + 1))
    if np.min(n1) <= 0:
        k = int(np.argmin(n1))
        raise NotInRightHalfSphere(f"x1 = {n1[k]:.3e} <= 0 at sample {k}")
    if c.n1.degree == 0:
        k = 1.0 / c.n1.a0
        return SpaceCurveR3(c.n3 * k, c.n4 * k, c.n2 * k, "xi2")
    d1 = c.n1.derivative()

    def ratio(p):
        dp = p.derivative()
        return (lambda t: p(t) / c.n1(t),
                lambda t: (dp(t) * c.n1(t) - p(t) * d1(t)) / c.n1(t) ** 2)

    (X, dX), (Y, dY), (Z, dZ) = ratio(c.n3), ratio(c.n4), ratio(c.n2)
    return SpaceCurveR3(X, Y, Z, "xi2", dX, dY, dZ)


__all__ = [
    "SpaceCurveR3", "legendrian_residual_r3", "legendrian_residual_s3", "xi1_to_xi2", "xi2_to_xi1",
    "map_curve_xi1_to_xi2", "crossing_sign_front", "FrontPiece", "FrontCurve", "cusp_piece",
    "front_lift", "tangent_space_project", "CuspReport",
]
