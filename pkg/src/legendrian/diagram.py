"""Planar knot diagrams, crossing signs and correction loops.

A :class:`DiagramCurve` is a closed planar trigonometric curve together with
the signed Gauss code it should realise. The height function
``Z(t) = int_0^t (Y X' - X Y')`` decides which strand passes over at each
crossing; crossings with the wrong outcome are repaired by splicing in small
loops whose enclosed area shifts ``Z`` on the offending strand. A final loop
makes ``Z`` periodic. The result is a :class:`PiecewiseCurve`, a C^1 chain of
arcs parametrised over ``[0, 2*pi]``.

Two loop realisations are available. ``"circle"`` traverses a tangent circle
``m`` times, which is exactly the textbook construction. ``"spiral"`` replaces
the ``m`` coincident turns by nested windings that exit radially and rejoin the
diagram slightly further along. Its extra crossings are all Reidemeister-I
kinks, so planar projections of Fourier approximations stay generic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from . import knots
from .errors import (
    NoRoomForCircle, SeedGridTooCoarse, SelfIntersection, SingularDiagram, TangentialCrossing, ZTie,
)
from .knots import Incidence
from .trigpoly import TWO_PI, AreaIntegral, TrigPoly, area_integral

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _rot90(v):
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


# ---------------------------------------------------------------------------
# Planar curves and crossings
# ---------------------------------------------------------------------------

class TrigCurve2D:
    """Closed planar curve ``(X(t), Y(t))`` with trigonometric coordinates."""

    def __init__(self, X: TrigPoly, Y: TrigPoly):
        self.X, self.Y = X, Y
        self.dX, self.dY = X.derivative(), Y.derivative()

    @property
    def degree(self) -> int:
        return max(self.X.degree, self.Y.degree, 1)

    def points(self, t):
        return np.stack([self.X(t), self.Y(t)], axis=-1)

    def velocity(self, t):
        return np.stack([self.dX(t), self.dY(t)], axis=-1)

    def jet(self, t):
        """Points and velocities at ``t`` from one shared cosine/sine table."""
        t = np.asarray(t, dtype=float).ravel()
        m = self.degree
        _, xc, xs = self.X.coefficients(m)
        _, yc, ys = self.Y.coefficients(m)
        j = np.arange(1, m + 1, dtype=float)
        # columns: X, Y, X', Y'
        Wc = np.stack([xc, yc, j * xs, j * ys], axis=1)
        Ws = np.stack([xs, ys, -j * xc, -j * yc], axis=1)
        out = np.empty((t.size, 4))
        step = max(1, 2_000_000 // m)
        for lo in range(0, t.size, step):
            ang = np.outer(t[lo:lo + step], j)
            out[lo:lo + step] = np.cos(ang) @ Wc + np.sin(ang) @ Ws
        out[:, 0] += self.X.a0
        out[:, 1] += self.Y.a0
        return out[:, :2], out[:, 2:]

    def grid(self, n: int):
        return np.stack([self.X.sample(n), self.Y.sample(n)], axis=-1)

    def default_samples(self) -> int:
        return max(4096, 24 * self.degree)


@dataclass(frozen=True)
class Crossing:
    """Transverse double point ``P(t_lo) = P(t_hi)`` with ``t_lo < t_hi``."""

    t_lo: float
    t_hi: float
    position: tuple
    tangent_lo: tuple
    tangent_hi: tuple
    desired_over: str | None = None  # "lo", "hi" or None when unconstrained

    @property
    def angle(self) -> float:
        a, b = np.asarray(self.tangent_lo), np.asarray(self.tangent_hi)
        return float(abs(math.asin(np.clip(_cross(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)), -1, 1))))


def _segment_hits(P: np.ndarray):
    """Index pairs ``(i, j, a, b)`` of intersecting segments of a closed polyline."""
    n = len(P)
    Q = np.roll(P, -1, axis=0)
    d = Q - P
    mid = 0.5 * (P + Q)
    reach = float(np.max(np.linalg.norm(d, axis=1)))
    pairs = cKDTree(mid).query_pairs(reach * 1.0001, output_type="ndarray")
    if len(pairs) == 0:
        return np.empty((0, 2), int), np.empty(0), np.empty(0)
    i, j = pairs[:, 0], pairs[:, 1]
    gap = np.abs(i - j)
    keep = (gap > 1) & (gap < n - 1)
    i, j = i[keep], j[keep]
    di, dj = d[i], d[j]
    den = _cross(di, dj)
    w = P[j] - P[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = _cross(w, dj) / den
        b = _cross(w, di) / den
    # closed, slightly widened intervals: a crossing on a shared vertex must not
    # slip between neighbouring segments by rounding; duplicates merge later
    eps = 1e-9
    hit = (den != 0) & (a >= -eps) & (a <= 1 + eps) & (b >= -eps) & (b <= 1 + eps)
    return np.stack([i[hit], j[hit]], axis=1), a[hit], b[hit]


def find_double_points(curve, n_samples: int | None = None, *, tol: float = 1e-11,
                       tangent_tol: float = 1e-7, max_iter: int = 60, dedup: float = 1e-6,
                       period: float = TWO_PI) -> list[Crossing]:
    """All transverse self-intersections of a closed planar curve.

    Candidates come from exact segment intersection of a dense polyline
    (KD-tree pruned), then each is refined by damped Newton on
    ``P(t) - P(s) = 0``.
    """
    n = int(n_samples or curve.default_samples())
    P = curve.grid(n)
    pairs, a, b = _segment_hits(P)
    if len(pairs) == 0:
        return []
    h = period / n
    t = (pairs[:, 0] + a) * h
    s = (pairs[:, 1] + b) * h
    scale = max(1.0, float(np.max(np.abs(P))))
    active = np.ones(len(t), dtype=bool)
    for _ in range(max_iter):
        ta, sa = t[active], s[active]
        (Pt, Vt), (Ps, Vs) = _jet(curve, ta), _jet(curve, sa)
        F = Pt - Ps
        det = -_cross(Vt, Vs)  # det [Vt, -Vs]
        ok = np.linalg.norm(F, axis=1) <= tol * scale
        if ok.all():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            dt = (F[:, 0] * -Vs[:, 1] + Vs[:, 0] * F[:, 1]) / det
            ds = (Vt[:, 0] * F[:, 1] - Vt[:, 1] * F[:, 0]) / det
        # cap steps to a few polyline spacings to keep Newton local
        cap = 4 * h
        lim = np.maximum(1.0, np.maximum(np.abs(dt), np.abs(ds)) / cap)
        dt, ds = np.where(ok, 0, dt / lim), np.where(ok, 0, ds / lim)
        t[active], s[active] = ta - np.nan_to_num(dt), sa - np.nan_to_num(ds)
        idx = np.flatnonzero(active)
        active[idx[ok]] = False
    (Pt, Vt), (Ps, Vs) = _jet(curve, t), _jet(curve, s)
    res = np.linalg.norm(Pt - Ps, axis=1)
    sin_angle = np.abs(_cross(Vt, Vs)) / (np.linalg.norm(Vt, axis=1) * np.linalg.norm(Vs, axis=1))
    bad = res > 1e3 * tol * scale
    if np.any(bad & (sin_angle < 1e-3)) or np.any(sin_angle[~bad] < tangent_tol):
        k = int(np.argmin(sin_angle))
        raise TangentialCrossing(f"near-parallel tangents at t={t[k] % period:.6f}, "
                                 f"s={s[k] % period:.6f} (sin angle {sin_angle[k]:.2e})")
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise SeedGridTooCoarse(f"Newton failed near t={t[k] % period:.6f}, residual {res[k]:.2e}")
    t, s = t % period, s % period
    lo, hi = np.minimum(t, s), np.maximum(t, s)
    order = np.lexsort((hi, lo))
    kept: list[int] = []
    for k in order:
        if hi[k] - lo[k] < dedup:
            continue
        if any(_pdist(lo[j], lo[k], period) < dedup and _pdist(hi[j], hi[k], period) < dedup
               for j in kept[-8:]):
            continue
        kept.append(int(k))
    kept_lo, kept_hi = lo[kept], hi[kept]
    (P_lo, V_lo), (_, V_hi) = _jet(curve, kept_lo), _jet(curve, kept_hi)
    return [Crossing(float(a), float(b), tuple(p), tuple(u), tuple(v))
            for a, b, p, u, v in zip(kept_lo, kept_hi, P_lo, V_lo, V_hi)]


def _jet(curve, t):
    if hasattr(curve, "jet"):
        return curve.jet(t)
    return curve.points(t), curve.velocity(t)


def _pdist(a, b, period):
    d = abs(a - b) % period
    return min(d, period - d)


# ---------------------------------------------------------------------------
# Diagram curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagramCurve:
    """Planar trigonometric diagram with an optional target signed Gauss code."""

    X: TrigPoly
    Y: TrigPoly
    target: tuple = ()
    name: str = ""

    @property
    def curve(self) -> TrigCurve2D:
        return TrigCurve2D(self.X, self.Y)

    def Z(self) -> AreaIntegral:
        return area_integral(self.X, self.Y)

    def point(self, t):
        return self.curve.points(t)

    def velocity(self, t):
        return self.curve.velocity(t)

    def check_regular(self, n: int = 4096, tol: float = 1e-8) -> float:
        """Minimum planar speed; raises :class:`SingularDiagram` if it vanishes."""
        sp2 = self.X.derivative() ** 2 + self.Y.derivative() ** 2
        v = sp2.sample(n)
        k = int(np.argmin(v))
        # refine the minimum of |P'|^2 locally
        from scipy.optimize import minimize_scalar
        h = TWO_PI / n
        r = minimize_scalar(sp2, bounds=(k * h - h, k * h + h), method="bounded",
                            options={"xatol": 1e-12})
        vmin = min(float(v[k]), float(r.fun))
        if vmin <= tol:
            raise SingularDiagram(f"planar velocity vanishes near t={r.x % TWO_PI:.6f}")
        return math.sqrt(vmin)

    def to_dict(self) -> dict:
        return {"name": self.name, "X": self.X.to_dict(), "Y": self.Y.to_dict(),
                "gauss_code": knots.format_code(self.target)}

    @classmethod
    def from_dict(cls, d: dict) -> "DiagramCurve":
        code = knots.parse_code(d.get("gauss_code", "") or "")
        return cls(TrigPoly.from_dict(d["X"]), TrigPoly.from_dict(d["Y"]), tuple(code),
                   d.get("name", ""))


def detect_crossings(d: DiagramCurve, n_samples: int | None = None, **kw) -> list[Crossing]:
    """Double points of the diagram, ordered by ``t_lo``.

    When the diagram carries a target code, each crossing's ``desired_over``
    is read off by aligning incidences in traversal order.
    """
    d.check_regular()
    found = find_double_points(d.curve, n_samples, **kw)
    if not d.target:
        return found
    target = list(d.target)
    if len(target) != 2 * len(found):
        raise knots.MalformedCode(f"target code has {len(target) // 2} crossings, "
                                  f"diagram has {len(found)}")
    inc = sorted([(c.t_lo, i, "lo") for i, c in enumerate(found)]
                 + [(c.t_hi, i, "hi") for i, c in enumerate(found)])
    desired: dict[int, str] = {}
    partner: dict[int, int] = {}
    for (_, i, which), tgt in zip(inc, target):
        if partner.setdefault(i, tgt.crossing) != tgt.crossing:
            raise knots.MalformedCode("target code does not match the diagram's crossing pattern")
        if tgt.over:
            desired[i] = which
    return [Crossing(c.t_lo, c.t_hi, c.position, c.tangent_lo, c.tangent_hi, desired[i])
            for i, c in enumerate(found)]


def crossing_sign(over_tangent, under_tangent) -> int:
    """+1 when ``over x under > 0``."""
    return 1 if _cross(np.asarray(over_tangent), np.asarray(under_tangent)) > 0 else -1


def code_from_crossings(crossings: Sequence[Crossing], z_lo: Sequence[float],
                        z_hi: Sequence[float], tie_tol: float = 1e-9) -> list[Incidence]:
    """Signed Gauss code from crossings and the heights of both strands."""
    events = []
    for k, (c, zl, zh) in enumerate(zip(crossings, z_lo, z_hi)):
        if abs(zl - zh) < tie_tol:
            raise ZTie(f"heights tie at crossing t=({c.t_lo:.6f}, {c.t_hi:.6f})")
        lo_over = zl > zh
        over_t, under_t = (c.tangent_lo, c.tangent_hi) if lo_over else (c.tangent_hi, c.tangent_lo)
        sgn = crossing_sign(over_t, under_t)
        events.append((c.t_lo, Incidence(k + 1, lo_over, sgn)))
        events.append((c.t_hi, Incidence(k + 1, not lo_over, sgn)))
    events.sort(key=lambda e: e[0])
    return [e[1] for e in events]


def induced_code(d: DiagramCurve, crossings=None, Z=None) -> list[Incidence]:
    """Signed Gauss code induced by the diagram's own height function."""
    crossings = detect_crossings(DiagramCurve(d.X, d.Y)) if crossings is None else crossings
    Z = d.Z() if Z is None else Z
    return code_from_crossings(crossings, [Z(c.t_lo) for c in crossings],
                               [Z(c.t_hi) for c in crossings])


@dataclass(frozen=True)
class SignCheck:
    crossing: Crossing
    z_lo: float
    z_hi: float
    correct: bool


def classify_signs(d: DiagramCurve, Z: AreaIntegral | None = None, crossings=None,
                   tie_tol: float = 1e-9) -> list[SignCheck]:
    """Compare the height order at each crossing with the target."""
    Z = d.Z() if Z is None else Z
    crossings = detect_crossings(d) if crossings is None else crossings
    out = []
    for c in crossings:
        zl, zh = float(Z(c.t_lo)), float(Z(c.t_hi))
        if abs(zl - zh) < tie_tol:
            raise ZTie(f"|Z(t_lo) - Z(t_hi)| < {tie_tol} at ({c.t_lo:.6f}, {c.t_hi:.6f})")
        got = "lo" if zl > zh else "hi"
        out.append(SignCheck(c, zl, zh, c.desired_over is None or got == c.desired_over))
    return out


# ---------------------------------------------------------------------------
# Planning correction loops
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircleInsertion:
    """A correction loop attached tangentially at ``D(tau)``.

    ``dz`` is the signed change of the height function the loop must produce;
    for a circle traversed ``traversals`` times it equals
    ``-2*pi*r^2*m`` (counter-clockwise) or ``+2*pi*r^2*m`` (clockwise).
    """

    tau: float
    center: tuple
    radius: float
    orientation: str  # "ccw" | "cw"
    traversals: int
    side: str  # "left" | "right"
    dz: float
    role: str = "wind"  # "wind" | "unwind" | "close"
    limit: float = TWO_PI  # the loop must rejoin the diagram before this parameter
    pair: int = -1


def side_normal(d: DiagramCurve, tau: float, side: str) -> np.ndarray:
    v = d.velocity(np.array([tau]))[0]
    n = _rot90(v / np.linalg.norm(v))
    return n if side == "left" else -n


def tangent_disc_radius(d: DiagramCurve, tau: float, side: str, n: int = 8192,
                        window: float = 1e-3) -> float:
    """Largest disc tangent at ``D(tau)`` on ``side`` free of other diagram points."""
    P = d.point(np.array([tau]))[0]
    N = side_normal(d, tau, side)
    t = TWO_PI * np.arange(n) / n
    Q = d.curve.grid(n) - P
    far = np.array([_pdist(x, tau, TWO_PI) > window for x in t])
    q, tt = Q[far], t[far]
    h = q @ N
    pos = h > 1e-14
    if not np.any(pos):
        return math.inf
    r = np.einsum("ij,ij->i", q[pos], q[pos]) / (2 * h[pos])
    # refine near the discrete minimiser, the bound is a smooth function of t
    k = int(np.argmin(r))
    t0 = tt[pos][k]
    f = lambda s: _disc_bound(d, P, N, s)
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(f, bounds=(t0 - TWO_PI / n, t0 + TWO_PI / n), method="bounded")
    return float(min(r[k], res.fun))


def _disc_bound(d, P, N, s):
    q = d.point(np.array([s]))[0] - P
    h = q @ N
    return float(q @ q / (2 * h)) if h > 1e-14 else math.inf


def locate_side(d: DiagramCurve, tau: float, center) -> str:
    """``"left"`` if the center lies to the left of the tangent at ``tau``."""
    v = d.velocity(np.array([tau]))[0]
    P = d.point(np.array([tau]))[0]
    return "left" if _cross(v, np.asarray(center) - P) > 0 else "right"


def _loop_at(d, tau, side, radius, m, dz, role, limit, pair=-1):
    N = side_normal(d, tau, side)
    P = d.point(np.array([tau]))[0]
    center = P + radius * N
    return CircleInsertion(float(tau), tuple(center), float(radius),
                           "ccw" if side == "left" else "cw", int(m), side, float(dz), role,
                           float(limit), pair)


def crossing_parameters(crossings: Sequence[Crossing]) -> np.ndarray:
    return np.sort(np.array([c.t_lo for c in crossings] + [c.t_hi for c in crossings]))


def radius_bound(d: DiagramCurve, tau: float, side: str, r_cap: float = 0.25,
                 factor: float = 0.8, r_min: float = 1e-3) -> float:
    r = min(r_cap, factor * tangent_disc_radius(d, tau, side))
    if r < r_min:
        raise NoRoomForCircle(f"no room for a loop at tau={tau:.6f} on the {side}")
    return r


def plan_insertions(d: DiagramCurve, Z: AreaIntegral | None = None, wrong=None, *,
                    r_cap: float = 0.25, taus: dict | None = None,
                    crossings=None) -> list[CircleInsertion]:
    """Winding/unwinding loop pairs for every wrongly signed crossing.

    For a wrong crossing at ``t_lo < t_hi`` the winding loop sits before
    ``t_lo`` and the unwinding loop right after it, so only the strand through
    ``t_lo`` is shifted. ``taus`` may map a crossing index to an explicit
    ``(tau, tau_prime)``.
    """
    Z = d.Z() if Z is None else Z
    checks = classify_signs(d, Z, crossings)
    if wrong is None:
        wrong = [s.crossing for s in checks if not s.correct]
    if not wrong:
        return []
    params = crossing_parameters([s.crossing for s in checks])
    plan = []
    for k, c in enumerate(wrong):
        i = int(np.searchsorted(params, c.t_lo - 1e-12))
        prev = params[i - 1] if i > 0 else params[-1] - TWO_PI
        nxt = params[i + 1] if i + 1 < len(params) else params[0] + TWO_PI
        if taus and k in taus:
            tau, tau2 = taus[k]
        else:
            tau, tau2 = 0.5 * (prev + c.t_lo), 0.5 * (c.t_lo + nxt)
        want_lo_higher = c.desired_over == "lo"
        gap = abs(float(Z(c.t_lo)) - float(Z(c.t_hi)))
        s1, s2 = ("right", "left") if want_lo_higher else ("left", "right")
        r = min(radius_bound(d, tau % TWO_PI, s1, r_cap), radius_bound(d, tau2 % TWO_PI, s2, r_cap))
        m = int(math.floor(gap / (TWO_PI * r * r))) + 1
        dz = (1 if want_lo_higher else -1) * m * TWO_PI * r * r
        plan.append(_loop_at(d, tau % TWO_PI, s1, r, m, dz, "wind", c.t_lo, pair=k))
        plan.append(_loop_at(d, tau2 % TWO_PI, s2, r, m, -dz, "unwind", nxt, pair=k))
    return plan


def closure_radius(dz: float, r_max: float) -> tuple[int, float]:
    """``m = ceil(|dz| / (2 pi r_max^2))`` and the radius making ``|dz| / (2 pi r^2) = m``."""
    m = max(1, int(math.ceil(abs(dz) / (TWO_PI * r_max * r_max) - 1e-12)))
    return m, math.sqrt(abs(dz) / (TWO_PI * m))


def plan_closure(d: DiagramCurve, Z: AreaIntegral | None = None, *, r_cap: float = 0.25,
                 crossings=None, tau: float | None = None, tol: float = 1e-12) -> CircleInsertion | None:
    """Loop restoring periodicity of ``Z``, or ``None`` if already periodic."""
    Z = d.Z() if Z is None else Z
    dz = -Z.at_period()  # Z(0) - Z(2 pi)
    if abs(dz) <= tol:
        return None
    crossings = detect_crossings(DiagramCurve(d.X, d.Y)) if crossings is None else crossings
    params = crossing_parameters(crossings)
    last = params[-1] if len(params) else 0.0
    if tau is None:
        tau = 0.5 * (last + TWO_PI) if len(params) else math.pi
    # the loop may rejoin the diagram after wrapping past 2*pi
    limit = params[0] + TWO_PI if len(params) else tau + math.pi
    side = "right" if dz > 0 else "left"
    r_max = radius_bound(d, tau, side, r_cap)
    m, r = closure_radius(dz, r_max)
    return _loop_at(d, tau, side, r, m, dz, "close", limit)


# ---------------------------------------------------------------------------
# Arcs of the assembled curve
# ---------------------------------------------------------------------------

class Arc:
    """Piece of a planar path parametrised by local time ``u in [0, duration]``."""

    duration: float = 0.0
    kind: str = "arc"

    def points(self, u):
        raise NotImplementedError

    def velocity(self, u):
        raise NotImplementedError

    def dz(self, u0: float = 0.0, u1: float | None = None, panels: int | None = None) -> float:
        """``int (Y X' - X Y') du`` over ``[u0, u1]`` by Gauss-Legendre panels."""
        u1 = self.duration if u1 is None else u1
        if u1 <= u0:
            return 0.0
        k = panels or self.panels()
        edges = np.linspace(u0, u1, k + 1)
        half = 0.5 * np.diff(edges)
        u = (edges[:-1, None] + half[:, None] * (_GL_X[None, :] + 1)).ravel()
        w = (half[:, None] * _GL_W[None, :]).ravel()
        p, v = self.points(u), self.velocity(u)
        return float(np.sum(w * (p[:, 1] * v[:, 0] - p[:, 0] * v[:, 1])))

    def panels(self) -> int:
        return 4

    def start(self):
        return self.points(np.array([0.0]))[0]

    def end(self):
        return self.points(np.array([self.duration]))[0]


class DiagramArc(Arc):
    kind = "diagram"

    def __init__(self, d: DiagramCurve, t0: float, t1: float, Z: AreaIntegral):
        self.d, self.t0, self.t1, self._Z = d, float(t0), float(t1), Z
        self.duration = self.t1 - self.t0

    def points(self, u):
        return self.d.point(self.t0 + np.asarray(u))

    def velocity(self, u):
        return self.d.velocity(self.t0 + np.asarray(u))

    def dz(self, u0=0.0, u1=None, panels=None):
        u1 = self.duration if u1 is None else u1
        return float(self._Z(self.t0 + u1) - self._Z(self.t0 + u0))


class CircleArc(Arc):
    """Arc of a circle at constant angular speed ``direction * omega``."""

    kind = "circle"

    def __init__(self, center, radius, phi0, direction, omega, angle):
        self.c = np.asarray(center, dtype=float)
        self.r, self.phi0, self.dir, self.omega = float(radius), float(phi0), int(direction), float(omega)
        self.angle = float(angle)
        self.duration = self.angle / self.omega

    def _phi(self, u):
        return self.phi0 + self.dir * self.omega * np.asarray(u, dtype=float)

    def points(self, u):
        ph = self._phi(u)
        return self.c + self.r * np.stack([np.cos(ph), np.sin(ph)], axis=-1)

    def velocity(self, u):
        ph = self._phi(u)
        k = self.dir * self.omega * self.r
        return k * np.stack([-np.sin(ph), np.cos(ph)], axis=-1)

    def dz(self, u0=0.0, u1=None, panels=None):
        u1 = self.duration if u1 is None else u1
        # Y X' - X Y' = -dir*omega*r*(r + c . e(phi)) with e the unit radius vector
        a, b = self._phi(u0), self._phi(u1)
        cx, cy = self.c
        lin = -self.dir * self.omega * self.r * self.r * (u1 - u0)
        ex = -self.r * (cx * (np.sin(b) - np.sin(a)) - cy * (np.cos(b) - np.cos(a)))
        return float(lin + ex)


class FrameArc(Arc):
    """Arc defined in a local orthonormal frame ``origin + u*e1 + v*e2``."""

    def __init__(self, origin, e1, e2):
        self.o = np.asarray(origin, dtype=float)
        self.B = np.stack([np.asarray(e1, float), np.asarray(e2, float)])  # rows e1, e2

    def to_world(self, q):
        return self.o + q @ self.B

    def vec_to_world(self, v):
        return v @ self.B


class SpiralArc(FrameArc):
    """Inward spiral ``C + R(phi) (sin phi, -cos phi)`` in the local frame.

    ``C = (0, R0)`` and ``R(phi) = R0 - g (phi - sin phi) / (2 pi)``, so the
    spiral leaves the origin tangent to ``e1`` and each full turn moves ``g``
    inward. Traversed at constant angular speed ``omega``.
    """

    kind = "spiral"

    def __init__(self, origin, e1, e2, R0, g, omega, Phi):
        super().__init__(origin, e1, e2)
        self.R0, self.g, self.omega, self.Phi = float(R0), float(g), float(omega), float(Phi)
        self.duration = self.Phi / self.omega

    def R(self, phi):
        return self.R0 - self.g * (phi - np.sin(phi)) / TWO_PI

    def dR(self, phi):
        return -self.g * (1 - np.cos(phi)) / TWO_PI

    def local(self, phi):
        R = self.R(phi)
        return np.stack([R * np.sin(phi), self.R0 - R * np.cos(phi)], axis=-1)

    def local_d(self, phi):
        R, dR = self.R(phi), self.dR(phi)
        return np.stack([dR * np.sin(phi) + R * np.cos(phi), -dR * np.cos(phi) + R * np.sin(phi)], axis=-1)

    def points(self, u):
        return self.to_world(self.local(self.omega * np.asarray(u, dtype=float)))

    def velocity(self, u):
        return self.omega * self.vec_to_world(self.local_d(self.omega * np.asarray(u, dtype=float)))

    def panels(self):
        return max(8, int(math.ceil(4 * self.Phi / TWO_PI)))


class LineArc(Arc):
    kind = "line"

    def __init__(self, p0, direction, speed, length):
        self.p0 = np.asarray(p0, float)
        self.v = np.asarray(direction, float) / np.linalg.norm(direction) * float(speed)
        self.duration = float(length) / float(speed)

    def points(self, u):
        return self.p0 + np.asarray(u, float)[..., None] * self.v

    def velocity(self, u):
        return np.broadcast_to(self.v, np.shape(u) + (2,)).copy()


class HermiteArc(Arc):
    """Cubic Hermite segment with end velocities ``v0`` and ``v1``."""

    kind = "hermite"

    def __init__(self, p0, v0, p1, v1, duration):
        self.p0, self.p1 = np.asarray(p0, float), np.asarray(p1, float)
        self.m0 = np.asarray(v0, float) * duration
        self.m1 = np.asarray(v1, float) * duration
        self.duration = float(duration)

    def points(self, u):
        s = np.asarray(u, float)[..., None] / self.duration
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return h00 * self.p0 + h10 * self.m0 + h01 * self.p1 + h11 * self.m1

    def velocity(self, u):
        s = np.asarray(u, float)[..., None] / self.duration
        d00 = 6 * s ** 2 - 6 * s
        d10 = 3 * s ** 2 - 4 * s + 1
        d01 = -6 * s ** 2 + 6 * s
        d11 = 3 * s ** 2 - 2 * s
        return (d00 * self.p0 + d10 * self.m0 + d01 * self.p1 + d11 * self.m1) / self.duration


# ---------------------------------------------------------------------------
# Realising loops
# ---------------------------------------------------------------------------

@dataclass
class LoopGeometry:
    arcs: list
    resume: float  # diagram parameter at which the diagram continues
    dz: float  # realised height offset (loop minus any replaced diagram arc)
    windings: int
    info: dict = field(default_factory=dict)


def circle_loop(d: DiagramCurve, ins: CircleInsertion, speed_match: bool = True) -> LoopGeometry:
    """``m`` traversals of the tangent circle, leaving and rejoining at ``D(tau)``."""
    P = d.point(np.array([ins.tau]))[0]
    c = np.asarray(ins.center)
    phi0 = math.atan2(P[1] - c[1], P[0] - c[0])
    direction = 1 if ins.orientation == "ccw" else -1
    speed = float(np.linalg.norm(d.velocity(np.array([ins.tau]))[0]))
    omega = speed / ins.radius if speed_match else 1.0
    arc = CircleArc(c, ins.radius, phi0, direction, omega, TWO_PI * ins.traversals)
    return LoopGeometry([arc], ins.tau, arc.dz(), ins.traversals)


class _SpiralBuilder:
    """Spiral loop geometry at one attachment point, parametrised by ``(w, f)``.

    ``w`` is the number of full windings and ``f`` the ratio of the inner to
    the outer radius.
    """

    exit_angle = math.pi / 4
    turn_frac = 0.4
    out_margin = 0.25

    def __init__(self, d: DiagramCurve, Z: AreaIntegral, ins: CircleInsertion, R0: float):
        self.d, self.Z, self.ins, self.R0 = d, Z, ins, float(R0)
        tau = ins.tau
        self.P = d.point(np.array([tau]))[0]
        v = d.velocity(np.array([tau]))[0]
        self.speed = float(np.linalg.norm(v))
        self.e1 = v / self.speed
        self.e2 = side_normal(d, tau, ins.side)
        self.tau_b = self._rejoin_parameter()

    def _rejoin_parameter(self):
        # first parameter after tau whose point is 1.7 R0 away, capped before the limit
        d, tau = self.d, self.ins.tau
        limit = self.ins.limit if self.ins.limit > tau else self.ins.limit + TWO_PI
        ts = np.linspace(tau, tau + 0.95 * (limit - tau), 2000)
        dist = np.linalg.norm(d.point(ts % TWO_PI) - self.P, axis=1)
        hit = np.flatnonzero(dist >= 1.7 * self.R0)
        if not hit.size:
            raise NoRoomForCircle(f"diagram arc after tau={tau:.6f} is too short for a loop")
        k = int(hit[0])
        return float(brentq(lambda s: np.linalg.norm(d.point(np.array([s % TWO_PI]))[0] - self.P)
                            - 1.7 * self.R0, ts[k - 1], ts[k]))

    def build(self, w: int, f: float) -> LoopGeometry:
        R0 = self.R0
        Phi = TWO_PI * w + self.exit_angle
        # R(Phi) = f * R0
        g = (1 - f) * R0 * TWO_PI / (Phi - math.sin(Phi))
        omega = self.speed / R0
        sp = SpiralArc(self.P, self.e1, self.e2, R0, g, omega, Phi)
        Se = sp.end()
        ve = sp.velocity(np.array([sp.duration]))[0]
        vs = float(np.linalg.norm(ve))
        h0 = ve / vs
        rho = self.turn_frac * f * R0
        # counter-clockwise in the local frame; left of travel is rot90 in local
        # coordinates, which maps to +/- rot90 in the world depending on the side
        e_left_local = _rot90(h0 @ self.B_inv()) @ self._B()
        center = Se + rho * e_left_local
        C_world = self.P + R0 * self.e2
        e_r = (Se - C_world) / np.linalg.norm(Se - C_world)
        a0 = math.atan2(*(Se - center)[::-1])
        orient = 1 if self.ins.side == "left" else -1
        # sweep until heading matches the outward radial direction
        hs = math.atan2(h0[1], h0[0])
        he = math.atan2(e_r[1], e_r[0])
        sweep = ((he - hs) * orient) % TWO_PI
        turn = CircleArc(center, rho, a0, orient, vs / rho, sweep)
        Q = turn.end()
        hq = turn.velocity(np.array([turn.duration]))[0]
        hq = hq / np.linalg.norm(hq)
        # extend the exit line until it clears the outer winding
        rel = Q - C_world
        target = R0 * (1 + self.out_margin)
        bq = rel @ hq
        L = -bq + math.sqrt(bq * bq - (rel @ rel - target * target))
        line = LineArc(Q, hq, vs, L)
        E = line.end()
        Pb = self.d.point(np.array([self.tau_b % TWO_PI]))[0]
        vb = self.d.velocity(np.array([self.tau_b % TWO_PI]))[0]
        chord = float(np.linalg.norm(Pb - E))
        T = chord / (0.5 * (vs + np.linalg.norm(vb)))
        herm = HermiteArc(E, hq * vs, Pb, vb, T)
        arcs = [sp, turn, line, herm]
        dz = sum(a.dz() for a in arcs) - (self.Z(self.tau_b) - self.Z(self.ins.tau))
        return LoopGeometry(arcs, self.tau_b, float(dz), w, {"gap": g, "inner_ratio": f})

    def _B(self):
        return np.stack([self.e1, self.e2])

    def B_inv(self):
        return np.linalg.inv(self._B())


def spiral_loop(d: DiagramCurve, Z: AreaIntegral, ins: CircleInsertion, target: float,
                f_range: tuple = (0.2, 0.45)) -> LoopGeometry:
    """Spiral loop whose height offset equals ``target`` (sign included).

    The winding count is the smallest one that reaches ``|target|`` with inner
    radius ratio at most ``f_range[1]``; the ratio is then tuned by root
    finding. Offsets too small for a single winding shrink the outer radius.
    """
    flo, fhi = f_range
    R0 = ins.radius
    for _ in range(60):
        b = _SpiralBuilder(d, Z, ins, R0)
        reach = lambda w, f: math.copysign(1.0, target) * b.build(w, f).dz - abs(target)
        est = abs(target) / (TWO_PI * R0 ** 2 * (1 + fhi + fhi * fhi) / 3)
        w = max(1, int(est))
        while reach(w, fhi) < 0:
            w += 1
        while w > 1 and reach(w - 1, fhi) >= 0:
            w -= 1
        if reach(w, flo) <= 0:
            return _tune(b, w, target, flo, fhi)
        if w > 1:
            return _tune(b, w, target, 0.5 * flo, fhi)
        R0 *= 0.7
    raise NoRoomForCircle(f"height offset {target:.3e} too small for a loop at tau={ins.tau:.6f}")


def _tune(b: _SpiralBuilder, w: int, target: float, flo: float, fhi: float) -> LoopGeometry:
    f = brentq(lambda f: b.build(w, f).dz - target, flo, fhi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return b.build(w, f)


# ---------------------------------------------------------------------------
# Piecewise curve
# ---------------------------------------------------------------------------

class PiecewiseCurve:
    """C^1 chain of arcs reparametrised linearly onto ``[0, 2*pi]``."""

    def __init__(self, arcs: list, source: DiagramCurve | None = None, loops=None):
        self.arcs = list(arcs)
        self.source = source
        self.loops = loops or []
        dur = np.array([a.duration for a in self.arcs])
        self.starts = np.concatenate([[0.0], np.cumsum(dur)])
        self.total = float(self.starts[-1])
        self._offsets = None

    # parameter bookkeeping
    @property
    def scale(self) -> float:
        """Native time per unit of the rescaled parameter."""
        return self.total / TWO_PI

    def _locate(self, t):
        tau = (np.asarray(t, dtype=float) % TWO_PI) * self.scale
        k = np.clip(np.searchsorted(self.starts, tau, side="right") - 1, 0, len(self.arcs) - 1)
        return k, tau - self.starts[k]

    def points(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k, u = self._locate(t)
        out = np.empty(t.shape + (2,))
        for i in np.unique(k):
            sel = k == i
            out[sel] = self.arcs[i].points(u[sel])
        return out

    def velocity(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k, u = self._locate(t)
        out = np.empty(t.shape + (2,))
        for i in np.unique(k):
            sel = k == i
            out[sel] = self.arcs[i].velocity(u[sel])
        return out * self.scale

    def grid(self, n: int):
        return self.points(TWO_PI * np.arange(n) / n)

    def default_samples(self) -> int:
        return 65536

    def arc_offsets(self):
        if self._offsets is None:
            self._offsets = np.concatenate([[0.0], np.cumsum([a.dz() for a in self.arcs])])
        return self._offsets

    def z(self, t):
        """Height function ``Z~(t)`` of the piecewise curve, ``Z~(0) = 0``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k, u = self._locate(t)
        off = self.arc_offsets()
        return np.array([off[i] + self.arcs[i].dz(0.0, ui) for i, ui in zip(k, u)])

    def z_period(self) -> float:
        return float(self.arc_offsets()[-1])

    def diagram_time(self, s: float) -> float | None:
        """Rescaled parameter at which the source diagram passes ``D(s)``."""
        for i, a in enumerate(self.arcs):
            for x in (s, s + TWO_PI):
                if isinstance(a, DiagramArc) and a.t0 - 1e-12 <= x <= a.t1 + 1e-12:
                    return float((self.starts[i] + x - a.t0) / self.scale)
        return None

    def lift(self, n: int):
        """Samples of ``(X~, Y~, Z~)`` on a uniform grid."""
        t = TWO_PI * np.arange(n) / n
        P = self.points(t)
        V = self.velocity(t)
        w = P[:, 1] * V[:, 0] - P[:, 0] * V[:, 1]
        # trapezoid plus exact arc offsets keeps drift bounded
        k, u = self._locate(t)
        Z = np.empty(n)
        off = self.arc_offsets()
        for i in np.unique(k):
            sel = np.flatnonzero(k == i)
            a = self.arcs[i]
            uu = u[sel]
            if isinstance(a, (DiagramArc, CircleArc)):
                Z[sel] = off[i] + np.array([a.dz(0.0, x) for x in uu])
            else:
                ww = w[sel] / self.scale
                edges = np.concatenate([[0.0], uu])
                vals = np.concatenate([[_arc_rate(a, 0.0)], ww])
                Z[sel] = off[i] + np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(edges))
        return np.column_stack([P, Z])


def _arc_rate(a: Arc, u: float) -> float:
    p, v = a.points(np.array([u]))[0], a.velocity(np.array([u]))[0]
    return float(p[1] * v[0] - p[0] * v[1])


def assemble(d: DiagramCurve, insertions: Sequence[CircleInsertion], *, style: str = "spiral",
             speed_match: bool = True, Z: AreaIntegral | None = None, verify: bool = True,
             embed_samples: int = 20000, embed_eps: float = 1e-6, embed_delta: float = 1e-3,
             f_range=(0.2, 0.45)) -> PiecewiseCurve:
    """Splice correction loops into the diagram.

    Parameters
    ----------
    style : {"spiral", "circle"}
        Loop realisation; see the module docstring.
    speed_match : bool
        For ``"circle"``: traverse each circle at the diagram's speed at the
        attachment point (C^1 parametrisation). With ``False`` circles run at
        unit angular speed.
    verify : bool
        Check periodicity of the height function, crossing signs of the
        original crossings and embeddedness of the spatial lift.
    """
    Z = d.Z() if Z is None else Z
    ins = sorted(insertions, key=lambda i: (i.role == "close", i.tau))
    realised: dict[int, float] = {}
    geos = []
    for it in ins:
        if style == "circle":
            geo = circle_loop(d, it, speed_match)
        elif style == "spiral":
            if it.role == "unwind" and it.pair in realised:
                target = -realised[it.pair]
            elif it.role == "close":
                target = -(Z.at_period() + sum(g.dz for _, g in geos))
            else:
                target = it.dz
            geo = spiral_loop(d, Z, it, target, f_range)
        else:
            raise ValueError(f"unknown loop style {style!r}")
        geo.info["role"] = it.role
        if it.role == "wind":
            realised[it.pair] = geo.dz
        geos.append((it, geo))
    geos.sort(key=lambda g: g[0].tau)
    # a loop rejoining past 2*pi moves the start of the closed curve
    start = max(0.0, max((g.resume - TWO_PI for _, g in geos), default=0.0))
    arcs: list = []
    loops = []
    t = start
    for it, geo in geos:
        if it.tau > t:
            arcs.append(DiagramArc(d, t, it.tau, Z))
        arcs.extend(geo.arcs)
        loops.append(geo)
        t = geo.resume
    if t < TWO_PI + start:
        arcs.append(DiagramArc(d, t, TWO_PI + start, Z))
    pc = PiecewiseCurve(arcs, d, loops)
    if verify:
        _verify_assembled(pc, d, Z, embed_samples, embed_eps, embed_delta)
    return pc


def _verify_assembled(pc, d, Z, n, eps, delta):
    if d.target:
        crossings = detect_crossings(d)
        for c in crossings:
            tl, th = pc.diagram_time(c.t_lo), pc.diagram_time(c.t_hi)
            if tl is None or th is None:
                raise SelfIntersection(f"crossing at ({c.t_lo:.5f}, {c.t_hi:.5f}) was cut by a loop")
            zl, zh = pc.z([tl, th])
            if c.desired_over is not None and (("lo" if zl > zh else "hi") != c.desired_over):
                raise SelfIntersection(f"crossing at ({c.t_lo:.5f}, {c.t_hi:.5f}) still has the wrong sign")
    dist = embedding_gap(pc, n, delta)
    if dist <= eps:
        raise SelfIntersection(f"spatial lift nearly self-intersects (distance {dist:.2e})")


def embedding_gap(pc: PiecewiseCurve, n: int = 20000, delta: float = 1e-3) -> float:
    """Smallest distance between lift samples more than ``delta`` apart in parameter."""
    L = pc.lift(n)
    tree = cKDTree(L)
    # grow the query radius until some far-apart pair shows up
    r = 1e-3
    k = max(1, int(round(delta / (TWO_PI / n))))
    while r < 1e3:
        pairs = tree.query_pairs(r, output_type="ndarray")
        if len(pairs):
            gap = np.abs(pairs[:, 0] - pairs[:, 1])
            far = np.minimum(gap, n - gap) > k
            if np.any(far):
                p = pairs[far]
                return float(np.min(np.linalg.norm(L[p[:, 0]] - L[p[:, 1]], axis=1)))
        r *= 4
    return math.inf


__all__ = [
    "TrigCurve2D", "Crossing", "DiagramCurve", "find_double_points", "detect_crossings",
    "crossing_sign", "code_from_crossings", "induced_code", "classify_signs", "SignCheck",
    "CircleInsertion", "plan_insertions", "plan_closure", "closure_radius", "assemble",
    "PiecewiseCurve", "tangent_disc_radius", "locate_side", "embedding_gap", "radius_bound",
]
