"""Time evolution of field lines of Hopf-type Bateman fields.

Every such field evolves by one ambient isotopy ``Phi_t`` of R^3. Its inverse
has the closed form ``phi0 o (alpha, beta)``; the forward map is recovered by
Newton's method on that inverse, seeded by continuation in ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AtInfinity, NoConvergence, NotEscapedInGrid
from .legendrify import S3Curve
from .tangency import alpha_beta
from .trigpoly import TWO_PI

_INF_TOL = 1e-14


def phi0(z1, z2):
    """Stereographic map ``S^3 \\ {(1, 0)} -> R^3`` inverse to ``(alpha, beta)`` at ``t = 0``.

    Returns an array with a trailing axis of 3.

    Raises
    ------
    AtInfinity
        If some point has ``Re z1 = 1``.
    """
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    s = 1.0 - z1.real
    if np.any(np.abs(s) <= _INF_TOL):
        raise AtInfinity("(1, 0) maps to the point at infinity")
    return np.stack([z2.real / s, -z2.imag / s, z1.imag / s], axis=-1)


def phi0_velocity(c: S3Curve, t) -> np.ndarray:
    """Parameter derivative of ``phi0(z(t))``."""
    z1, z2 = c.z(t)
    d1, d2 = c.z_prime(t)
    s = 1.0 - z1.real
    if np.any(np.abs(s) <= _INF_TOL):
        raise AtInfinity("curve passes through (1, 0)")
    ds = -d1.real
    num = np.stack([z2.real, -z2.imag, z1.imag], axis=-1)
    dnum = np.stack([d2.real, -d2.imag, d1.imag], axis=-1)
    return dnum / s[..., None] - num * (ds / s ** 2)[..., None]


def _split(q):
    q = np.asarray(q, dtype=float)
    return q[..., 0], q[..., 1], q[..., 2]


def _denominator(x, y, z, t):
    return x * x + y * y + (z - t) ** 2 + 1.0


def phi_t_inverse(q, t: float) -> np.ndarray:
    """Closed-form ``Phi_t^{-1}``; points have a trailing axis of 3."""
    x, y, z = _split(q)
    s = x * x + y * y + z * z
    d = _denominator(x, y, z, t)
    a = s - t * t + 1.0
    return np.stack([(-2 * t * y + x * a) / d, (2 * t * x + y * a) / d,
                     (-t * (s - t * t - 1.0) + z * a) / d], axis=-1)


def phi_t_inverse_jacobian(q, t: float) -> np.ndarray:
    """Jacobian of :func:`phi_t_inverse`, shape ``(..., 3, 3)``."""
    x, y, z = _split(q)
    s = x * x + y * y + z * z
    d = _denominator(x, y, z, t)
    a = s - t * t + 1.0
    F = phi_t_inverse(q, t)
    gD = np.stack([2 * x, 2 * y, 2 * (z - t)], axis=-1)
    gN = np.stack([
        np.stack([a + 2 * x * x, -2 * t + 2 * x * y, 2 * x * z], axis=-1),
        np.stack([2 * t + 2 * x * y, a + 2 * y * y, 2 * y * z], axis=-1),
        np.stack([2 * x * (z - t), 2 * y * (z - t), a + 2 * z * (z - t)], axis=-1),
    ], axis=-2)
    return (gN - F[..., :, None] * gD[..., None, :]) / d[..., None, None]


def poynting_V(x, y, z, t) -> np.ndarray:
    """Normalised Poynting field, trailing axis of 3.

    The second component is ``2 (y (t - z) - x) / d``; with ``+ x`` the
    vector is not of unit length and disagrees with
    :func:`poynting_from_gradients`.
    """
    x, y, z, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, t)))
    d = _denominator(x, y, z, t)
    return np.stack([2 * (x * (t - z) + y) / d, 2 * (y * (t - z) - x) / d,
                     (x * x + y * y - (z - t) ** 2 - 1.0) / d], axis=-1)


def poynting_from_gradients(x, y, z, t) -> np.ndarray:
    """``Re(w) x Im(w)`` normalised, for ``w = grad alpha x grad beta``; an independent check of :func:`poynting_V`."""
    from .tangency import alpha_beta_derivatives

    _, _, ga, gb, _, _ = alpha_beta_derivatives(x, y, z, t)
    w = np.cross(ga, gb)
    v = np.cross(w.real, w.imag)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def s3_distance_to_pole(x, y, z, t) -> np.ndarray:
    """Euclidean distance in C^2 from ``(alpha, beta)(x, y, z, t)`` to ``(1, 0)``."""
    a, b = alpha_beta(x, y, z, t)
    return np.sqrt(np.abs(a - 1) ** 2 + np.abs(b) ** 2)


# ---------------------------------------------------------------------------
# Forward map
# ---------------------------------------------------------------------------

def _newton(p, t, q0, tol, max_iter):
    """Batched damped Newton for ``phi_t_inverse(q, t) = p``; returns (q, residual, converged)."""
    q = np.array(q0, dtype=float, copy=True)
    r = phi_t_inverse(q, t) - p
    res = np.linalg.norm(r, axis=-1)
    for _ in range(max_iter):
        active = res > tol
        if not np.any(active):
            break
        J = phi_t_inverse_jacobian(q[active], t)
        try:
            step = np.linalg.solve(J, -r[active][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J[0], -r[active][0], rcond=None)[0][None] if len(J) == 1 else \
                np.stack([np.linalg.lstsq(Jk, -rk, rcond=None)[0] for Jk, rk in zip(J, r[active])])
        qa, ra = q[active], res[active]
        lam = np.ones(len(qa))
        for _ in range(30):
            trial = qa + lam[:, None] * step
            rt = np.linalg.norm(phi_t_inverse(trial, t) - p[active], axis=-1)
            bad = ~(rt < ra) & (lam > 1e-9)
            if not np.any(bad):
                break
            lam[bad] *= 0.5
        q[active] = trial
        r[active] = phi_t_inverse(trial, t) - p[active]
        res[active] = np.linalg.norm(r[active], axis=-1)
    return q, res, res <= tol


def _time_path(t0: float, t1: float) -> list:
    """Continuation nodes from ``t0`` to ``t1``: linear near zero, geometric beyond."""
    if t0 == t1:
        return [t1]
    sgn = 1.0 if t1 > t0 else -1.0
    nodes, t = [], t0
    while (t1 - t) * sgn > 0:
        h = max(0.25, 0.5 * abs(t))
        t = t + sgn * h
        if (t1 - t) * sgn < 0:
            t = t1
        nodes.append(t)
    return nodes


def phi_t_forward(p, t: float, seed=None, *, tol: float = 1e-9, max_iter: int = 100,
                  t_from: float = 0.0, max_halvings: int = 40) -> np.ndarray:
    """Solve ``phi_t_inverse(q, t) = p`` for ``q``.

    Parameters
    ----------
    p : array_like, shape (..., 3)
    seed : array_like, optional
        Solution at time ``t_from``. Defaults to ``p`` itself with
        ``t_from = 0``, where the map is the identity.

    Raises
    ------
    NoConvergence
        When some point fails even after ``max_halvings`` step halvings.
    """
    q, ok, diag = _forward(p, t, seed, tol=tol, max_iter=max_iter, t_from=t_from, max_halvings=max_halvings)
    if not np.all(ok):
        raise NoConvergence(f"{int(np.sum(~ok))} point(s) did not converge at t={t}", diag)
    return q


def _forward(p, t, seed=None, *, tol=1e-9, max_iter=100, t_from=0.0, max_halvings=40):
    p = np.asarray(p, dtype=float)
    shape = p.shape
    P = p.reshape(-1, 3)
    if seed is None:
        q = P.copy() if t_from == 0.0 else _forward(P, t_from, None, tol=tol, max_iter=max_iter)[0]
    else:
        q = np.asarray(seed, dtype=float).reshape(-1, 3).copy()
    ok = np.ones(len(P), dtype=bool)
    tc = float(t_from)
    worst = 0.0
    for node in _time_path(tc, float(t)):
        target, halvings = node, 0
        while True:
            # first-order predictor along the flow
            guess = q + (target - tc) * poynting_V(q[:, 0], q[:, 1], q[:, 2], tc)
            qn, res, conv = _newton(P, target, guess, tol, max_iter)
            if np.all(conv | ~ok) or halvings >= max_halvings:
                break
            target = tc + 0.5 * (target - tc)
            halvings += 1
        newly = ~conv & ok
        ok &= conv
        q = np.where(ok[:, None] | newly[:, None], qn, q)
        worst = max(worst, float(np.max(res)) if res.size else 0.0)
        tc = target
        if tc != node:
            # finish the remaining interval after a successful shortened step
            q2, ok2, d2 = _forward(P, node, q, tol=tol, max_iter=max_iter, t_from=tc,
                                   max_halvings=max_halvings)
            q, ok = q2, ok & ok2
            worst = max(worst, d2["max_residual"])
            tc = node
    diag = {"t": float(t), "max_residual": worst, "failed": int(np.sum(~ok))}
    return q.reshape(shape), ok.reshape(shape[:-1]), diag


def flow_by_ode(p, t: float, *, rtol: float = 1e-12, atol: float = 1e-12) -> np.ndarray:
    """Integrate ``dq/ds = V(q, s)`` from ``s = 0`` to ``t`` (adaptive Runge-Kutta)."""
    from scipy.integrate import solve_ivp

    p = np.asarray(p, dtype=float)
    if t == 0:
        return p.copy()
    shape = p.shape

    def rhs(s, y):
        Q = y.reshape(-1, 3)
        return poynting_V(Q[:, 0], Q[:, 1], Q[:, 2], s).ravel()

    sol = solve_ivp(rhs, (0.0, float(t)), p.ravel(), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NoConvergence(f"ODE integration failed: {sol.message}", {"t": float(t)})
    return sol.y[:, -1].reshape(shape)


# ---------------------------------------------------------------------------
# Frames and escape
# ---------------------------------------------------------------------------

@dataclass
class EvolutionFrame:
    """Samples of ``Phi_t(L)`` with a convergence flag per point."""

    t: float
    points: np.ndarray
    converged: np.ndarray
    max_residual: float = 0.0
    z_histogram: dict = field(default_factory=dict)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def min_distance(self) -> float:
        return float(np.min(np.linalg.norm(self.points, axis=1)))

    def to_dict(self) -> dict:
        return {"t": self.t, "points": self.points.tolist(), "converged": self.converged.tolist(),
                "max_residual": self.max_residual, "z_histogram": self.z_histogram}


def _histogram(z, bins=10):
    counts, edges = np.histogram(z, bins=bins)
    return {"counts": counts.tolist(), "edges": edges.tolist()}


def curve_samples_r3(c: S3Curve, samples: int) -> np.ndarray:
    """``phi0`` of ``samples`` equally spaced curve points."""
    t = TWO_PI * np.arange(samples) / samples
    z1, z2 = c.z(t)
    return phi0(z1, z2)


def evolve_frames(c: S3Curve, times, samples: int = 256, *, tol: float = 1e-9,
                  max_iter: int = 100) -> list:
    """Frames of the evolved link at each requested time.

    Times are processed outward from zero in each direction so every solve is
    seeded by the previous frame. The returned list follows the input order.
    Points that fail to converge are flagged, not raised.
    """
    times = [float(t) for t in times]
    base = curve_samples_r3(c, samples)
    out = {}
    for sign in (1.0, -1.0):
        q, tc = base.copy(), 0.0
        ok = np.ones(samples, dtype=bool)
        for t in sorted({t for t in times if t * sign > 0}, key=abs):
            q, conv, diag = _forward(base, t, q, tol=tol, max_iter=max_iter, t_from=tc)
            ok &= conv
            out[t] = EvolutionFrame(t, q.copy(), ok.copy(), diag["max_residual"], _histogram(q[:, 2]))
            tc = t
    if 0.0 in times:
        out[0.0] = EvolutionFrame(0.0, base.copy(), np.ones(samples, dtype=bool), 0.0, _histogram(base[:, 2]))
    return [out[t] for t in times]


@dataclass
class EscapeReport:
    T_plus: float
    T_minus: float
    radius: float
    profile: list  # (t, min distance to the origin)

    def to_dict(self) -> dict:
        return {"T_plus": self.T_plus, "T_minus": self.T_minus, "radius": self.radius,
                "profile": [list(p) for p in self.profile]}


def default_escape_grid(t_max: float = 1e4, per_decade: int = 8) -> np.ndarray:
    pos = np.concatenate([[0.0], np.linspace(0.25, 1.0, 4),
                          np.logspace(0, math.log10(t_max), per_decade * int(round(math.log10(t_max))) + 1)[1:]])
    return np.unique(np.concatenate([-pos, pos]))


def escape_time(c: S3Curve, radius: float, t_grid=None, *, samples: int = 256) -> EscapeReport:
    """Grid times beyond which the evolved link stays outside the ball of ``radius``.

    ``T_plus`` is the smallest grid time ``T >= 0`` with minimum distance to
    the origin above ``radius`` at every grid time ``>= T``; ``T_minus`` is
    the mirror statement for negative times, reported as a magnitude.

    Raises
    ------
    NotEscapedInGrid
        If the last grid time in either direction is still inside the ball.
    """
    grid = sorted(set(float(t) for t in (default_escape_grid() if t_grid is None else t_grid)) | {0.0})
    frames = evolve_frames(c, grid, samples)
    profile = [(f.t, f.min_distance()) for f in frames]
    dist = dict(profile)

    def tail(ts):
        T = None
        for t in reversed(ts):
            if dist[t] > radius:
                T = t
            else:
                break
        return T

    pos = [t for t in grid if t >= 0]
    neg = sorted((t for t in grid if t <= 0), key=abs)
    Tp, Tm = tail(pos), tail(neg)
    if Tp is None or Tm is None:
        raise NotEscapedInGrid(f"link still meets the ball of radius {radius} at the end of the grid")
    return EscapeReport(float(Tp), float(abs(Tm)), float(radius), profile)


__all__ = [
    "phi0", "phi0_velocity", "phi_t_inverse", "phi_t_inverse_jacobian", "poynting_V",
    "poynting_from_gradients", "s3_distance_to_pole", "phi_t_forward", "flow_by_ode",
    "EvolutionFrame", "evolve_frames", "curve_samples_r3", "EscapeReport", "escape_time",
    "default_escape_grid",
]
