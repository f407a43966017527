"""From an assembled planar curve to a trigonometric Legendrian knot in S^3.

The piecewise curve is replaced by its truncated Fourier series, one
coefficient is adjusted so the area integral closes up, and the resulting
space curve ``(X, Y, Z)`` is pushed radially onto the unit sphere. Knot type
is checked with a cheap signature (crossings after Reidemeister-I reduction
and the determinant); the degree doubles until the signature matches.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import knots
from .config import RunConfig
from .diagram import (
    DiagramCurve, PiecewiseCurve, TrigCurve2D, assemble, code_from_crossings, detect_crossings,
    find_double_points, induced_code, plan_closure, plan_insertions,
)
from .errors import (
    DegreeCapExceeded, DegreeTooLowWarning, LegendrianError, SeedGridTooCoarse, TangentialCrossing, ZTie,
)
from .trigpoly import TWO_PI, AreaIntegral, TrigPoly, area_integral, fourier_project, rebalance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FourierReport:
    degree: int
    n_samples: int
    c0: float  # max |P_trig - P| on the sample grid
    c1: float  # max |P_trig' - P'| on the sample grid
    tail_ratio: float


def fourier_stage(pc, degree: int, *, n_samples: int | None = None, oversample: int = 8,
                  full_output: bool = False):
    """Degree-``degree`` Fourier projection of a closed planar curve.

    Parameters
    ----------
    pc : PiecewiseCurve, DiagramCurve or TrigCurve2D
        Anything with ``points``/``velocity`` on ``[0, 2*pi]``. Curves with
        trigonometric coordinates are truncated exactly.
    degree : int
    n_samples : int, optional
        Uniform sample count, default ``max(oversample*(2*degree+1), 65536)``.
    full_output : bool
        Also return a :class:`FourierReport`.
    """
    degree = int(degree)
    n = int(n_samples or max(oversample * (2 * degree + 1), 1 << 16))
    if hasattr(pc, "X") and isinstance(pc.X, TrigPoly):
        X, Y = pc.X.truncate(degree), pc.Y.truncate(degree)
        tail = max(_tail(pc.X, degree), _tail(pc.Y, degree))
    else:
        P = pc.grid(n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegreeTooLowWarning)
            X, ix = fourier_project(P[:, 0], degree, full_output=True)
            Y, iy = fourier_project(P[:, 1], degree, full_output=True)
        tail = max(ix.tail_ratio, iy.tail_ratio)
    if not full_output:
        return X, Y
    t = TWO_PI * np.arange(n) / n
    P, V = pc.points(t), pc.velocity(t)
    Pt = np.stack([X.sample(n), Y.sample(n)], axis=1)
    Vt = np.stack([X.derivative().sample(n), Y.derivative().sample(n)], axis=1)
    rep = FourierReport(degree, n, float(np.max(np.linalg.norm(Pt - P, axis=1))),
                        float(np.max(np.linalg.norm(Vt - V, axis=1))), float(tail))
    return X, Y, rep


def _tail(p: TrigPoly, degree: int) -> float:
    e = p.cos ** 2 + p.sin ** 2
    return float(e[degree:].sum() / e.sum()) if e.sum() > 0 else 0.0


# ---------------------------------------------------------------------------
# Legendrian curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LegendrianR3Curve:
    """Space curve ``(X, Y, Z)`` with ``Z' + X Y' - Y X' = 0``."""

    X: TrigPoly
    Y: TrigPoly
    Z: TrigPoly

    @property
    def degree(self) -> int:
        return max(self.X.degree, self.Y.degree)

    def contact_defect(self) -> TrigPoly:
        """``Z' + X Y' - Y X'`` as a trigonometric polynomial."""
        return self.Z.derivative() + self.X * self.Y.derivative() - self.Y * self.X.derivative()

    def max_defect_coefficient(self) -> float:
        d = self.contact_defect()
        return float(max(abs(d.a0), np.max(np.abs(d.cos), initial=0.0), np.max(np.abs(d.sin), initial=0.0)))

    def points(self, t):
        return np.stack([self.X(t), self.Y(t), self.Z(t)], axis=-1)

    def to_dict(self) -> dict:
        return {"X": self.X.to_dict(), "Y": self.Y.to_dict(), "Z": self.Z.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "LegendrianR3Curve":
        return cls(*(TrigPoly.from_dict(d[k]) for k in "XYZ"))


def legendrian_lift(X: TrigPoly, Y: TrigPoly, coefficient=None) -> LegendrianR3Curve:
    """Rebalance ``(X, Y)`` and attach ``Z = int (Y X' - X Y')``."""
    X, Y = rebalance(X, Y, coefficient)
    Z: AreaIntegral = area_integral(X, Y)
    return LegendrianR3Curve(X, Y, Z.trig)


@dataclass(frozen=True)
class S3Curve:
    """Curve on the unit 3-sphere, ``(x1, y1, x2, y2) = (n1, n2, n3, n4) / sqrt(rho)``.

    ``rho`` is stored alongside the numerators and equals the sum of their
    squares, so every coordinate is a quotient of trigonometric polynomials.
    """

    n1: TrigPoly
    n2: TrigPoly
    n3: TrigPoly
    n4: TrigPoly
    rho: TrigPoly

    @property
    def numerators(self) -> tuple:
        return (self.n1, self.n2, self.n3, self.n4)

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.numerators)

    def coords(self, t) -> np.ndarray:
        """``(x1, y1, x2, y2)`` with shape ``t.shape + (4,)``."""
        t = np.asarray(t, dtype=float)
        R = np.sqrt(self.rho(t))
        return np.stack([p(t) / R for p in self.numerators], axis=-1)

    def z(self, t):
        c = self.coords(t)
        return c[..., 0] + 1j * c[..., 1], c[..., 2] + 1j * c[..., 3]

    def z_prime(self, t):
        t = np.asarray(t, dtype=float)
        rho, drho = self.rho(t), self.rho.derivative()(t)
        R = np.sqrt(rho)
        d = [p.derivative()(t) / R - p(t) * drho / (2 * rho * R) for p in self.numerators]
        return d[0] + 1j * d[1], d[2] + 1j * d[3]

    def sample(self, n: int) -> np.ndarray:
        rho = self.rho.sample(n)
        return np.stack([p.sample(n) for p in self.numerators], axis=-1) / np.sqrt(rho)[:, None]

    def rho_identity_defect(self) -> float:
        """Largest coefficient of ``n1^2 + ... + n4^2 - rho``."""
        d = sum((p * p for p in self.numerators), TrigPoly.constant(0.0)) - self.rho
        return float(max(abs(d.a0), np.max(np.abs(d.cos), initial=0.0), np.max(np.abs(d.sin), initial=0.0)))

    def residuals(self, n: int = 2048) -> dict:
        """Sphere and Legendrian residuals on ``n`` uniform samples.

        ``sphere`` is ``max | |z1|^2 + |z2|^2 - 1 |``, ``real`` and ``imag``
        are the parts of ``conj(z1) z1' + conj(z2) z2'``.
        """
        t = TWO_PI * np.arange(n) / n
        z1, z2 = self.z(t)
        d1, d2 = self.z_prime(t)
        w = np.conj(z1) * d1 + np.conj(z2) * d2
        return {"sphere": float(np.max(np.abs(np.abs(z1) ** 2 + np.abs(z2) ** 2 - 1))),
                "real": float(np.max(np.abs(w.real))), "imag": float(np.max(np.abs(w.imag))),
                "rho_min": float(np.min(self.rho.sample(max(n, 4 * self.rho.degree + 1)))),
                "x1_min": float(np.min(self.sample(n)[:, 0]))}

    def to_dict(self) -> dict:
        return {"numerators": [p.to_dict() for p in self.numerators], "rho": self.rho.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "S3Curve":
        nums = [TrigPoly.from_dict(p) for p in d["numerators"]]
        rho = TrigPoly.from_dict(d["rho"]) if "rho" in d else sum((p * p for p in nums), TrigPoly.constant(0.0))
        return cls(*nums, rho)

    @classmethod
    def from_numerators(cls, n1, n2, n3, n4) -> "S3Curve":
        nums = [p if isinstance(p, TrigPoly) else TrigPoly.constant(float(p)) for p in (n1, n2, n3, n4)]
        return cls(*nums, sum((p * p for p in nums), TrigPoly.constant(0.0)))


def project_to_s3(c: LegendrianR3Curve) -> S3Curve:
    """Radial projection of the tangent space at ``(1, 0)`` onto S^3.

    The point ``(X, Y, Z)`` is identified with ``(1, Z, X, Y)``, i.e.
    ``z1 = (1 + iZ)/R`` and ``z2 = (X + iY)/R``; under this identification
    the contact condition on ``(X, Y, Z)`` is the Legendrian condition on S^3.
    """
    return S3Curve.from_numerators(TrigPoly.constant(1.0), c.Z, c.X, c.Y)


def s3_to_r3(s: S3Curve) -> LegendrianR3Curve:
    """Inverse of :func:`project_to_s3` for curves with ``n1 = 1``."""
    if s.n1.degree != 0 or s.n1.a0 <= 0:
        raise ValueError("numerator n1 must be a positive constant")
    k = 1.0 / s.n1.a0
    return LegendrianR3Curve(s.n3 * k, s.n4 * k, s.n2 * k)


# ---------------------------------------------------------------------------
# Knot type checks
# ---------------------------------------------------------------------------

def gauss_code(X: TrigPoly, Y: TrigPoly, Z, n_samples: int | None = None,
               tie_tol: float = 1e-9) -> list:
    """Signed Gauss code of the space curve ``(X, Y, Z)`` viewed from above.

    ``Z`` may be a TrigPoly, an :class:`AreaIntegral` or any callable.
    """
    curve = TrigCurve2D(X, Y)
    n = n_samples or max(4096, 64 * curve.degree)
    cs = find_double_points(curve, n)
    zl = [float(Z(c.t_lo)) for c in cs]
    zh = [float(Z(c.t_hi)) for c in cs]
    return code_from_crossings(cs, zl, zh, tie_tol)


def target_code(d: DiagramCurve) -> list:
    """The diagram's target code, or its self-induced one when none is given."""
    return list(d.target) if d.target else induced_code(d)


@dataclass
class PipelineResult:
    s3: S3Curve
    r3: LegendrianR3Curve
    piecewise: PiecewiseCurve
    degree: int
    code: list
    signature: tuple
    target_signature: tuple
    history: list = field(default_factory=list)

    def report(self) -> dict:
        res = self.s3.residuals()
        return {"degree": self.degree, "signature": list(self.signature),
                "target_signature": list(self.target_signature),
                "contact_defect": self.r3.max_defect_coefficient(),
                "rho_identity_defect": self.s3.rho_identity_defect(),
                **{f"residual_{k}": v for k, v in res.items()},
                "history": self.history}


def prepare(d: DiagramCurve, config: RunConfig | None = None) -> PiecewiseCurve:
    """Steps up to the assembled piecewise curve (loops for signs and closure)."""
    config = config or RunConfig()
    if not d.target:
        d = DiagramCurve(d.X, d.Y, tuple(induced_code(d)), d.name)
    Z = d.Z()
    crossings = detect_crossings(d)
    plan = plan_insertions(d, Z, crossings=crossings, r_cap=config.r_cap)
    close = plan_closure(d, Z, crossings=crossings, r_cap=config.r_cap)
    if close is not None:
        plan.append(close)
    return assemble(d, plan, style=config.loop_style, Z=Z)


def build_pipeline(d: DiagramCurve, config: RunConfig | None = None) -> PipelineResult:
    """Diagram to Legendrian S^3 curve with degree escalation.

    Raises
    ------
    DegreeCapExceeded
        No degree up to ``config.degree_cap`` reproduced the target signature.
        ``diagnostics`` lists ``(degree, outcome)`` for every attempt.
    """
    config = config or RunConfig()
    tgt = target_code(d)
    want = knots.signature(tgt)
    pc = prepare(d, config)
    history = []
    degree = config.initial_degree
    while degree <= config.degree_cap:
        X, Y, rep = fourier_stage(pc, degree, oversample=config.oversample, full_output=True)
        r3 = legendrian_lift(X, Y)
        entry = {"degree": degree, "c0": rep.c0, "c1": rep.c1}
        try:
            code = gauss_code(r3.X, r3.Y, r3.Z)
            reduced = knots.reduce_rm1(code)
            entry["crossings"] = knots.n_crossings(code)
            entry["reduced_crossings"] = knots.n_crossings(reduced)
            # exact determinants of large codes are costly; only compare when counts agree
            if entry["reduced_crossings"] == want[0]:
                sig = (want[0], knots.knot_determinant(reduced))
                entry["signature"] = list(sig)
            else:
                sig = None
        except (TangentialCrossing, SeedGridTooCoarse, ZTie) as exc:
            code, sig = None, None
            entry["error"] = f"{type(exc).__name__}: {exc}"
        history.append(entry)
        log.info("degree %d: %s", degree, entry)
        if sig == want:
            return PipelineResult(project_to_s3(r3), r3, pc, degree, code, sig, want, history)
        degree *= 2
    raise DegreeCapExceeded(f"no degree up to {config.degree_cap} reproduces signature {want}",
                            {"target_signature": list(want), "history": history})


__all__ = [
    "FourierReport", "fourier_stage", "LegendrianR3Curve", "legendrian_lift", "S3Curve",
    "project_to_s3", "s3_to_r3", "gauss_code", "target_code", "PipelineResult", "prepare",
    "build_pipeline",
]
