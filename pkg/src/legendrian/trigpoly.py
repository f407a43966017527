"""Real and complex trigonometric polynomials.

A real trigonometric polynomial of degree ``m`` is stored densely as

    p(t) = a0 + sum_{j=1}^{m} (a_j cos(jt) + b_j sin(jt)),

and a complex one in the exponential basis ``sum_{k=-D}^{D} c_k e^{ikt}``.
Both types are immutable; every operation returns a new object.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import AllCoefficientsZero, DegreeTooLowWarning, SingularSystem

TWO_PI = 2.0 * np.pi

# Above this many coefficients products switch from direct to FFT convolution.
_FFT_CONVOLVE_MIN = 96
# Largest dense evaluation block (points x frequencies).
_EVAL_BLOCK = 2_000_000


def _frozen(a):
    a = np.array(a, dtype=float).ravel()
    a.flags.writeable = False
    return a


def _convolve(u, v):
    if min(len(u), len(v)) >= _FFT_CONVOLVE_MIN:
        return fftconvolve(u, v)
    return np.convolve(u, v)


class TrigPoly:
    """Real trigonometric polynomial with dense coefficient storage.

    Parameters
    ----------
    a0 : float
        Constant term.
    cos, sin : array_like
        Coefficients ``a_1..a_m`` and ``b_1..b_m``. The shorter list is padded
        with zeros; trailing all-zero pairs are dropped so that ``degree`` is
        canonical.

    Examples
    --------
    >>> p = TrigPoly(0.0, [1.0])
    >>> float(p(np.pi))
    -1.0
    """

    __slots__ = ("a0", "cos", "sin")

    def __init__(self, a0: float = 0.0, cos: Iterable[float] = (), sin: Iterable[float] = ()):
        c = np.array(cos, dtype=float).ravel()
        s = np.array(sin, dtype=float).ravel()
        m = max(c.size, s.size)
        c = np.pad(c, (0, m - c.size))
        s = np.pad(s, (0, m - s.size))
        nz = np.flatnonzero((c != 0.0) | (s != 0.0))
        m = int(nz[-1]) + 1 if nz.size else 0
        object.__setattr__(self, "a0", float(a0))
        object.__setattr__(self, "cos", _frozen(c[:m]))
        object.__setattr__(self, "sin", _frozen(s[:m]))

    def __setattr__(self, name, value):
        raise AttributeError("TrigPoly is immutable")

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls(value)

    @classmethod
    def from_complex(cls, c: "ComplexTrigPoly") -> "TrigPoly":
        """Real part of a complex polynomial, as a real trig polynomial."""
        d = c.degree
        pos = c.coeffs[d:]
        neg = c.coeffs[d::-1]
        # Re(sum c_k e^{ikt}) collects (c_k + conj(c_{-k})) / 2 on e^{ikt}.
        e = 0.5 * (pos + np.conj(neg))
        return cls(e[0].real, 2.0 * e[1:].real, -2.0 * e[1:].imag)

    @classmethod
    def from_dict(cls, record: dict) -> "TrigPoly":
        return cls(record.get("a0", 0.0), record.get("cos", []), record.get("sin", []))

    def to_dict(self) -> dict:
        return {"a0": self.a0, "cos": self.cos.tolist(), "sin": self.sin.tolist()}

    # -- basic properties ---------------------------------------------
    @property
    def degree(self) -> int:
        return int(self.cos.size)

    def coefficients(self, degree: int | None = None):
        """Return ``(a0, cos, sin)`` padded to ``degree``."""
        m = self.degree if degree is None else int(degree)
        if m < self.degree:
            raise ValueError("requested degree below the polynomial degree")
        pad = (0, m - self.degree)
        return self.a0, np.pad(self.cos, pad), np.pad(self.sin, pad)

    def to_complex(self) -> "ComplexTrigPoly":
        m = self.degree
        c = np.empty(2 * m + 1, dtype=complex)
        half = 0.5 * (self.cos - 1j * self.sin)
        c[m] = self.a0
        c[m + 1:] = half
        c[:m] = np.conj(half[::-1])
        return ComplexTrigPoly(c)

    def __repr__(self):
        return f"TrigPoly(degree={self.degree}, a0={self.a0:.6g})"

    # -- evaluation ---------------------------------------------------
    def __call__(self, t):
        """Evaluate at scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.full(flat.shape, self.a0)
        m = self.degree
        if m:
            j = np.arange(1, m + 1, dtype=float)
            step = max(1, _EVAL_BLOCK // m)
            for lo in range(0, flat.size, step):
                ang = np.outer(flat[lo:lo + step], j)
                out[lo:lo + step] += np.cos(ang) @ self.cos + np.sin(ang) @ self.sin
        if t.ndim == 0:
            return float(out[0])
        return out.reshape(t.shape)

    def sample(self, n: int) -> np.ndarray:
        """Values on the uniform grid ``t_k = 2*pi*k/n`` via one inverse FFT.

        Frequencies at or above ``n`` are folded (aliased), so the result is
        exact for any ``n``.
        """
        n = int(n)
        spec = np.zeros(n, dtype=complex)
        m = self.degree
        k = np.arange(-m, m + 1)
        np.add.at(spec, k % n, self.to_complex().coeffs)
        return (np.fft.ifft(spec) * n).real

    # -- calculus -----------------------------------------------------
    def derivative(self, order: int = 1) -> "TrigPoly":
        p = self
        for _ in range(int(order)):
            j = np.arange(1, p.degree + 1, dtype=float)
            p = TrigPoly(0.0, j * p.sin, -j * p.cos)
        return p

    def integral_zero_mean(self) -> "TrigPoly":
        """Antiderivative of ``p - a0`` that vanishes at ``t = 0``."""
        j = np.arange(1, self.degree + 1, dtype=float)
        cos = -self.sin / j
        return TrigPoly(-cos.sum(), cos, self.cos / j)

    def mean(self) -> float:
        return self.a0

    # -- arithmetic ---------------------------------------------------
    def _binary(self, other, sign):
        if isinstance(other, TrigPoly):
            m = max(self.degree, other.degree)
            a0, c1, s1 = self.coefficients(m)
            b0, c2, s2 = other.coefficients(m)
            return TrigPoly(a0 + sign * b0, c1 + sign * c2, s1 + sign * s2)
        if np.isscalar(other):
            return TrigPoly(self.a0 + sign * float(other), self.cos, self.sin)
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return TrigPoly(-self.a0, -self.cos, -self.sin)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return multiply(self, other)
        if np.isscalar(other):
            f = float(other)
            return TrigPoly(f * self.a0, f * self.cos, f * self.sin)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / float(other))
        return NotImplemented

    def __pow__(self, k: int):
        return TrigPoly.from_complex(self.to_complex() ** int(k))

    def shift(self, c: float) -> "TrigPoly":
        """Return ``t -> p(t + c)``."""
        j = np.arange(1, self.degree + 1) * c
        cj, sj = np.cos(j), np.sin(j)
        return TrigPoly(self.a0, self.cos * cj + self.sin * sj, self.sin * cj - self.cos * sj)

    def reverse(self) -> "TrigPoly":
        """Return ``t -> p(-t)``."""
        return TrigPoly(self.a0, self.cos, -self.sin)

    def truncate(self, degree: int) -> "TrigPoly":
        return TrigPoly(self.a0, self.cos[:degree], self.sin[:degree])

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        m = max(self.degree, other.degree)
        a = np.concatenate([[self.a0], *self.coefficients(m)[1:]])
        b = np.concatenate([[other.a0], *other.coefficients(m)[1:]])
        return bool(np.max(np.abs(a - b)) <= atol)


class ComplexTrigPoly:
    """Complex trigonometric polynomial ``sum_{k=-D}^{D} c_k e^{ikt}``.

    ``coeffs[k + D]`` holds ``c_k``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex).ravel()
        if c.size % 2 == 0:
            raise ValueError("coefficient array must have odd length 2D+1")
        # trim symmetric zero pairs from the outside
        while c.size > 1 and c[0] == 0 and c[-1] == 0:
            c = c[1:-1]
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("ComplexTrigPoly is immutable")

    @classmethod
    def from_modes(cls, modes: dict) -> "ComplexTrigPoly":
        d = max((abs(int(k)) for k in modes), default=0)
        c = np.zeros(2 * d + 1, dtype=complex)
        for k, v in modes.items():
            c[int(k) + d] += v
        return cls(c)

    @property
    def degree(self) -> int:
        return (self.coeffs.size - 1) // 2

    def coeff(self, k: int) -> complex:
        d = self.degree
        return complex(self.coeffs[k + d]) if -d <= k <= d else 0j

    def padded(self, degree: int) -> np.ndarray:
        d = self.degree
        return np.pad(self.coeffs, (degree - d, degree - d))

    def __repr__(self):
        return f"ComplexTrigPoly(degree={self.degree})"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        d = self.degree
        k = np.arange(-d, d + 1, dtype=float)
        out = np.empty(flat.shape, dtype=complex)
        step = max(1, _EVAL_BLOCK // k.size)
        for lo in range(0, flat.size, step):
            out[lo:lo + step] = np.exp(1j * np.outer(flat[lo:lo + step], k)) @ self.coeffs
        if t.ndim == 0:
            return complex(out[0])
        return out.reshape(t.shape)

    def sample(self, n: int) -> np.ndarray:
        spec = np.zeros(int(n), dtype=complex)
        d = self.degree
        np.add.at(spec, np.arange(-d, d + 1) % n, self.coeffs)
        return np.fft.ifft(spec) * n

    def derivative(self) -> "ComplexTrigPoly":
        d = self.degree
        return ComplexTrigPoly(1j * np.arange(-d, d + 1) * self.coeffs)

    def conj(self) -> "ComplexTrigPoly":
        """Pointwise complex conjugate: ``c_k -> conj(c_{-k})``."""
        return ComplexTrigPoly(np.conj(self.coeffs[::-1]))

    def real(self) -> TrigPoly:
        return TrigPoly.from_complex(self)

    def imag(self) -> TrigPoly:
        return TrigPoly.from_complex(self * -1j)

    def __add__(self, other):
        if isinstance(other, TrigPoly):
            other = other.to_complex()
        if isinstance(other, ComplexTrigPoly):
            d = max(self.degree, other.degree)
            return ComplexTrigPoly(self.padded(d) + other.padded(d))
        if np.isscalar(other):
            c = np.array(self.coeffs)
            c[self.degree] += other
            return ComplexTrigPoly(c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return ComplexTrigPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            other = other.to_complex()
        if isinstance(other, ComplexTrigPoly):
            return ComplexTrigPoly(_convolve(self.coeffs, other.coeffs))
        if np.isscalar(other):
            return ComplexTrigPoly(self.coeffs * other)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int):
        k = int(k)
        if k < 0:
            raise ValueError("negative powers are not trigonometric polynomials")
        result = ComplexTrigPoly([1.0])
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result


def evaluate(p: TrigPoly, t):
    """Evaluate ``p`` at ``t``; thin functional alias of ``p(t)``."""
    return p(t)


def derivative(p: TrigPoly, order: int = 1) -> TrigPoly:
    return p.derivative(order)


def multiply(p: TrigPoly, q: TrigPoly) -> TrigPoly:
    """Product of two real trigonometric polynomials (degrees add)."""
    if p.degree == 0 or q.degree == 0:
        if p.degree == 0:
            p, q = q, p
        return p * q.a0
    return TrigPoly.from_complex(ComplexTrigPoly(_convolve(p.to_complex().coeffs, q.to_complex().coeffs)))


# ---------------------------------------------------------------------------
# Area integral and balancing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AreaIntegral:
    """``Z(t) = trig(t) + drift * t`` with ``Z(0) = 0``."""

    trig: TrigPoly
    drift: float = 0.0

    def __call__(self, t):
        return self.trig(t) + self.drift * np.asarray(t, dtype=float)

    def at_period(self) -> float:
        """``Z(2*pi) - Z(0)``."""
        return TWO_PI * self.drift

    def is_periodic(self, tol: float = 1e-10) -> bool:
        return abs(self.at_period()) <= tol

    def derivative(self) -> TrigPoly:
        return self.trig.derivative() + self.drift


def area_integral(X: TrigPoly, Y: TrigPoly) -> AreaIntegral:
    """``Z(t) = int_0^t (Y X' - X Y') ds`` as trig part plus linear drift."""
    w = Y * X.derivative() - X * Y.derivative()
    return AreaIntegral(w.integral_zero_mean(), w.a0)


def balance_defect(X: TrigPoly, Y: TrigPoly) -> float:
    """Closed form of ``Z(2*pi)``: ``2*pi * sum_j j (b_j c_j - a_j d_j)``."""
    m = max(X.degree, Y.degree)
    _, a, b = X.coefficients(m)
    _, c, d = Y.coefficients(m)
    j = np.arange(1, m + 1)
    return float(TWO_PI * np.sum(j * (b * c - a * d)))


_PARTNER = {"a": ("Y", "sin"), "b": ("Y", "cos"), "c": ("X", "sin"), "d": ("X", "cos")}


def rebalance(X: TrigPoly, Y: TrigPoly, coefficient: tuple[str, int] | None = None,
              tol: float = 0.0) -> tuple[TrigPoly, TrigPoly]:
    """Change one coefficient so that the area integral becomes periodic.

    Parameters
    ----------
    X, Y : TrigPoly
        Planar curve with ``X = a0 + sum a_j cos + b_j sin`` and
        ``Y = c0 + sum c_j cos + d_j sin``.
    coefficient : (str, int), optional
        Coefficient to modify, e.g. ``("d", 185)``. By default ``d_j`` is
        changed at the frequency with the largest ``|a_j|``; if every ``a_j``
        vanishes the search falls back to ``b``, ``c`` and ``d`` (changing
        ``c``, ``b`` and ``a`` respectively).
    tol : float
        Defects with absolute value ``<= tol`` are left alone.

    Returns
    -------
    (TrigPoly, TrigPoly)
        The rebalanced pair. Exactly one scalar coefficient differs from
        the input.
    """
    delta = balance_defect(X, Y)
    if abs(delta) <= tol:
        return X, Y
    m = max(X.degree, Y.degree)
    x0, a, b = X.coefficients(m)
    y0, c, d = Y.coefficients(m)
    fam = {"a": a, "b": b, "c": c, "d": d}
    if coefficient is None:
        for key in "abcd":
            partner = fam[key]
            if np.any(partner != 0):
                j = int(np.argmax(np.abs(partner))) + 1
                # the adjusted coefficient pairs with `partner` in the defect sum
                target = {"a": "d", "b": "c", "c": "b", "d": "a"}[key]
                break
        else:
            raise AllCoefficientsZero("X and Y are constant but the defect is nonzero")
    else:
        target, j = coefficient[0], int(coefficient[1])
        if not 1 <= j <= m:
            raise ValueError(f"frequency {j} outside 1..{m}")
    k = j - 1
    # d(defect)/d(target) for each choice, from 2*pi*j*(b c - a d)
    slope = TWO_PI * j * {"a": -d[k], "b": c[k], "c": b[k], "d": -a[k]}[target]
    if slope == 0:
        raise AllCoefficientsZero(f"coefficient {target}_{j} does not affect the defect")
    fam = {"a": a.copy(), "b": b.copy(), "c": c.copy(), "d": d.copy()}
    fam[target][k] -= delta / slope
    return TrigPoly(x0, fam["a"], fam["b"]), TrigPoly(y0, fam["c"], fam["d"])


# ---------------------------------------------------------------------------
# Projection and interpolation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionInfo:
    n_samples: int
    tail_ratio: float


def fourier_project(samples: Callable | Sequence[float] | TrigPoly, degree: int, *,
                    oversample: int = 8, tol: float = 1e-8, min_samples: int = 1024,
                    full_output: bool = False):
    """Truncated Fourier series of a 2*pi-periodic function.

    Parameters
    ----------
    samples : callable, array_like or TrigPoly
        A vectorised function of ``t``, or values on the uniform grid
        ``2*pi*k/N``. A TrigPoly is truncated directly.
    degree : int
        Highest retained frequency.
    oversample : int
        Grid size is ``max(oversample * (2*degree + 1), min_samples)`` for
        callables.
    tol : float
        A :class:`DegreeTooLowWarning` is emitted when the discarded share of
        the non-constant spectral energy exceeds ``tol``.
    full_output : bool
        Also return a :class:`ProjectionInfo`.
    """
    degree = int(degree)
    if isinstance(samples, TrigPoly):
        p = samples.truncate(degree)
        info = ProjectionInfo(0, _tail_ratio_coeffs(samples, degree))
        return (p, info) if full_output else p
    if callable(samples):
        n = max(int(oversample) * (2 * degree + 1), int(min_samples))
        t = TWO_PI * np.arange(n) / n
        v = np.asarray(samples(t), dtype=float)
        if v.shape != t.shape:
            v = np.array([float(samples(s)) for s in t])
    else:
        v = np.asarray(samples, dtype=float).ravel()
        n = v.size
    if 2 * degree >= n:
        raise ValueError(f"{n} samples cannot resolve degree {degree}")
    F = np.fft.rfft(v) / n
    power = np.abs(F[1:]) ** 2
    if n % 2 == 0:
        power[-1] *= 0.5
    total = power.sum()
    ratio = float(power[degree:].sum() / total) if total > 0 else 0.0
    if ratio > tol:
        warnings.warn(f"degree {degree} leaves tail energy ratio {ratio:.3e}", DegreeTooLowWarning,
                      stacklevel=2)
    p = TrigPoly(F[0].real, 2.0 * F[1:degree + 1].real, -2.0 * F[1:degree + 1].imag)
    info = ProjectionInfo(n, ratio)
    return (p, info) if full_output else p


def _tail_ratio_coeffs(p: TrigPoly, degree: int) -> float:
    e = p.cos ** 2 + p.sin ** 2
    total = e.sum()
    return float(e[degree:].sum() / total) if total > 0 else 0.0


def _basis_row(t: float, order: int, m: int) -> np.ndarray:
    j = np.arange(1, m + 1, dtype=float)
    phase = order * np.pi / 2
    row = np.empty(2 * m + 1)
    row[0] = 1.0 if order == 0 else 0.0
    scale = j ** order
    row[1:m + 1] = scale * np.cos(j * t + phase)
    row[m + 1:] = scale * np.sin(j * t + phase)
    return row


def trig_hermite_interpolate(constraints: Iterable[tuple[float, int, float]], *,
                             rtol: float = 1e-9) -> TrigPoly:
    """Lowest-degree trig polynomial matching values and derivatives.

    Parameters
    ----------
    constraints : iterable of (t, order, value)
        Each entry requires ``p^(order)(t) = value``.

    Returns
    -------
    TrigPoly
        Minimum-norm solution at the smallest degree whose dense system is
        satisfied to ``rtol`` (relative to the largest constraint value).

    Raises
    ------
    SingularSystem
        If the constraints are repeated, dependent or inconsistent.
    """
    cons = [(float(t), int(k), float(v)) for t, k, v in constraints]
    if not cons:
        raise SingularSystem("no constraints")
    keys = [(t, k) for t, k, _ in cons]
    if len(set(keys)) != len(keys):
        raise SingularSystem("repeated (t, order) constraint")
    if any(k < 0 for _, k, _ in cons):
        raise ValueError("derivative order must be non-negative")
    n = len(cons)
    rhs = np.array([v for _, _, v in cons])
    scale = max(1.0, float(np.max(np.abs(rhs))))
    m0 = n // 2
    for m in range(m0, m0 + n + 1):
        A = np.array([_basis_row(t, k, m) for t, k, _ in cons])
        x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        if np.max(np.abs(A @ x - rhs)) <= rtol * scale:
            return TrigPoly(x[0], x[1:m + 1], x[m + 1:])
    raise SingularSystem("interpolation constraints are inconsistent")


__all__ = [
    "TrigPoly", "ComplexTrigPoly", "AreaIntegral", "ProjectionInfo", "evaluate", "derivative",
    "multiply", "area_integral", "balance_defect", "rebalance", "fourier_project",
    "trig_hermite_interpolate", "TWO_PI",
]
