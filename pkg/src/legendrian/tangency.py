"""Linear systems for polynomials vanishing on, or tangent to, an S^3 curve.

For a curve ``z(t) = (n1 + i n2, n3 + i n4) / sqrt(rho)`` and a polynomial
``G = sum c_ij z1^i z2^j`` with ``i, j <= n``, the function
``rho^n G(z(t))`` is a trigonometric polynomial in ``t`` whose coefficients
are linear in ``c_ij``. Requiring it to vanish gives a homogeneous system
``A c = 0``; requiring it to equal ``rho^n H`` for the curve's contact-frame
tangent ``H`` gives ``A c = y``. The second case feeds Bateman's construction
``F = h(alpha, beta) grad(alpha) x grad(beta)`` of null electromagnetic fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeTooSmall, NotLegendrian
from .legendrify import S3Curve
from .trigpoly import TWO_PI, ComplexTrigPoly, TrigPoly


@dataclass(frozen=True)
class PolyC2:
    """Complex polynomial ``sum_{i,j <= n} c[i, j] z1^i z2^j``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("coefficients must form a square (n+1) x (n+1) array")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0] - 1

    @classmethod
    def from_terms(cls, terms: dict, n: int | None = None) -> "PolyC2":
        n = max((max(i, j) for i, j in terms), default=0) if n is None else n
        c = np.zeros((n + 1, n + 1), dtype=complex)
        for (i, j), v in terms.items():
            c[i, j] += v
        return cls(c)

    def __call__(self, z1, z2):
        return np.polynomial.polynomial.polyval2d(np.asarray(z1), np.asarray(z2), self.coeffs)

    def d1(self) -> "PolyC2":
        c = self.coeffs[1:, :] * np.arange(1, self.n + 1)[:, None]
        return PolyC2(np.pad(c, ((0, 1), (0, 0))))

    def d2(self) -> "PolyC2":
        c = self.coeffs[:, 1:] * np.arange(1, self.n + 1)[None, :]
        return PolyC2(np.pad(c, ((0, 0), (0, 1))))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def to_table(self, tol: float = 0.0) -> list:
        """``(i, j, re, im)`` rows of the coefficients with modulus above ``tol``."""
        return [(int(i), int(j), float(v.real), float(v.imag))
                for (i, j), v in np.ndenumerate(self.coeffs) if abs(v) > tol]

    @classmethod
    def from_table(cls, rows, n: int | None = None) -> "PolyC2":
        return cls.from_terms({(int(i), int(j)): complex(re, im) for i, j, re, im in rows}, n)


# ---------------------------------------------------------------------------
# System assembly
# ---------------------------------------------------------------------------

@dataclass
class TangencySystem:
    """``A`` has one row per Fourier mode ``k = -D..D`` and one column per monomial."""

    index: list
    A: np.ndarray
    D: int
    n: int
    parity: str
    m: int
    y: np.ndarray | None = None
    curve_id: str = ""
    column_function: object = field(default=None, repr=False)
    rho_scale: float = 1.0  # rows describe (rho_scale * rho)^n G(z(t))

    @property
    def shape(self) -> tuple:
        return self.A.shape

    def vector_to_poly(self, x) -> PolyC2:
        c = np.zeros((self.n + 1, self.n + 1), dtype=complex)
        for (i, j), v in zip(self.index, np.asarray(x)):
            c[i, j] = v
        return PolyC2(c)

    def poly_to_vector(self, g: PolyC2) -> np.ndarray:
        if g.n > self.n:
            extra = [(i, j) for (i, j), v in np.ndenumerate(g.coeffs) if v != 0 and max(i, j) > self.n]
            if extra:
                raise ValueError(f"polynomial has terms beyond degree {self.n}")
        return np.array([g.coeffs[i, j] if max(i, j) <= g.n else 0j for i, j in self.index])


def _is_constant(p: TrigPoly, tol: float = 1e-14) -> bool:
    return p.degree == 0 or float(np.max(np.abs(np.concatenate([p.cos, p.sin])))) <= tol * max(1.0, abs(p.a0))


def monomial_index(n: int, parity: str) -> list:
    idx = [(i, j) for i in range(n + 1) for j in range(n + 1)]
    return [ij for ij in idx if parity == "all" or (ij[0] + ij[1]) % 2 == 0]


def solvability_bound(m: int) -> int:
    """Degree beyond which the homogeneous system has more unknowns than equations."""
    return int(math.floor(4 * m - 1 + math.sqrt(2) * math.sqrt(4 * m - 1 + 8 * m * m)))


def normalized(c: S3Curve, n_check: int = 4096) -> tuple[S3Curve, float]:
    """Same curve with numerators rescaled so that ``max rho = 1``.

    ``z(t)`` is unchanged; powers ``rho^n`` no longer overflow for large ``n``.
    Returns the curve and the factor ``k^2`` applied to ``rho``.
    """
    top = float(np.max(c.rho.sample(max(n_check, 4 * c.rho.degree + 1))))
    k2 = 1.0 / top
    k = math.sqrt(k2)
    return S3Curve(*(p * k for p in c.numerators), c.rho * k2), k2


def _grid(c: S3Curve, N: int):
    u = c.n1.sample(N) + 1j * c.n2.sample(N)
    v = c.n3.sample(N) + 1j * c.n4.sample(N)
    return u, v, c.rho.sample(N)


def assemble_A(c: S3Curve, n: int, parity: str = "auto", *, block: int = 256,
               curve_id: str = "") -> TangencySystem:
    """Coefficient matrix of ``rho^n G(z(t))`` in the exponential basis.

    The curve is first normalised to ``max rho = 1`` (see :func:`normalized`);
    this rescales every row by the same factor and leaves solutions unchanged.
    Columns are computed by sampling each basis function on a uniform grid
    with more than ``2D+1`` points and one FFT, which is exact for
    trigonometric polynomials of degree ``D``.

    Parameters
    ----------
    parity : {"auto", "even", "all"}
        ``"even"`` keeps monomials with even ``i + j`` so every power of
        ``R`` is a power of ``rho``. ``"all"`` requires constant ``rho``.
        ``"auto"`` picks ``"all"`` exactly when ``rho`` is constant.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    c, k2 = normalized(c)
    const_rho = _is_constant(c.rho)
    if parity == "auto":
        parity = "all" if const_rho else "even"
    if parity not in ("all", "even"):
        raise ValueError(f"unknown parity {parity!r}")
    if parity == "all" and not const_rho:
        raise ValueError("odd monomials need a constant rho")
    m = c.degree
    D = 2 * m * n
    index = monomial_index(n, parity)
    N = 1 << max(3, int(math.ceil(math.log2(2 * D + 2))))
    u, v, rho = _grid(c, N)
    U = np.cumprod(np.vstack([np.ones(N), np.tile(u, (n, 1))]), axis=0)
    V = np.cumprod(np.vstack([np.ones(N), np.tile(v, (n, 1))]), axis=0)
    R = np.sqrt(rho.mean()) if const_rho else None
    if const_rho:
        Rp = R ** np.arange(2 * n + 1)[:, None] * np.ones(N)
    else:
        Rp = np.cumprod(np.vstack([np.ones(N), np.tile(rho, (n, 1))]), axis=0)
    modes = np.arange(-D, D + 1) % N
    A = np.empty((2 * D + 1, len(index)), dtype=complex)
    for lo in range(0, len(index), block):
        cols = index[lo:lo + block]
        vals = np.empty((len(cols), N), dtype=complex)
        for k, (i, j) in enumerate(cols):
            e = 2 * n - i - j
            vals[k] = U[i] * V[j] * (Rp[e] if const_rho else Rp[e // 2])
        A[:, lo:lo + len(cols)] = (np.fft.fft(vals, axis=1) / N)[:, modes].T

    def column_function(i, j, _c=c, _n=n):
        """Basis function of column ``(i, j)`` as a callable of ``t``."""
        def f(t):
            t = np.asarray(t, dtype=float)
            uu = _c.n1(t) + 1j * _c.n2(t)
            vv = _c.n3(t) + 1j * _c.n4(t)
            return uu ** i * vv ** j * np.sqrt(_c.rho(t)) ** (2 * _n - i - j)
        return f

    return TangencySystem(index, A, D, n, parity, m, curve_id=curve_id, column_function=column_function,
                          rho_scale=k2)


def synthesize(sys: TangencySystem, x, t) -> np.ndarray:
    """Evaluate the trigonometric polynomial with mode vector ``A x`` (or ``x`` of row length)."""
    x = np.asarray(x)
    coeffs = sys.A @ x if x.shape[0] == sys.A.shape[1] else x
    return ComplexTrigPoly(coeffs)(t)


def nullspace(sys: TangencySystem, tol: float = 1e-8) -> list:
    """Right singular vectors with ``sigma <= tol * sigma_max``, as polynomials.

    Candidates come in increasing singular-value order; each carries
    ``sigma`` as an attribute via :class:`Candidate`.
    """
    A = sys.A
    if A.size == 0:
        return []
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    smax = float(s[0]) if s.size else 0.0
    sig = np.concatenate([s, np.zeros(Vh.shape[0] - s.size)])
    if smax == 0:
        keep = np.arange(Vh.shape[0])
    else:
        keep = np.flatnonzero(sig <= tol * smax)
    keep = keep[np.argsort(sig[keep], kind="stable")]
    return [Candidate(sys.vector_to_poly(Vh[k].conj()), float(sig[k])) for k in keep]


@dataclass(frozen=True)
class Candidate:
    poly: PolyC2
    sigma: float


def least_squares(sys: TangencySystem, rcond: float | None = None) -> tuple[PolyC2, float]:
    """Minimum-norm solution of ``A x = y`` and the relative residual."""
    if sys.y is None:
        raise ValueError("system has no right-hand side")
    y = sys.y
    ny = float(np.linalg.norm(y))
    if ny == 0:
        return sys.vector_to_poly(np.zeros(sys.A.shape[1])), 0.0
    x, *_ = np.linalg.lstsq(sys.A, y, rcond=rcond)
    return sys.vector_to_poly(x), float(np.linalg.norm(sys.A @ x - y) / ny)


# ---------------------------------------------------------------------------
# Tangent section and the right-hand side
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangentSectionData:
    """``P = rho^2 H`` with ``H = X.v2 + i X.v1`` for ``X`` the parameter derivative."""

    P: ComplexTrigPoly
    rho: TrigPoly
    n_min: int = 2
    check: float = 0.0  # max |P/rho^2 - H_direct| on the check grid

    def H(self, t):
        return self.P(t) / self.rho(t) ** 2


def _wedge(a: TrigPoly, b: TrigPoly) -> TrigPoly:
    return a * b.derivative() - b * a.derivative()


def contact_frame_components(c: S3Curve, t):
    """``(X.v1, X.v2)`` by direct evaluation of coordinates and derivatives."""
    z1, z2 = c.z(t)
    d1, d2 = c.z_prime(t)
    x1, y1, x2, y2 = z1.real, z1.imag, z2.real, z2.imag
    dx1, dy1, dx2, dy2 = d1.real, d1.imag, d2.real, d2.imag
    xv1 = -x2 * dx1 + y2 * dy1 + x1 * dx2 - y1 * dy2
    xv2 = -y2 * dx1 - x2 * dy1 + y1 * dx2 + x1 * dy2
    return xv1, xv2


def tangent_section(c: S3Curve, *, legendrian_tol: float = 1e-8, n_check: int = 512) -> TangentSectionData:
    """Exact trigonometric form of ``rho^2 H`` along a Legendrian curve.

    With ``x_i = n_i / R`` the frame components are ``Q / rho`` for
    trigonometric ``Q`` built from the Wronskians ``n_a n_b' - n_b n_a'``.

    Raises
    ------
    NotLegendrian
        If the imaginary Legendrian residual exceeds ``legendrian_tol``.
    """
    res = c.residuals(max(n_check, 4 * c.degree + 8))
    if res["imag"] > legendrian_tol:
        raise NotLegendrian(f"contact residual {res['imag']:.2e} exceeds {legendrian_tol:.1e}")
    n1, n2, n3, n4 = c.numerators
    q1 = _wedge(n1, n3) + _wedge(n4, n2)  # rho * X.v1
    q2 = _wedge(n1, n4) + _wedge(n2, n3)  # rho * X.v2
    P = (q2 * c.rho).to_complex() + (q1 * c.rho).to_complex() * ComplexTrigPoly([1j])
    t = TWO_PI * np.arange(n_check) / n_check
    xv1, xv2 = contact_frame_components(c, t)
    H = P(t) / c.rho(t) ** 2
    err = float(np.max(np.abs(H - (xv2 + 1j * xv1))))
    return TangentSectionData(P, c.rho, 2, err)


def assemble_y(c: S3Curve, n: int, sys: TangencySystem, data: TangentSectionData | None = None) -> TangencySystem:
    """Attach the mode vector of ``rho^(n-2) P = R^(2n) H`` to ``sys``."""
    if n < 2:
        raise DegreeTooSmall(f"n = {n} < 2 leaves R^(2n) H non-polynomial")
    if n != sys.n:
        raise ValueError("n differs from the system's degree")
    data = data or tangent_section(c)
    k2 = sys.rho_scale
    # P = rho^2 H scales by k2^2 along with rho
    rhs = ((c.rho * k2) ** (n - 2)).to_complex() * data.P * (k2 * k2) if n > 2 else data.P * (k2 * k2)
    if rhs.degree > sys.D:
        raise ValueError("right-hand side degree exceeds the system's mode range")
    sys.y = rhs.padded(sys.D)
    return sys


# ---------------------------------------------------------------------------
# Bateman fields
# ---------------------------------------------------------------------------

def _denominator(x, y, z, t):
    return x * x + y * y + z * z - (t - 1j) ** 2


def alpha_beta(x, y, z, t):
    """The map ``R^{3+1} -> S^3`` of the Hopf-type Bateman construction."""
    x, y, z, t = (np.asarray(a, dtype=float) for a in (x, y, z, t))
    d = _denominator(x, y, z, t)
    a = (x * x + y * y + z * z - t * t - 1 + 2j * z) / d
    b = 2 * (x - 1j * y) / d
    return a, b


def alpha_beta_derivatives(x, y, z, t):
    """``(alpha, beta, grad alpha, grad beta, d_t alpha, d_t beta)``; gradients have a trailing axis of 3."""
    x, y, z, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, t)))
    d = _denominator(x, y, z, t)
    a = (x * x + y * y + z * z - t * t - 1 + 2j * z)
    b = 2 * (x - 1j * y)
    al, be = a / d, b / d
    gD = np.stack([2 * x, 2 * y, 2 * z], axis=-1)
    ga = np.stack([2 * x, 2 * y, 2 * z + 2j], axis=-1)
    gb = np.stack([2 * np.ones_like(x), -2j * np.ones_like(x), np.zeros_like(x)], axis=-1)
    dtD = -2 * (t - 1j)
    grad_a = (ga - al[..., None] * gD) / d[..., None]
    grad_b = (gb - be[..., None] * gD) / d[..., None]
    dta = (-2 * t - al * dtD) / d
    dtb = (-be * dtD) / d
    return al, be, grad_a, grad_b, dta, dtb


def bateman_field(h, x, y, z, t):
    """Riemann-Silberstein vector ``F = h(alpha, beta) grad alpha x grad beta``.

    ``h`` is a :class:`PolyC2` or any callable of ``(alpha, beta)``.
    Returns complex vectors with a trailing axis of 3; ``E = Re F``, ``B = Im F``.
    """
    al, be, ga, gb, _, _ = alpha_beta_derivatives(x, y, z, t)
    return h(al, be)[..., None] * np.cross(ga, gb)


def bateman_identity_residual(x, y, z, t) -> np.ndarray:
    """Relative size of ``grad a x grad b - i (a_t grad b - b_t grad a)``."""
    _, _, ga, gb, dta, dtb = alpha_beta_derivatives(x, y, z, t)
    lhs = np.cross(ga, gb)
    rhs = 1j * (dta[..., None] * gb - dtb[..., None] * ga)
    return np.linalg.norm(lhs - rhs, axis=-1) / np.maximum(np.linalg.norm(lhs, axis=-1), 1e-300)


def maxwell_residuals(h, x, y, z, t, step: float = 1e-4) -> dict:
    """Central-difference vacuum Maxwell residuals of a Bateman field at one point.

    Each entry is normalised by ``|F| / step``-free scale ``max(|F|, |grad F|)``.
    """
    p = np.array([x, y, z, t], dtype=float)

    def F(q):
        return bateman_field(h, q[0], q[1], q[2], q[3])

    J = np.empty((4, 3), dtype=complex)  # J[a, c] = d F_c / d p_a
    for a in range(4):
        e = np.zeros(4)
        e[a] = step
        J[a] = (F(p + e) - F(p - e)) / (2 * step)
    E, B = J.real, J.imag
    div_e = E[0, 0] + E[1, 1] + E[2, 2]
    div_b = B[0, 0] + B[1, 1] + B[2, 2]

    def curl(M):
        return np.array([M[1, 2] - M[2, 1], M[2, 0] - M[0, 2], M[0, 1] - M[1, 0]])

    scale = max(float(np.abs(J).max()), 1e-300)
    return {"div_E": abs(div_e) / scale, "div_B": abs(div_b) / scale,
            "faraday": float(np.linalg.norm(curl(E) + B[3])) / scale,
            "ampere": float(np.linalg.norm(curl(B) - E[3])) / scale}


# ---------------------------------------------------------------------------
# Candidate checks
# ---------------------------------------------------------------------------

def _random_s3(rng, k):
    p = rng.standard_normal((k, 4))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    return p[:, 0] + 1j * p[:, 1], p[:, 2] + 1j * p[:, 3]


def verify_candidate_G(g: PolyC2, c: S3Curve, samples: int = 1024, *, mc_samples: int = 4000,
                       seed: int = 0, off_curve: float = 0.05) -> dict:
    """Heuristic report on a candidate ``G`` vanishing on the curve.

    All Monte-Carlo quantities are sampling estimates, not certificates.
    """
    flags = []
    if g.is_zero():
        return {"flags": ["TrivialCandidate"]}
    t = TWO_PI * np.arange(samples) / samples
    z1, z2 = c.z(t)
    vals = np.abs(g(z1, z2))
    grad = np.sqrt(np.abs(g.d1()(z1, z2)) ** 2 + np.abs(g.d2()(z1, z2)) ** 2)
    rng = np.random.default_rng(seed)
    # interior of the 4-ball, radii uniform in volume
    w1, w2 = _random_s3(rng, mc_samples)
    r = rng.random(mc_samples) ** 0.25 * 0.999
    interior = float(np.min(np.abs(g(r * w1, r * w2))))
    s1, s2 = _random_s3(rng, mc_samples)
    pts = np.stack([s1.real, s1.imag, s2.real, s2.imag], axis=1)
    cur = np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=1)
    from scipy.spatial import cKDTree
    dist, _ = cKDTree(cur).query(pts)
    far = dist > off_curve
    sphere = float(np.min(np.abs(g(s1[far], s2[far])))) if np.any(far) else math.nan
    if float(np.min(grad)) == 0:
        flags.append("SingularOnCurve")
    return {"flags": flags, "max_abs_on_curve": float(vals.max()),
            "relative_on_curve": float(vals.max() / g.norm()),
            "min_grad_on_curve": float(grad.min()),
            "mc_min_abs_interior": interior, "mc_min_abs_sphere_off_curve": sphere,
            "heuristic": True}


def verify_candidate_h(h, c: S3Curve, samples: int = 256, *, tol: float = 1e-6,
                       data: TangentSectionData | None = None) -> dict:
    """Is the curve, pushed to R^3 at ``t = 0``, a field line of ``B = Im F``?

    Reports ``max |B x T| / (|B| |T|)`` over samples and, when the tangent
    section is available, ``max |h(z(t)) - H(t)|``.
    """
    from .dynamics import phi0, phi0_velocity

    t = TWO_PI * np.arange(samples) / samples
    z1, z2 = c.z(t)
    P = phi0(z1, z2)
    T = phi0_velocity(c, t)
    F = bateman_field(h, P[:, 0], P[:, 1], P[:, 2], np.zeros(samples))
    B = F.imag
    nb, nt = np.linalg.norm(B, axis=1), np.linalg.norm(T, axis=1)
    out = {"flags": []}
    if float(nb.max()) == 0.0 or float(nb.min()) <= 1e-14 * max(1.0, float(nb.max())):
        out["flags"].append("DegenerateField")
        out["parallelism"] = math.nan
    else:
        out["parallelism"] = float(np.max(np.linalg.norm(np.cross(B, T), axis=1) / (nb * nt)))
        # orientation agreement is informative, not required
        out["aligned_fraction"] = float(np.mean(np.einsum("ij,ij->i", B, T) > 0))
    if data is None:
        try:
            data = tangent_section(c)
        except NotLegendrian:
            data = None
    if data is not None:
        out["max_h_minus_H"] = float(np.max(np.abs(h(z1, z2) - data.H(t))))
    out["passes"] = bool(out["parallelism"] <= tol) if not out["flags"] else False
    return out


__all__ = [
    "PolyC2", "TangencySystem", "monomial_index", "solvability_bound", "assemble_A", "synthesize",
    "nullspace", "Candidate", "least_squares", "TangentSectionData", "tangent_section",
    "contact_frame_components", "assemble_y", "alpha_beta", "alpha_beta_derivatives",
    "bateman_field", "bateman_identity_residual", "maxwell_residuals", "verify_candidate_G",
    "verify_candidate_h",
]
