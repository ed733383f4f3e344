"""Weighted Bergman space of the Poincare punctured unit disc.

The space at tensor power p has the orthonormal basis
``(ell^(p-1) / (2 pi (p-2)!))^(1/2) z^ell`` for ell = 1, 2, ... and the
diagonal kernel function

    B_p(z) = |log|z|^2|^p / (2 pi (p-2)!) * sum_ell ell^(p-1) |z|^(2 ell).

Every series here is evaluated in the log domain (log-gamma plus
log-sum-exp): at p ~ 200 the terms span far more than 300 orders of
magnitude, so direct summation is impossible in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "Annulus",
    "DiscSpace",
    "DomainError",
    "KernelValue",
    "TruncationError",
    "adaptive_truncation",
    "c1_area",
    "expected_zero_measure",
    "hyperbolic_area",
    "kernel",
    "kernel_function",
    "log_bergman_l1",
    "log_kernel_function",
    "make_disc_space",
    "normalized_kernel",
    "poincare_distance",
    "sup_kernel",
    "zero_counting_function",
]

LOG_2PI = math.log(2.0 * math.pi)

# Relative tail mass below which a truncated basis is considered exact
# for kernel evaluation purposes.
KERNEL_TAIL_RTOL = 1e-14


class DomainError(ValueError):
    """A point lies outside the punctured unit disc / an invalid region."""


class TruncationError(RuntimeError):
    """The basis truncation is too short for the requested radius.

    Attributes
    ----------
    required_length : int
        Smallest truncation length that satisfies the tail bound.
    """

    def __init__(self, message: str, required_length: int):
        super().__init__(message)
        self.required_length = required_length


@dataclass(frozen=True)
class Annulus:
    """Open annulus {a < |z| < b} inside the punctured unit disc."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a <= self.b < 1.0):
            raise DomainError(f"annulus radii must satisfy 0 < a <= b < 1, got ({self.a}, {self.b})")

    @property
    def is_empty(self) -> bool:
        return self.a >= self.b

    def contains(self, z: complex, tol: float = 1e-10) -> bool:
        return self.a - tol <= abs(z) <= self.b + tol


@dataclass(frozen=True)
class KernelValue:
    """A kernel (or section) value stored as log-magnitude and phase.

    ``log_modulus = -inf`` marks an underflow to exactly zero.
    """

    log_modulus: float
    phase: float

    @property
    def is_underflow(self) -> bool:
        return self.log_modulus == -math.inf

    def to_complex(self) -> complex:
        """Inflate to an ordinary complex number (may over/underflow)."""
        if self.is_underflow:
            return 0.0 + 0.0j
        return math.exp(self.log_modulus) * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class DiscSpace:
    """Truncated Bergman space of the punctured disc at tensor power p.

    ``log_coeffs[i]`` is ``2 log c_ell`` for ell = i + 1, the log of the
    squared basis amplitude ``ell^(p-1) / (2 pi (p-2)!)``.  Immutable; all
    operations on it are pure.
    """

    p: int
    L: int
    log_coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.log_coeffs.setflags(write=False)

    @property
    def ells(self) -> np.ndarray:
        return np.arange(1, self.L + 1, dtype=np.float64)


def make_disc_space(p: int, L: int) -> DiscSpace:
    """Build the truncated space; amplitudes via log-gamma arithmetic."""
    if p < 2:
        raise ValueError(f"tensor power p must be >= 2 (basis needs (p-2)!), got {p}")
    if L < 1:
        raise ValueError(f"truncation length L must be >= 1, got {L}")
    ells = np.arange(1, L + 1, dtype=np.float64)
    log_coeffs = (p - 1) * np.log(ells) - LOG_2PI - gammaln(p - 1)
    if not np.all(np.isfinite(log_coeffs)):
        raise ValueError("non-finite basis amplitude; p or L out of usable range")
    return DiscSpace(p=int(p), L=int(L), log_coeffs=log_coeffs)


def _log_coeff(p: int, ell: float) -> float:
    return (p - 1) * math.log(ell) - LOG_2PI - float(gammaln(p - 1))


def adaptive_truncation(p: int, r: float, rel_tol: float = KERNEL_TAIL_RTOL) -> int:
    """Smallest L whose geometric tail bound at radius r is below rel_tol.

    The terms are t_ell = c_ell^2 r^(2 ell).  Past the mode
    ell* = (p-1)/(2 |log r|) the term ratio
    q_ell = ((ell+1)/ell)^(p-1) r^2 is < 1 and decreasing, so the tail
    after L is bounded by t_{L+1} / (1 - q_L).  Returns the smallest L
    with tail bound <= rel_tol * (head sum).
    """
    if not 0.0 < r < 1.0:
        raise DomainError(f"radius must lie in (0, 1), got {r}")
    if rel_tol <= 0.0:
        raise ValueError("rel_tol must be positive")
    log_r = math.log(r)
    ell_star = (p - 1) / (2.0 * abs(log_r))
    hi = max(64, int(2.5 * ell_star) + 64)
    log_rel = math.log(rel_tol)
    while True:
        ells = np.arange(1, hi + 2, dtype=np.float64)
        log_terms = (p - 1) * np.log(ells) + 2.0 * ells * log_r  # common constants cancel
        head = np.logaddexp.accumulate(log_terms)
        # candidate L = 1..hi; tail bound uses term at L+1 and ratio at L
        log_q = (p - 1) * np.log1p(1.0 / ells[:-1]) + 2.0 * log_r
        ok = log_q < -1e-12
        with np.errstate(invalid="ignore", divide="ignore"):
            log_tail = np.where(ok, log_terms[1:] - np.log1p(-np.exp(np.minimum(log_q, -1e-300))), np.inf)
        good = log_tail <= log_rel + head[:-1]
        idx = np.flatnonzero(good)
        if idx.size:
            return int(idx[0]) + 1
        hi *= 2
        if hi > 10_000_000:
            raise RuntimeError("truncation search failed to converge")


def _require_adequate(space: DiscSpace, r: float, rel_tol: float = KERNEL_TAIL_RTOL) -> None:
    required = adaptive_truncation(space.p, r, rel_tol)
    if space.L < required:
        raise TruncationError(
            f"truncation L={space.L} inadequate at radius {r:.6g}; need L >= {required}",
            required_length=required,
        )


def _log_diag_sum(space: DiscSpace, r: float) -> float:
    """log of sum_ell c_ell^2 r^(2 ell) (the unweighted diagonal series)."""
    return float(logsumexp(space.log_coeffs + 2.0 * space.ells * math.log(r)))


def log_kernel_function(space: DiscSpace, r: float) -> float:
    """log B_p(z) for |z| = r, in the natural log."""
    if not 0.0 < r < 1.0:
        raise DomainError(f"radius must lie in (0, 1), got {r}")
    _require_adequate(space, r)
    u = -2.0 * math.log(r)  # |log |z|^2| > 0
    return space.p * math.log(u) + _log_diag_sum(space, r)


def kernel_function(space: DiscSpace, r: float) -> float:
    """Diagonal Bergman kernel function B_p(z) at |z| = r; strictly positive."""
    return math.exp(log_kernel_function(space, r))


def kernel(space: DiscSpace, z: complex, zp: complex) -> KernelValue:
    """Two-point kernel B_p(z, z') in the pointwise h_p norm.

    Returns log-magnitude and phase of
    ``|log|z|^2|^(p/2) |log|z'|^2|^(p/2) sum_ell c_ell^2 (z zbar')^ell``.
    Hermitian: swapping arguments keeps the log-magnitude and flips the
    phase.
    """
    rz, rp = abs(z), abs(zp)
    for r in (rz, rp):
        if not 0.0 < r < 1.0:
            raise DomainError(f"point with |z| = {r:.6g} outside the punctured disc")
    _require_adequate(space, max(rz, rp))
    w = z * np.conj(zp)
    log_w = math.log(abs(w))
    theta = math.atan2(w.imag, w.real)
    log_terms = space.log_coeffs + space.ells * log_w
    m = float(np.max(log_terms))
    s = np.sum(np.exp(log_terms - m) * np.exp(1j * space.ells * theta))
    weight = 0.5 * space.p * (math.log(-2.0 * math.log(rz)) + math.log(-2.0 * math.log(rp)))
    if s == 0.0:
        return KernelValue(log_modulus=-math.inf, phase=0.0)
    return KernelValue(
        log_modulus=weight + m + math.log(abs(s)),
        phase=math.atan2(s.imag, s.real),
    )


def normalized_kernel(space: DiscSpace, z: complex, zp: complex) -> float:
    """N_p(z, z') = |B_p(z,z')| / sqrt(B_p(z) B_p(z')) in [0, 1].

    Computed entirely in the log domain; the h_p weight factors cancel.
    Underflow of the off-diagonal sum returns exactly 0.0.
    """
    rz, rp = abs(z), abs(zp)
    for r in (rz, rp):
        if not 0.0 < r < 1.0:
            raise DomainError(f"point with |z| = {r:.6g} outside the punctured disc")
    _require_adequate(space, max(rz, rp))
    w = z * np.conj(zp)
    log_terms = space.log_coeffs + space.ells * math.log(abs(w))
    m = float(np.max(log_terms))
    theta = math.atan2(w.imag, w.real)
    s = np.sum(np.exp(log_terms - m) * np.exp(1j * space.ells * theta))
    if s == 0.0:
        return 0.0
    log_off = m + math.log(abs(s))
    log_n = log_off - 0.5 * (_log_diag_sum(space, rz) + _log_diag_sum(space, rp))
    return math.exp(log_n)


def sup_kernel(space: DiscSpace, grid_points: int = 256) -> tuple[float, float]:
    """Maximize B_p over the punctured disc.

    The maximizer has exponentially small |z| (its -log r grows like p/2),
    so the search runs in the doubly logarithmic coordinate
    t = log(-log r): a coarse grid bracket followed by golden-section
    refinement.  Returns (r_star, max value).
    """
    if space.p < 3:
        raise ValueError("sup search requires p >= 3")
    # r from 0.95 down to exp(-e * p): covers plateau through the peak
    t_lo = math.log(-math.log(0.95))
    t_hi = math.log(space.p) + 1.0
    _require_adequate(space, 0.95)

    def f(t: float) -> float:
        return log_kernel_function(space, math.exp(-math.exp(t)))

    ts = np.linspace(t_lo, t_hi, grid_points)
    vals = np.array([f(t) for t in ts])
    k = int(np.argmax(vals))
    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, grid_points - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-11:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    t_star = 0.5 * (a + b)
    r_star = math.exp(-math.exp(t_star))
    return r_star, kernel_function(space, r_star)


# ---------------------------------------------------------------------------
# hyperbolic geometry of the punctured disc


def _to_half_plane(z: complex) -> complex:
    """Covering coordinate tau = theta/2pi + i(-log r)/2pi of the cusp."""
    r = abs(z)
    if not 0.0 < r < 1.0:
        raise DomainError(f"point with |z| = {r:.6g} outside the punctured disc")
    theta = math.atan2(z.imag, z.real)
    return complex(theta / (2.0 * math.pi), -math.log(r) / (2.0 * math.pi))


def _arccosh1p(s: float) -> float:
    # arccosh(1 + s) stable for small s >= 0
    return math.log1p(s + math.sqrt(s * (2.0 + s)))


def poincare_distance(z: complex, zp: complex) -> float:
    """Geodesic distance of the cusp metric on the punctured disc.

    Via the covering map to the upper half-plane the metric pulls back to
    half the standard hyperbolic metric, so the distance is
    ``(1/sqrt(2)) * min_n arccosh(1 + |tau - tau' - n|^2 / (2 Im tau Im tau'))``
    with the minimum over integer deck shifts n.
    """
    tau = _to_half_plane(z)
    taup = _to_half_plane(zp)
    dx = tau.real - taup.real
    dx -= round(dx)  # nearest deck representative
    best = math.inf
    for n in (-1.0, 0.0, 1.0):
        d2 = (dx + n) ** 2 + (tau.imag - taup.imag) ** 2
        s = d2 / (2.0 * tau.imag * taup.imag)
        best = min(best, _arccosh1p(s))
    return best / math.sqrt(2.0)


def c1_area(region: Annulus) -> float:
    """Mass of c_1(L, h) = omega / 2pi on the annulus: (1/2)(1/|log b| - 1/|log a|)."""
    if region.is_empty:
        return 0.0
    return 0.5 * (1.0 / abs(math.log(region.b)) - 1.0 / abs(math.log(region.a)))


def hyperbolic_area(region: Annulus) -> float:
    """Mass of the cusp Kaehler form omega on the annulus."""
    return 2.0 * math.pi * c1_area(region)


def zero_counting_function(space: DiscSpace, r: float) -> float:
    """Expected number of zeros of the Gaussian section in {0 < |z| <= r}.

    Radial reduction of the expected-measure identity: with
    K0(r) = sum_ell c_ell^2 r^(2 ell) the count is
    n(r) = (1/2) d log K0 / d log r, i.e. the amplitude-weighted mean index

        n(r) = sum_ell ell w_ell / sum_ell w_ell,   w_ell = c_ell^2 r^(2 ell).

    The h_p weight contributes -p c_1 which cancels the p c_1 term of the
    expected measure, so only the unweighted covariance enters.
    """
    if not 0.0 < r < 1.0:
        raise DomainError(f"radius must lie in (0, 1), got {r}")
    _require_adequate(space, r)
    log_w = space.log_coeffs + 2.0 * space.ells * math.log(r)
    w = np.exp(log_w - np.max(log_w))
    return float(np.sum(space.ells * w) / np.sum(w))


def expected_zero_measure(space: DiscSpace, region: Annulus) -> float:
    """Expected zero count of the truncated Gaussian section in the annulus."""
    if region.is_empty:
        return 0.0
    return zero_counting_function(space, region.b) - zero_counting_function(space, region.a)


def log_bergman_l1(space: DiscSpace, region: Annulus, n_quad: int = 512) -> float:
    """Integral of |log B_p| against the cusp form omega over the annulus.

    Radially, omega reduces to pi * dr / (r log^2 r); Gauss-Legendre in
    t = log(-log r) turns that into pi * e^(-t) dt.
    """
    from numpy.polynomial.legendre import leggauss

    if region.is_empty:
        return 0.0
    t_lo = math.log(-math.log(region.b))
    t_hi = math.log(-math.log(region.a))
    x, w = leggauss(n_quad)
    t = 0.5 * (t_hi - t_lo) * x + 0.5 * (t_hi + t_lo)
    vals = np.array(
        [abs(log_kernel_function(space, math.exp(-math.exp(ti)))) * math.exp(-ti) for ti in t]
    )
    return math.pi * 0.5 * (t_hi - t_lo) * float(np.dot(w, vals))
