"""Gaussian holomorphic sections of the punctured-disc model and their zeros.

A random section is  S(z) = sum_ell eta_ell c_ell z^ell  with i.i.d.
standard complex Gaussian coefficients eta.  Zeros in an annulus are
extracted two independent ways: companion-matrix roots of the truncated
polynomial (with Newton polishing), and winding numbers of the boundary
phase (argument principle).  The two serve as cross-oracles for each
other.

Randomness is drawn from counter-based Philox streams keyed by
(master seed, path), so every sample is reproducible under any thread
schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .disc import Annulus, DiscSpace, DomainError, KernelValue, TruncationError, adaptive_truncation

__all__ = [
    "ContourError",
    "SectionSample",
    "ZeroMethod",
    "ZeroSet",
    "count_zeros_argument_principle",
    "count_zeros_batch",
    "evaluate",
    "find_zeros",
    "linear_statistic",
    "sample_batch",
    "sample_section",
    "section_stream",
    "truncation_length",
]

# Relative tail-variance tolerance guaranteeing that truncation does not
# move zeros inside the working annulus.
ZERO_TAIL_EPS = 1e-8

# Double roots are resolvable only to ~sqrt(machine eps) by eigenvalue or
# Newton methods, so the merge radius sits above that scale; zeros of a
# Gaussian section repel, making spurious merges negligible.
MERGE_DISTANCE = 1e-7
NEWTON_TOL = 1e-12


class ContourError(RuntimeError):
    """A zero persists on the counting contour after perturbation attempts."""


class ZeroMethod(str, Enum):
    COMPANION = "companion"
    ARGUMENT_PRINCIPLE = "argument_principle"


@dataclass(frozen=True)
class SectionSample:
    """One draw of Gaussian coefficients for a fixed truncated space."""

    space: DiscSpace
    eta: np.ndarray = field(repr=False)
    seed_path: tuple[int, ...]

    def __post_init__(self):
        if self.eta.shape != (self.space.L,):
            raise ValueError("coefficient vector length must equal the truncation length")
        self.eta.setflags(write=False)


@dataclass(frozen=True)
class ZeroSet:
    """Zero divisor of a section restricted to an annulus."""

    zeros: tuple[tuple[complex, int], ...]
    region: Annulus
    method: ZeroMethod
    diagnostics: tuple[str, ...] = ()

    @property
    def total(self) -> int:
        return sum(m for _, m in self.zeros)


def section_stream(seed: int, path: Sequence[int] = ()) -> np.random.Generator:
    """Counter-based Philox generator for stream (seed, *path)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(x) for x in path))
    return np.random.Generator(np.random.Philox(ss))


def _draw_eta(rng: np.random.Generator, L: int) -> np.ndarray:
    # interleaved re/im so that streams shared across different L agree
    # on their common prefix
    flat = rng.standard_normal(2 * L)
    return (flat[0::2] + 1j * flat[1::2]) / math.sqrt(2.0)


def sample_section(space: DiscSpace, seed: int, path: Sequence[int] = ()) -> SectionSample:
    """Draw eta ~ CN(0, 1)^L from the stream keyed by (seed, *path)."""
    eta = _draw_eta(section_stream(seed, path), space.L)
    return SectionSample(space=space, eta=eta, seed_path=(int(seed), *map(int, path)))


def sample_batch(space: DiscSpace, seed: int, count: int, base_path: Sequence[int] = ()) -> np.ndarray:
    """Matrix of eta rows for samples indexed (seed, *base_path, i)."""
    out = np.empty((count, space.L), dtype=np.complex128)
    for i in range(count):
        out[i] = _draw_eta(section_stream(seed, (*base_path, i)), space.L)
    return out


def evaluate(sample: SectionSample, z: complex) -> KernelValue:
    """Pointwise value of the section in the h_p norm, as log-magnitude and phase.

    |S(z)|_{h_p} carries the weight |log|z|^2|^{p/2}; the series is summed
    after factoring out its largest log-scaled term.
    """
    space = sample.space
    r = abs(z)
    if not 0.0 < r < 1.0:
        raise DomainError(f"point with |z| = {r:.6g} outside the punctured disc")
    theta = math.atan2(z.imag, z.real)
    log_amp = 0.5 * space.log_coeffs + space.ells * math.log(r)
    m = float(np.max(log_amp))
    s = np.sum(sample.eta * np.exp(log_amp - m) * np.exp(1j * space.ells * theta))
    weight = 0.5 * space.p * math.log(-2.0 * math.log(r))
    if s == 0.0:
        return KernelValue(log_modulus=-math.inf, phase=0.0)
    return KernelValue(log_modulus=weight + m + math.log(abs(s)), phase=math.atan2(s.imag, s.real))


def truncation_length(p: int, b: float, eps: float = ZERO_TAIL_EPS) -> int:
    """Smallest L with relative tail variance of the field on |z| <= b below eps^2."""
    return adaptive_truncation(p, b, rel_tol=eps * eps)


# ---------------------------------------------------------------------------
# companion-matrix root extraction


def _balanced_coefficients(space: DiscSpace, eta: np.ndarray, beta: float) -> np.ndarray:
    """Coefficients of P(w) = S(beta w) / (beta w), low degree first.

    P has degree L - 1; the common factor z (the puncture zero) is
    dropped.  The scaling beta balances the huge dynamic range of c_ell,
    and the result is normalized by its largest magnitude, so entries
    whose true size is below the double-precision floor underflow to
    exactly zero (harmless: they only control roots far outside the
    annulus).
    """
    k = np.arange(space.L, dtype=np.float64)  # degree in w for ell = k + 1
    log_mag = 0.5 * space.log_coeffs + k * math.log(beta)
    log_mag = log_mag - np.max(log_mag)
    return eta * np.exp(log_mag)


def _newton_polish(coeffs_low: np.ndarray, roots: np.ndarray, max_iter: int = 50):
    high = coeffs_low[::-1]
    dhigh = (coeffs_low[1:] * np.arange(1, coeffs_low.size))[::-1]
    polished = np.array(roots, dtype=np.complex128)
    converged = np.zeros(roots.shape, dtype=bool)
    for _ in range(max_iter):
        pv = np.polyval(high, polished)
        dv = np.polyval(dhigh, polished)
        ok = dv != 0.0
        step = np.where(ok, pv / np.where(ok, dv, 1.0), 0.0)
        done = np.abs(step) < NEWTON_TOL * np.maximum(1.0, np.abs(polished))
        converged |= done
        if np.all(converged):
            break
        polished = polished - np.where(converged, 0.0, step)
    return polished, converged


def find_zeros(sample: SectionSample, region: Annulus) -> ZeroSet:
    """Zeros of the section inside the annulus via companion-matrix eigenvalues.

    The puncture's forced zero at z = 0 is always excluded.  Roots are
    Newton-polished, merged within 1e-8 (multiplicity summed; Gaussian
    sections have simple zeros almost surely, so merges are flagged), and
    sorted by radius then angle.
    """
    space = sample.space
    required = truncation_length(space.p, region.b)
    if space.L < required:
        raise TruncationError(
            f"truncation L={space.L} inadequate for zeros up to |z|={region.b}; need {required}",
            required_length=required,
        )
    diagnostics: list[str] = []
    beta = math.sqrt(region.a * region.b)
    coeffs_low = _balanced_coefficients(space, sample.eta, beta)
    nz = np.flatnonzero(coeffs_low != 0.0)
    if nz.size == 0:
        return ZeroSet(zeros=(), region=region, method=ZeroMethod.COMPANION)
    # stray zero leading/trailing coefficients shrink the companion matrix
    lead = nz[-1]
    trail = nz[0]
    reduced = coeffs_low[trail : lead + 1]
    if reduced.size <= 1:
        return ZeroSet(zeros=(), region=region, method=ZeroMethod.COMPANION)
    roots_w = np.roots(reduced[::-1])
    scale = region.b / beta
    keep = (np.abs(roots_w) >= (region.a / beta) * (1.0 - 1e-6)) & (np.abs(roots_w) <= scale * (1.0 + 1e-6))
    roots_w = roots_w[keep]
    if roots_w.size:
        roots_w, converged = _newton_polish(coeffs_low, roots_w)
        for w, ok in zip(roots_w, converged):
            if not ok:
                diagnostics.append(f"newton non-convergence at z={beta * w:.12g}")
    # strict interior membership keeps companion and winding counts aligned:
    # both methods then count the same open annulus
    roots_z = beta * roots_w
    in_region = [z for z in roots_z if region.a < abs(z) < region.b]
    in_region.sort(key=lambda z: (abs(z), math.atan2(z.imag, z.real)))
    merged: list[tuple[complex, int]] = []
    for z in in_region:
        if merged and abs(z - merged[-1][0]) < MERGE_DISTANCE:
            zprev, m = merged[-1]
            merged[-1] = (zprev, m + 1)
            diagnostics.append(f"merged near-coincident roots at z={zprev:.12g} (multiplicity {m + 1})")
        else:
            merged.append((complex(z), 1))
    return ZeroSet(zeros=tuple(merged), region=region, method=ZeroMethod.COMPANION, diagnostics=tuple(diagnostics))


# ---------------------------------------------------------------------------
# argument-principle counting


def _circle_values(space: DiscSpace, etas: np.ndarray, r: float, thetas: np.ndarray) -> np.ndarray:
    """Section values (up to a positive scalar) on |z| = r for a batch of etas."""
    log_amp = 0.5 * space.log_coeffs + space.ells * math.log(r)
    amp = np.exp(log_amp - np.max(log_amp))
    basis = amp[:, None] * np.exp(1j * np.outer(space.ells, thetas))
    return etas @ basis


def _winding_one(
    space: DiscSpace,
    eta: np.ndarray,
    r: float,
    n_init: int,
    max_depth: int = 40,
) -> int:
    """Winding number of the section along |z| = r by adaptive phase tracking."""
    thetas = np.linspace(0.0, 2.0 * math.pi, n_init, endpoint=False)
    vals = _circle_values(space, eta[None, :], r, thetas)[0]
    for _ in range(max_depth):
        mags = np.abs(vals)
        if np.min(mags) < 1e-13 * np.max(mags):
            raise ContourError(f"section vanishes on the contour |z| = {r}")
        phases = np.angle(vals)
        dphi = np.diff(np.concatenate([phases, phases[:1]]))
        dphi = (dphi + math.pi) % (2.0 * math.pi) - math.pi
        bad = np.abs(dphi) >= math.pi / 2.0
        if not np.any(bad):
            w = float(np.sum(dphi)) / (2.0 * math.pi)
            wi = round(w)
            if abs(w - wi) > 1e-6:
                raise ContourError(f"non-integer winding {w} on |z| = {r}")
            return int(wi)
        idx = np.flatnonzero(bad)
        nxt = np.concatenate([thetas[1:], thetas[:1] + 2.0 * math.pi])
        mids = 0.5 * (thetas[idx] + nxt[idx])
        mid_vals = _circle_values(space, eta[None, :], r, mids)[0]
        order = np.argsort(np.concatenate([thetas, mids]), kind="stable")
        thetas = np.concatenate([thetas, mids])[order]
        vals = np.concatenate([vals, mid_vals])[order]
    raise ContourError(f"phase tracking did not settle on |z| = {r}")


def _initial_points(space: DiscSpace, r: float) -> int:
    # winding is at most the dominant index scale; 8x oversampling keeps
    # nearly all increments below pi/2 on the first pass
    from .disc import zero_counting_function

    n = zero_counting_function(space, r)
    return max(256, 1 << int(math.ceil(math.log2(8.0 * (n + 8.0)))))


def _winding_with_perturbation(space: DiscSpace, eta: np.ndarray, r: float, n_init: int) -> tuple[int, tuple[str, ...]]:
    notes: list[str] = []
    for attempt in range(4):
        rr = r + (0.0 if attempt == 0 else (-1) ** attempt * 1e-6 * attempt)
        try:
            return _winding_one(space, eta, rr, n_init), tuple(notes)
        except ContourError as exc:
            notes.append(f"perturbing contour |z|={r}: {exc}")
    raise ContourError(f"contour through zero persists near |z| = {r} after 3 perturbations")


def count_zeros_argument_principle(sample: SectionSample, region: Annulus) -> int:
    """Zero count in the annulus as the winding-number difference of the two circles.

    Phase increments are kept below pi/2 by adaptive midpoint insertion.
    If the section vanishes on a contour, the radius is perturbed by
    multiples of 1e-6 (up to 3 attempts) and the perturbation recorded in
    the raised diagnostics on final failure.
    """
    space = sample.space
    required = truncation_length(space.p, region.b)
    if space.L < required:
        raise TruncationError(
            f"truncation L={space.L} inadequate for zeros up to |z|={region.b}; need {required}",
            required_length=required,
        )
    w_out, _ = _winding_with_perturbation(space, sample.eta, region.b, _initial_points(space, region.b))
    w_in, _ = _winding_with_perturbation(space, sample.eta, region.a, _initial_points(space, region.a))
    return int(w_out - w_in)


def _wrap(dphi: np.ndarray) -> np.ndarray:
    return (dphi + math.pi) % (2.0 * math.pi) - math.pi


def _winding_batch(space: DiscSpace, etas: np.ndarray, r: float, max_rounds: int = 40) -> np.ndarray:
    """Winding numbers of many sections along |z| = r, batched.

    One shared-grid pass evaluates every section at once; afterwards only
    the offending segments (phase increment >= pi/2, almost always caused
    by a zero close to the contour) get midpoints inserted, with all
    pending midpoints across all samples evaluated together each round.
    """
    m = etas.shape[0]
    n_init = _initial_points(space, r)
    log_amp = 0.5 * space.log_coeffs + space.ells * math.log(r)
    amp = np.exp(log_amp - np.max(log_amp))
    coeff = etas * amp[None, :]

    thetas0 = np.linspace(0.0, 2.0 * math.pi, n_init, endpoint=False)
    out = np.empty(m, dtype=np.int64)
    basis = np.exp(1j * np.outer(space.ells, thetas0))
    gemm_chunk = max(1, 16_777_216 // max(n_init, 1))
    theta_arrays: list[np.ndarray] = [thetas0] * m
    val_arrays: list[np.ndarray] = []
    for lo in range(0, m, gemm_chunk):
        vals = coeff[lo : lo + gemm_chunk] @ basis
        val_arrays.extend(vals)

    pending = list(range(m))
    for round_no in range(max_rounds):
        mid_sample: list[int] = []
        mid_theta: list[np.ndarray] = []
        next_pending: list[int] = []
        for i in pending:
            vals = val_arrays[i]
            mags = np.abs(vals)
            if np.min(mags) < 1e-13 * np.max(mags):
                out[i], _ = _winding_with_perturbation(space, etas[i], r, 2 * n_init)
                continue
            phases = np.angle(vals)
            dphi = _wrap(np.diff(np.concatenate([phases, phases[:1]])))
            bad = np.flatnonzero(np.abs(dphi) >= math.pi / 2.0)
            if bad.size == 0:
                w = float(np.sum(dphi)) / (2.0 * math.pi)
                wi = round(w)
                if abs(w - wi) > 1e-6:
                    out[i], _ = _winding_with_perturbation(space, etas[i], r, 2 * n_init)
                else:
                    out[i] = wi
                continue
            th = theta_arrays[i]
            nxt = np.concatenate([th[1:], th[:1] + 2.0 * math.pi])
            mids = 0.5 * (th[bad] + nxt[bad])
            mid_sample.append(i)
            mid_theta.append(mids)
            next_pending.append(i)
        if not next_pending:
            return out
        flat_theta = np.concatenate(mid_theta)
        owners = np.repeat(mid_sample, [t.size for t in mid_theta])
        flat_vals = np.einsum(
            "pl,pl->p", coeff[owners], np.exp(1j * np.outer(flat_theta, space.ells))
        )
        pos = 0
        for i, mids in zip(mid_sample, mid_theta):
            vals_new = flat_vals[pos : pos + mids.size]
            pos += mids.size
            th = theta_arrays[i]
            order = np.argsort(np.concatenate([th, mids]), kind="stable")
            theta_arrays[i] = np.concatenate([th, mids])[order]
            val_arrays[i] = np.concatenate([val_arrays[i], vals_new])[order]
        pending = next_pending
    for i in pending:  # refinement cap: almost certainly a contour zero
        out[i], _ = _winding_with_perturbation(space, etas[i], r, 2 * n_init)
    return out


def count_zeros_batch(space: DiscSpace, etas: np.ndarray, region: Annulus) -> np.ndarray:
    """Argument-principle zero counts for a batch of coefficient rows."""
    required = truncation_length(space.p, region.b)
    if space.L < required:
        raise TruncationError(
            f"truncation L={space.L} inadequate for zeros up to |z|={region.b}; need {required}",
            required_length=required,
        )
    return _winding_batch(space, etas, region.b) - _winding_batch(space, etas, region.a)


def linear_statistic(zset: ZeroSet, phi: Callable[[complex], float]) -> float:
    """Sum of phi over the zeros, with multiplicity."""
    return float(sum(m * phi(z) for z, m in zset.zeros))
