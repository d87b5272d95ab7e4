"""The charge-entropy phase diagram.

Points are pairs (a, s): per-copy charge expectation values and per-copy
entropy.  The achievable region at fixed a is the vertical segment from 0
up to the entropy of the max-entropy state with those charges; membership,
boundary classification, tensor-product realization, and the conditional
(negative-entropy) extension all live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._rng import generator
from .errors import NonInterior, NumericalError, ValidationError
from .gibbs import ChargeSet, gibbs_from_beta, solve_beta
from .opcore import (LN2, DensityState, EntropyValue, clamp_spectrum,
                     eigh_sorted, entropy_nats_of_matrix, hermitize)


class Membership(str, Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"


@dataclass(eq=False)
class DiagramPoint:
    """A (charges, entropy) pair for n-copy blocks (per-copy normalized)."""

    a: np.ndarray
    s: float
    units: str = "bits"
    n: int = 1

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).ravel()
        if self.units not in ("bits", "nats"):
            raise ValidationError(f"unknown units {self.units!r}")
        if self.n < 1:
            raise ValidationError("copy count must be >= 1")

    @property
    def s_nats(self) -> float:
        return self.s * LN2 if self.units == "bits" else self.s

    @property
    def s_bits(self) -> float:
        return self.s if self.units == "bits" else self.s / LN2


@dataclass(eq=False)
class DiagramQuery:
    charges: ChargeSet
    tol: float = 1e-6

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError("tolerance must be > 0")


@dataclass
class MaxEntropyResult:
    """Entropy cap at fixed charges; boundary caps are extrapolated."""

    entropy: EntropyValue
    approximate: bool

    def __float__(self) -> float:
        return self.entropy.nats


N_SUPPORT_DIRECTIONS = 512


def charge_support(charges: ChargeSet, direction) -> tuple:
    """Support interval of <direction, a> over all states: the extreme
    eigenvalues of sum_j c_j A_j."""
    c = np.asarray(direction, dtype=float).ravel()
    if c.shape != (charges.num_charges,):
        raise ValidationError("direction length mismatch")
    nrm = float(np.linalg.norm(c))
    if nrm == 0.0:
        raise ValidationError("direction must be nonzero")
    w = np.linalg.eigvalsh(hermitize(charges.combination(c)))
    return (float(w[0]), float(w[-1]))


def centroid_charges(charges: ChargeSet) -> np.ndarray:
    """Charge values of the maximally mixed state."""
    d = charges.local_dim
    return np.array([float(np.real(np.trace(m))) / d for m in charges.matrices()])


def _support_gap(charges: ChargeSet, a: np.ndarray, c: np.ndarray) -> float:
    w = np.linalg.eigvalsh(hermitize(charges.combination(c)))
    return float(w[-1] - c @ a)


def _min_support_gap(charges: ChargeSet, a: np.ndarray) -> float:
    """min over unit directions of lambda_max(sum c_j A_j) - <c, a>,
    by deterministic sampling plus local refinement."""
    cdim = charges.num_charges
    rng = generator(0, "diagram", "support", cdim)
    cands = [rng.normal(size=cdim) for _ in range(N_SUPPORT_DIRECTIONS)]
    for i in range(cdim):
        e = np.zeros(cdim)
        e[i] = 1.0
        cands.extend([e, -e])
    off = a - centroid_charges(charges)
    if np.linalg.norm(off) > 1e-12:
        cands.append(off)
    best_gap, best_dir = math.inf, None
    for c in cands:
        nrm = np.linalg.norm(c)
        if nrm < 1e-12:
            continue
        c = c / nrm
        g = _support_gap(charges, a, c)
        if g < best_gap:
            best_gap, best_dir = g, c
    sigma = 0.5
    for _ in range(80):
        prop = best_dir + sigma * rng.normal(size=cdim)
        nrm = np.linalg.norm(prop)
        if nrm < 1e-12:
            continue
        prop = prop / nrm
        g = _support_gap(charges, a, prop)
        if g < best_gap:
            best_gap, best_dir = g, prop
        else:
            sigma = max(sigma * 0.8, 1e-5)
    return best_gap


def membership_charges(charges: ChargeSet, a, tol: float = 1e-6) -> Membership:
    """Classify a charge vector against the achievable region.

    The support-function scan runs first: the Gibbs dual can report
    convergence spuriously on boundary points (expectation values saturate
    in floating point while beta is still finite), so a vanishing support
    gap must take precedence over dual feasibility.
    """
    a = np.asarray(a, dtype=float).ravel()
    if a.shape != (charges.num_charges,):
        raise ValidationError("charge vector length mismatch")
    gap = _min_support_gap(charges, a)
    if gap < -tol:
        return Membership.OUTSIDE
    if gap <= tol:
        return Membership.BOUNDARY
    try:
        res = solve_beta(charges, a)
        if res.converged:
            return Membership.INTERIOR
    except NonInterior:
        pass
    # no separating direction was found yet the dual diverged: the point
    # sits within tolerance of the boundary
    return Membership.BOUNDARY


def max_entropy_at(charges: ChargeSet, a, tol: float = 1e-6) -> MaxEntropyResult:
    """Entropy of the max-entropy state at charges a (nats).

    Interior points solve the dual directly.  On the boundary the inverse
    temperatures diverge, so the cap is taken along a shrinking path toward
    the centroid and extrapolated (assuming leading error linear in the
    shrink factor); such values are flagged approximate.
    """
    a = np.asarray(a, dtype=float).ravel()
    cls = membership_charges(charges, a, tol)
    if cls is Membership.OUTSIDE:
        raise ValidationError("charges outside the achievable region")
    if cls is Membership.INTERIOR:
        res = solve_beta(charges, a)
        s = entropy_nats_of_matrix(res.tau.entries, 1e-9)
        return MaxEntropyResult(EntropyValue(s, "nats"), approximate=False)
    a0 = centroid_charges(charges)
    vals = []
    for k in range(3, 7):
        eps = 10.0 ** (-k)
        ak = a0 + (1.0 - eps) * (a - a0)
        try:
            rk = solve_beta(charges, ak)
            vals.append(entropy_nats_of_matrix(rk.tau.entries, 1e-9))
        except NonInterior:
            vals.append(math.nan)
    seq = [v for v in vals if not math.isnan(v)]
    if not seq:
        raise NumericalError("boundary entropy: no interior probe converged")
    # two extrapolation levels at shrink ratio 10
    while len(seq) > 1:
        seq = [(10.0 * seq[i + 1] - seq[i]) / 9.0 for i in range(len(seq) - 1)]
        if len(seq) <= 1:
            break
    est = max(seq[-1], 0.0)
    return MaxEntropyResult(EntropyValue(est, "nats"), approximate=True)


def member(charges: ChargeSet, point: DiagramPoint, tol: float = 1e-6) -> bool:
    """True iff the point lies in the single-copy diagram: charges
    achievable and 0 <= s <= S(tau(a)) within tolerance."""
    if point.n != 1:
        raise ValidationError("member expects a per-copy (n=1) point")
    cls = membership_charges(charges, point.a, tol)
    if cls is Membership.OUTSIDE:
        return False
    s = point.s_nats
    if s < -tol:
        return False
    cap = max_entropy_at(charges, point.a, tol).entropy.nats
    return s <= cap + tol


def _uniform_pure_decomposition(tau_mat: np.ndarray, n: int) -> list:
    """n equal-weight pure states averaging to tau (needs n >= rank).

    Eigenvector amplitudes are recombined with discrete Fourier phases, so
    every cross term cancels over the n rounds.
    """
    d = tau_mat.shape[0]
    w, v = eigh_sorted(tau_mat, descending=True)
    w = clamp_spectrum(w, 1e-9)
    psis = []
    for i in range(n):
        amp = np.zeros(d, dtype=complex)
        for k in range(d):
            if w[k] <= 0.0:
                continue
            amp += math.sqrt(w[k]) * np.exp(2j * math.pi * k * i / n) * v[:, k]
        nrm = np.linalg.norm(amp)
        psis.append(amp / nrm)
    return psis


def realize_product_state(charges: ChargeSet, point: DiagramPoint,
                          n: int) -> list:
    """Product state rho_1 ⊗ ... ⊗ rho_n hitting (a, s) per copy.

    Each factor mixes one pure piece of the uniform decomposition of
    tau(a) with tau(a) itself; the mixing weight is bisected until the
    total entropy matches n*s.
    """
    if n < charges.local_dim:
        raise ValidationError("need n >= local dimension")
    if not member(charges, point):
        raise ValidationError("point is not in the diagram")
    a = point.a
    s_target = point.s_nats
    cls = membership_charges(charges, a)
    if cls is Membership.BOUNDARY:
        a = centroid_charges(charges) + (1.0 - 1e-9) * (a - centroid_charges(charges))
    tau = solve_beta(charges, a).tau
    s_tau = entropy_nats_of_matrix(tau.entries, 1e-9)
    psis = _uniform_pure_decomposition(tau.entries, n)
    pures = [np.outer(p, p.conj()) for p in psis]

    def total_entropy(lam: float) -> float:
        tot = 0.0
        for pp in pures:
            m = lam * pp + (1.0 - lam) * tau.entries
            tot += entropy_nats_of_matrix(m, 1e-9)
        return tot

    target_total = n * s_target
    lo, hi = 0.0, 1.0  # f(0) = n*s_tau >= target, f(1) = 0 <= target
    f_lo = total_entropy(0.0) - target_total
    f_hi = total_entropy(1.0) - target_total
    if f_lo < -1e-9 or f_hi > 1e-9:
        raise ValidationError("entropy target escapes the mixing family")
    lam = 0.0
    for _ in range(120):
        lam = 0.5 * (lo + hi)
        f = total_entropy(lam) - target_total
        if abs(f) <= 1e-8:
            break
        if f > 0:
            lo = lam
        else:
            hi = lam
        if hi - lo < 1e-15:
            break
    out = []
    for pp in pures:
        m = hermitize(lam * pp + (1.0 - lam) * tau.entries)
        out.append(DensityState([charges.local_dim], m, tol=1e-9))
    return out


def conditional_member(charges: ChargeSet, a, t: float, s0: float,
                       units: str = "bits", tol: float = 1e-6) -> bool:
    """Membership in the conditional-entropy diagram with side entropy s0:
    achievable charges and -min{s0, S(tau(a))} <= t <= S(tau(a))."""
    if s0 < 0:
        raise ValidationError("side-information entropy s0 must be >= 0")
    a = np.asarray(a, dtype=float).ravel()
    if membership_charges(charges, a) is Membership.OUTSIDE:
        return False
    t_nats = t * LN2 if units == "bits" else t
    s0_nats = s0 * LN2 if units == "bits" else s0
    cap = max_entropy_at(charges, a).entropy.nats
    floor = -min(s0_nats, cap)
    return floor - tol <= t_nats <= cap + tol


def sample_diagram(charges: ChargeSet, n_samples: int, seed: int = 0) -> list:
    """Seeded diagram sample; every point passes member by construction."""
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    points = []
    for i in range(n_samples):
        rng = generator(seed, "diagram", "sample", i)
        beta = rng.normal(scale=1.5, size=charges.num_charges)
        res = gibbs_from_beta(charges, beta)
        s_cap = entropy_nats_of_matrix(res.tau.entries, 1e-9)
        s = float(rng.uniform(0.0, 1.0)) * s_cap
        points.append(DiagramPoint(res.charge_values, s / LN2, "bits", 1))
    return points
