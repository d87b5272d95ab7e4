"""Approximate microcanonical subspaces, eigenvalue trimming, and the
synthesis of almost-commuting unitaries between equivalent product
sequences.

Scale note: the guarantee formulas for (delta, delta', epsilon) are
asymptotic — at desk-scale n they exceed 1 and are clamped; honest
small-n behavior is always the *measured* quantity, which every routine
here reports or checks exactly (dense eigendecompositions, no bounds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import generator
from .errors import (DegenerateNets, EmptyAfterTrim, NotEquivalent,
                     NumericalError, TrimFailure, ValidationError)
from .gibbs import ChargeSet
from .opcore import (DensityState, HermitianOperator, TypicalProjector,
                     eigh_sorted, entropy_nats_of_matrix, hermitize,
                     lift_charge, typical_projector)

DIM_GUARD = 1024         # largest dense many-body dimension d^n
AET_DIM_GUARD = 4608     # largest dense dimension d^n * ancilla
ANCILLA_HARD_CAP = 64


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class AmcParams:
    """Microcanonical parameters for n copies at target charges v.

    Only (n, v, alpha, eta_prime) are free; eta and the guarantee levels
    (delta_prime, delta, epsilon) derive from them given the local
    dimension and charge count.  Derived guarantee levels are clamped to
    1; the raw formula values stay available as raw_*.
    """

    n: int
    v: np.ndarray
    alpha: float
    eta_prime: float
    local_dim: int
    num_charges: int
    eta: float = None
    delta_prime: float = None
    delta: float = None
    epsilon: float = None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float).ravel()
        if self.n < 1:
            raise ValidationError("need n >= 1")
        if self.v.shape != (self.num_charges,):
            raise ValidationError("v length must equal the number of charges")
        if not (0.0 < self.eta_prime < 0.5):
            raise ValidationError("eta_prime must lie in (0, 1/2)")
        if self.alpha <= 0:
            raise ValidationError("alpha must be > 0")
        if self.eta is None:
            self.eta = 2.0 * self.eta_prime
        if not (self.eta > self.eta_prime > 0.0):
            raise ValidationError("need eta > eta_prime > 0")
        d, c, n = self.local_dim, self.num_charges, self.n
        envelope = math.exp(-n * self.eta_prime ** 2 / (8.0 * c * c * (d + 1) ** 2))
        self.raw_delta_prime = 0.5 * (c + 3) * (5.0 * n) ** (2 * d * d) * envelope
        self.raw_delta = 2.0 * self.raw_delta_prime
        self.raw_epsilon = 2.0 * (n + 1) ** (3 * d * d) * self.raw_delta
        if self.delta_prime is None:
            self.delta_prime = min(self.raw_delta_prime, 1.0)
        if self.delta is None:
            self.delta = min(self.raw_delta, 1.0)
        if self.epsilon is None:
            self.epsilon = min(self.raw_epsilon, 1.0)
        for name in ("delta_prime", "delta", "epsilon"):
            val = getattr(self, name)
            if not (0.0 < val <= 1.0):
                raise ValidationError(f"{name} must lie in (0, 1]")

    @classmethod
    def for_charges(cls, charges: ChargeSet, n: int, v, alpha: float = 1.0,
                    eta_prime: float = 0.2, eta: float = None) -> "AmcParams":
        return cls(n=n, v=v, alpha=alpha, eta_prime=eta_prime, eta=eta,
                   local_dim=charges.local_dim,
                   num_charges=charges.num_charges)

    def net_thresholds(self) -> tuple:
        """(s, t) with s - eta' = eta - t = (eta - eta')/(4c(d+1))."""
        spread = (self.eta - self.eta_prime) / (
            4.0 * self.num_charges * (self.local_dim + 1))
        return self.eta_prime + spread, self.eta - spread


# ---------------------------------------------------------------------------
# spectral windows
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SpectralWindow:
    """Projector onto collective-charge eigenvalues in [lo, hi]."""

    projector: HermitianOperator
    rank: int
    empty: bool
    lo: float
    hi: float

    @property
    def entries(self) -> np.ndarray:
        return self.projector.entries


def spectral_window(a_lifted: HermitianOperator, n: int, v: float,
                    eta: float, sigma: float) -> SpectralWindow:
    """Projector of the lifted charge onto [n v - n eta sigma, n v + n eta sigma]."""
    dim = a_lifted.dim
    if eta >= 1.0:
        return SpectralWindow(
            HermitianOperator(dim, np.eye(dim, dtype=complex)),
            rank=dim, empty=False, lo=-math.inf, hi=math.inf)
    lo = n * v - n * eta * sigma
    hi = n * v + n * eta * sigma
    w, vecs = eigh_sorted(a_lifted.entries)
    mask = (w >= lo - 1e-9) & (w <= hi + 1e-9)
    rank = int(mask.sum())
    proj = (vecs * mask.astype(float)) @ vecs.conj().T
    return SpectralWindow(HermitianOperator(dim, hermitize(proj)),
                          rank=rank, empty=(rank == 0), lo=lo, hi=hi)


def _projector_matrix(p, dim: int = None) -> np.ndarray:
    if p is None:
        if dim is None:
            raise ValidationError("projector or dimension required")
        return np.eye(dim, dtype=complex)
    if isinstance(p, (SpectralWindow, TypicalProjector)):
        m = p.entries
    elif isinstance(p, HermitianOperator):
        m = p.entries
    else:
        m = np.asarray(p, dtype=complex)
    dev = float(np.max(np.abs(m @ m - m)))
    if dev > 1e-8:
        raise ValidationError(f"not a projector (P^2 - P deviates by {dev:.3e})")
    return m


# ---------------------------------------------------------------------------
# microcanonical projector construction
# ---------------------------------------------------------------------------

def _simultaneous_eigenbasis(mats, tol: float = 1e-9):
    """Common eigenbasis of exactly commuting Hermitians, by sequential
    refinement; returns (basis, per-charge eigenvalue table)."""
    d = mats[0].shape[0]
    basis = np.eye(d, dtype=complex)
    blocks = [list(range(d))]
    for m in mats:
        refined = []
        for blk in blocks:
            cols = basis[:, blk]
            sub = hermitize(cols.conj().T @ m @ cols)
            w, vv = np.linalg.eigh(sub)
            basis[:, blk] = cols @ vv
            start = 0
            for i in range(1, len(blk) + 1):
                if i == len(blk) or abs(w[i] - w[start]) > tol:
                    refined.append([blk[j] for j in range(start, i)])
                    start = i
        blocks = refined
    table = np.zeros((len(mats), d))
    for j, m in enumerate(mats):
        table[j] = np.real(np.einsum("ik,ij,jk->k", basis.conj(), m, basis))
    return basis, table


def _commuting_amc(charges: ChargeSet, params: AmcParams) -> HermitianOperator:
    """Exact windowed projector for commuting charges: keep the product
    basis strings whose collective values sit inside the far threshold t
    for every charge.  Windows nest in the threshold, so this equals the
    union of all-charge windows over thresholds in [s, t]."""
    s, t = params.net_thresholds()
    u = t
    d, n = charges.local_dim, params.n
    basis, table = _simultaneous_eigenbasis(charges.matrices())
    total = d ** n
    mask = np.ones(1, dtype=bool)
    colvals = np.zeros((charges.num_charges, 1))
    for _ in range(n):
        colvals = (colvals[:, :, None] + table[:, None, :]).reshape(
            charges.num_charges, -1)
    for j in range(charges.num_charges):
        lim = n * u * charges.diameters[j]
        mask = mask & (np.abs(colvals[j] - n * params.v[j]) <= lim + 1e-9)
    big = basis
    for _ in range(n - 1):
        big = np.kron(big, basis)
    proj = (big * mask.astype(float)) @ big.conj().T
    return HermitianOperator(total, hermitize(proj), "amc")


def _random_density(rng, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return m / np.real(np.trace(m))


def _charge_values_of(m: np.ndarray, charges: ChargeSet) -> np.ndarray:
    return np.array([float(np.real(np.trace(m @ a)))
                     for a in charges.matrices()])


def build_amc(charges: ChargeSet, params: AmcParams, net_size: int = 32,
              seed: int = 0) -> HermitianOperator:
    """Permutation-symmetric projector separating charge-sharp states from
    charge-far states.

    Near/far nets are rejection-sampled product states; the projector is
    the positive part of (near mixture) - (far mixture).  Commuting
    charges take an exact windowed-eigenbasis path instead.
    """
    n, d = params.n, charges.local_dim
    total = d ** n
    if total > DIM_GUARD:
        raise ValidationError(f"d^n = {total} exceeds the dense guard")
    if net_size < 8:
        raise ValidationError("net_size must be >= 8")
    mats = charges.matrices()
    comm = max(
        float(np.max(np.abs(a @ b - b @ a)))
        for i, a in enumerate(mats) for b in mats[i:])
    if comm <= 1e-12:
        return _commuting_amc(charges, params)

    s, t = params.net_thresholds()
    rng = generator(seed, "amc", "nets", n, net_size)
    sig = np.asarray(charges.diameters, dtype=float)

    near, far = [], []
    # deterministic far anchors: slightly smoothed extremal eigenstates
    for j, a in enumerate(mats):
        w, vv = np.linalg.eigh(hermitize(a))
        for col in (0, d - 1):
            pure = np.outer(vv[:, col], vv[:, col].conj())
            cand = 0.95 * pure + 0.05 * np.eye(d) / d
            dev = np.abs(_charge_values_of(cand, charges) - params.v)
            if np.any(dev >= t * sig):
                far.append(cand)
    tries = 0
    max_tries = 20000 * net_size
    while (len(near) < net_size or len(far) < net_size) and tries < max_tries:
        tries += 1
        cand = _random_density(rng, d)
        dev = np.abs(_charge_values_of(cand, charges) - params.v)
        if len(near) < net_size and np.all(dev <= s * sig):
            near.append(cand)
        elif len(far) < net_size and np.any(dev >= t * sig):
            far.append(cand)
    if len(near) < net_size or len(far) < net_size:
        raise DegenerateNets(
            f"could not fill nets (near {len(near)}, far {len(far)}); "
            "target values may be unreachable at these thresholds")

    def product_mixture(singles) -> np.ndarray:
        acc = np.zeros((total, total), dtype=complex)
        for m in singles:
            term = m
            for _ in range(n - 1):
                term = np.kron(term, m)
            acc += term
        return acc / len(singles)

    gamma = product_mixture(near)
    phi = product_mixture(far)
    w, vv = eigh_sorted(gamma - phi)
    mask = w > 1e-12
    proj = (vv * mask.astype(float)) @ vv.conj().T
    p = HermitianOperator(total, hermitize(proj), "amc")
    dev = _permutation_invariance_defect(p.entries, d, n)
    if dev > 1e-8:
        raise NumericalError(
            f"projector lost permutation symmetry (defect {dev:.3e})")
    return p


def _transposition_matrix(d: int, n: int, i: int) -> np.ndarray:
    """Permutation unitary swapping copies i and i+1."""
    total = d ** n
    perm = np.zeros(total, dtype=int)
    for x in range(total):
        digits = []
        y = x
        for _ in range(n):
            digits.append(y % d)
            y //= d
        digits.reverse()
        digits[i], digits[i + 1] = digits[i + 1], digits[i]
        z = 0
        for dig in digits:
            z = z * d + dig
        perm[x] = z
    w = np.zeros((total, total), dtype=complex)
    w[perm, np.arange(total)] = 1.0
    return w


def _permutation_invariance_defect(p: np.ndarray, d: int, n: int) -> float:
    worst = 0.0
    for i in range(n - 1):
        w = _transposition_matrix(d, n, i)
        diff = np.linalg.eigvalsh(hermitize(w @ p @ w.conj().T - p))
        worst = max(worst, float(np.max(np.abs(diff))) if diff.size else 0.0)
    return worst


def verify_amc(p, charges: ChargeSet, params: AmcParams,
               n_probe_states: int = 20, seed: int = 0) -> tuple:
    """Measured microcanonical quality (delta_hat, epsilon_hat).

    delta_hat: worst per-charge window-escape probability over random
    states supported inside P.  epsilon_hat: worst rejection probability
    over sharp-valued product probe states.
    """
    n, d = params.n, charges.local_dim
    total = d ** n
    pm = _projector_matrix(p, total)
    windows = [
        spectral_window(lift_charge(charges.charges[j], n), n,
                        float(params.v[j]), params.eta, charges.diameters[j])
        for j in range(charges.num_charges)]
    rng = generator(seed, "amc", "verify", n)
    delta_hat = 0.0
    for _ in range(n_probe_states):
        xi = _random_density(rng, total)
        sup = pm @ xi @ pm
        tr = float(np.real(np.trace(sup)))
        if tr < 1e-12:
            delta_hat = 1.0
            continue
        omega = hermitize(sup / tr)
        for win in windows:
            esc = 1.0 - float(np.real(np.trace(omega @ win.entries)))
            delta_hat = max(delta_hat, min(max(esc, 0.0), 1.0))
    sig = np.asarray(charges.diameters, dtype=float)
    probes = []
    try:
        probes.append(gibbs_solve_for_values(charges, params.v))
    except Exception:
        pass
    draws = 0
    while len(probes) < n_probe_states and draws < 20000 * n_probe_states:
        draws += 1
        cand = _random_density(rng, d)
        dev = np.abs(_charge_values_of(cand, charges) - params.v)
        if np.all(dev <= 0.5 * params.eta_prime * sig):
            probes.append(cand)
    epsilon_hat = 0.0
    for single in probes:
        prod = single
        for _ in range(n - 1):
            prod = np.kron(prod, single)
        miss = 1.0 - float(np.real(np.trace(prod @ pm)))
        epsilon_hat = max(epsilon_hat, min(max(miss, 0.0), 1.0))
    return (delta_hat, epsilon_hat)


def gibbs_solve_for_values(charges: ChargeSet, v) -> np.ndarray:
    """Max-entropy single-copy state at charges v (helper for probes)."""
    from .gibbs import solve_beta
    return solve_beta(charges, v).tau.entries


# ---------------------------------------------------------------------------
# trimming
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TrimResult:
    """Outcome of the three-step eigenvalue trim of P~ Pi rho^n Pi P~."""

    projector: HermitianOperator      # P~ on the full n-copy space
    tau_dim: int                      # L, the flat-factor dimension
    omega: DensityState               # small normalized factor
    factor_unitary: np.ndarray        # rows map kept space -> tau (x) omega
    discarded_mass: float
    bin_count: int
    kept_mass: float
    kept_values: np.ndarray           # trimmed (binned) unnormalized values
    kept_vectors: np.ndarray          # columns: kept eigenvectors
    sum_entropy_bits: float
    typical: TypicalProjector
    step_discards: dict
    step_bounds: dict

    def rho_tilde(self) -> np.ndarray:
        """Normalized trimmed state on the full space."""
        vals = self.kept_values / self.kept_mass
        return hermitize((self.kept_vectors * vals)
                         @ self.kept_vectors.conj().T)


def trim(rho_list, p, alpha: float) -> TrimResult:
    """Three-step trim of the typical-and-supported part of a product state.

    Restrict P Pi P to eigenvalues above 2^(-alpha sqrt n) (projector P~),
    take X = P~ Pi rho^n Pi P~, then (a) round each eigenvalue down to its
    bin floor, (b) drop underfilled bins, (c) round each bin's population
    down to a multiple of L.  The kept spectrum is exactly L-fold
    degenerate, so a relabeling unitary factors the state into a flat
    L-dimensional piece times a small factor omega.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be > 0")
    mats = [m.entries if isinstance(m, DensityState) else np.asarray(m, complex)
            for m in rho_list]
    n = len(mats)
    d = mats[0].shape[0]
    total = d ** n
    if total > DIM_GUARD:
        raise ValidationError(f"d^n = {total} exceeds the dense guard")
    pm = _projector_matrix(p, total)
    rho_n = mats[0]
    for m in mats[1:]:
        rho_n = np.kron(rho_n, m)
    overlap = float(np.real(np.trace(rho_n @ pm)))
    if overlap < 0.5:
        raise ValidationError(
            f"Tr(rho P) = {overlap:.4f} < 0.5; P is not a high-probability "
            "subspace for this state")

    typ = typical_projector(rho_list, alpha)
    pi = typ.entries
    s_sum = typ.sum_entropy_bits
    root_term = alpha * math.sqrt(n)
    cutoff = 2.0 ** (-root_term)

    m_mat = hermitize(pm @ pi @ pm)
    w, vecs = np.linalg.eigh(m_mat)
    keep = w > cutoff
    if not keep.any():
        raise EmptyAfterTrim("no eigenvalue of P Pi P above the cutoff")
    p_tilde_basis = vecs[:, keep]
    p_tilde = hermitize(p_tilde_basis @ p_tilde_basis.conj().T)

    x = hermitize(p_tilde @ pi @ rho_n @ pi @ p_tilde)
    xw, xv = np.linalg.eigh(x)
    order = np.argsort(xw)[::-1]
    xw, xv = xw[order], xv[:, order]
    # rank floor for the compressed operator: eigh reports the kernel of
    # P~ Pi rho Pi P~ as noise of size ~ eps * dim * ||X||, which must be
    # truncated as rank deficiency rather than held to the sandwich bounds
    live = xw > max(1e-15, float(xw[0]) * x.shape[0] * np.finfo(float).eps)
    xw, xv = xw[live], xv[:, live]
    if xw.size == 0:
        raise EmptyAfterTrim("trimmed spectrum is empty")

    p_min = 2.0 ** (-s_sum - 2.0 * root_term)
    p_max = 2.0 ** (-s_sum + root_term)
    stray = (xw < p_min * (1 - 1e-6) - 1e-13) | (xw > p_max * (1 + 1e-6))
    if stray.any():
        raise NumericalError(
            "eigenvalues escaped the typicality sandwich: "
            f"range [{xw.min():.3e}, {xw.max():.3e}] vs "
            f"[{p_min:.3e}, {p_max:.3e}]")
    xw = np.clip(xw, p_min, p_max)

    count = int(xw.size)
    if (float(xw[0] - xw[-1]) <= 1e-12 * float(xw[0])
            and count & (count - 1) == 0):
        # exactly flat spectrum on a power-of-two subspace: the state is
        # already of the target form tau_L (x) omega with omega trivial,
        # so every step keeps the full mass
        val = float(xw.mean())
        kept_values = np.full(count, val)
        res = TrimResult(
            projector=HermitianOperator(total, p_tilde, "trim"),
            tau_dim=count,
            omega=DensityState([1], np.array([[1.0 + 0j]])),
            factor_unitary=xv.conj().T,
            discarded_mass=0.0, bin_count=1,
            kept_mass=float(count * val), kept_values=kept_values,
            kept_vectors=xv, sum_entropy_bits=s_sum, typical=typ,
            step_discards={"round": 0.0, "small_bins": 0.0,
                           "remainder": 0.0},
            step_bounds={"round": 2.0 ** (-2.0 * root_term + 1.0),
                         "small_bins": 2.0 ** (-4.0 * root_term),
                         "remainder": 2.0 ** (-4.0 * root_term)})
        _check_factorization(res)
        return res

    b = 2 ** int(math.floor(5.0 * root_term))
    delta_p = (p_max - p_min) / b
    idx = np.minimum(((xw - p_min) / delta_p).astype(np.int64), b - 1)
    floors = p_min + idx * delta_p
    step_a = float((xw - floors).sum())

    bins = {}
    for i, k in enumerate(idx):
        bins.setdefault(int(k), []).append(i)
    count_floor = 2.0 ** (s_sum - 10.0 * root_term)
    step_b = 0.0
    survivors = {}
    for k, members in bins.items():
        if len(members) < count_floor:
            step_b += float(floors[members].sum())
        else:
            survivors[k] = members

    exp_l = math.floor(s_sum - 10.0 * root_term)
    tau_dim = 2 ** exp_l if exp_l > 0 else 1
    step_c = 0.0
    kept_groups = []   # (bin value, member indices) with multiple-of-L sizes
    for k in sorted(survivors, reverse=True):
        members = survivors[k]
        m_k = len(members) // tau_dim
        kept = members[: m_k * tau_dim]
        dropped = members[m_k * tau_dim:]
        step_c += float(floors[dropped].sum())
        if kept:
            val = float(p_min + k * delta_p)
            kept_groups.append((val, kept))
    if not kept_groups:
        raise EmptyAfterTrim("every bin was discarded")

    kept_idx = [i for _, members in kept_groups for i in members]
    kept_values = np.array([val for val, members in kept_groups
                            for _ in members])
    kept_vectors = xv[:, kept_idx]
    kept_mass = float(kept_values.sum())
    discarded = step_a + step_b + step_c

    bound_a = 2.0 ** (-2.0 * root_term + 1.0)
    bound_b = 2.0 ** (-4.0 * root_term)
    bound_c = 2.0 ** (-4.0 * root_term)
    if discarded > bound_a + bound_b + bound_c + 1e-12:
        raise NumericalError(
            f"discarded mass {discarded:.3e} exceeds the step-bound sum")

    # factor space: |l> (x) |g> for group g, inner repetition l < L
    n_groups = len(kept_idx) // tau_dim
    k_dim = n_groups
    v_rows = np.zeros((tau_dim * k_dim, total), dtype=complex)
    omega_vals = np.zeros(k_dim)
    col = 0
    for g in range(k_dim):
        for l in range(tau_dim):
            v_rows[l * k_dim + g] = kept_vectors[:, col].conj()
            col += 1
        omega_vals[g] = tau_dim * kept_values[g * tau_dim] / kept_mass
    omega = DensityState([k_dim], np.diag(omega_vals.astype(complex)),
                         tol=1e-9)

    res = TrimResult(
        projector=HermitianOperator(total, p_tilde, "trim"),
        tau_dim=tau_dim, omega=omega, factor_unitary=v_rows,
        discarded_mass=discarded, bin_count=b, kept_mass=kept_mass,
        kept_values=kept_values, kept_vectors=kept_vectors,
        sum_entropy_bits=s_sum, typical=typ,
        step_discards={"round": step_a, "small_bins": step_b,
                       "remainder": step_c},
        step_bounds={"round": bound_a, "small_bins": bound_b,
                     "remainder": bound_c})
    _check_factorization(res)
    return res


def _check_factorization(res: TrimResult):
    rho_t = res.rho_tilde()
    v = res.factor_unitary
    mapped = v @ rho_t @ v.conj().T
    l, k = res.tau_dim, res.omega.dim
    target = np.kron(np.eye(l, dtype=complex) / l, res.omega.entries)
    dev = float(np.abs(np.linalg.eigvalsh(hermitize(mapped - target))).sum())
    if dev > 1e-9:
        raise NumericalError(f"factorization check failed (defect {dev:.3e})")


# ---------------------------------------------------------------------------
# synthesis of almost-commuting unitaries
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class AetDiagnostics:
    commutator_rates: np.ndarray   # (1/n) ||[U, A_j + A_j']||_inf per charge
    output_distance: float         # || U rho (x) w' U+ - sigma (x) w ||_1
    ancilla_dim: int
    amc_used: bool

    def __post_init__(self):
        self.commutator_rates = np.asarray(self.commutator_rates, dtype=float)
        if np.any(self.commutator_rates < -1e-12) or self.output_distance < -1e-12:
            raise ValidationError("diagnostics must be nonnegative")


@dataclass(eq=False)
class AetSynthesis:
    unitary: np.ndarray
    omega: DensityState          # output-side ancilla
    omega_prime: DensityState    # input-side ancilla
    diagnostics: AetDiagnostics
    subspace_dim: int
    trim_rho: TrimResult = None
    trim_sigma: TrimResult = None


def deviation_window(charges: ChargeSet, n: int, v, eta: float) -> HermitianOperator:
    """Projector onto the low eigenspace of the summed squared collective
    charge deviation D = sum_j ((A_j^(n) - n v_j)/(n Sigma_j))^2.

    On its range, ||(A_j^(n) - n v_j) psi|| <= n Sigma_j eta for every
    charge at once — a sharp-values subspace for non-commuting charges.
    """
    v = np.asarray(v, dtype=float).ravel()
    total = charges.local_dim ** n
    if total > DIM_GUARD:
        raise ValidationError(f"d^n = {total} exceeds the dense guard")
    dev = np.zeros((total, total), dtype=complex)
    eye = np.eye(total, dtype=complex)
    for j in range(charges.num_charges):
        lifted = lift_charge(charges.charges[j], n).entries
        scaled = (lifted - n * v[j] * eye) / (n * charges.diameters[j])
        dev += scaled @ scaled
    w, vecs = np.linalg.eigh(hermitize(dev))
    mask = w <= eta * eta + 1e-12
    proj = (vecs * mask.astype(float)) @ vecs.conj().T
    return HermitianOperator(total, hermitize(proj), "window")


def _product(mats) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _mean_charges(mats, charges: ChargeSet) -> np.ndarray:
    vals = np.zeros(charges.num_charges)
    for m in mats:
        vals += _charge_values_of(m, charges)
    return vals / len(mats)


def _mean_entropy_bits(mats) -> float:
    return float(np.mean([entropy_nats_of_matrix(m, 1e-9) / math.log(2.0)
                          for m in mats]))


def _profile_key(vec: np.ndarray, lifted_mats) -> tuple:
    return tuple(round(float(np.real(vec.conj() @ (a @ vec))), 9)
                 for a in lifted_mats)


def _trivial_ancilla() -> DensityState:
    return DensityState([1], np.array([[1.0 + 0j]]))


def _match_permutation(rho_mats, sigma_mats) -> list:
    """m with sigma_i == rho_m[i] exactly, or None."""
    n = len(rho_mats)
    used = [False] * n
    m = []
    for s in sigma_mats:
        hit = -1
        for i, r in enumerate(rho_mats):
            if not used[i] and np.allclose(s, r, atol=1e-12, rtol=0.0):
                hit = i
                break
        if hit < 0:
            return None
        used[hit] = True
        m.append(hit)
    return m


def _permutation_unitary(d: int, n: int, m: list) -> np.ndarray:
    """Unitary with U (x_1 ... x_n) = (x_m[1], ..., x_m[n])."""
    total = d ** n
    perm = np.zeros(total, dtype=int)
    weights = [d ** (n - 1 - i) for i in range(n)]
    for x in range(total):
        digits = [(x // weights[i]) % d for i in range(n)]
        y = sum(digits[m[i]] * weights[i] for i in range(n))
        perm[y] = x
    u = np.zeros((total, total), dtype=complex)
    u[np.arange(total), perm] = 1.0
    return u


def _commutator_rates(u: np.ndarray, lifted_mats, n: int,
                      k_dim: int) -> np.ndarray:
    rates = []
    eye_k = np.eye(k_dim, dtype=complex)
    for a in lifted_mats:
        a_tot = np.kron(a, eye_k) if k_dim > 1 else a
        diff = hermitize(u @ a_tot @ u.conj().T - a_tot)
        rates.append(float(np.max(np.abs(np.linalg.eigvalsh(diff)))) / n)
    return np.asarray(rates)


def synthesize_aet(rho_seq, sigma_seq, charges: ChargeSet,
                   params: AmcParams = None, p=None,
                   tol_a: float = 1e-6, tol_s: float = 1e-6) -> AetSynthesis:
    """Construct a unitary carrying rho_1⊗...⊗rho_n to sigma_1⊗...⊗sigma_n
    up to trimming losses, while almost commuting with every collective
    charge; ancilla charges are identically zero.

    Both sequences are trimmed against a sharp-values subspace; the two
    trimmed spectra (tensored with the opposite side's small factor)
    coincide, so a sorted-eigenvalue pairing defines the unitary on that
    subspace, extended by the identity elsewhere.  Diagnostics are exact.
    """
    rho_mats = [m.entries if isinstance(m, DensityState)
                else np.asarray(m, complex) for m in rho_seq]
    sigma_mats = [m.entries if isinstance(m, DensityState)
                  else np.asarray(m, complex) for m in sigma_seq]
    n = len(rho_mats)
    if n < 1 or len(sigma_mats) != n:
        raise ValidationError("sequences must share a positive length")
    d = charges.local_dim
    total = d ** n
    if any(m.shape != (d, d) for m in rho_mats + sigma_mats):
        raise ValidationError("per-copy dimensions must match the charges")

    a_rho = _mean_charges(rho_mats, charges)
    a_sig = _mean_charges(sigma_mats, charges)
    s_rho = _mean_entropy_bits(rho_mats)
    s_sig = _mean_entropy_bits(sigma_mats)
    gap_a = float(np.max(np.abs(a_rho - a_sig)))
    gap_s = abs(s_rho - s_sig)
    if gap_a > tol_a or gap_s > tol_s:
        raise NotEquivalent(
            f"sequences are not equivalent: charge gap {gap_a:.3e} "
            f"(tol {tol_a:g}), entropy-rate gap {gap_s:.3e} (tol {tol_s:g})")

    lifted = [lift_charge(c, n).entries for c in charges.charges]

    if all(np.allclose(r, s_m, atol=1e-12, rtol=0.0)
           for r, s_m in zip(rho_mats, sigma_mats)):
        u = np.eye(total, dtype=complex)
        diag = AetDiagnostics(np.zeros(charges.num_charges), 0.0, 1, False)
        return AetSynthesis(u, _trivial_ancilla(), _trivial_ancilla(), diag,
                            subspace_dim=0)

    match = _match_permutation(rho_mats, sigma_mats)
    if match is not None:
        u = _permutation_unitary(d, n, match)
        rates = _commutator_rates(u, lifted, n, 1)
        out = hermitize(u @ _product(rho_mats) @ u.conj().T
                        - _product(sigma_mats))
        dist = float(np.abs(np.linalg.eigvalsh(out)).sum())
        diag = AetDiagnostics(rates, dist, 1, False)
        return AetSynthesis(u, _trivial_ancilla(), _trivial_ancilla(), diag,
                            subspace_dim=total)

    v = 0.5 * (a_rho + a_sig)
    if params is None:
        params = AmcParams.for_charges(charges, n, v, alpha=1.0)
    amc_used = p is not None
    if p is None:
        p = deviation_window(charges, n, v, params.eta)

    try:
        t_rho = trim(rho_mats, p, params.alpha)
        t_sig = trim(sigma_mats, p, params.alpha)
    except ValidationError as exc:
        raise TrimFailure(str(exc)) from exc
    if t_rho.tau_dim != t_sig.tau_dim:
        raise TrimFailure(
            f"flat-factor dimensions disagree ({t_rho.tau_dim} vs "
            f"{t_sig.tau_dim}); entropy rates too far apart for this alpha")

    k_rho = t_rho.omega.dim
    k_sig = t_sig.omega.dim
    k_dim = max(k_rho, k_sig)
    cap = min(2 ** math.ceil(17.0 * params.alpha * math.sqrt(n)
                             / math.log2(math.e)), ANCILLA_HARD_CAP)
    if k_dim > cap:
        raise TrimFailure(
            f"ancilla dimension {k_dim} exceeds the cap {cap}")
    if total * k_dim > AET_DIM_GUARD:
        raise ValidationError(
            f"ancilla-extended dimension {total * k_dim} exceeds the guard")

    def padded(omega: DensityState) -> np.ndarray:
        m = np.zeros((k_dim, k_dim), dtype=complex)
        m[: omega.dim, : omega.dim] = omega.entries
        return m

    omega = padded(t_rho.omega)        # output-side ancilla
    omega_p = padded(t_sig.omega)      # input-side ancilla

    # eigenvectors of rho~ (x) omega' and sigma~ (x) omega, value-sorted
    def side_vectors(tr: TrimResult, other: TrimResult):
        vals_main = tr.kept_values / tr.kept_mass
        vecs_main = tr.kept_vectors
        vals_anc = other.tau_dim * other.kept_values[:: other.tau_dim] \
            / other.kept_mass
        out = []
        for i in range(vals_main.size):
            prof = _profile_key(vecs_main[:, i], lifted)
            for g in range(vals_anc.size):
                out.append((float(vals_main[i] * vals_anc[g]), prof, i, g))
        out.sort(key=lambda rec: (-rec[0], rec[1], rec[2], rec[3]))
        return out

    in_list = side_vectors(t_rho, t_sig)
    out_list = side_vectors(t_sig, t_rho)
    if len(in_list) != len(out_list):
        raise TrimFailure("paired subspace dimensions disagree")
    r = len(in_list)

    dim_full = total * k_dim

    def embed(vec: np.ndarray, g: int) -> np.ndarray:
        out = np.zeros(dim_full, dtype=complex)
        out[g::k_dim] = vec  # basis ordering: (copy-space index, ancilla index)
        return out

    w_in = np.zeros((dim_full, r), dtype=complex)
    w_out = np.zeros((dim_full, r), dtype=complex)
    for col, rec in enumerate(in_list):
        w_in[:, col] = embed(t_rho.kept_vectors[:, rec[2]], rec[3])
    for col, rec in enumerate(out_list):
        w_out[:, col] = embed(t_sig.kept_vectors[:, rec[2]], rec[3])

    # orthonormal basis of the joint subspace, then paired completions;
    # the embedded columns are exactly orthonormal already, and their
    # order carries the spectrum pairing, so they must not be recombined
    joint = np.concatenate([w_in, w_out], axis=1)
    uu, ss, _ = np.linalg.svd(joint, full_matrices=False)
    m_basis = uu[:, ss > 1e-6]
    m_dim = m_basis.shape[1]
    if m_dim < r:
        raise NumericalError("joint subspace rank fell below the pairing size")

    def complete(w: np.ndarray) -> np.ndarray:
        if m_dim == w.shape[1]:
            return w
        resid = m_basis - w @ (w.conj().T @ m_basis)
        uu2, _, _ = np.linalg.svd(resid, full_matrices=False)
        return np.concatenate([w, uu2[:, : m_dim - w.shape[1]]], axis=1)

    b_in = complete(w_in)
    b_out = complete(w_out)
    if b_in.shape[1] != m_dim or b_out.shape[1] != m_dim:
        raise NumericalError("subspace completion lost rank")

    u = np.eye(dim_full, dtype=complex) - m_basis @ m_basis.conj().T \
        + b_out @ b_in.conj().T
    unit_dev = float(np.max(np.abs(u.conj().T @ u - np.eye(dim_full))))
    if unit_dev > 1e-9:
        raise NumericalError(f"synthesized map not unitary (defect {unit_dev:.3e})")

    rates = _commutator_rates(u, lifted, n, k_dim)

    rho_full = np.kron(_product(rho_mats), omega_p)
    sig_full = np.kron(_product(sigma_mats), omega)
    diff = hermitize(u @ rho_full @ u.conj().T - sig_full)
    dist = float(np.abs(np.linalg.eigvalsh(diff)).sum())

    diag = AetDiagnostics(rates, dist, k_dim, amc_used)
    return AetSynthesis(u, DensityState([k_dim], omega),
                        DensityState([k_dim], omega_p), diag,
                        subspace_dim=m_dim, trim_rho=t_rho, trim_sigma=t_sig)


# ---------------------------------------------------------------------------
# projection probability
# ---------------------------------------------------------------------------

@dataclass
class ProjectionReport:
    measured: float
    bound: float
    vacuous: bool
    satisfied: bool


def projection_probability_bound(rho_list, p, charges: ChargeSet,
                                 params: AmcParams) -> ProjectionReport:
    """Measured rejection probability 1 - Tr(rho^n P) against the analytic
    guarantee; at small n the guarantee is typically vacuous (> 1) and is
    flagged, never asserted."""
    mats = [m.entries if isinstance(m, DensityState) else np.asarray(m, complex)
            for m in rho_list]
    n = len(mats)
    if n != params.n:
        raise ValidationError("sequence length does not match params.n")
    mean = _mean_charges(mats, charges)
    sig = np.asarray(charges.diameters, dtype=float)
    dev = np.abs(mean - params.v)
    if np.any(dev > 0.5 * params.eta_prime * sig + 1e-12):
        raise ValidationError(
            "per-copy means are farther than eta'/2 windows from v")
    pm = _projector_matrix(p, charges.local_dim ** n)
    measured = 1.0 - float(np.real(np.trace(_product(mats) @ pm)))
    measured = min(max(measured, 0.0), 1.0)
    bound = params.raw_epsilon
    return ProjectionReport(measured=measured, bound=bound,
                            vacuous=bound >= 1.0,
                            satisfied=measured <= bound)
