"""Operator/state algebra, entropies, metrics, typical projectors.

Conventions used throughout the package:

* entropies are computed internally in nats and converted at the boundary
  (display default is bits);
* eigenvalues in [-1e-10, 0] are numerical dust and are clamped to zero
  before logs; anything more negative is rejected;
* matrix functions go through full Hermitian eigendecompositions — desk
  scale favors exactness over speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionOverflow, NumericalError, ValidationError

LN2 = math.log(2.0)

HERM_TOL = 1e-10
CLAMP_FLOOR = -1e-10
EIG_FLOOR = 1e-12
ENTRY_BUDGET = 1 << 20  # dense matrices may not exceed 2^20 entries


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class HermitianOperator:
    """Dense Hermitian matrix with a dimension and a label."""

    dim: int
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.dim < 1:
            raise ValidationError("dimension must be >= 1")
        if self.entries.shape != (self.dim, self.dim):
            raise ValidationError(
                f"entries shape {self.entries.shape} != ({self.dim}, {self.dim})")
        dev = np.max(np.abs(self.entries - self.entries.conj().T))
        if dev > HERM_TOL:
            raise ValidationError(f"matrix not Hermitian (deviation {dev:.3e})")

    def diameter(self) -> float:
        """Spectral diameter lambda_max - lambda_min."""
        w = np.linalg.eigvalsh(self.entries)
        return float(w[-1] - w[0])


@dataclass(eq=False)
class DensityState:
    """Positive semidefinite unit-trace matrix over listed subsystem dims."""

    dims: list
    entries: np.ndarray
    tol: float = 1e-10

    def __post_init__(self):
        self.dims = [int(d) for d in self.dims]
        self.entries = np.asarray(self.entries, dtype=complex)
        if any(d < 1 for d in self.dims):
            raise ValidationError("subsystem dimensions must be >= 1")
        total = 1
        for d in self.dims:
            total *= d
        if self.entries.shape != (total, total):
            raise ValidationError(
                f"entries shape {self.entries.shape} != ({total}, {total})")
        dev = np.max(np.abs(self.entries - self.entries.conj().T))
        if dev > max(self.tol, HERM_TOL):
            raise ValidationError(f"state not Hermitian (deviation {dev:.3e})")
        tr = self.entries.trace()
        if abs(tr - 1.0) > max(self.tol, 1e-10):
            raise ValidationError(f"trace {tr} != 1")
        wmin = float(np.linalg.eigvalsh(hermitize(self.entries))[0])
        if wmin < -max(self.tol, -CLAMP_FLOOR):
            raise ValidationError(f"negative eigenvalue {wmin:.3e} beyond tolerance")

    @property
    def dim(self) -> int:
        total = 1
        for d in self.dims:
            total *= d
        return total


@dataclass(eq=False)
class PureVector:
    """Unit vector over listed subsystem dims."""

    dims: list
    amplitudes: np.ndarray

    def __post_init__(self):
        self.dims = [int(d) for d in self.dims]
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        total = 1
        for d in self.dims:
            total *= d
        if self.amplitudes.shape != (total,):
            raise ValidationError(
                f"amplitude length {self.amplitudes.shape} != {total}")
        nrm = np.linalg.norm(self.amplitudes)
        if abs(nrm - 1.0) > 1e-10:
            raise ValidationError(f"norm {nrm} != 1 beyond 1e-10")

    def to_state(self) -> DensityState:
        m = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityState(list(self.dims), m)


@dataclass(frozen=True)
class EntropyValue:
    """A real entropy plus its unit tag; conversion is exact via ln 2."""

    value: float
    units: str

    def __post_init__(self):
        if self.units not in ("bits", "nats"):
            raise ValidationError(f"unknown units {self.units!r}")

    @property
    def bits(self) -> float:
        return self.value if self.units == "bits" else self.value / LN2

    @property
    def nats(self) -> float:
        return self.value if self.units == "nats" else self.value * LN2

    def to(self, units: str) -> "EntropyValue":
        if units == self.units:
            return self
        if units == "bits":
            return EntropyValue(self.value / LN2, "bits")
        if units == "nats":
            return EntropyValue(self.value * LN2, "nats")
        raise ValidationError(f"unknown units {units!r}")

    def __float__(self) -> float:
        return self.value


@dataclass
class BoundCheck:
    """One inequality report: lhs <= rhs with slack = rhs - lhs."""

    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass(eq=False)
class TypicalProjector:
    """Entropy-typical projector of a product of per-copy states.

    Carries the projector plus the measured quantities that certify the
    typicality sandwich and the trace bound.
    """

    projector: HermitianOperator
    n: int
    alpha: float
    sum_entropy_bits: float
    mass: float
    typical_count: int
    beta_bound: float
    measured_beta: float
    log2_lower: float  # typical eigenvalues are >= 2^log2_lower
    log2_upper: float  # and <= 2^log2_upper

    @property
    def entries(self) -> np.ndarray:
        return self.projector.entries


# ---------------------------------------------------------------------------
# low-level helpers
# ---------------------------------------------------------------------------

def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def eigh_sorted(m: np.ndarray, descending: bool = False):
    """Hermitian eigendecomposition with a deterministic ordering."""
    w, v = np.linalg.eigh(hermitize(m))
    if descending:
        w = w[::-1].copy()
        v = v[:, ::-1].copy()
    return w, v


def clamp_spectrum(w: np.ndarray, tol: float) -> np.ndarray:
    """Clamp numerical-dust negatives to zero; reject real negatives."""
    wmin = float(w.min()) if w.size else 0.0
    if wmin < -max(tol, -CLAMP_FLOOR):
        raise ValidationError(f"negative eigenvalue {wmin:.3e} beyond tolerance")
    return np.clip(w, 0.0, None)


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, HermitianOperator):
        return x.entries
    if isinstance(x, DensityState):
        return x.entries
    if isinstance(x, PureVector):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    return np.asarray(x, dtype=complex)


def _dims_of(x) -> list:
    if isinstance(x, (DensityState, PureVector)):
        return list(x.dims)
    m = _as_matrix(x)
    return [m.shape[0]]


def entropy_nats_of_matrix(m: np.ndarray, tol: float = 1e-10) -> float:
    w = clamp_spectrum(np.linalg.eigvalsh(hermitize(m)), tol)
    w = w[w > EIG_FLOOR]
    if w.size == 0:
        return 0.0
    return float(-(w * np.log(w)).sum())


# ---------------------------------------------------------------------------
# tensor plumbing
# ---------------------------------------------------------------------------

def kron(a, b):
    """Tensor product; concatenates subsystem dims; guards entry budget."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.ndim != 2 or ma.shape[0] != ma.shape[1]:
        raise ValidationError("left operand not square")
    if mb.ndim != 2 or mb.shape[0] != mb.shape[1]:
        raise ValidationError("right operand not square")
    d = ma.shape[0] * mb.shape[0]
    if d * d > ENTRY_BUDGET:
        raise DimensionOverflow(
            f"tensor product would hold {d*d} entries (> {ENTRY_BUDGET})")
    out = np.kron(ma, mb)
    if isinstance(a, DensityState) and isinstance(b, DensityState):
        return DensityState(list(a.dims) + list(b.dims), out,
                            tol=max(a.tol, b.tol, 1e-10))
    if isinstance(a, HermitianOperator) and isinstance(b, HermitianOperator):
        label = a.label and b.label and f"{a.label}(x){b.label}" or ""
        return HermitianOperator(d, out, label)
    return out


def partial_trace(rho: DensityState, keep) -> DensityState:
    """Trace out all subsystems not in ``keep``; kept dims keep their order."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValidationError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= len(rho.dims):
        raise ValidationError(f"invalid subsystem index in {keep}")
    mat = _ptrace(rho.entries, rho.dims, keep)
    return DensityState([rho.dims[i] for i in keep], mat,
                        tol=max(rho.tol, 1e-10))


def _ptrace(mat: np.ndarray, dims, keep) -> np.ndarray:
    dims = list(dims)
    k = len(dims)
    keep = sorted(keep)
    t = mat.reshape(dims + dims)
    # trace out dropped subsystems from the back so axis numbers stay valid
    dropped = [i for i in range(k) if i not in keep]
    for i in reversed(dropped):
        n_ax = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + n_ax)
    d_out = 1
    for i in keep:
        d_out *= dims[i]
    return t.reshape(d_out, d_out)


def lift_charge(a: HermitianOperator, n: int, site=None) -> HermitianOperator:
    """Embed a single-site charge into n copies.

    ``site=None`` builds the collective lift sum_i 1⊗...⊗A⊗...⊗1;
    an integer builds the single-site embedding at that position.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    d = a.dim
    total = d ** n
    if total * total > ENTRY_BUDGET:
        raise DimensionOverflow(
            f"lift would hold {total*total} entries (> {ENTRY_BUDGET})")

    def embed(pos: int) -> np.ndarray:
        left = np.eye(d ** pos, dtype=complex)
        right = np.eye(d ** (n - pos - 1), dtype=complex)
        return np.kron(np.kron(left, a.entries), right)

    if site is None:
        out = np.zeros((total, total), dtype=complex)
        for i in range(n):
            out += embed(i)
        tag = f"{a.label}^(({n}))" if a.label else ""
        return HermitianOperator(total, out, tag)
    site = int(site)
    if site < 0 or site >= n:
        raise ValidationError(f"site {site} out of range for n={n}")
    return HermitianOperator(total, embed(site), a.label)


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------

def entropy(rho: DensityState, units: str = "bits") -> EntropyValue:
    """von Neumann entropy; eigenvalues below 1e-12 contribute zero."""
    val = entropy_nats_of_matrix(rho.entries, rho.tol)
    return EntropyValue(val, "nats").to(units)


def _marginal_entropy_nats(rho: DensityState, parts) -> float:
    sub = partial_trace(rho, parts)
    return entropy_nats_of_matrix(sub.entries, max(rho.tol, 1e-10))


def _check_disjoint(*parts):
    seen = set()
    for p in parts:
        s = set(int(i) for i in p)
        if seen & s:
            raise ValidationError("overlapping partitions")
        seen |= s


def cond_entropy(rho: DensityState, part_a, part_b, units: str = "bits") -> EntropyValue:
    """S(A|B) = S(AB) - S(B).  Guards the Araki-Lieb window."""
    _check_disjoint(part_a, part_b)
    s_ab = _marginal_entropy_nats(rho, list(part_a) + list(part_b))
    s_b = _marginal_entropy_nats(rho, part_b)
    s_a = _marginal_entropy_nats(rho, part_a)
    val = s_ab - s_b
    if not (-s_a - 1e-9 <= val <= s_a + 1e-9):
        raise NumericalError(
            f"conditional entropy {val} escapes the Araki-Lieb window [{-s_a}, {s_a}]")
    return EntropyValue(val, "nats").to(units)


def mutual_info(rho: DensityState, part_a, part_b, units: str = "bits") -> EntropyValue:
    _check_disjoint(part_a, part_b)
    s_a = _marginal_entropy_nats(rho, part_a)
    s_b = _marginal_entropy_nats(rho, part_b)
    s_ab = _marginal_entropy_nats(rho, list(part_a) + list(part_b))
    val = s_a + s_b - s_ab
    if val < -1e-9:
        raise NumericalError(f"negative mutual information {val}")
    return EntropyValue(val, "nats").to(units)


def cond_mutual_info(rho: DensityState, part_a, part_b, part_c,
                     units: str = "bits") -> EntropyValue:
    """I(A:B|C) = S(AC) + S(BC) - S(C) - S(ABC); nonnegative by SSA."""
    _check_disjoint(part_a, part_b, part_c)
    s_ac = _marginal_entropy_nats(rho, list(part_a) + list(part_c))
    s_bc = _marginal_entropy_nats(rho, list(part_b) + list(part_c))
    s_c = _marginal_entropy_nats(rho, part_c) if part_c else 0.0
    s_abc = _marginal_entropy_nats(rho, list(part_a) + list(part_b) + list(part_c))
    val = s_ac + s_bc - s_c - s_abc
    if val < -1e-9:
        raise NumericalError(f"conditional mutual information {val} < -1e-9 violates SSA")
    return EntropyValue(val, "nats").to(units)


def relative_entropy_nats(rho: DensityState, sigma: DensityState) -> float:
    """S(rho || sigma) in nats; math.inf when supports are incompatible."""
    wr, vr = eigh_sorted(rho.entries)
    wr = clamp_spectrum(wr, rho.tol)
    ws, vs = eigh_sorted(sigma.entries)
    ws = clamp_spectrum(ws, sigma.tol)
    null_mask = ws <= EIG_FLOOR
    if null_mask.any():
        p_null = vs[:, null_mask]
        outside = float(np.real(np.trace(p_null.conj().T @ rho.entries @ p_null)))
        if outside > 1e-10:
            return math.inf
    term1 = float(sum(w * math.log(w) for w in wr if w > EIG_FLOOR))
    supp = ~null_mask
    logs = np.log(ws[supp])
    overlaps = np.real(np.einsum(
        "ij,jk,ki->i", vs[:, supp].conj().T, rho.entries, vs[:, supp]))
    term2 = float((overlaps * logs).sum())
    return term1 - term2


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def _psd_sqrt(m: np.ndarray, tol: float) -> np.ndarray:
    w, v = eigh_sorted(m)
    w = clamp_spectrum(w, tol)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: DensityState, sigma: DensityState) -> float:
    """F = || sqrt(rho) sqrt(sigma) ||_1, the square-root convention.

    The argument with the larger minimum eigenvalue is used as the outer
    factor of the sandwich — a deterministic conditioning choice (F is
    symmetric in its arguments).
    """
    if rho.dim != sigma.dim:
        raise ValidationError("dimension mismatch")
    wr = float(np.linalg.eigvalsh(hermitize(rho.entries))[0])
    ws = float(np.linalg.eigvalsh(hermitize(sigma.entries))[0])
    outer, inner = (rho, sigma) if wr >= ws else (sigma, rho)
    root = _psd_sqrt(outer.entries, outer.tol)
    mid = hermitize(root @ inner.entries @ root)
    w = clamp_spectrum(np.linalg.eigvalsh(mid), max(outer.tol, inner.tol, 1e-9))
    val = float(np.sqrt(w).sum())
    return min(max(val, 0.0), 1.0)


def trace_distance(rho: DensityState, sigma: DensityState) -> float:
    """Normalized trace distance (1/2)||rho - sigma||_1."""
    if rho.dim != sigma.dim:
        raise ValidationError("dimension mismatch")
    w = np.linalg.eigvalsh(hermitize(rho.entries - sigma.entries))
    return float(0.5 * np.abs(w).sum())


def purify(rho: DensityState) -> PureVector:
    """Spectral purification; register dimension equals rank(rho)."""
    w, v = eigh_sorted(rho.entries, descending=True)
    w = clamp_spectrum(w, rho.tol)
    keep = w > EIG_FLOOR
    lam = w[keep]
    vecs = v[:, keep]
    r = int(lam.size)
    if r == 0:
        raise ValidationError("zero state cannot be purified")
    d = rho.dim
    amp = np.zeros(d * r, dtype=complex)
    for i in range(r):
        amp += math.sqrt(lam[i]) * np.kron(vecs[:, i], _unit(r, i))
    amp = amp / np.linalg.norm(amp)
    return PureVector(list(rho.dims) + [r], amp)


def _unit(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def operator_norms(x) -> tuple:
    """(trace norm, Hilbert-Schmidt norm, operator norm) of a square matrix."""
    m = _as_matrix(x)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("operator_norms needs a square matrix")
    sv = np.linalg.svd(m, compute_uv=False)
    n1 = float(sv.sum())
    n2 = float(np.sqrt((sv ** 2).sum()))
    ninf = float(sv[0]) if sv.size else 0.0
    rank = max(1, int((sv > EIG_FLOOR * max(1.0, ninf)).sum()))
    root_r = math.sqrt(rank)
    if n1 > root_r * n2 + 1e-9 or root_r * n2 > rank * ninf + 1e-9:
        raise NumericalError("norm inequality chain violated beyond tolerance")
    return (n1, n2, ninf)


# ---------------------------------------------------------------------------
# typical projector
# ---------------------------------------------------------------------------

def typical_projector(rho_list, alpha: float) -> TypicalProjector:
    """Entropy-typical projector of rho_1 ⊗ ... ⊗ rho_n with constant alpha.

    A product-basis string is typical when its surprisal -log2 p deviates
    from the summed per-copy entropy by at most alpha*sqrt(n).
    """
    if alpha <= 0:
        raise ValidationError("alpha must be > 0")
    mats = [_as_matrix(r) for r in rho_list]
    n = len(mats)
    if n < 1:
        raise ValidationError("need at least one per-copy state")
    d = mats[0].shape[0]
    if any(m.shape[0] != d for m in mats):
        raise ValidationError("per-copy states must share the local dimension")
    total = d ** n
    if total * total > ENTRY_BUDGET:
        raise DimensionOverflow(f"product dimension {total} exceeds the guard")

    spectra = []
    bases = []
    s_sum_bits = 0.0
    for m in mats:
        w, v = eigh_sorted(m, descending=True)
        w = clamp_spectrum(w, 1e-9)
        spectra.append(w)
        bases.append(v)
        s_sum_bits += sum(-p * math.log2(p) for p in w if p > EIG_FLOOR)

    # outer-accumulate surprisals; impossible strings get +inf
    logp = np.zeros(1)
    prob = np.ones(1)
    for w in spectra:
        with np.errstate(divide="ignore"):
            l = np.where(w > EIG_FLOOR, -np.log2(np.maximum(w, EIG_FLOOR)), np.inf)
        logp = (logp[:, None] + l[None, :]).ravel()
        prob = (prob[:, None] * w[None, :]).ravel()

    width = alpha * math.sqrt(n)
    mask = np.abs(logp - s_sum_bits) <= width
    mass = float(prob[mask].sum())
    count = int(mask.sum())

    basis = bases[0]
    for b in bases[1:]:
        basis = np.kron(basis, b)
    proj = (basis * mask.astype(float)) @ basis.conj().T
    proj = hermitize(proj)

    d_max = max(m.shape[0] for m in mats)
    beta_bound = max(math.log2(3.0) ** 2, math.log2(d_max) ** 2)
    measured_beta = alpha ** 2 * (1.0 - mass)
    if mass < 1.0 - beta_bound / alpha ** 2 - 1e-9:
        raise NumericalError(
            f"typical mass {mass} below the 1 - beta/alpha^2 guarantee")
    return TypicalProjector(
        projector=HermitianOperator(total, proj, "typical"),
        n=n, alpha=alpha, sum_entropy_bits=s_sum_bits, mass=mass,
        typical_count=count, beta_bound=beta_bound, measured_beta=measured_beta,
        log2_lower=-s_sum_bits - width, log2_upper=-s_sum_bits + width)


# ---------------------------------------------------------------------------
# inequality suite
# ---------------------------------------------------------------------------

def _h_nats(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def bound_suite(rho: DensityState, sigma: DensityState | None = None,
                partition=None, gentle_op: HermitianOperator | None = None):
    """Run every applicable entropic/metric inequality, reporting
    (name, lhs, rhs, slack) per check.  All entropic quantities in nats.

    ``partition`` is a tuple of 2 or 3 disjoint index tuples into rho.dims;
    two-part partitions drive Araki-Lieb/subadditivity (and AFW when sigma
    is present), three-part partitions drive SSA.
    """
    checks = []

    if partition is not None:
        parts = [tuple(p) for p in partition]
        _check_disjoint(*parts)
        if len(parts) == 2:
            pa, pb = parts
            s_a = _marginal_entropy_nats(rho, pa)
            s_b = _marginal_entropy_nats(rho, pb)
            s_ab = _marginal_entropy_nats(rho, pa + pb)
            checks.append(BoundCheck("araki_lieb", abs(s_a - s_b), s_ab))
            checks.append(BoundCheck("subadditivity", s_ab, s_a + s_b))
        elif len(parts) == 3:
            pa, pb, pc = parts
            s_ac = _marginal_entropy_nats(rho, pa + pc)
            s_bc = _marginal_entropy_nats(rho, pb + pc)
            s_c = _marginal_entropy_nats(rho, pc)
            s_abc = _marginal_entropy_nats(rho, pa + pb + pc)
            checks.append(BoundCheck("ssa", s_abc + s_c, s_ac + s_bc))
        else:
            raise ValidationError("partition must have 2 or 3 parts")

    if sigma is not None:
        if sigma.dim != rho.dim:
            raise ValidationError("dimension mismatch")
        f = fidelity(rho, sigma)
        t = trace_distance(rho, sigma)
        checks.append(BoundCheck("fvdg_lower", 1.0 - f, t))
        checks.append(BoundCheck("fvdg_upper", t, math.sqrt(max(0.0, 1.0 - f * f))))
        rel = relative_entropy_nats(rho, sigma)
        checks.append(BoundCheck("pinsker", 2.0 * t * t, rel))
        d = rho.dim
        s_r = entropy_nats_of_matrix(rho.entries, rho.tol)
        s_s = entropy_nats_of_matrix(sigma.entries, sigma.tol)
        if d > 1:
            if t <= 1.0 - 1.0 / d:
                fa_rhs = t * math.log(d - 1) if d > 1 else 0.0
                fa_rhs += _h_nats(t)
            else:
                fa_rhs = math.log(d)
            checks.append(BoundCheck("fannes_audenaert", abs(s_r - s_s), fa_rhs))
        if partition is not None and len(partition) == 2:
            pa, pb = [tuple(p) for p in partition]
            d_a = 1
            for i in pa:
                d_a *= rho.dims[i]
            ce_r = (_marginal_entropy_nats(rho, pa + pb)
                    - _marginal_entropy_nats(rho, pb))
            ce_s = (_marginal_entropy_nats(sigma, pa + pb)
                    - _marginal_entropy_nats(sigma, pb))
            afw_rhs = 2.0 * t * math.log(d_a) + (1.0 + t) * _h_nats(t / (1.0 + t))
            checks.append(BoundCheck("afw", abs(ce_r - ce_s), afw_rhs))

    if gentle_op is not None:
        lam = gentle_op.entries
        w = np.linalg.eigvalsh(hermitize(lam))
        if w[0] < -1e-10 or w[-1] > 1.0 + 1e-10:
            raise ValidationError("gentle operator must satisfy 0 <= Lambda <= 1")
        delta = max(0.0, 1.0 - float(np.real(np.trace(lam @ rho.entries))))
        root = _psd_sqrt(lam, 1e-10)
        damaged = hermitize(root @ rho.entries @ root)
        lhs = float(np.abs(np.linalg.eigvalsh(hermitize(rho.entries - damaged))).sum())
        checks.append(BoundCheck("gentle_operator", lhs, 2.0 * math.sqrt(delta)))

    return checks


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def matrix_to_json(x) -> dict:
    m = _as_matrix(x)
    dims = _dims_of(x)
    out = {"dims": [int(d) for d in dims],
           "re": np.real(m).tolist()}
    if np.abs(np.imag(m)).max() > 0.0:
        out["im"] = np.imag(m).tolist()
    return out


def matrix_from_json(obj: dict, hermitian: bool = False) -> tuple:
    """Parse {"dims": [...], "re": [[...]], "im": [[...]]} into (dims, matrix).

    When ``hermitian`` is set the matrix is rejected unless it equals its
    conjugate transpose within 1e-10.
    """
    if not isinstance(obj, dict):
        raise ValidationError("matrix JSON must be an object")
    try:
        dims = [int(d) for d in obj["dims"]]
        re = np.array(obj["re"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    im = obj.get("im")
    if im is not None:
        im = np.array(im, dtype=float)
        if im.shape != re.shape:
            raise ValidationError("re/im shape mismatch")
        m = re + 1j * im
    else:
        m = re.astype(complex)
    total = 1
    for d in dims:
        total *= d
    if m.shape != (total, total):
        raise ValidationError(
            f"matrix shape {m.shape} does not match dims product {total}")
    if hermitian:
        dev = np.max(np.abs(m - m.conj().T))
        if dev > HERM_TOL:
            raise ValidationError(
                f"Hermitian slot holds non-Hermitian matrix (deviation {dev:.3e})")
    return dims, m


def state_from_json(obj: dict, tol: float = 1e-9) -> DensityState:
    dims, m = matrix_from_json(obj, hermitian=True)
    return DensityState(dims, m, tol=tol)


def hermitian_from_json(obj: dict, label: str = "") -> HermitianOperator:
    dims, m = matrix_from_json(obj, hermitian=True)
    return HermitianOperator(m.shape[0], m, label)
