"""Compression-rate formulas and rate regions for ensemble sources:
block decomposition of the algebra generated by an ensemble, reducibility
of pure ensembles, entanglement-assisted visible/blind rates, classical-
quantum distributed compression, and side-information redistribution.

All rates are reported in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import generator
from .errors import NumericalError, ValidationError
from .opcore import (DensityState, PureVector, cond_entropy, cond_mutual_info,
                     entropy_nats_of_matrix, hermitize, partial_trace)

LN2 = math.log(2.0)
CANON_REGISTERS = ("A", "C", "B", "R")


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class EnsembleSource:
    """A classical index X over labeled quantum registers.

    ``registers`` is an ordered tuple of labels from {A, C, B, R}; each
    per-x state carries exactly those subsystems in that order.
    """

    probs: np.ndarray
    states: list
    registers: tuple

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float).ravel()
        self.registers = tuple(self.registers)
        if self.probs.size == 0 or self.probs.size != len(self.states):
            raise ValidationError("need one probability per state")
        if np.any(self.probs < -1e-12):
            raise ValidationError("negative probability")
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise ValidationError(f"probabilities sum to {self.probs.sum()}")
        if not self.registers:
            raise ValidationError("at least one register label required")
        for lab in self.registers:
            if lab not in CANON_REGISTERS:
                raise ValidationError(f"unknown register label {lab!r}")
        if len(set(self.registers)) != len(self.registers):
            raise ValidationError("duplicate register label")
        dims0 = self._dims_of(self.states[0])
        if len(dims0) != len(self.registers):
            raise ValidationError(
                "state subsystem count does not match register labels")
        for st in self.states[1:]:
            if self._dims_of(st) != dims0:
                raise ValidationError("states disagree on register dims")
        self.register_dims = dict(zip(self.registers, dims0))

    @staticmethod
    def _dims_of(state) -> list:
        if isinstance(state, (DensityState, PureVector)):
            return list(state.dims)
        raise ValidationError("states must be DensityState or PureVector")

    @property
    def size(self) -> int:
        return self.probs.size

    def density(self, x: int) -> np.ndarray:
        st = self.states[x]
        if isinstance(st, PureVector):
            return np.outer(st.amplitudes, st.amplitudes.conj())
        return st.entries

    def vector(self, x: int) -> np.ndarray:
        """Amplitudes of state x; requires purity within 1e-10."""
        st = self.states[x]
        if isinstance(st, PureVector):
            return st.amplitudes
        w, v = np.linalg.eigh(hermitize(st.entries))
        if w[-1] < 1.0 - 1e-10:
            raise ValidationError(f"state {x} is not pure (top weight {w[-1]})")
        return v[:, -1]

    def average(self) -> np.ndarray:
        acc = np.zeros_like(self.density(0))
        for x in range(self.size):
            acc = acc + self.probs[x] * self.density(x)
        return hermitize(acc)

    def joint(self) -> DensityState:
        """Block-diagonal joint with the classical index as subsystem 0."""
        m = self.size
        d = self.density(0).shape[0]
        out = np.zeros((m * d, m * d), dtype=complex)
        for x in range(m):
            out[x * d:(x + 1) * d, x * d:(x + 1) * d] = \
                self.probs[x] * self.density(x)
        dims = [m] + [self.register_dims[r] for r in self.registers]
        return DensityState(dims, out, tol=1e-9)


def _entropy_bits(mat: np.ndarray) -> float:
    return entropy_nats_of_matrix(mat, 1e-10) / LN2


def _cond_bits(joint: DensityState, part_a, part_b) -> float:
    """S(A|B) in bits; empty conditioning falls back to S(A)."""
    if not part_b:
        return float(entropyvalue_bits(joint, part_a))
    return cond_entropy(joint, part_a, part_b, units="bits").value


def entropyvalue_bits(joint: DensityState, parts) -> float:
    sub = partial_trace(joint, parts)
    return _entropy_bits(sub.entries)


# ---------------------------------------------------------------------------
# rate regions
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class RateRegion:
    """Half-space description {sum_i coeff_i rate_i >= rhs} plus corners.

    Every corner must satisfy all inequalities within 1e-9 and sit on at
    least one facet.
    """

    inequalities: list   # (name, {symbol: coeff}, rhs)
    corners: list        # (name, {symbol: value})
    units: str = "bits"

    def __post_init__(self):
        if self.units != "bits":
            raise ValidationError("rate regions are reported in bits")
        for cname, point in self.corners:
            slacks = [self.slack(point, i)
                      for i in range(len(self.inequalities))]
            if min(slacks) < -1e-9:
                raise NumericalError(
                    f"corner {cname} violates an inequality by {-min(slacks):.3e}")
            if min(abs(s) for s in slacks) > 1e-9:
                raise NumericalError(f"corner {cname} touches no facet")

    def slack(self, point: dict, i: int) -> float:
        _, coeffs, rhs = self.inequalities[i]
        return sum(c * point.get(sym, 0.0) for sym, c in coeffs.items()) - rhs

    def contains(self, point: dict, tol: float = 1e-9) -> bool:
        return all(self.slack(point, i) >= -tol
                   for i in range(len(self.inequalities)))

    def to_json(self) -> dict:
        return {
            "units": self.units,
            "inequalities": [
                {"name": n, "coeffs": dict(sorted(c.items())), "rhs": rhs}
                for n, c, rhs in self.inequalities],
            "corners": [
                {"name": n, "point": dict(sorted(p.items()))}
                for n, p in self.corners]}


# ---------------------------------------------------------------------------
# block decomposition of the ensemble algebra
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class KiDecomposition:
    """Block structure A -> sum_j N_j (x) Q_j with per-block fixed states.

    ``isometry`` maps the original register space into the stacked block
    coordinates (support restriction included); ``blocks`` holds
    (p_j, dim_N_j, dim_Q_j, omega_j).
    """

    blocks: list
    isometry: np.ndarray

    @property
    def c_dim(self) -> int:
        return len(self.blocks)

    @property
    def block_offsets(self) -> list:
        offs, pos = [], 0
        for _, n_j, q_j, _ in self.blocks:
            offs.append((pos, n_j, q_j))
            pos += n_j * q_j
        return offs


def _commutant_basis(generators, r: int) -> list:
    """Orthonormal (Hilbert-Schmidt) basis of {Y : [G, Y] = 0 for all G}."""
    eye = np.eye(r, dtype=complex)
    rows = []
    for g in generators:
        # row-major vec: [g, Y] = 0  <=>  (g (x) 1 - 1 (x) g^T) vec(Y) = 0
        rows.append(np.kron(g, eye) - np.kron(eye, g.T))
    stack = np.concatenate(rows, axis=0)
    _, sv, vh = np.linalg.svd(stack)
    # absolute floor: the basis is HS-normalized, so when every generator
    # commutes exactly the stack is pure rounding noise and a cutoff
    # relative to sv[0] would misread that noise as rank
    tolerance = max(stack.shape) * 1e-12 * max(1.0, sv[0] if sv.size else 1.0)
    null_dim = int(np.sum(sv <= tolerance)) + (r * r - sv.size)
    basis = vh.conj()[-null_dim:] if null_dim else np.zeros((0, r * r))
    return [b.reshape(r, r) for b in basis]


def _derivation_closure(gens, h: np.ndarray, max_dim: int = 256) -> list:
    """Close the linear span of the generators under X -> [h, X].

    The block structure must be stable under the flow generated by the
    log of the ensemble average; closing the generators under this
    derivation before taking the commutant enforces that.
    """
    r = h.shape[0]
    basis = []

    def absorb(m: np.ndarray):
        v = m.ravel().copy()
        for b in basis:
            v -= np.vdot(b.ravel(), v) * b.ravel()
        nrm = np.linalg.norm(v)
        if nrm > 1e-9:
            mat = v.reshape(r, r) / nrm
            basis.append(mat)
            return mat
        return None

    queue = []
    for g in gens:
        added = absorb(g)
        if added is not None:
            queue.append(added)
    while queue and len(basis) < max_dim:
        g = queue.pop()
        added = absorb(h @ g - g @ h)
        if added is not None:
            queue.append(added)
    return basis


def _random_hermitian_from(basis, rng) -> np.ndarray:
    acc = np.zeros_like(basis[0])
    for b in basis:
        acc = acc + rng.normal() * b + rng.normal() * (1j * b)
    return hermitize(acc + acc.conj().T)


def _cluster(eigvals: np.ndarray, gap: float = 1e-6) -> list:
    groups, start = [], 0
    for i in range(1, eigvals.size + 1):
        if i == eigvals.size or eigvals[i] - eigvals[i - 1] > gap:
            groups.append(list(range(start, i)))
            start = i
    return groups


def ki_decompose(source: EnsembleSource, seed: int = 0) -> KiDecomposition:
    """Finest decomposition of the register algebra that every ensemble
    member respects: conjugation by the returned isometry carries each
    state into block-diagonal form c_j omega_j (x) (per-state Q factor)
    with a block-independent fixed state omega_j.
    """
    if len(source.registers) != 1:
        raise ValidationError("decomposition expects a single register")
    sigma = source.average()
    d = sigma.shape[0]
    w, v = np.linalg.eigh(sigma)
    supp = w > 1e-12
    r = int(supp.sum())
    if r == 0:
        raise ValidationError("ensemble average has empty support")
    v0 = v[:, supp]
    inv_sqrt = np.diag(1.0 / np.sqrt(w[supp]))
    gens = []
    for x in range(source.size):
        if source.probs[x] <= 1e-14:
            continue
        gens.append(hermitize(inv_sqrt @ v0.conj().T @ source.density(x)
                              @ v0 @ inv_sqrt))
    h = np.diag(np.log(w[supp]).astype(complex))
    closed = _derivation_closure(gens, h)
    comm = _commutant_basis(closed, r)

    last_error = None
    for attempt in range(6):
        rng = generator(seed, "rates", "ki", attempt)
        try:
            basis_cols, layout = _split_blocks(gens, comm, r, rng)
        except NumericalError as exc:
            last_error = exc
            continue
        u_ki = basis_cols.conj().T @ v0.conj().T      # (r x d)
        sigma_r = v0.conj().T @ sigma @ v0
        blocks = []
        ok = True
        pos = 0
        for n_j, q_j in layout:
            span = basis_cols[:, pos: pos + n_j * q_j]
            blk = span.conj().T @ sigma_r @ span
            p_j = float(np.real(np.trace(blk)))
            omega_j = _trace_q(blk, n_j, q_j) / p_j
            blocks.append((p_j, n_j, q_j,
                           DensityState([n_j], hermitize(omega_j), tol=1e-8)))
            pos += n_j * q_j
        defect = _reconstruction_defect(source, v0, basis_cols, layout, blocks)
        if defect > 1e-8:
            last_error = NumericalError(
                f"block reconstruction defect {defect:.3e}")
            ok = False
        if ok:
            return KiDecomposition(blocks=blocks, isometry=u_ki)
    raise NumericalError(
        f"numerically degenerate algebra after retries: {last_error}")


def _split_blocks(gens, comm, r: int, rng):
    z = _random_hermitian_from(comm, rng)
    zw, zv = np.linalg.eigh(z)
    clusters = [zv[:, idx] for idx in _cluster(zw)]
    k = len(clusters)
    n_rand = _random_hermitian_from(comm, rng)
    adj = np.zeros((k, k), dtype=bool)
    for i in range(k):
        adj[i, i] = True
        for j in range(i + 1, k):
            link = clusters[i].conj().T @ n_rand @ clusters[j]
            adj[i, j] = adj[j, i] = np.max(np.abs(link)) > 1e-8
    components = _connected_components(adj)

    basis_cols = []
    layout = []
    for comp in components:
        q_dims = {clusters[i].shape[1] for i in comp}
        if len(q_dims) != 1:
            raise NumericalError("cluster dimensions disagree inside a block")
        q_j = q_dims.pop()
        n_j = len(comp)
        ref = clusters[comp[0]]
        aligned = [ref]
        for ci in comp[1:]:
            cur = clusters[ci]
            s = cur.conj().T @ n_rand @ ref
            uu, sv, vh = np.linalg.svd(s)
            if sv.size == 0 or sv[-1] < 1e-8 * max(sv[0], 1e-30):
                raise NumericalError("singular intertwiner")
            aligned.append(cur @ (uu @ vh))
        for a_cols in aligned:
            dev = max(
                float(np.max(np.abs(a_cols.conj().T @ g @ a_cols
                                    - ref.conj().T @ g @ ref)))
                for g in gens)
            if dev > 1e-7:
                raise NumericalError(f"cluster alignment defect {dev:.3e}")
        for a_cols in aligned:
            basis_cols.append(a_cols)
        layout.append((n_j, q_j))
    cols = np.concatenate(basis_cols, axis=1)
    if cols.shape != (r, r):
        raise NumericalError("block basis does not span the support")
    return cols, layout


def _connected_components(adj: np.ndarray) -> list:
    k = adj.shape[0]
    seen, comps = [False] * k, []
    for i in range(k):
        if seen[i]:
            continue
        queue, comp = [i], []
        seen[i] = True
        while queue:
            cur = queue.pop()
            comp.append(cur)
            for j in range(k):
                if adj[cur, j] and not seen[j]:
                    seen[j] = True
                    queue.append(j)
        comps.append(sorted(comp))
    return comps


def _trace_q(block: np.ndarray, n_j: int, q_j: int) -> np.ndarray:
    t = block.reshape(n_j, q_j, n_j, q_j)
    return np.trace(t, axis1=1, axis2=3)


def _trace_n(block: np.ndarray, n_j: int, q_j: int) -> np.ndarray:
    t = block.reshape(n_j, q_j, n_j, q_j)
    return np.trace(t, axis1=0, axis2=2)


def _reconstruction_defect(source, v0, basis_cols, layout, blocks) -> float:
    worst = 0.0
    for x in range(source.size):
        if source.probs[x] <= 1e-14:
            continue
        rho_r = basis_cols.conj().T @ (v0.conj().T @ source.density(x) @ v0) \
            @ basis_cols
        pos = 0
        for (n_j, q_j), (_, _, _, omega_j) in zip(layout, blocks):
            size = n_j * q_j
            blk = rho_r[pos: pos + size, pos: pos + size]
            q_part = _trace_n(blk, n_j, q_j)
            ideal = np.kron(omega_j.entries, q_part)
            worst = max(worst, float(np.max(np.abs(blk - ideal))))
            rho_r[pos: pos + size, pos: pos + size] = 0.0
            pos += size
        worst = max(worst, float(np.max(np.abs(rho_r))))
    return worst


# ---------------------------------------------------------------------------
# informationally complete reduction of a quantum reference
# ---------------------------------------------------------------------------

def _weyl_frame(d: int, seed: int = 7) -> list:
    """d^2 rank-1 POVM elements from the shift/phase orbit of a fixed
    random fiducial vector; sums to the identity exactly."""
    rng = generator(seed, "rates", "frame", d)
    fid = rng.normal(size=d) + 1j * rng.normal(size=d)
    fid = fid / np.linalg.norm(fid)
    omega = np.exp(2j * np.pi / d)
    ops = []
    for a in range(d):
        for b in range(d):
            vec = np.roll(fid, a) * omega ** (b * np.arange(d))
            ops.append(np.outer(vec, vec.conj()) / d)
    total = sum(ops)
    if np.max(np.abs(total - np.eye(d))) > 1e-10:
        raise NumericalError("frame failed to resolve the identity")
    return ops


def reduce_quantum_reference(source: EnsembleSource) -> EnsembleSource:
    """Measure the R register with an informationally complete rank-1 POVM,
    absorbing it into the classical index."""
    if "R" not in source.registers:
        return source
    r_pos = source.registers.index("R")
    dims = [source.register_dims[r] for r in source.registers]
    d_r = dims[r_pos]
    keep = [i for i in range(len(dims)) if i != r_pos]
    frame = _weyl_frame(d_r)
    probs, states = [], []
    new_regs = tuple(r for r in source.registers if r != "R")
    for x in range(source.size):
        rho = source.density(x)
        for m_op in frame:
            full = _embed_at(m_op, dims, r_pos)
            raw = full @ rho
            p_k = float(np.real(np.trace(raw)))
            if p_k <= 1e-14:
                continue
            # rank-1 element: Tr_R[(1 (x) M) rho] is already the
            # post-measurement register state (cyclicity inside Tr_R)
            sub = hermitize(_ptrace_mat(raw, dims, keep)) / p_k
            probs.append(source.probs[x] * p_k)
            states.append(DensityState([dims[i] for i in keep], sub,
                                       tol=1e-8))
    probs = np.asarray(probs)
    probs = probs / probs.sum()
    return EnsembleSource(probs, states, new_regs)


def _embed_at(op: np.ndarray, dims, pos: int) -> np.ndarray:
    left = np.eye(int(np.prod(dims[:pos])) or 1, dtype=complex)
    right = np.eye(int(np.prod(dims[pos + 1:])) or 1, dtype=complex)
    return np.kron(np.kron(left, op), right)


def _ptrace_mat(mat: np.ndarray, dims, keep) -> np.ndarray:
    from .opcore import _ptrace
    return _ptrace(mat, dims, keep)


# ---------------------------------------------------------------------------
# rate regions and formulas
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class MixedRegionReport:
    region: RateRegion
    decomposition: KiDecomposition
    s_c_bits: float
    s_cq_bits: float


def mixed_state_region(source: EnsembleSource, seed: int = 0) -> MixedRegionReport:
    """Entanglement/quantum rate region of a mixed-state ensemble source:
    Q >= S(CQ) - S(C)/2 and Q + E >= S(CQ), with entropies taken on the
    block-decomposed average state."""
    if not set(source.registers) <= {"A", "R"}:
        raise ValidationError("expected registers A (and optionally R)")
    if "A" not in source.registers:
        raise ValidationError("source must carry register A")
    work = reduce_quantum_reference(source)
    ki = ki_decompose(work, seed=seed)
    sigma = work.average()
    probs_j = np.array([b[0] for b in ki.blocks])
    s_c = float(-(probs_j[probs_j > 1e-15]
                  * np.log2(probs_j[probs_j > 1e-15])).sum())
    s_cq = s_c
    pos = 0
    for p_j, n_j, q_j, _ in ki.blocks:
        span = ki.isometry[pos: pos + n_j * q_j, :]   # rows: block coords
        blk = span @ sigma @ span.conj().T
        q_state = _trace_n(blk, n_j, q_j) / p_j
        s_cq += p_j * _entropy_bits(hermitize(q_state))
        pos += n_j * q_j
    region = RateRegion(
        inequalities=[
            ("quantum_rate", {"Q": 1.0}, s_cq - 0.5 * s_c),
            ("rate_sum", {"Q": 1.0, "E": 1.0}, s_cq)],
        corners=[
            ("no_entanglement", {"Q": s_cq, "E": 0.0}),
            ("entanglement_assisted", {"Q": s_cq - 0.5 * s_c,
                                       "E": 0.5 * s_c})])
    return MixedRegionReport(region=region, decomposition=ki,
                             s_c_bits=s_c, s_cq_bits=s_cq)


@dataclass(eq=False)
class YPartition:
    """Connected components of the pairwise-overlap graph of a pure
    ensemble; component index y becomes a classical register."""

    assignment: list          # y label per x
    components: list          # list of x-index lists
    component_probs: np.ndarray
    threshold: float

    @property
    def irreducible(self) -> bool:
        return len(self.components) == 1


def reducibility_partition(source: EnsembleSource,
                           threshold: float = 1e-10) -> YPartition:
    """Partition a pure-state ensemble into orthogonal sub-ensembles:
    transitive closure of |<v_x|v_x'>| > threshold."""
    vecs = [source.vector(x) for x in range(source.size)]
    m = len(vecs)
    adj = np.zeros((m, m), dtype=bool)
    for i in range(m):
        adj[i, i] = True
        for j in range(i + 1, m):
            adj[i, j] = adj[j, i] = \
                abs(np.vdot(vecs[i], vecs[j])) > threshold
    comps = _connected_components(adj)
    assignment = [0] * m
    for y, comp in enumerate(comps):
        for x in comp:
            assignment[x] = y
    q = np.array([float(source.probs[comp].sum()) for comp in comps])
    return YPartition(assignment=assignment, components=comps,
                      component_probs=q, threshold=threshold)


def _joint_with_y(source: EnsembleSource, part: YPartition) -> DensityState:
    """Joint over [X, Y, registers...] with Y the component label."""
    m = source.size
    n_y = len(part.components)
    d = source.density(0).shape[0]
    out = np.zeros((m * n_y * d, m * n_y * d), dtype=complex)
    for x in range(m):
        y = part.assignment[x]
        off = (x * n_y + y) * d
        out[off: off + d, off: off + d] = source.probs[x] * source.density(x)
    dims = [m, n_y] + [source.register_dims[r] for r in source.registers]
    return DensityState(dims, out, tol=1e-9)


@dataclass(eq=False)
class EaSchumacherReport:
    q_bits: float
    e_consumed_bits: float
    region: RateRegion
    partition: YPartition
    s_a_bits: float
    s_a_cond_bits: float


def ea_schumacher_rate(source: EnsembleSource,
                       threshold: float = 1e-10) -> EaSchumacherReport:
    """Entanglement-assisted rate of a pure-state ensemble with side
    information: Q = (S(A) + S(A|CY))/2, E = (S(A) - S(A|CY))/2, with Y
    the orthogonal-component label of the ensemble."""
    if "A" not in source.registers:
        raise ValidationError("source must carry register A")
    if not set(source.registers) <= {"A", "C"}:
        raise ValidationError("expected registers A (and optionally C)")
    if len(source.registers) == 2:
        d0, d1 = (source.register_dims[r] for r in source.registers)
        for x in range(source.size):
            sv = np.linalg.svd(source.vector(x).reshape(d0, d1),
                               compute_uv=False)
            if sv.size > 1 and sv[1] > 1e-8:
                raise ValidationError(
                    f"state {x} is not a product across A:C")
    part = reducibility_partition(source, threshold)
    joint = _joint_with_y(source, part)
    # joint dims: [X, Y, registers...]
    a_idx = [2 + source.registers.index("A")]
    cond_idx = [1]
    if "C" in source.registers:
        cond_idx.append(2 + source.registers.index("C"))
    s_a = entropyvalue_bits(joint, a_idx)
    s_a_cond = cond_entropy(joint, a_idx, cond_idx, units="bits").value
    q = 0.5 * (s_a + s_a_cond)
    e = 0.5 * (s_a - s_a_cond)
    region = RateRegion(
        inequalities=[
            ("quantum_rate", {"Q": 1.0}, q),
            ("rate_sum", {"Q": 1.0, "E": 1.0}, s_a)],
        corners=[
            ("assisted", {"Q": q, "E": e}),
            ("unassisted", {"Q": s_a, "E": 0.0})])
    return EaSchumacherReport(q_bits=q, e_consumed_bits=e, region=region,
                              partition=part, s_a_bits=s_a,
                              s_a_cond_bits=s_a_cond)


@dataclass(eq=False)
class CqswReport:
    region: RateRegion
    generic: bool
    entropies: dict


def cqsw_region(source: EnsembleSource) -> CqswReport:
    """Distributed compression of a classical-quantum source: classical
    part at R_X, quantum part at R_B, with side-information corners."""
    if "B" not in source.registers:
        raise ValidationError("source must carry register B")
    if not set(source.registers) <= {"B", "R"}:
        raise ValidationError("expected registers B (and optionally R)")
    for x in range(source.size):
        source.vector(x)   # states must be pure on the full register set
    b_reg = source.registers.index("B")
    dims = [source.register_dims[r] for r in source.registers]
    d_b = dims[b_reg]
    generic = False
    m = source.size
    xb = np.zeros((m * d_b, m * d_b), dtype=complex)
    for x in range(m):
        rho = DensityState(dims, source.density(x), tol=1e-9)
        rho_b = partial_trace(rho, [b_reg]) if len(dims) > 1 else rho
        w = np.linalg.eigvalsh(hermitize(rho_b.entries))
        if np.all(w > 1e-10):
            generic = True
        xb[x * d_b:(x + 1) * d_b, x * d_b:(x + 1) * d_b] = \
            source.probs[x] * rho_b.entries
    joint = DensityState([m, d_b], xb, tol=1e-9)
    s_b = entropyvalue_bits(joint, [1])
    s_x = entropyvalue_bits(joint, [0])
    s_xb = _entropy_bits(joint.entries)
    s_x_b = cond_entropy(joint, [0], [1], units="bits").value
    s_b_x = cond_entropy(joint, [1], [0], units="bits").value
    region = RateRegion(
        inequalities=[
            ("classical_rate", {"R_X": 1.0}, s_x_b),
            ("quantum_rate", {"R_B": 1.0}, 0.5 * (s_b + s_b_x)),
            ("weighted_sum", {"R_X": 1.0, "R_B": 2.0}, s_b + s_xb)],
        corners=[
            ("classical_first", {"R_X": s_x_b, "R_B": s_b}),
            ("merging", {"R_X": s_x, "R_B": 0.5 * (s_b + s_b_x)})])
    return CqswReport(region=region, generic=generic,
                      entropies={"S(B)": s_b, "S(X)": s_x, "S(XB)": s_xb,
                                 "S(X|B)": s_x_b, "S(B|X)": s_b_x})


@dataclass(eq=False)
class QsrReport:
    irreducible: bool
    optimal_rate_bits: float | None
    baseline_bits: float
    upper_bound_only: bool
    partition: YPartition


def qsr_rates(source: EnsembleSource,
              threshold: float = 1e-10) -> QsrReport:
    """Side-information-assisted redistribution rates: irreducible sources
    get the closed-form optimum (S(A|C) + S(A|B))/2; every source gets the
    purified baseline I(A:RXX'|B)/2, an upper bound in general."""
    if "A" not in source.registers:
        raise ValidationError("source must carry register A")
    part = reducibility_partition(source, threshold)
    joint = source.joint()   # [X, registers...]

    def reg_idx(lab: str):
        return 1 + source.registers.index(lab) if lab in source.registers \
            else None

    a = [reg_idx("A")]
    c = [reg_idx("C")] if reg_idx("C") is not None else []
    b = [reg_idx("B")] if reg_idx("B") is not None else []
    s_a_c = _cond_bits(joint, a, c)
    s_a_b = _cond_bits(joint, a, b)
    optimal = 0.5 * (s_a_c + s_a_b)

    # purified source over [X, X', registers...]
    m = source.size
    d = source.density(0).shape[0]
    amps = np.zeros(m * m * d, dtype=complex)
    for x in range(m):
        vec = source.vector(x)
        amps[(x * m + x) * d:(x * m + x) * d + d] = \
            math.sqrt(source.probs[x]) * vec
    dims = [m, m] + [source.register_dims[r] for r in source.registers]
    pure = PureVector(dims, amps).to_state()
    a2 = [2 + source.registers.index("A")]
    b2 = [2 + source.registers.index("B")] if "B" in source.registers else []
    rxx = [0, 1]
    if "R" in source.registers:
        rxx.append(2 + source.registers.index("R"))
    if b2:
        info = cond_mutual_info(pure, a2, rxx, b2, units="bits").value
    else:
        from .opcore import mutual_info
        info = mutual_info(pure, a2, rxx, units="bits").value
    baseline = 0.5 * info
    return QsrReport(irreducible=part.irreducible,
                     optimal_rate_bits=optimal if part.irreducible else None,
                     baseline_bits=baseline,
                     upper_bound_only=not part.irreducible,
                     partition=part)
