"""Tests for ensemble sources, block decompositions, and rate regions.

The block-decomposition engine is cross-checked against the brute-force
commutant/center oracles in ``oracles.py``, which work directly over a
Hermitian basis and share no code with the package implementation.
"""

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import block_diag

import oracles
from chargediag import (DensityState, EnsembleSource, NumericalError,
                        PureVector, RateRegion, ValidationError, cqsw_region,
                        ea_schumacher_rate, ki_decompose, mixed_state_region,
                        qsr_rates, reduce_quantum_reference,
                        reducibility_partition)

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
MINUS = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)

# entropy of the equal mixture of |0> and |+>, whose Bloch radius is 1/sqrt2
S_MIX_0_PLUS = oracles.bloch_entropy_bits(2.0 ** -0.5)


def pure_source(vecs, probs=None, registers=("A",), dims=None):
    m = len(vecs)
    probs = [1.0 / m] * m if probs is None else probs
    dims = [len(vecs[0])] if dims is None else dims
    states = [PureVector(dims, v) for v in vecs]
    return EnsembleSource(probs, states, registers)


def mixed_source(mats, probs, registers=("A",)):
    states = [DensityState([m.shape[0]], m, tol=1e-7) for m in mats]
    return EnsembleSource(probs, states, registers)


# ---------------------------------------------------------------------------
# seeded ensemble families for the decomposition cross-checks
# ---------------------------------------------------------------------------

def random_structured_ensemble(seed):
    """Probabilities and density matrices with a planted block structure.

    Cycles through: generic full-matrix ensembles, commuting families,
    two decoupled blocks, a fixed redundancy factor tensored with varying
    states, and a single mixed state.
    """
    rng = np.random.default_rng(seed)
    kind = seed % 5
    if kind == 0:
        d = int(rng.integers(2, 5))
        m = int(rng.integers(2, 4))
        mats = [oracles.random_density(rng, d) for _ in range(m)]
    elif kind == 1:
        d = int(rng.integers(2, 5))
        u = oracles.haar_unitary(rng, d)
        mats = [u @ np.diag(rng.dirichlet(np.full(d, 5.0))) @ u.conj().T
                for _ in range(2)]
    elif kind == 2:
        u = oracles.haar_unitary(rng, 4)
        mats = []
        for _ in range(2):
            lam = rng.uniform(0.25, 0.75)
            blk = np.zeros((4, 4), dtype=complex)
            blk[:2, :2] = lam * oracles.random_density(rng, 2)
            blk[2:, 2:] = (1.0 - lam) * oracles.random_density(rng, 2)
            mats.append(u @ blk @ u.conj().T)
    elif kind == 3:
        u = oracles.haar_unitary(rng, 4)
        w = oracles.haar_unitary(rng, 2)
        fixed = w @ np.diag([0.7, 0.3]) @ w.conj().T
        mats = [u @ np.kron(fixed, oracles.random_density(rng, 2)) @ u.conj().T
                for _ in range(3)]
    else:
        d = int(rng.integers(2, 5))
        mats = [oracles.random_density(rng, d)]
    probs = rng.dirichlet(np.full(len(mats), 3.0))
    return probs, mats


def rescaled_generator_span(probs, mats):
    """States rescaled by the inverse square root of their average, with the
    linear span closed under commutation with the log of the average.

    The block layout of the decomposition describes the factor structure of
    the algebra generated by exactly this span, so feeding it to the
    commutant oracles gives an independent route to the same integers.
    """
    sigma = sum(p * m for p, m in zip(probs, mats))
    w, v = np.linalg.eigh(sigma)
    assert w[0] > 1e-12, "cross-check families keep the average full rank"
    inv_sqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    log_sigma = (v * np.log(w)) @ v.conj().T
    rescaled = [inv_sqrt @ m @ inv_sqrt for m in mats]

    def span_basis(ms):
        a = np.array([m.ravel() for m in ms])
        _, sv, vh = np.linalg.svd(a, full_matrices=False)
        keep = sv > 1e-9 * max(1.0, float(sv[0]))
        return [vh[i].reshape(sigma.shape) for i in range(sv.size) if keep[i]]

    basis = span_basis(rescaled)
    while True:
        grown = basis + [log_sigma @ b - b @ log_sigma for b in basis]
        nb = span_basis(grown)
        if len(nb) == len(basis):
            return basis
        basis = nb


def fixed_factor_source(seed):
    """Ensemble of the form U (omega (x) tau_x) U* with a fixed omega."""
    rng = np.random.default_rng(seed)
    u = oracles.haar_unitary(rng, 4)
    w = oracles.haar_unitary(rng, 2)
    fixed = w @ np.diag([0.7, 0.3]) @ w.conj().T
    mats = [u @ np.kron(fixed, oracles.random_density(rng, 2)) @ u.conj().T
            for _ in range(3)]
    return mixed_source(mats, rng.dirichlet(np.full(3, 3.0)))


def commuting_block_unitary(ki, rng):
    """Random unitary acting only on the redundancy factors, built to
    commute with each block's fixed state."""
    parts = []
    for _, n_j, q_j, omega_j in ki.blocks:
        _, wv = np.linalg.eigh(omega_j.entries)
        phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n_j))
        u_n = (wv * phases) @ wv.conj().T
        parts.append(np.kron(u_n, np.eye(q_j, dtype=complex)))
    return block_diag(*parts)


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------

class TestEnsembleSource:
    def test_probability_sum_enforced(self):
        with pytest.raises(ValidationError):
            pure_source([KET0, KET1], probs=[0.6, 0.6])

    def test_negative_probability_rejected(self):
        with pytest.raises(ValidationError):
            pure_source([KET0, KET1], probs=[1.2, -0.2])

    def test_unknown_register_rejected(self):
        with pytest.raises(ValidationError):
            pure_source([KET0], registers=("Z",))

    def test_duplicate_register_rejected(self):
        with pytest.raises(ValidationError):
            pure_source([np.kron(KET0, KET0)], registers=("A", "A"),
                        dims=[2, 2])

    def test_subsystem_count_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            pure_source([KET0], registers=("A", "C"))

    def test_dims_must_agree_across_states(self):
        states = [PureVector([2], KET0),
                  PureVector([3], np.array([1.0, 0.0, 0.0]))]
        with pytest.raises(ValidationError):
            EnsembleSource([0.5, 0.5], states, ("A",))

    def test_vector_requires_purity(self):
        src = mixed_source([np.eye(2) / 2.0], [1.0])
        with pytest.raises(ValidationError):
            src.vector(0)

    def test_average_and_joint_entropy(self):
        rng = np.random.default_rng(17)
        mats = [oracles.random_density(rng, 2) for _ in range(2)]
        probs = [0.4, 0.6]
        src = mixed_source(mats, probs)
        assert np.max(np.abs(src.average()
                             - (0.4 * mats[0] + 0.6 * mats[1]))) <= 1e-12
        joint = src.joint()
        assert joint.dims == [2, 2]
        expect = oracles.shannon_bits(probs) + sum(
            p * oracles.vn_entropy_bits(m) for p, m in zip(probs, mats))
        assert abs(oracles.vn_entropy_bits(joint.entries) - expect) <= 1e-9


# ---------------------------------------------------------------------------
# rate regions as data
# ---------------------------------------------------------------------------

def demo_region():
    return RateRegion(
        inequalities=[("quantum_rate", {"Q": 1.0}, 1.0),
                      ("rate_sum", {"Q": 1.0, "E": 1.0}, 2.0)],
        corners=[("plain", {"Q": 2.0, "E": 0.0}),
                 ("assisted", {"Q": 1.0, "E": 1.0})])


class TestRateRegion:
    def test_slack_and_contains(self):
        region = demo_region()
        assert region.contains({"Q": 1.5, "E": 0.6})
        assert not region.contains({"Q": 0.9, "E": 5.0})
        # a missing symbol counts as rate zero
        assert region.contains({"Q": 3.0})
        assert abs(region.slack({"Q": 1.5, "E": 0.6}, 1) - 0.1) <= 1e-12

    def test_corner_outside_rejected(self):
        with pytest.raises(NumericalError):
            RateRegion(
                inequalities=[("quantum_rate", {"Q": 1.0}, 1.0)],
                corners=[("bad", {"Q": 0.5})])

    def test_interior_corner_rejected(self):
        with pytest.raises(NumericalError):
            RateRegion(
                inequalities=[("quantum_rate", {"Q": 1.0}, 1.0)],
                corners=[("floating", {"Q": 3.0})])

    def test_bits_only(self):
        with pytest.raises(ValidationError):
            RateRegion(inequalities=[("quantum_rate", {"Q": 1.0}, 0.0)],
                       corners=[("origin", {"Q": 0.0})], units="nats")

    def test_json_shape_and_sorted_keys(self):
        blob = demo_region().to_json()
        assert blob["units"] == "bits"
        assert [i["name"] for i in blob["inequalities"]] == \
            ["quantum_rate", "rate_sum"]
        assert list(blob["inequalities"][1]["coeffs"]) == ["E", "Q"]
        assert list(blob["corners"][0]["point"]) == ["E", "Q"]
        json.dumps(blob)   # serializable as-is


# ---------------------------------------------------------------------------
# block decomposition: worked examples
# ---------------------------------------------------------------------------

class TestKiDecompose:
    def test_orthogonal_pair_fully_classical(self):
        ki = ki_decompose(pure_source([KET0, KET1], probs=[0.3, 0.7]))
        assert ki.c_dim == 2
        assert sorted((n, q) for _, n, q, _ in ki.blocks) == [(1, 1), (1, 1)]
        assert sorted(round(p, 9) for p, _, _, _ in ki.blocks) == [0.3, 0.7]

    def test_overlapping_pair_irreducible(self):
        ki = ki_decompose(pure_source([KET0, PLUS]))
        assert ki.c_dim == 1
        p, n, q, _ = ki.blocks[0]
        assert (n, q) == (1, 2)
        assert abs(p - 1.0) <= 1e-9

    def test_single_mixed_state_support_block(self):
        rng = np.random.default_rng(21)
        u = oracles.haar_unitary(rng, 3)
        rho = u @ np.diag([0.6, 0.4, 0.0]) @ u.conj().T
        ki = ki_decompose(mixed_source([rho], [1.0]))
        assert ki.c_dim == 1
        p, n, q, omega = ki.blocks[0]
        assert (n, q) == (2, 1)
        assert abs(p - 1.0) <= 1e-9
        # the redundancy factor carries the state itself, on its support
        assert np.allclose(sorted(np.linalg.eigvalsh(omega.entries)),
                           [0.4, 0.6], atol=1e-8)

    def test_fixed_factor_recovered(self):
        src = fixed_factor_source(7)
        ki = ki_decompose(src)
        assert ki.c_dim == 1
        p, n, q, omega = ki.blocks[0]
        assert (n, q) == (2, 2)
        assert abs(p - 1.0) <= 1e-9
        assert np.allclose(sorted(np.linalg.eigvalsh(omega.entries)),
                           [0.3, 0.7], atol=1e-7)

    def test_isometry_rows_orthonormal(self):
        ki = ki_decompose(fixed_factor_source(9))
        v = ki.isometry
        assert np.max(np.abs(v @ v.conj().T - np.eye(v.shape[0]))) <= 1e-10
        offs = ki.block_offsets
        assert offs[0][0] == 0
        assert sum(n * q for _, n, q in offs) == v.shape[0]

    def test_single_register_required(self):
        vec = np.kron(KET0, KET0)
        with pytest.raises(ValidationError):
            ki_decompose(pure_source([vec], registers=("A", "C"),
                                     dims=[2, 2]))


class TestKiAgainstCommutantOracle:
    def test_block_structure_matches_commutant_oracle(self):
        for seed in range(50):
            probs, mats = random_structured_ensemble(seed)
            ki = ki_decompose(mixed_source(mats, probs))
            span = rescaled_generator_span(probs, mats)
            n_blocks, comm_dim, alg_dim = \
                oracles.block_shapes_from_commutant(span)
            assert ki.c_dim == n_blocks, f"seed {seed}"
            assert sum(n * n for _, n, _, _ in ki.blocks) == comm_dim, \
                f"seed {seed}"
            assert sum(q * q for _, _, q, _ in ki.blocks) == alg_dim, \
                f"seed {seed}"

    def test_block_unitaries_leave_states_invariant(self):
        rng = np.random.default_rng(2024)
        singleton = np.random.default_rng(12)
        sources = [fixed_factor_source(11),
                   mixed_source([oracles.random_density(singleton, 4)], [1.0])]
        kis = [ki_decompose(s) for s in sources]
        for k in range(50):
            src, ki = sources[k % 2], kis[k % 2]
            g = commuting_block_unitary(ki, rng)
            rot = ki.isometry.conj().T @ g @ ki.isometry
            for x in range(src.size):
                rho = src.density(x)
                back = rot @ rho @ rot.conj().T
                assert np.max(np.abs(back - rho)) <= 1e-8


# ---------------------------------------------------------------------------
# reducibility of pure ensembles
# ---------------------------------------------------------------------------

def exhaustive_components(vecs, threshold):
    """Smallest overlap-closed subset containing each state, by scanning
    every subset; independent of the graph-search implementation."""
    m = len(vecs)
    linked = [[abs(np.vdot(vecs[i], vecs[j])) > threshold for j in range(m)]
              for i in range(m)]
    comps = []
    for x in range(m):
        best = None
        for mask in range(1, 1 << m):
            if not (mask >> x) & 1:
                continue
            inside = [(mask >> i) & 1 for i in range(m)]
            if any(linked[i][j] and inside[i] != inside[j]
                   for i in range(m) for j in range(m)):
                continue
            if best is None or sum(inside) < sum(best):
                best = inside
        comps.append(tuple(i for i in range(m) if best[i]))
    return sorted(set(comps))


class TestReducibilityPartition:
    def test_orthogonal_pair_splits(self):
        part = reducibility_partition(pure_source([KET0, KET1],
                                                  probs=[0.3, 0.7]))
        assert not part.irreducible
        assert part.components == [[0], [1]]
        assert part.assignment == [0, 1]
        assert np.allclose(part.component_probs, [0.3, 0.7])

    def test_overlapping_pair_connected(self):
        part = reducibility_partition(pure_source([KET0, PLUS]))
        assert part.irreducible
        assert part.components == [[0, 1]]

    def test_chain_connects_through_shared_neighbors(self):
        # 0 and 1 are orthogonal, yet linked through the overlapping states
        vecs = [KET0, PLUS, KET1, MINUS]
        part = reducibility_partition(pure_source(vecs))
        assert part.irreducible
        assert [tuple(c) for c in part.components] == \
            exhaustive_components(vecs, part.threshold)

    def test_two_clusters_found_by_exhaustive_oracle(self):
        e = np.eye(4, dtype=complex)
        vecs = [e[0], (e[0] + e[1]) / math.sqrt(2.0),
                e[2], (e[2] + e[3]) / math.sqrt(2.0)]
        part = reducibility_partition(pure_source(vecs, dims=[4]))
        assert [tuple(c) for c in part.components] == [(0, 1), (2, 3)]
        assert [tuple(c) for c in part.components] == \
            exhaustive_components(vecs, part.threshold)
        assert np.allclose(part.component_probs, [0.5, 0.5])

    def test_threshold_flag_separates_near_orthogonal(self):
        tilted = KET1 + 1e-6 * KET0
        vecs = [KET0, tilted / np.linalg.norm(tilted)]
        assert reducibility_partition(pure_source(vecs)).irreducible
        loose = reducibility_partition(pure_source(vecs), threshold=1e-3)
        assert len(loose.components) == 2


# ---------------------------------------------------------------------------
# mixed-state source region
# ---------------------------------------------------------------------------

class TestMixedStateRegion:
    def test_orthogonal_classical_ensemble_corners(self):
        mats = [np.diag([1.0, 0.0]).astype(complex),
                np.diag([0.0, 1.0]).astype(complex)]
        rep = mixed_state_region(mixed_source(mats, [0.3, 0.7]))
        h = oracles.h2_bits(0.3)
        assert abs(rep.s_c_bits - h) <= 1e-9
        assert abs(rep.s_cq_bits - h) <= 1e-9
        corners = dict(rep.region.corners)
        assert abs(corners["no_entanglement"]["Q"] - h) <= 1e-9
        assert corners["no_entanglement"]["E"] == 0.0
        assert abs(corners["entanglement_assisted"]["Q"] - h / 2.0) <= 1e-9
        assert abs(corners["entanglement_assisted"]["E"] - h / 2.0) <= 1e-9

    def test_pure_ensemble_collapses_to_average_entropy(self):
        rep = mixed_state_region(pure_source([KET0, PLUS]))
        assert abs(rep.s_c_bits) <= 1e-9
        assert abs(rep.s_cq_bits - S_MIX_0_PLUS) <= 1e-9
        assert rep.decomposition.c_dim == 1

    def test_agrees_with_assisted_rate_on_pure_sources(self):
        for vecs, probs in ([[KET0, PLUS], [0.5, 0.5]],
                            [[KET0, KET1], [0.3, 0.7]]):
            src = pure_source(vecs, probs=probs)
            mixed_rhs = {n: rhs for n, _, rhs
                         in mixed_state_region(src).region.inequalities}
            ea = ea_schumacher_rate(src)
            assert abs(mixed_rhs["rate_sum"] - ea.s_a_bits) <= 1e-8

    def test_single_state_region_is_trivial(self):
        rng = np.random.default_rng(4)
        rep = mixed_state_region(
            mixed_source([oracles.random_density(rng, 3)], [1.0]))
        assert abs(rep.s_c_bits) <= 1e-9
        assert abs(rep.s_cq_bits) <= 1e-9
        assert rep.region.contains({"Q": 0.0, "E": 0.0})

    def test_quantum_reference_reduced_before_decomposition(self):
        rng = np.random.default_rng(5)
        ref = oracles.random_pure(rng, 2)
        src = pure_source([np.kron(KET0, ref), np.kron(PLUS, ref)],
                          registers=("A", "R"), dims=[2, 2])
        rep = mixed_state_region(src)
        direct = mixed_state_region(pure_source([KET0, PLUS]))
        assert abs(rep.s_c_bits - direct.s_c_bits) <= 1e-8
        assert abs(rep.s_cq_bits - direct.s_cq_bits) <= 1e-8

    def test_register_validation(self):
        with pytest.raises(ValidationError):
            mixed_state_region(pure_source([np.kron(KET0, KET0)],
                                           registers=("A", "C"),
                                           dims=[2, 2]))
        with pytest.raises(ValidationError):
            mixed_state_region(pure_source([KET0], registers=("R",)))


class TestReduceQuantumReference:
    def test_product_reference_factors_out(self):
        rng = np.random.default_rng(6)
        ref = oracles.random_pure(rng, 2)
        src = pure_source([np.kron(KET0, ref), np.kron(PLUS, ref)],
                          registers=("A", "R"), dims=[2, 2])
        red = reduce_quantum_reference(src)
        assert red.registers == ("A",)
        assert abs(red.probs.sum() - 1.0) <= 1e-10
        targets = [np.outer(KET0, KET0.conj()), np.outer(PLUS, PLUS.conj())]
        mass = [0.0, 0.0]
        for k in range(red.size):
            devs = [float(np.max(np.abs(red.density(k) - t)))
                    for t in targets]
            x = int(np.argmin(devs))
            assert devs[x] <= 1e-8
            mass[x] += red.probs[k]
        assert abs(mass[0] - 0.5) <= 1e-9
        assert abs(mass[1] - 0.5) <= 1e-9

    def test_no_reference_passthrough(self):
        src = pure_source([KET0, PLUS])
        assert reduce_quantum_reference(src) is src


# ---------------------------------------------------------------------------
# entanglement-assisted compression of pure ensembles
# ---------------------------------------------------------------------------

class TestEaSchumacherRate:
    def test_blind_irreducible_rate_is_average_entropy(self):
        rep = ea_schumacher_rate(pure_source([KET0, PLUS]))
        assert abs(rep.q_bits - S_MIX_0_PLUS) <= 1e-9
        assert abs(rep.e_consumed_bits) <= 1e-9
        assert rep.partition.irreducible

    def test_visible_labels_halve_the_rate(self):
        vecs = [np.kron(KET0, KET0), np.kron(PLUS, KET1)]
        rep = ea_schumacher_rate(pure_source(vecs, registers=("A", "C"),
                                             dims=[2, 2]))
        assert abs(rep.q_bits - 0.5 * S_MIX_0_PLUS) <= 1e-9
        assert abs(rep.e_consumed_bits - 0.5 * S_MIX_0_PLUS) <= 1e-9
        assert abs(rep.s_a_cond_bits) <= 1e-9

    def test_orthogonal_blind_ensemble_half_label_entropy(self):
        rep = ea_schumacher_rate(pure_source([KET0, KET1], probs=[0.3, 0.7]))
        h = oracles.h2_bits(0.3)
        assert abs(rep.s_a_bits - h) <= 1e-9
        assert abs(rep.s_a_cond_bits) <= 1e-9
        assert abs(rep.q_bits - 0.5 * h) <= 1e-9
        assert abs(rep.e_consumed_bits - 0.5 * h) <= 1e-9
        assert not rep.partition.irreducible

    def test_unassisted_corner_matches_average_entropy(self):
        rep = ea_schumacher_rate(pure_source([KET0, PLUS], probs=[0.2, 0.8]))
        corners = dict(rep.region.corners)
        assert abs(corners["unassisted"]["Q"] - rep.s_a_bits) <= 1e-12
        assert corners["unassisted"]["E"] == 0.0
        assert rep.region.contains(corners["assisted"])

    def test_entangled_label_cut_rejected(self):
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 2.0 ** -0.5
        with pytest.raises(ValidationError):
            ea_schumacher_rate(pure_source([bell], registers=("A", "C"),
                                           dims=[2, 2]))

    def test_register_validation(self):
        with pytest.raises(ValidationError):
            ea_schumacher_rate(pure_source([np.kron(KET0, KET0)],
                                           registers=("A", "B"),
                                           dims=[2, 2]))
        with pytest.raises(ValidationError):
            ea_schumacher_rate(pure_source([KET0], registers=("C",)))


# ---------------------------------------------------------------------------
# distributed classical-quantum compression
# ---------------------------------------------------------------------------

class TestCqswRegion:
    def test_classical_copy_corners(self):
        rep = cqsw_region(pure_source([KET0, KET1], registers=("B",)))
        corners = dict(rep.region.corners)
        assert abs(corners["classical_first"]["R_X"]) <= 1e-9
        assert abs(corners["classical_first"]["R_B"] - 1.0) <= 1e-9
        assert abs(corners["merging"]["R_X"] - 1.0) <= 1e-9
        assert abs(corners["merging"]["R_B"] - 0.5) <= 1e-9
        assert not rep.generic
        dw = corners["classical_first"]
        assert abs(dw["R_X"] + dw["R_B"] - rep.entropies["S(XB)"]) <= 1e-9

    def test_independent_label_collapses(self):
        rng = np.random.default_rng(8)
        phi = oracles.random_pure(rng, 2)
        rep = cqsw_region(pure_source([phi] * 4, registers=("B",)))
        rhs = {n: r for n, _, r in rep.region.inequalities}
        assert abs(rhs["classical_rate"] - 2.0) <= 1e-9
        assert abs(rhs["quantum_rate"]) <= 1e-9
        corners = dict(rep.region.corners)
        assert abs(corners["classical_first"]["R_X"] - 2.0) <= 1e-9
        assert abs(corners["merging"]["R_B"]) <= 1e-9

    def test_full_rank_branch_sets_generic_flag(self):
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 2.0 ** -0.5
        src = pure_source([bell, np.kron(KET0, KET0)],
                          registers=("B", "R"), dims=[2, 2])
        rep = cqsw_region(src)
        assert rep.generic
        # per-branch marginals diag(3/4, 1/4) on B; joint adds one label bit
        assert abs(rep.entropies["S(B)"] - oracles.h2_bits(0.25)) <= 1e-9
        assert abs(rep.entropies["S(XB)"] - 1.5) <= 1e-9
        corners = dict(rep.region.corners)
        assert abs(corners["classical_first"]["R_X"]
                   - (1.5 - oracles.h2_bits(0.25))) <= 1e-9
        assert abs(corners["classical_first"]["R_B"]
                   - oracles.h2_bits(0.25)) <= 1e-9

    @given(seed=st.integers(min_value=0, max_value=10 ** 6))
    def test_corner_identities_random_sources(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 4))
        vecs = [oracles.random_pure(rng, 4) for _ in range(m)]
        src = pure_source(vecs, probs=list(rng.dirichlet(np.full(m, 2.0))),
                          registers=("B", "R"), dims=[2, 2])
        rep = cqsw_region(src)
        corners = dict(rep.region.corners)
        dw = corners["classical_first"]
        assert abs(dw["R_X"] + dw["R_B"] - rep.entropies["S(XB)"]) <= 1e-9
        assert abs(corners["merging"]["R_X"] - rep.entropies["S(X)"]) <= 1e-9
        for _, point in rep.region.corners:
            assert rep.region.contains(point)

    def test_mixed_states_rejected(self):
        src = mixed_source([np.eye(2) / 2.0], [1.0], registers=("B",))
        with pytest.raises(ValidationError):
            cqsw_region(src)

    def test_missing_quantum_register_rejected(self):
        with pytest.raises(ValidationError):
            cqsw_region(pure_source([KET0], registers=("R",)))


# ---------------------------------------------------------------------------
# side-information-assisted redistribution
# ---------------------------------------------------------------------------

class TestQsrRates:
    def test_single_state_conditional_information(self):
        rng = np.random.default_rng(3)
        amps = oracles.random_pure(rng, 16)
        src = EnsembleSource([1.0], [PureVector([2, 2, 2, 2], amps)],
                             ("A", "C", "B", "R"))
        rep = qsr_rates(src)
        assert rep.irreducible and not rep.upper_bound_only
        rho = np.outer(amps, amps.conj())
        dims = [2, 2, 2, 2]

        def s_bits(keep):
            return oracles.vn_entropy_bits(
                oracles.partial_trace_loops(rho, dims, keep))

        half_cond_info = 0.5 * (s_bits([0, 1]) + s_bits([1, 3])
                                - s_bits([1]) - s_bits([0, 1, 3]))
        assert abs(rep.optimal_rate_bits - half_cond_info) <= 1e-9
        assert abs(rep.baseline_bits - rep.optimal_rate_bits) <= 1e-9

    def test_trivial_side_registers_match_assisted_rate(self):
        src = pure_source([KET0, PLUS])
        rep = qsr_rates(src)
        assert rep.irreducible
        assert abs(rep.optimal_rate_bits - S_MIX_0_PLUS) <= 1e-9
        assert abs(rep.optimal_rate_bits
                   - ea_schumacher_rate(src).q_bits) <= 1e-9
        assert abs(rep.baseline_bits - rep.optimal_rate_bits) <= 1e-9

    def test_orthogonal_blocks_upper_bound_only(self):
        rep = qsr_rates(pure_source([KET0, KET1]))
        assert not rep.irreducible
        assert rep.optimal_rate_bits is None
        assert rep.upper_bound_only
        assert abs(rep.baseline_bits - 1.0) <= 1e-9
