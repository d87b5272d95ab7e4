"""Thermodynamics tests: work ledgers, closure/second laws, bath
feasibility, minimum bath rates, and the heat-capacity approximation."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from chargediag import (
    BathSpec,
    ChargeSet,
    DensityState,
    DiagramPoint,
    HermitianOperator,
    InfeasibleAtAnyR,
    ValidationError,
    WorkLedger,
    battery_admissible,
    feasible_with_bath,
    first_law,
    free_entropy_of,
    gibbs_from_beta,
    heat_capacity_rate,
    min_bath_rate,
    response_matrix,
    second_law_check,
    solve_beta,
)
from chargediag.errors import NonPositiveR
from chargediag.thermo import limit_data


def z_charges():
    return ChargeSet(2, [HermitianOperator(2, oracles.PAULI_Z, "Z")])


def z_bath(beta=0.7, R=1.0):
    return BathSpec(z_charges(), [beta], R=R)


def pure_z(up: bool):
    return DensityState([2], np.diag([1.0, 0.0] if up else [0.0, 1.0]))


# ---------------------------------------------------------------------------
# limit data
# ---------------------------------------------------------------------------

class TestLimitData:
    def test_all_input_forms_agree(self):
        cs = z_charges()
        tau = gibbs_from_beta(cs, [0.4]).tau
        a1, s1 = limit_data(tau, cs)
        a2, s2 = limit_data(DiagramPoint(a1, s1, units="nats"), cs)
        a3, s3 = limit_data([tau, tau, tau], cs)
        a4, s4 = limit_data((a1, s1), cs)
        for a, s in ((a2, s2), (a3, s3), (a4, s4)):
            np.testing.assert_allclose(a, a1, atol=1e-12)
            assert abs(s - s1) < 1e-12

    def test_sequence_averages(self):
        cs = z_charges()
        up, dn = pure_z(True), pure_z(False)
        a, s = limit_data([up, dn], cs)
        assert abs(a[0]) < 1e-12
        assert abs(s) < 1e-12   # average of two zero entropies

    def test_rejects_junk(self):
        with pytest.raises(ValidationError):
            limit_data("nonsense", z_charges())


# ---------------------------------------------------------------------------
# first law
# ---------------------------------------------------------------------------

class TestFirstLaw:
    def test_identity_transformation_costs_nothing(self):
        bath = z_bath()
        tau = gibbs_from_beta(z_charges(), [0.3]).tau
        led = first_law(tau, tau, (bath.thermal_values, bath.thermal_entropy),
                        bath, z_charges())
        assert np.max(np.abs(led.W)) == 0.0
        assert led.closure_error() == 0.0
        assert led.residual == 0.0

    def test_spin_flip_against_idle_bath(self):
        bath = z_bath()
        led = first_law(pure_z(True), pure_z(False),
                        (bath.thermal_values, bath.thermal_entropy),
                        bath, z_charges())
        assert abs(led.delta_A_S[0] - (-2.0)) < 1e-12
        assert np.max(np.abs(led.delta_A_B)) == 0.0
        assert abs(led.W[0] - 2.0) < 1e-12
        assert led.closure_error() == 0.0

    @given(seed=st.integers(0, 2 ** 31 - 1))
    def test_closure_is_exact_by_construction(self, seed):
        rng = np.random.default_rng(seed)
        cs = z_charges()
        bath = z_bath(R=float(rng.uniform(0.5, 4.0)))
        rho = DensityState([2], oracles.random_density(rng, 2))
        sig = DensityState([2], oracles.random_density(rng, 2))
        fin = DensityState([2], oracles.random_density(rng, 2))
        led = first_law(rho, sig, fin, bath, cs)
        assert led.closure_error() == 0.0

    def test_bath_rate_scales_bath_terms(self):
        cs = z_charges()
        rho, sig = pure_z(True), pure_z(False)
        fin = gibbs_from_beta(cs, [1.5]).tau
        l1 = first_law(rho, sig, fin, z_bath(R=1.0), cs)
        l3 = first_law(rho, sig, fin, z_bath(R=3.0), cs)
        np.testing.assert_allclose(l3.delta_A_B, 3.0 * l1.delta_A_B,
                                   atol=1e-12)
        assert abs(l3.delta_s_B - 3.0 * l1.delta_s_B) < 1e-12


# ---------------------------------------------------------------------------
# second law
# ---------------------------------------------------------------------------

class TestSecondLaw:
    def test_entropy_preserving_exchange_saturates(self):
        # ds = 0 and W = -dA_S (idle bath): beta·W equals the free-entropy
        # drop exactly
        cs = z_charges()
        bath = z_bath(0.9)
        rho, sig = pure_z(True), pure_z(False)
        led = first_law(rho, sig, (bath.thermal_values, bath.thermal_entropy),
                        bath, cs)
        rep = second_law_check(led,
                               free_entropy_of(rho, cs, bath.beta),
                               free_entropy_of(sig, cs, bath.beta))
        assert rep.satisfied
        assert abs(rep.deficit) < 1e-12

    def test_over_extraction_detected(self):
        cs = z_charges()
        bath = z_bath(0.9)
        rho, sig = pure_z(True), pure_z(False)
        led = first_law(rho, sig, (bath.thermal_values, bath.thermal_entropy),
                        bath, cs)
        led = WorkLedger(delta_A_S=led.delta_A_S,
                         delta_A_B=led.delta_A_B - 0.5,
                         W=led.W + 0.5,
                         delta_s_S=led.delta_s_S, delta_s_B=led.delta_s_B,
                         beta=led.beta)
        rep = second_law_check(led,
                               free_entropy_of(rho, cs, bath.beta),
                               free_entropy_of(sig, cs, bath.beta))
        assert not rep.satisfied

    @given(seed=st.integers(0, 2 ** 31 - 1))
    def test_entropy_conserving_ledgers_obey_the_law(self, seed):
        # any transformation whose total entropy balance is zero and whose
        # bath lands on a diagram point obeys beta·W <= -dF
        rng = np.random.default_rng(seed)
        cs = z_charges()
        bath = z_bath(float(rng.uniform(0.2, 1.5)))
        rho = gibbs_from_beta(cs, [float(rng.uniform(-1, 1))]).tau
        sig = gibbs_from_beta(cs, [float(rng.uniform(-1, 1))]).tau
        a_r, s_r = limit_data(rho, cs)
        a_s, s_s = limit_data(sig, cs)
        # bath absorbs the entropy difference exactly at rate R
        r = 4.0
        bath = z_bath(bath.beta[0], R=r)
        s_fin = bath.thermal_entropy - (s_s - s_r) / r
        cap = math.log(2.0)
        if not (0.0 <= s_fin <= cap):
            return
        # pick a feasible bath final charge on the z-diagram at that entropy
        radius = oracles.radius_for_entropy_bits(s_fin / oracles.LN2)
        a_fin = -radius  # cold side
        led = first_law(rho, sig, ((a_fin,), s_fin), bath, cs)
        rep = second_law_check(led,
                               free_entropy_of(rho, cs, bath.beta),
                               free_entropy_of(sig, cs, bath.beta))
        assert rep.satisfied


# ---------------------------------------------------------------------------
# bath feasibility
# ---------------------------------------------------------------------------

class TestFeasibleWithBath:
    def test_balanced_exchange_feasible_at_any_rate(self):
        # u = dA_S + W = 0 and ds = 0: the bath never moves
        cs = z_charges()
        bath = z_bath()
        rho, sig = pure_z(True), pure_z(False)
        for r in (1e-6, 1.0, 1e6):
            ok, pt = feasible_with_bath(rho, sig, [2.0], bath, r, cs)
            assert ok
            np.testing.assert_allclose(pt.a, bath.thermal_values, atol=1e-12)

    def test_large_rate_approaches_thermal(self):
        cs = z_charges()
        bath = z_bath()
        rho = gibbs_from_beta(cs, [0.2]).tau
        sig = gibbs_from_beta(cs, [1.1]).tau
        ok, pt = feasible_with_bath(rho, sig, [0.0], bath, 1e9, cs)
        assert ok
        assert np.max(np.abs(pt.a - bath.thermal_values)) < 1e-8
        assert abs(pt.s_nats - bath.thermal_entropy) < 1e-8

    def test_nonpositive_rate_rejected(self):
        cs = z_charges()
        with pytest.raises(NonPositiveR):
            feasible_with_bath(pure_z(True), pure_z(False), [2.0],
                               z_bath(), 0.0, cs)

    def test_unknown_mode_rejected(self):
        cs = z_charges()
        with pytest.raises(ValidationError):
            feasible_with_bath(pure_z(True), pure_z(False), [2.0],
                               z_bath(), 1.0, cs, mode="entangled")


# ---------------------------------------------------------------------------
# minimum bath rate
# ---------------------------------------------------------------------------

def small_deficit_instance(delta, beta_rho=0.5, beta_sig=1.1):
    """Thermal-to-thermal qubit transformation with prescribed second-law
    deficit delta (nats): work is tuned to leave exactly delta."""
    cs = z_charges()
    beta_bath = 0.7
    bath = z_bath(beta_bath)
    rho = gibbs_from_beta(cs, [beta_rho]).tau
    sig = gibbs_from_beta(cs, [beta_sig]).tau
    f_r = free_entropy_of(rho, cs, bath.beta)
    f_s = free_entropy_of(sig, cs, bath.beta)
    rhs = f_r - f_s
    w = (rhs - delta) / beta_bath
    return cs, bath, rho, sig, np.array([w])


class TestMinBathRate:
    def test_zero_rate_for_balanced_exchange(self):
        cs = z_charges()
        assert min_bath_rate(pure_z(True), pure_z(False), [2.0],
                             z_bath(), cs) == 0.0

    def test_star_rate_brackets_feasibility(self):
        cs, bath, rho, sig, w = small_deficit_instance(0.05)
        r_star = min_bath_rate(rho, sig, w, bath, cs)
        assert r_star > 0
        assert feasible_with_bath(rho, sig, w, bath, 1.05 * r_star, cs)[0]
        assert not feasible_with_bath(rho, sig, w, bath, 0.95 * r_star, cs)[0]

    def test_rate_grows_as_deficit_shrinks(self):
        rates = []
        for delta in (0.2, 0.05, 0.01):
            cs, bath, rho, sig, w = small_deficit_instance(delta)
            rates.append(min_bath_rate(rho, sig, w, bath, cs))
        assert rates[0] < rates[1] < rates[2]

    def test_infeasible_when_second_law_violated(self):
        cs, bath, rho, sig, w = small_deficit_instance(-0.01)
        with pytest.raises(InfeasibleAtAnyR):
            min_bath_rate(rho, sig, w, bath, cs)

    def test_heat_capacity_approximation_small_deficit(self):
        # mild displacement: the quadratic response term dominates and the
        # finite membership tolerance of the bisection stays negligible
        delta = 1e-3
        cs, bath, rho, sig, w = small_deficit_instance(delta, 0.6, 0.8)
        r_star = min_bath_rate(rho, sig, w, bath, cs)
        led = first_law(rho, sig,
                        (bath.thermal_values, bath.thermal_entropy), bath, cs)
        led = WorkLedger(delta_A_S=led.delta_A_S,
                         delta_A_B=-led.delta_A_S - w, W=w,
                         delta_s_S=led.delta_s_S, delta_s_B=-led.delta_s_S,
                         beta=led.beta)
        resp = response_matrix(bath.charges, bath.thermal_values)
        r_approx = heat_capacity_rate(led, resp, delta)
        assert abs(r_approx - r_star) <= 0.1 * r_star

    def test_correlated_mode_needs_no_more_bath(self):
        cs, bath, rho, sig, w = small_deficit_instance(0.05)
        r_prod = min_bath_rate(rho, sig, w, bath, cs, mode="product")
        r_corr = min_bath_rate(rho, sig, w, bath, cs, mode="correlated")
        assert r_corr <= r_prod + 1e-9


# ---------------------------------------------------------------------------
# heat-capacity approximation in isolation
# ---------------------------------------------------------------------------

class TestHeatCapacityRate:
    def make_ledger(self, u, beta=0.7):
        return WorkLedger(delta_A_S=[u], delta_A_B=[0.0], W=[0.0],
                          delta_s_S=0.0, delta_s_B=0.0, beta=[beta])

    def test_zero_exchange_means_zero_rate(self):
        bath = z_bath()
        resp = response_matrix(bath.charges, bath.thermal_values)
        assert heat_capacity_rate(self.make_ledger(0.0), resp, 0.01) == 0.0

    def test_single_charge_identity(self):
        bath = z_bath()
        resp = response_matrix(bath.charges, bath.thermal_values)
        u, delta = 0.15, 0.02
        got = heat_capacity_rate(self.make_ledger(u), resp, delta)
        want = -resp.hessian[0, 0] * u * u / (2.0 * delta)
        assert abs(got - want) < 1e-12

    def test_nonnegative(self):
        bath = z_bath()
        resp = response_matrix(bath.charges, bath.thermal_values)
        for u in (-0.3, 0.1, 0.4):
            assert heat_capacity_rate(self.make_ledger(u), resp, 0.05) >= 0.0

    def test_requires_positive_deficit(self):
        bath = z_bath()
        resp = response_matrix(bath.charges, bath.thermal_values)
        with pytest.raises(ValidationError):
            heat_capacity_rate(self.make_ledger(0.1), resp, 0.0)


# ---------------------------------------------------------------------------
# battery admissibility and bath validation
# ---------------------------------------------------------------------------

class TestBatteryAndBath:
    def test_wide_battery_admitted(self):
        s = z_charges()
        b = z_charges()
        w = ChargeSet(5, [HermitianOperator(
            5, np.diag(np.arange(5.0)).astype(complex))])
        assert battery_admissible(s, b, w)

    def test_narrow_battery_rejected(self):
        s = z_charges()
        b = z_charges()
        w = ChargeSet(3, [HermitianOperator(
            3, np.diag([0.0, 1.0, 2.0]).astype(complex))])
        assert not battery_admissible(s, b, w)

    def test_count_mismatch(self):
        s = ChargeSet(2, [oracles.PAULI_X, oracles.PAULI_Z])
        with pytest.raises(ValidationError):
            battery_admissible(s, z_charges(), z_charges())

    def test_bath_thermal_data_matches_closed_form(self):
        bath = z_bath(0.8)
        a, s_bits, log_z = oracles.qubit_gibbs_sz(0.8)
        assert abs(bath.thermal_values[0] - a) < 1e-12
        assert abs(bath.thermal_entropy - s_bits * oracles.LN2) < 1e-10
        assert abs(bath.log_partition - log_z) < 1e-12

    def test_bath_rejects_foreign_state(self):
        tau = gibbs_from_beta(z_charges(), [0.3]).tau
        with pytest.raises(ValidationError):
            BathSpec(z_charges(), [0.8], tau_B=tau)

    def test_bath_rejects_negative_rate(self):
        with pytest.raises(ValidationError):
            BathSpec(z_charges(), [0.8], R=-1.0)
