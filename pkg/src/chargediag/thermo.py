"""Work ledgers, second laws, and minimum bath rates for charge exchange.

All bookkeeping is per system copy: a bath running at rate R contributes R
bath copies (and R times its per-copy charge/entropy changes) per system
copy.  Sequences of states are reduced to their limit data — per-copy
charge values and per-copy entropy — before any law is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagram import DiagramPoint, conditional_member, member
from .errors import (InfeasibleAtAnyR, NonPositiveR, NumericalError,
                     ValidationError)
from .gibbs import ChargeSet, ResponseMatrix, gibbs_from_beta
from .opcore import DensityState, entropy_nats_of_matrix

SECOND_LAW_TOL = 1e-9


@dataclass(eq=False)
class WorkLedger:
    """Per-copy charge/entropy balance of one transformation."""

    delta_A_S: np.ndarray
    delta_A_B: np.ndarray
    W: np.ndarray
    delta_s_S: float
    delta_s_B: float
    beta: np.ndarray

    def __post_init__(self):
        self.delta_A_S = np.asarray(self.delta_A_S, dtype=float).ravel()
        self.delta_A_B = np.asarray(self.delta_A_B, dtype=float).ravel()
        self.W = np.asarray(self.W, dtype=float).ravel()
        self.beta = np.asarray(self.beta, dtype=float).ravel()
        if not (self.delta_A_S.shape == self.delta_A_B.shape == self.W.shape
                == self.beta.shape):
            raise ValidationError("ledger vectors must share one length")

    @property
    def residual(self) -> float:
        """Total entropy balance; near zero for feasible transformations."""
        return self.delta_s_S + self.delta_s_B

    def closure_error(self) -> float:
        return float(np.max(np.abs(self.delta_A_S + self.delta_A_B + self.W)))


@dataclass(eq=False)
class BathSpec:
    """A generalized thermal bath: charges, inverse temperatures, rate."""

    charges: ChargeSet
    beta: np.ndarray
    tau_B: DensityState = None
    R: float = 1.0

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float).ravel()
        if self.beta.shape != (self.charges.num_charges,):
            raise ValidationError("beta length does not match bath charges")
        if self.R < 0:
            raise ValidationError("bath rate must be nonnegative")
        ref = gibbs_from_beta(self.charges, self.beta)
        if self.tau_B is None:
            self.tau_B = ref.tau
        else:
            dev = float(np.max(np.abs(self.tau_B.entries - ref.tau.entries)))
            if dev > 1e-9:
                raise ValidationError(
                    f"tau_B is not the thermal state of beta (deviation {dev:.3e})")
        self.thermal_values = ref.charge_values
        self.thermal_entropy = entropy_nats_of_matrix(ref.tau.entries, 1e-9)
        self.log_partition = ref.log_partition


def limit_data(x, charges: ChargeSet) -> tuple:
    """Reduce a state, a state sequence, a DiagramPoint, or raw (a, s)
    limit data to (charge vector, entropy in nats) per copy."""
    if isinstance(x, DensityState):
        a = np.array([float(np.real(np.trace(x.entries @ m)))
                      for m in charges.matrices()])
        return a, entropy_nats_of_matrix(x.entries, max(x.tol, 1e-10))
    if isinstance(x, DiagramPoint):
        return np.asarray(x.a, dtype=float).copy(), x.s_nats
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], DensityState):
        pairs = [limit_data(r, charges) for r in x]
        a = np.mean([p[0] for p in pairs], axis=0)
        s = float(np.mean([p[1] for p in pairs]))
        return a, s
    if isinstance(x, (list, tuple)) and len(x) == 2:
        a = np.asarray(x[0], dtype=float).ravel()
        return a, float(x[1])
    raise ValidationError(f"cannot reduce {type(x).__name__} to limit data")


def first_law(rho_S, sigma_S, sigma_B_or_values, bath: BathSpec,
              charges_S: ChargeSet) -> WorkLedger:
    """Charge balance of rho_S -> sigma_S against a bath at rate bath.R.

    W_j = -dA_Sj - dA_Bj closes the j-type battery exactly; the entropy
    residual (delta_s_S + delta_s_B) must stay near zero for the
    transformation to be realizable by a global near-conserving unitary.
    """
    if charges_S.num_charges != bath.charges.num_charges:
        raise ValidationError("system and bath must carry the same charge types")
    a_rho, s_rho = limit_data(rho_S, charges_S)
    a_sig, s_sig = limit_data(sigma_S, charges_S)
    a_bfin, s_bfin = limit_data(sigma_B_or_values, bath.charges)
    delta_a_s = a_sig - a_rho
    delta_a_b = bath.R * (a_bfin - bath.thermal_values)
    w = -delta_a_s - delta_a_b
    return WorkLedger(delta_A_S=delta_a_s, delta_A_B=delta_a_b, W=w,
                      delta_s_S=s_sig - s_rho,
                      delta_s_B=bath.R * (s_bfin - bath.thermal_entropy),
                      beta=bath.beta.copy())


@dataclass
class SecondLawReport:
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def deficit(self) -> float:
        return self.rhs - self.lhs


def second_law_check(ledger: WorkLedger, f_tilde_rho: float,
                     f_tilde_sigma: float) -> SecondLawReport:
    """sum_j beta_j W_j <= -(F(sigma) - F(rho)), within 1e-9."""
    lhs = float(ledger.beta @ ledger.W)
    rhs = f_tilde_rho - f_tilde_sigma
    return SecondLawReport(lhs=lhs, rhs=rhs,
                           satisfied=lhs <= rhs + SECOND_LAW_TOL)


def free_entropy_of(x, charges: ChargeSet, beta) -> float:
    """F = beta·a - s from limit data, in nats."""
    beta = np.asarray(beta, dtype=float).ravel()
    a, s = limit_data(x, charges)
    return float(beta @ a) - s


def _bath_point(rho_S, sigma_S, w, bath: BathSpec, charges_S: ChargeSet,
                r: float) -> DiagramPoint:
    a_rho, s_rho = limit_data(rho_S, charges_S)
    a_sig, s_sig = limit_data(sigma_S, charges_S)
    u = (a_sig - a_rho) + np.asarray(w, dtype=float).ravel()
    a_fin = bath.thermal_values - u / r
    s_fin = bath.thermal_entropy - (s_sig - s_rho) / r
    return DiagramPoint(a_fin, s_fin, units="nats", n=1)


def feasible_with_bath(rho_S, sigma_S, w, bath: BathSpec,
                       r: float, charges_S: ChargeSet = None,
                       mode: str = "product", s0: float = None) -> tuple:
    """Can the bath absorb the transformation at rate r?

    The final bath lands (per bath copy) at charges
    a_j = thermal_j - (dA_Sj + W_j)/r and entropy S(tau_B) - ds_S/r;
    feasibility is membership of that point in the bath's diagram —
    plain membership for product final states, conditional membership
    (side entropy s0, default s(sigma_S)) when system-bath correlations
    are allowed.
    """
    if r <= 0:
        raise NonPositiveR("bath rate must be > 0")
    if charges_S is None:
        charges_S = bath.charges
    point = _bath_point(rho_S, sigma_S, w, bath, charges_S, r)
    if mode == "product":
        ok = member(bath.charges, point)
    elif mode == "correlated":
        if s0 is None:
            _, s0 = limit_data(sigma_S, charges_S)
        ok = conditional_member(bath.charges, point.a, point.s_nats, s0,
                                units="nats")
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    return ok, point


def min_bath_rate(rho_S, sigma_S, w, bath: BathSpec,
                  charges_S: ChargeSet = None, mode: str = "product",
                  s0: float = None, rel_tol: float = 1e-6) -> float:
    """Smallest bath rate making the transformation feasible.

    Exponential bracketing plus bisection to relative tolerance; the
    monotone shape of feasible(R) is spot-checked around the answer.
    """
    if charges_S is None:
        charges_S = bath.charges
    w = np.asarray(w, dtype=float).ravel()
    a_rho, s_rho = limit_data(rho_S, charges_S)
    a_sig, s_sig = limit_data(sigma_S, charges_S)
    lhs = float(bath.beta @ w)
    rhs = (float(bath.beta @ a_rho) - s_rho) - (float(bath.beta @ a_sig) - s_sig)
    deficit = rhs - lhs
    if deficit < -SECOND_LAW_TOL:
        raise InfeasibleAtAnyR(
            f"second law violated (deficit {deficit:.3e}); no bath rate suffices")
    u = (a_sig - a_rho) + w
    if abs(s_sig - s_rho) <= 1e-12 and float(np.max(np.abs(u))) <= 1e-12:
        return 0.0

    def ok(r: float) -> bool:
        return feasible_with_bath(rho_S, sigma_S, w, bath, r, charges_S,
                                  mode=mode, s0=s0)[0]

    hi = 1.0
    grow = 0
    while not ok(hi):
        hi *= 2.0
        grow += 1
        if grow > 60:
            raise InfeasibleAtAnyR(
                "no feasible bath rate found up to 2^60; deficit too small "
                "for the requested transformation")
    lo = hi / 2.0 if grow else 0.0
    if grow == 0:
        while hi > 1e-12 and ok(hi / 2.0):
            hi /= 2.0
        if hi <= 1e-12:
            return 0.0
        lo = hi / 2.0
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    r_star = hi
    # the feasible set should be an up-set in R around the answer
    for mult, expect in ((1.1, True), (2.0, True), (0.9, False)):
        got = ok(r_star * mult)
        if expect and not got:
            raise NumericalError(
                f"feasibility not monotone: infeasible at {mult} x R*")
        if not expect and got and r_star * mult > lo * (1 + 10 * rel_tol):
            raise NumericalError(
                f"feasibility not monotone: feasible at {mult} x R*")
    return r_star


def heat_capacity_rate(ledger: WorkLedger, response: ResponseMatrix,
                       delta: float) -> float:
    """Small-deficit approximation of the minimum bath rate:
    R ≈ -(1/2 delta) sum_ij (dbeta_j/da_i) u_i u_j with u = dA_S + W."""
    if delta <= 0:
        raise ValidationError("deficit must be > 0")
    u = ledger.delta_A_S + ledger.W
    val = -response.quadratic_form(u) / (2.0 * delta)
    if val < -1e-12:
        raise NumericalError("negative rate from a supposedly definite response")
    return max(val, 0.0)


def battery_admissible(charges_S: ChargeSet, charges_B: ChargeSet,
                       charges_W: ChargeSet) -> bool:
    """Spectral-diameter headroom test: each work battery must span at
    least the system plus bath diameters for its charge type."""
    if not (charges_S.num_charges == charges_B.num_charges
            == charges_W.num_charges):
        raise ValidationError("charge-type counts must agree")
    return all(
        ds + db <= dw + 1e-12
        for ds, db, dw in zip(charges_S.diameters, charges_B.diameters,
                              charges_W.diameters))
