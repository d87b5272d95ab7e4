"""Generalized Gibbs states for sets of non-commuting conserved charges.

The central objects: tau(beta) ∝ exp(-sum_j beta_j A_j), the convex dual
g(beta) = log Z(beta) + beta·a whose minimizer solves the max-entropy
inverse problem a -> beta, and the charge-response matrix [dbeta_j/da_i].
All inverse temperatures and partition functions are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MaxIterError, NonInterior, NumericalError, ValidationError
from .opcore import (DensityState, HermitianOperator, clamp_spectrum,
                     eigh_sorted, entropy_nats_of_matrix, hermitize)


@dataclass(eq=False)
class ChargeSet:
    """A family of Hermitian charges sharing one local dimension."""

    local_dim: int
    charges: list
    diameters: list = field(default_factory=list)

    def __post_init__(self):
        if not self.charges:
            raise ValidationError("need at least one charge")
        ops = []
        for c in self.charges:
            if not isinstance(c, HermitianOperator):
                c = HermitianOperator(int(np.asarray(c).shape[0]),
                                      np.asarray(c, dtype=complex))
            ops.append(c)
        self.charges = ops
        if any(c.dim != self.local_dim for c in self.charges):
            raise ValidationError("charges must share the local dimension")
        if not self.diameters:
            self.diameters = [c.diameter() for c in self.charges]
        if any(s < -1e-12 for s in self.diameters):
            raise ValidationError("spectral diameters must be nonnegative")

    @property
    def num_charges(self) -> int:
        return len(self.charges)

    def matrices(self) -> list:
        return [c.entries for c in self.charges]

    def combination(self, coeffs) -> np.ndarray:
        out = np.zeros((self.local_dim, self.local_dim), dtype=complex)
        for w, c in zip(coeffs, self.charges):
            out += w * c.entries
        return out


@dataclass(eq=False)
class GibbsResult:
    beta: np.ndarray
    tau: DensityState
    log_partition: float
    charge_values: np.ndarray
    iterations: int
    converged: bool


@dataclass(eq=False)
class ResponseMatrix:
    """Finite-difference charge response [dbeta_j/da_i]."""

    hessian: np.ndarray
    step: float

    def __post_init__(self):
        h = np.asarray(self.hessian, dtype=float)
        dev = float(np.max(np.abs(h - h.T))) if h.size else 0.0
        if dev > 1e-6:
            raise NumericalError(f"response matrix asymmetry {dev:.3e} > 1e-6")
        wmax = float(np.linalg.eigvalsh(0.5 * (h + h.T))[-1])
        if wmax > 1e-8:
            raise NumericalError(
                f"response matrix not negative definite (max eigenvalue {wmax:.3e})")
        self.hessian = h

    def quadratic_form(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.hessian @ u)


def gibbs_from_beta(charges: ChargeSet, beta) -> GibbsResult:
    """Normalized exp(-sum_j beta_j A_j), shifted by the spectral midpoint
    before exponentiating so large beta cannot overflow."""
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.shape != (charges.num_charges,):
        raise ValidationError(
            f"beta length {beta.size} != {charges.num_charges} charges")
    if not np.all(np.isfinite(beta)):
        raise ValidationError("beta must be finite")
    h = charges.combination(beta)
    w, v = eigh_sorted(h)
    shifted = np.exp(-(w - w[0]))   # exponents <= 0: no overflow
    z_shift = float(shifted.sum())
    log_z = float(-w[0] + math.log(z_shift))
    p = shifted / z_shift
    tau_mat = (v * p) @ v.conj().T
    tau = DensityState([charges.local_dim], hermitize(tau_mat), tol=1e-9)
    vals = np.array([float(np.real(np.trace(tau.entries @ a)))
                     for a in charges.matrices()])
    s_tau = entropy_nats_of_matrix(tau.entries, 1e-9)
    ident = float(beta @ vals) + log_z
    if abs(s_tau - ident) > 1e-8 * max(1.0, abs(ident)):
        raise NumericalError(
            f"entropy identity S = beta·a + logZ off by {abs(s_tau - ident):.3e}")
    return GibbsResult(beta=beta, tau=tau, log_partition=log_z,
                       charge_values=vals, iterations=0, converged=True)


def _dual_value(charges: ChargeSet, beta: np.ndarray, a: np.ndarray) -> float:
    h = charges.combination(beta)
    w = np.linalg.eigvalsh(hermitize(h))
    log_z = float(-w[0] + math.log(np.exp(-(w - w[0])).sum()))
    return log_z + float(beta @ a)


def _charge_values_at(charges: ChargeSet, beta: np.ndarray) -> np.ndarray:
    h = charges.combination(beta)
    w, v = eigh_sorted(h)
    shifted = np.exp(-(w - w[0]))
    p = shifted / shifted.sum()
    tau = (v * p) @ v.conj().T
    return np.array([float(np.real(np.trace(tau @ a)))
                     for a in charges.matrices()])


BETA_CAP = 1e4


def _polish_newton(charges: ChargeSet, beta: np.ndarray, a: np.ndarray,
                   rounds: int = 3) -> np.ndarray:
    """A few undamped Newton steps pushing the charge residual toward the
    numerical floor; keeps only steps that actually reduce it.  Downstream
    finite differences of solve_beta divide by 2*step, so the solver noise
    floor must sit well below step * 1e-6."""
    c = a.size
    fd = 1e-5
    best = beta
    best_res = float(np.max(np.abs(a - _charge_values_at(charges, best))))
    for _ in range(rounds):
        if best_res <= 1e-13:
            break
        grad = a - _charge_values_at(charges, best)
        hess = np.zeros((c, c))
        for j in range(c):
            e = np.zeros(c)
            e[j] = fd
            hess[:, j] = -(_charge_values_at(charges, best + e)
                           - _charge_values_at(charges, best - e)) / (2 * fd)
        hess = 0.5 * (hess + hess.T)
        try:
            step = np.linalg.solve(hess + 1e-12 * np.eye(c), -grad)
        except np.linalg.LinAlgError:
            break
        cand = best + step
        res = float(np.max(np.abs(a - _charge_values_at(charges, cand))))
        if res < best_res:
            best, best_res = cand, res
        else:
            break
    return best


def solve_beta(charges: ChargeSet, a, tol: float = 1e-9,
               max_iter: int = 200, beta0=None) -> GibbsResult:
    """Invert a -> beta by minimizing g(beta) = log Z + beta·a (damped
    Newton, backtracking line search).  Divergent dual iterates signal a
    target on or outside the achievable charge region."""
    a = np.asarray(a, dtype=float).ravel()
    c = charges.num_charges
    if a.shape != (c,):
        raise ValidationError(f"target length {a.size} != {c} charges")
    beta = (np.zeros(c) if beta0 is None
            else np.asarray(beta0, dtype=float).ravel().copy())
    g_cur = _dual_value(charges, beta, a)
    fd = 1e-5
    for it in range(1, max_iter + 1):
        vals = _charge_values_at(charges, beta)
        grad = a - vals
        if float(np.max(np.abs(grad))) <= tol:
            beta = _polish_newton(charges, beta, a)
            res = gibbs_from_beta(charges, beta)
            return GibbsResult(beta=res.beta, tau=res.tau,
                               log_partition=res.log_partition,
                               charge_values=res.charge_values,
                               iterations=it, converged=True)
        # Kubo response by finite differences of a(beta); PSD up to noise
        hess = np.zeros((c, c))
        for j in range(c):
            e = np.zeros(c)
            e[j] = fd
            hess[:, j] = -(_charge_values_at(charges, beta + e)
                           - _charge_values_at(charges, beta - e)) / (2 * fd)
        hess = 0.5 * (hess + hess.T)
        ridge = 1e-12
        while True:
            try:
                step = np.linalg.solve(hess + ridge * np.eye(c), -grad)
                break
            except np.linalg.LinAlgError:
                ridge = max(ridge * 10, 1e-10)
                if ridge > 1e2:
                    raise NonInterior("singular dual Hessian; target not interior")
        t = 1.0
        accepted = False
        for _ in range(60):
            cand = beta + t * step
            g_new = _dual_value(charges, cand, a)
            if g_new < g_cur:
                beta, g_cur = cand, g_new
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # stagnation at numerical floor: accept if gradient is tiny
            if float(np.max(np.abs(grad))) <= max(tol, 1e-8):
                beta = _polish_newton(charges, beta, a)
                res = gibbs_from_beta(charges, beta)
                return GibbsResult(beta=res.beta, tau=res.tau,
                                   log_partition=res.log_partition,
                                   charge_values=res.charge_values,
                                   iterations=it, converged=True)
            raise NonInterior(
                "dual line search stalled; target appears non-interior")
        if float(np.max(np.abs(beta))) > BETA_CAP:
            raise NonInterior(
                f"dual iterates diverged (|beta| > {BETA_CAP:g}); "
                "target on or outside the charge boundary")
    raise MaxIterError(f"no convergence within {max_iter} iterations")


def free_entropy(rho: DensityState, beta, charges: ChargeSet) -> float:
    """F(rho) = sum_j beta_j Tr(rho A_j) - S(rho), in nats.

    tau(beta) is the unique minimizer; the variational floor -log Z is
    checked on every call.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    if rho.dim != charges.local_dim:
        raise ValidationError("state dimension does not match the charges")
    vals = np.array([float(np.real(np.trace(rho.entries @ m)))
                     for m in charges.matrices()])
    s_rho = entropy_nats_of_matrix(rho.entries, max(rho.tol, 1e-10))
    f = float(beta @ vals) - s_rho
    h = charges.combination(beta)
    w = np.linalg.eigvalsh(hermitize(h))
    log_z = float(-w[0] + math.log(np.exp(-(w - w[0])).sum()))
    if f < -log_z - 1e-9:
        raise NumericalError(
            f"free entropy {f} fell below the variational floor {-log_z}")
    return f


def response_matrix(charges: ChargeSet, a, step: float = 1e-4) -> ResponseMatrix:
    """Central-difference response [dbeta_j/da_i] of solve_beta around a."""
    if step <= 0:
        raise ValidationError("step must be > 0")
    a = np.asarray(a, dtype=float).ravel()
    c = charges.num_charges
    center = solve_beta(charges, a)
    cols = np.zeros((c, c))
    for i in range(c):
        e = np.zeros(c)
        e[i] = step
        bp = solve_beta(charges, a + e, beta0=center.beta).beta
        bm = solve_beta(charges, a - e, beta0=center.beta).beta
        cols[i, :] = (bp - bm) / (2 * step)
    return ResponseMatrix(hessian=cols, step=step)
