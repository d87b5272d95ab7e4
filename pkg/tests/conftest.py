"""Shared test configuration: deterministic hypothesis profile and
common fixtures."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "deterministic",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow,
                           HealthCheck.filter_too_much,
                           HealthCheck.data_too_large],
)
settings.load_profile("deterministic")


PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@pytest.fixture(scope="session")
def pauli_xyz():
    """ChargeSet with all three qubit Paulis."""
    from chargediag import ChargeSet, HermitianOperator
    return ChargeSet(2, [HermitianOperator(2, PAULI_X, "X"),
                         HermitianOperator(2, PAULI_Y, "Y"),
                         HermitianOperator(2, PAULI_Z, "Z")])


@pytest.fixture(scope="session")
def pauli_xz():
    """ChargeSet with the non-commuting pair (X, Z)."""
    from chargediag import ChargeSet, HermitianOperator
    return ChargeSet(2, [HermitianOperator(2, PAULI_X, "X"),
                         HermitianOperator(2, PAULI_Z, "Z")])


@pytest.fixture(scope="session")
def single_z():
    """ChargeSet with the single commuting charge Z."""
    from chargediag import ChargeSet, HermitianOperator
    return ChargeSet(2, [HermitianOperator(2, PAULI_Z, "Z")])
