"""Charge/entropy phase diagrams for non-commuting conserved quantities.

The package builds generalized Gibbs states at prescribed charge values,
answers membership and max-entropy queries about the achievable
(charges, entropy) region, keeps thermodynamic work/bath ledgers, and
constructs the finite-size machinery for asymptotic equivalence of
state sequences: sharp-charge subspace projectors, spectrum trimming,
and almost-commuting equivalence unitaries.  A separate part computes
closed-form compression-rate regions for ensemble sources.
"""

from .errors import (ChargeDiagError, DimensionOverflow, EmptyAfterTrim,
                     InfeasibleAtAnyR, MaxIterError, NonInterior,
                     NotEquivalent, NumericalError, TrimFailure,
                     ValidationError)
from .opcore import (BoundCheck, DensityState, EntropyValue,
                     HermitianOperator, PureVector, TypicalProjector,
                     bound_suite, cond_entropy, cond_mutual_info, entropy,
                     fidelity, hermitian_from_json, kron, lift_charge,
                     matrix_from_json, matrix_to_json, mutual_info,
                     operator_norms, partial_trace, purify,
                     relative_entropy_nats, state_from_json, trace_distance,
                     typical_projector)
from .gibbs import (ChargeSet, GibbsResult, ResponseMatrix, free_entropy,
                    gibbs_from_beta, response_matrix, solve_beta)
from .diagram import (DiagramPoint, MaxEntropyResult, Membership,
                      centroid_charges, charge_support, conditional_member,
                      max_entropy_at, member, membership_charges,
                      realize_product_state, sample_diagram)
from .thermo import (BathSpec, SecondLawReport, WorkLedger, battery_admissible,
                     feasible_with_bath, first_law, free_entropy_of,
                     heat_capacity_rate, min_bath_rate, second_law_check)
from .amc import (AetDiagnostics, AetSynthesis, AmcParams, TrimResult,
                  build_amc, deviation_window, projection_probability_bound,
                  spectral_window, synthesize_aet, trim, verify_amc)
from .rates import (CqswReport, EaSchumacherReport, EnsembleSource,
                    KiDecomposition, MixedRegionReport, QsrReport,
                    RateRegion, YPartition, cqsw_region, ea_schumacher_rate,
                    ki_decompose, mixed_state_region, qsr_rates,
                    reduce_quantum_reference, reducibility_partition)

__version__ = "0.1.0"

__all__ = [
    "ChargeDiagError", "ValidationError", "NumericalError",
    "DimensionOverflow", "NonInterior", "MaxIterError", "EmptyAfterTrim",
    "NotEquivalent", "TrimFailure", "InfeasibleAtAnyR",
    "DensityState", "PureVector", "HermitianOperator", "EntropyValue",
    "BoundCheck", "TypicalProjector",
    "entropy", "cond_entropy", "mutual_info", "cond_mutual_info",
    "relative_entropy_nats", "fidelity", "trace_distance", "purify",
    "partial_trace", "kron", "lift_charge", "typical_projector",
    "bound_suite", "operator_norms",
    "matrix_to_json", "matrix_from_json", "state_from_json",
    "hermitian_from_json",
    "ChargeSet", "GibbsResult", "ResponseMatrix", "gibbs_from_beta",
    "solve_beta", "free_entropy", "response_matrix",
    "DiagramPoint", "Membership", "MaxEntropyResult", "membership_charges",
    "max_entropy_at", "member", "conditional_member",
    "realize_product_state", "sample_diagram", "charge_support",
    "centroid_charges",
    "WorkLedger", "BathSpec", "SecondLawReport", "first_law",
    "second_law_check", "free_entropy_of", "feasible_with_bath",
    "min_bath_rate", "heat_capacity_rate", "battery_admissible",
    "AmcParams", "build_amc", "verify_amc", "spectral_window",
    "deviation_window", "TrimResult", "trim", "AetDiagnostics",
    "AetSynthesis", "synthesize_aet", "projection_probability_bound",
    "EnsembleSource", "RateRegion", "KiDecomposition", "YPartition",
    "ki_decompose", "reducibility_partition", "reduce_quantum_reference",
    "mixed_state_region",
    "MixedRegionReport", "ea_schumacher_rate", "EaSchumacherReport",
    "cqsw_region", "CqswReport", "qsr_rates", "QsrReport",
    "__version__",
]
