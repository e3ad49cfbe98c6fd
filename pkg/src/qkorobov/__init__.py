"""Sparse-grid interpolation compiled to QSP+LCU circuits, simulated exactly."""

from .simulator import (
    Circuit,
    Gate,
    Multiplexed,
    ResourceReport,
    Statevector,
    apply_gate,
    circuit_unitary,
    controlled,
    expectation_z_first,
    resource_report,
    run_circuit,
    shifted,
)
from .qsp import (
    bind_signal,
    chebyshev_circuit,
    chebyshev_first_kind,
    chebyshev_second_kind,
    qsp_ansatz,
    signal_encoding,
)
from .sparsegrid import (
    ChebyshevTerm,
    GridIndex,
    SurplusMap,
    chebyshev_expansion,
    enumerate_levels,
    evaluate_interpolant,
    grid_count,
    hat,
    index_set,
    integral_coefficient,
    locate_support,
    scaled_hat,
    surplus_coefficients,
)
from .lcu import (
    LcuPlan,
    assemble_lcu,
    direct_amplitude,
    evaluate_via_circuit,
    hadamard_test,
    hadamard_test_circuit,
    multiplexer,
    plan_from_terms,
    prepare_state_unitary,
)
from .analysis import (
    ConvergenceRow,
    ConvergenceStudy,
    KorobovTestFunction,
    ResourceEstimate,
    coefficient_bound_audit,
    convergence_study,
    corpus,
    corpus_function,
    depth_envelope_study,
    dual_oracle_gap,
    lambert_w,
    lp_error,
    resource_estimate,
)

__version__ = "0.1.0"
