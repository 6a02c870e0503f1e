"""Purity speed limits for controlled dissipative N-level systems."""

from .errors import (
    PslError,
    InvalidDimensionError,
    InvalidStateError,
    InvalidRatesError,
    UnsupportedConfigurationError,
    StiffnessError,
    DegenerateMagicSubspaceError,
    NoCrossingError,
    SingularMuDynamicsError,
    DivergenceError,
    StuckPointError,
    DomainError,
    DivergedOptimizationError,
    PositivityWarning,
)
from .model import (
    RelaxationSpec,
    PauliBasis,
    build_pauli_basis,
    CoherenceState,
    purity,
    rho_to_coherence,
    coherence_to_rho,
    jump_operators,
    dissipator_matrix,
    LindbladModel,
    build_lindblad_model,
    two_level_hamiltonians,
    three_level_hamiltonians,
    PiecewiseConstantControls,
    Trajectory,
    propagate,
    propagate_density_matrix,
)
from .magic import (
    MagicSubspaceMo,
    MuTrajectory,
    TmsResult,
    locate_Mo,
    purity_along_Mo,
    time_to_zero_po,
    mu_ode_rhs,
    integrate_mu,
    time_on_Md_quadrature,
    asymptotic_t_ms,
    t_ms,
    mo_control_synthesis,
    propagate_on_Mo,
    t_o_by_propagation,
)
from .analytic2 import (
    TwoLevelParams,
    magic_plane,
    t_o_closed,
    t_d_closed,
    mu_closed,
    t_ms_two_level,
    TwoLevelTrajectory,
    synthesize_trajectory,
)
from .bounds import (
    AMatrix,
    BoundReport,
    build_a_matrix,
    reference_a_matrix_two_level,
    reference_a_matrix_three_level,
    t_hilbert,
    t_hilbert_diagonal_basis,
    t_liouville,
    asymptotic_bounds,
    bound_report,
)
from .grape import (
    PulseProblem,
    PulseResult,
    SweepResult,
    optimize_pulse,
    minimum_time_sweep,
)

__version__ = "0.1.0"
