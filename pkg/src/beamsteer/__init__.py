"""Spectral steering toolkit for a damped beam with delay, memory and impulses.

The package discretises the clamped beam on an interval by its sine modes,
builds the closed-form solution operator of the damped modal blocks, the
controllability Gramian of a final steering window with its regularized
inverse, synthesizes minimum-energy steering controls, simulates the full
semilinear dynamics (delayed nonlinearity, Volterra memory, velocity
impulses), and orchestrates the pullback steering experiment.
"""

from .errors import (
    BlowUpError,
    ConfigError,
    IllConditionedError,
    InvalidArgumentError,
)
from .spectral import (
    BeamState,
    HistorySegment,
    ModeSet,
    SpatialDomain,
    basis_matrix,
    energy_coords,
    energy_norm,
    laplacian_eigenvalues,
    project,
    state_from_coords,
    synthesize,
)
from .semigroup import (
    DecayEnvelope,
    ModeBlock,
    apply_semigroup,
    block_exp,
    block_matrix,
    damping_roots,
    decay_envelope,
    energy_block_matrix,
    operator_norms,
)
from .gramian import (
    GramianSet,
    ModeGramian,
    SteerWindow,
    assemble_gramian,
    gramian_mode_closedform,
    gramian_mode_quadrature,
    solve_regularized,
)
from .steering import (
    ControlSignal,
    SteeringProblem,
    alpha_sweep,
    apply_control_map,
    approximate_right_inverse_check,
    control_energy,
    steer_linear,
    synthesize_control,
)
from .dynamics import (
    ImpulseSchedule,
    NonlinearityCatalog,
    SimConfig,
    Trajectory,
    apply_impulse,
    evaluate_nonlinearity,
    memory_term,
    simulate,
    verify_f_bound,
)
from .harness import (
    CheckResult,
    ExperimentSpec,
    ResultRow,
    emit_csv,
    make_history,
    make_random_state,
    make_target,
    pullback_cell,
    run_linear_suite,
    run_pullback_experiment,
    suite_ok,
    summarize_rows,
)
from .config import DEFAULT_CONFIG, load_experiment, parse_experiment

__version__ = "0.1.0"
