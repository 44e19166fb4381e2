"""Online zeroth-order optimisation on Hadamard manifolds."""

from .bounds import (
    BoundReport,
    ComplexityBound,
    ProblemConstants,
    complexity_K,
    delta_bound,
    optimal_alpha,
    optimal_eta,
    optimal_parameters,
    regret_upper_bounds,
    zeta,
)
from .errors import (
    CalibrationError,
    ConfigurationError,
    ContractError,
    DegenerateInputError,
    DomainError,
    GeotrackError,
    ScheduleError,
    SolverError,
)
from .karcher import (
    AveragedTrace,
    Drift,
    KarcherInstance,
    KarcherObjective,
    averaged_study,
    calibrate_omega,
    evaluate_run,
    generate_instance,
    karcher_mean,
    regret_checkpoints,
    study_constants,
    track_minimizers,
    true_minimizer,
)
from .manifolds import SPD, Euclidean, GeodesicBall, make_euclidean, make_spd
from .optimizer import (
    AlgorithmParams,
    DoublingSchedule,
    constant_schedule,
    make_doubling_schedule,
    optimal_schedule,
    run,
)
from .oracle import TimeVaryingObjective, estimate_gradient, verify_oracle_bounds
from .plotting import log_plot_svg
from .verification import SuiteResult, geometry_suites, negative_control_suite, oracle_suite

__version__ = "0.1.0"
