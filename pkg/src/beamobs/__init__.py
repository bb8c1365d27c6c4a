"""Modal observers for a flexible beam with an attached mass-spring body.

The package splits into five layers:

* :mod:`beamobs.spectral`  -- characteristic roots and eigenfunctions,
* :mod:`beamobs.modal`     -- truncated modal system (outputs, inputs, gain),
* :mod:`beamobs.observer`  -- error/plant propagation and decay diagnostics,
* :mod:`beamobs.resolvent` -- shifted-inverse structure and compactness checks,
* :mod:`beamobs.cli`       -- scenario-driven command line reports.
"""

from .errors import (
    AccuracyError,
    AmbiguityError,
    BeamObsError,
    ConditioningError,
    ConfigurationError,
    DegenerateModeError,
    DegenerateSpectrumError,
    DomainError,
    InsufficientDataError,
    NotAnEigenvalueError,
    NumericRangeError,
    ParameterError,
    SearchRangeError,
    ShapeError,
    ShiftTooLargeError,
    UndefinedMetricError,
)
from .spectral import (
    BeamParams,
    Mode,
    char_fn,
    char_fn_scaled,
    eval_mode,
    find_modes,
    gram_matrix,
    inner_product,
    solve_eigenfunction,
)
from .modal import (
    ActuatorShape,
    AssumptionReport,
    ModalSystem,
    SensorConfig,
    build_gain,
    build_input_matrix,
    build_output_matrix,
    build_system,
    check_assumptions,
)
from .observer import (
    DecayReport,
    ErrorState,
    PlantState,
    Trajectory,
    assemble_error_generator,
    decay_metrics,
    lyapunov,
    lyapunov_rate,
    modal_initial_error,
    propagate_error,
    propagate_plant_observer,
)
from .resolvent import (
    DensityReport,
    ResolventContext,
    assemble_blocks,
    build_context,
    eigenvalue_density,
    hs_bound,
    hs_norm,
    hs_trend,
    resolvent_apply,
    resolvent_blocks,
)
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
