"""Spectral simulation and analysis of damped zeroth-order wave models on T^2."""

__version__ = "0.1.0"

from .charflow import (
    ControlConditionReport,
    FlowPoint,
    LimitCycle,
    Trajectory,
    check_control_condition,
    find_limit_cycles,
    integrate_trajectory,
    surface_residual,
    vector_field,
)
from .errors import ConfigError, InstabilityError, RungFailureError, StepSizeCollapseError
from .evolution import (
    ConcentrationReport,
    IntegrationResult,
    NormSeries,
    SimConfig,
    advance,
    concentration_report,
    energy_residual,
    integrate,
)
from .grid import (
    Field,
    Multiplier,
    TorusGrid,
    apply_multiplier,
    hs_norm,
    inner,
    l2_norm,
    plane_wave,
    project_resolved,
    random_field,
    to_fourier,
    to_grid,
)
from .operators import (
    ForcingSpec,
    OperatorSpec,
    apply_P,
    apply_Pbold,
    damping_field,
    forcing_field,
    make_preset,
    smoothed_indicator,
)
from .resolvent import (
    ControlConstantReport,
    ResolventLadder,
    ResolventQuery,
    ResolventSolution,
    estimate_control_constant,
    limiting_absorption,
    omega_sweep,
    solve_resolvent,
    validate_spectral_window,
)

__all__ = [name for name in dir() if not name.startswith("_")]
