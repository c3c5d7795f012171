"""
Mean-field social-influence opinion model, crowd metrics and (alpha, beta) sweeps
"""
from wisdomsim.errors import (
    ConfigError,
    DegenerateDynamicsError,
    Error,
    MetricDomainError,
    ParameterError,
    PositivityViolation,
    SweepFailedError,
)
from wisdomsim.metrics import CrowdMetrics, collective_error, evaluate, group_diversity, wisdom_indicator
from wisdomsim.opinion_model import (
    ModelParams,
    PopulationSpec,
    PopulationState,
    TrajectoryRecord,
    drift,
    sample_initial_population,
    simulate,
    step,
)
from wisdomsim.sweep_engine import SweepCellResult, SweepGrid, detect_steady_state, run_cell, run_sweep

__version__ = "1.0.0"
