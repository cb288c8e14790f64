"""
Quantized-feedback LQG: controller synthesis, quantizer selection and
Monte Carlo validation.
"""

# flake8: noqa
# pylint: disable=unused-variable

from .errors import *
from .settings import DEFAULT_SETTINGS, Settings, load_settings
from .model import (
    ScenarioModel,
    TrajectoryRecord,
    stage_cost,
    trajectory_cost,
    validate_scenario,
)
from .synthesis import (
    RiccatiSolution,
    control_gain_apply,
    solve_riccati,
    upsilon_recursion,
)
from .innovation import (
    InnovationStatistics,
    SensorFilterState,
    batch_innovations,
    propagate_statistics,
    psi_factor,
    sensor_innovation_step,
)
from .quantizer import *
from .selection import (
    SelectionSchedule,
    arrival_indicator,
    beta_coefficients,
    beta_constant_delay,
    beta_upsilon,
    brute_force_schedule,
    delay_matrix,
    delay_weight,
    delta_second_moment,
    error_second_moment,
    evaluate_C0,
    h_matrix,
    n_tilde,
    optimal_schedule,
    plan_schedule,
    theoretical_cost,
)
from .milp import build_milp, export_milp, milp_objective, solve_milp
from .estimator import (
    ChannelMessage,
    EstimatorState,
    batch_estimate,
    decode_message,
    estimator_step,
)
from .simulate import *
from .artifacts import load_bank, load_document, load_scenario
from .verify import run_checks
