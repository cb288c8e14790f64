"""
Closed-loop simulation of the quantized feedback loop.
"""

# flake8: noqa
# pylint: disable=unused-variable

from .channel import DelayChannel, channel_deliver
from .trial import draw_noise, noise_factors, run_trial, trial_generator
from .montecarlo import (
    CostReport,
    SimulationConfig,
    compare_schedules,
    monte_carlo,
    offline_tables,
    simulate_chunk,
)
