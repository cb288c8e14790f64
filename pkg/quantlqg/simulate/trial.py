"""
One closed-loop trial, stepped module by module.
"""

import logging

import numpy as np

from ..estimator import ChannelMessage, EstimatorState, estimator_step
from ..innovation import SensorFilterState, sensor_innovation_step
from ..model import TrajectoryRecord, trajectory_cost
from ..quantizer import quantize
from ..synthesis import control_gain_apply
from ..utils import psd_factor
from .channel import DelayChannel, channel_deliver

logger = logging.getLogger(__name__)


def trial_generator(master_seed, index):
    """Returns the random generator of trial `index`.

    The stream depends only on (master_seed, index), so trials can run in
    any order and on any worker.
    """
    sequence = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(sequence))


def noise_factors(model):
    """Returns square factors of Sigma_x, W and V."""
    return psd_factor(model.Sigma_x), psd_factor(model.W), psd_factor(model.V)


def draw_noise(rng, model, factors=None):
    """Draws the initial state, process noise and measurement noise.

    The draw order is fixed: x0, then W_0..W_{T-1}, then v_0..v_{T-1}.

    Returns:
        x0 (ndarray): Shape (n,).
        process (ndarray): Shape (T, n).
        measurement (ndarray): Shape (T, p).
    """
    fx, fw, fv = factors if factors is not None else noise_factors(model)
    T, n, p = model.T, model.n, model.p
    z0 = rng.standard_normal(n)
    zw = rng.standard_normal((T, n))
    zv = rng.standard_normal((T, p))
    return model.mu0 + fx @ z0, zw @ fw.T, zv @ fv.T


def run_trial(model, bank, riccati, stats, moments, theta, seed, index=0):
    """Runs one trial in decision order.

    At every t: measurement, innovation, quantization, send, delivery,
    estimate, control, cost, plant step.

    Args:
        model (ScenarioModel): The plant.
        bank (QuantizerBank): The quantizers.
        riccati (RiccatiSolution): The control gains.
        stats (InnovationStatistics): The sensor gains.
        moments (CellMomentTable): The decoder table.
        theta (sequence): The bank position used at every stage.
        seed (int): The master seed.
        index (int): The trial index (default=0).

    Returns:
        record (TrajectoryRecord): The trajectory.
    """
    T, n, m, p = model.T, model.n, model.m, model.p
    x0, process, measurement = draw_noise(trial_generator(seed, index), model)

    states = np.empty((T + 1, n))
    inputs = np.empty((T, m))
    outputs = np.empty((T, p))
    innovations = np.empty((T, p))
    estimates = np.empty((T, n))
    prices = np.empty(T)
    arrivals = []

    sensor = SensorFilterState.initial(model)
    estimator = EstimatorState.initial(model)
    channel = DelayChannel(horizon=T)
    x, u_prev = x0, None
    for t in range(T):
        states[t] = x
        y = model.C @ x + measurement[t]
        xi, sensor = sensor_innovation_step(sensor, y, u_prev, stats, t)
        i = theta[t]
        j = quantize(bank.quantizers[i], xi)
        channel.send(ChannelMessage.send(i, j, t, bank.delays))
        delivered = channel_deliver(channel, t)
        estimator = estimator_step(
            estimator, u_prev, delivered, stats, moments)
        u = control_gain_apply(riccati.L[t], estimator.xbar)

        outputs[t], innovations[t], inputs[t] = y, xi, u
        estimates[t] = estimator.xbar
        prices[t] = bank.quantizers[i].price
        arrivals.append(tuple(msg.origin_time for msg in delivered))
        x = model.A @ x + model.B @ u + process[t]
        u_prev = u
    states[T] = x

    return TrajectoryRecord(
        states=states,
        inputs=inputs,
        outputs=outputs,
        innovations=innovations,
        selections=np.asarray(theta, dtype=int),
        prices=prices,
        realized_cost=trajectory_cost(model, states, inputs, prices),
        estimates=estimates,
        arrivals=arrivals,
    )
