"""
Controller-side state estimate under delayed, out-of-order arrivals.
"""

import dataclasses
import logging

import numpy as np

from .errors import (
    DuplicateArrivalError,
    FutureOriginError,
    TimeDesyncError,
)

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, order=True)
class ChannelMessage:
    """A quantized innovation in flight.

    Messages order by (arrival_time, origin_time).

    Args:
        arrival_time (int): origin_time + d_i.
        origin_time (int): The time k the innovation was measured.
        quantizer_index (int): The bank position i of the quantizer.
        cell_index (int): The cell j holding the innovation.
    """
    arrival_time: int
    origin_time: int
    quantizer_index: int = dataclasses.field(compare=False)
    cell_index: int = dataclasses.field(compare=False)

    @classmethod
    def send(cls, quantizer_index, cell_index, origin_time, delays):
        """Builds the message for an innovation sent at origin_time."""
        return cls(
            arrival_time=origin_time + int(delays[quantizer_index]),
            origin_time=origin_time,
            quantizer_index=int(quantizer_index),
            cell_index=int(cell_index),
        )


@dataclasses.dataclass(frozen=True, eq=False)
class EstimatorState:
    """The controller estimate and the innovations it has received.

    Args:
        xbar (ndarray): The estimate Xbar_t (None before t = 0).
        t (int): The time of xbar; -1 before the first step.
        arrived (ndarray): arrived[k] is True once the message of origin k
            was delivered.
        xi_bar (ndarray): The decoded innovation of every arrived origin.
    """
    xbar: np.ndarray
    t: int
    arrived: np.ndarray
    xi_bar: np.ndarray

    @classmethod
    def initial(cls, model):
        """Returns the state before the first step."""
        return cls(
            xbar=None,
            t=-1,
            arrived=np.zeros(model.T, dtype=bool),
            xi_bar=np.zeros((model.T, model.p)),
        )


def decode_message(msg, moments):
    """Returns the conditional mean of the cell named by the message.

    Raises:
        UnknownCellError: When the table has no such (t, i, j).
    """
    return moments.mean(msg.origin_time, msg.quantizer_index, msg.cell_index)


def estimator_step(state, u_prev, arrivals, stats, moments):
    """Advances the estimate by one stage and folds in the arrivals.

    Xbar_t = A Xbar_{t-1} + B U_{t-1} + sum of Psi(t, k) xi_bar_k over the
    origins k delivered at t; Xbar_0 = mu0 plus the zero-delay arrival.

    Args:
        state (EstimatorState): The state at t - 1.
        u_prev (array_like): U_{t-1}; None at t = 0.
        arrivals (list): The `ChannelMessage` items delivered at t.
        stats (InnovationStatistics): Supplies Psi.
        moments (CellMomentTable): Decodes the messages.

    Returns:
        state (EstimatorState): The state at t.

    Raises:
        DuplicateArrivalError: When an origin is delivered twice.
        FutureOriginError: When a message originates after t.
        TimeDesyncError: When a message is due at another time.
    """
    model = stats.model
    t = state.t + 1
    stats.check_time(t)
    if t == 0:
        if u_prev is not None:
            raise TimeDesyncError('No previous input exists at t=0;')
        xbar = np.array(model.mu0, dtype=float)
    else:
        if u_prev is None:
            raise TimeDesyncError(f'Previous input is required at t={t};')
        xbar = model.A @ state.xbar + model.B @ np.asarray(u_prev, float)

    arrived = state.arrived.copy()
    xi_bar = state.xi_bar.copy()
    for msg in sorted(arrivals):
        k = msg.origin_time
        if k > t:
            raise FutureOriginError(
                f'Message of origin {k} delivered at t={t};'
            )
        if msg.arrival_time != t:
            raise TimeDesyncError(
                f'Message due at {msg.arrival_time} delivered at t={t};'
            )
        if arrived[k]:
            raise DuplicateArrivalError(
                f'Origin {k} was already delivered;'
            )
        arrived[k] = True
        xi_bar[k] = decode_message(msg, moments)
        xbar = xbar + stats.psi[t, k] @ xi_bar[k]
    return EstimatorState(xbar=xbar, t=t, arrived=arrived, xi_bar=xi_bar)


def batch_estimate(deliveries, inputs, stats, moments, t):
    """Evaluates Xbar_t directly from the whole history.

    Xbar_t = mu_t + sum_k Psi(t,k) v_{k,t} xi_bar_k
                  + sum_{k < t} A^(t-1-k) B U_k.

    Args:
        deliveries (list): deliveries[s] lists the messages delivered at s.
        inputs (array_like): U_0..U_{t-1} (longer histories are cut).
        stats (InnovationStatistics): Supplies Psi and mu_t.
        moments (CellMomentTable): Decodes the messages.
        t (int): The time.

    Returns:
        xbar (ndarray): The estimate.
    """
    stats.check_time(t)
    model = stats.model
    xbar = np.array(stats.prior_means[t])
    for s in range(t + 1):
        for msg in deliveries[s] if s < len(deliveries) else ():
            xbar = xbar + stats.psi[t, msg.origin_time] @ decode_message(
                msg, moments)
    drift = np.zeros(model.n)
    for k in range(t):
        drift = model.A @ drift + model.B @ np.asarray(inputs[k], float)
    return xbar + drift
