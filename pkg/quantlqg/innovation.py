"""
Forward innovation statistics and the sensor-side innovation generator.
"""

import dataclasses
import functools
import logging

import numpy as np

from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    SingularInnovationCovarianceError,
    TimeDesyncError,
)
from .settings import DEFAULT_SETTINGS
from .utils import condition_number, frozen, spd_solve, symmetrize

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class InnovationStatistics:
    """Covariances and gains of the innovation sequence.

    Args:
        model (ScenarioModel): The model the statistics belong to.
        M (ndarray): Innovation covariances M_0..M_{T-1}, shape (T, p, p).
        Sigma_pred (ndarray): Sigma_{t|t-1} for t = 0..T-1, shape (T, n, n).
        Sigma_filt (ndarray): Sigma_t for t = 0..T-1, shape (T, n, n).
        K (ndarray): Gains K_t = Sigma_{t|t-1}C'M_t^-1, shape (T, n, p).
    """
    model: object
    M: np.ndarray
    Sigma_pred: np.ndarray
    Sigma_filt: np.ndarray
    K: np.ndarray

    @property
    def horizon(self):
        """The number of stages T."""
        return len(self.M)

    @functools.cached_property
    def psi(self):
        """The table Psi[t, k] = A^(t-k) K_k, zero above the diagonal."""
        T = self.horizon
        n, p = self.K.shape[1], self.K.shape[2]
        table = np.zeros((T, T, n, p))
        for k in range(T):
            table[k, k] = self.K[k]
            for t in range(k + 1, T):
                table[t, k] = self.model.A @ table[t - 1, k]
        return frozen(table)

    @functools.cached_property
    def prior_means(self):
        """The open-loop means mu_t = A^t mu0, shape (T+1, n)."""
        means = np.empty((self.horizon + 1, self.model.n))
        means[0] = self.model.mu0
        for t in range(self.horizon):
            means[t + 1] = self.model.A @ means[t]
        return frozen(means)

    def check_time(self, t, what='Time'):
        """Raises IndexOutOfRangeError unless 0 <= t < T."""
        if not 0 <= t < self.horizon:
            raise IndexOutOfRangeError(
                f'{what} index {t} is outside [0, {self.horizon});'
            )


def propagate_statistics(model, settings=DEFAULT_SETTINGS):
    """Runs the forward recursions for t = 0..T-1.

    Args:
        model (ScenarioModel): The validated model.
        settings (Settings): Supplies the condition-number cap.

    Returns:
        stats (InnovationStatistics): The covariances and gains.

    Raises:
        SingularInnovationCovarianceError: When some M_t is ill-conditioned.
            An identically zero M_t (a noise-free plant) is accepted and
            gives a zero gain.
    """
    T, n, p = model.T, model.n, model.p
    A, C = model.A, model.C

    M = np.empty((T, p, p))
    Sp = np.empty((T, n, n))
    Sf = np.empty((T, n, n))
    K = np.empty((T, n, p))

    pred = model.Sigma_x
    for t in range(T):
        Sp[t] = pred
        M[t] = symmetrize(C @ pred @ C.T + model.V)
        if not np.any(M[t]):
            logger.warning('Innovation covariance vanishes at t=%d', t)
            K[t] = 0.0
        else:
            K[t] = spd_solve(
                M[t], C @ pred,
                settings.cond_cap, SingularInnovationCovarianceError,
                f'Innovation covariance M_{t}'
            ).T
        Sf[t] = symmetrize(pred - K[t] @ C @ pred)
        pred = symmetrize(A @ Sf[t] @ A.T + model.W)

    if logger.isEnabledFor(logging.DEBUG):
        conds = [condition_number(m) for m in M]
        logger.debug(
            'Innovation covariance condition numbers in [%.3g, %.3g]',
            min(conds), max(conds)
        )
    return InnovationStatistics(
        model=model,
        M=frozen(M),
        Sigma_pred=frozen(Sp),
        Sigma_filt=frozen(Sf),
        K=frozen(K),
    )


def psi_factor(stats, t, k):
    """Returns Psi(t, k) = A^(t-k) K_k.

    Args:
        stats (InnovationStatistics): The innovation statistics.
        t (int): The current time.
        k (int): The origin time, k <= t.

    Returns:
        psi (ndarray): The n x p factor.
    """
    stats.check_time(t)
    stats.check_time(k, 'Origin')
    if k > t:
        raise IndexOutOfRangeError(
            f'Origin index {k} is after the current time {t};'
        )
    return stats.psi[t, k]


@dataclasses.dataclass(frozen=True)
class SensorFilterState:
    """The sensor's running filtered estimate.

    Args:
        xhat (ndarray): The filtered estimate (mu0 before the first update).
        t (int): The index of the next measurement.
    """
    xhat: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, model):
        """Returns the state before the measurement at t = 0."""
        return cls(xhat=np.array(model.mu0, dtype=float), t=0)


def sensor_innovation_step(state, y, u_prev, stats, t=None):
    """Consumes one measurement and returns its innovation.

    Args:
        state (SensorFilterState): The state before the measurement.
        y (array_like): The measurement Y_t.
        u_prev (array_like): The input U_{t-1}; None at t = 0.
        stats (InnovationStatistics): The precomputed gains.
        t (int): The expected time index (default=None, not checked).

    Returns:
        xi (ndarray): The innovation.
        state (SensorFilterState): The advanced state.

    Raises:
        TimeDesyncError: When the state is out of step with the caller.
    """
    model = stats.model
    if t is not None and t != state.t:
        raise TimeDesyncError(
            f'Sensor filter is at t={state.t}, but was stepped for t={t};'
        )
    if state.t >= stats.horizon:
        raise TimeDesyncError(
            f'Sensor filter stepped past the horizon {stats.horizon};'
        )
    if state.t == 0:
        if u_prev is not None:
            raise TimeDesyncError('No previous input exists at t=0;')
        x_pred = state.xhat
    else:
        if u_prev is None:
            raise TimeDesyncError(
                f'Previous input is required at t={state.t};'
            )
        x_pred = model.A @ state.xhat + model.B @ np.asarray(u_prev, float)
    y = np.asarray(y, dtype=float)
    if y.shape != (model.p,):
        raise DimensionMismatchError(
            'y', f'Measurement has shape {y.shape}, expected ({model.p},);'
        )
    xi = y - model.C @ x_pred
    xhat = x_pred + stats.K[state.t] @ xi
    return xi, SensorFilterState(xhat=xhat, t=state.t + 1)


def batch_innovations(model, outputs, inputs):
    """Computes innovations by projecting on the whole output history.

    The control contribution is removed from the outputs, the joint
    Gaussian law of the remaining outputs is assembled, and every innovation
    is the residual of the least-squares projection on the earlier outputs.

    Args:
        model (ScenarioModel): The validated model.
        outputs (array_like): Y_0..Y_{T-1}, shape (T, p).
        inputs (array_like): U_0..U_{T-1}, shape (T, m).

    Returns:
        innovations (ndarray): Shape (T, p).
    """
    A, B, C = model.A, model.B, model.C
    outputs = np.asarray(outputs, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    T, p, n = len(outputs), model.p, model.n

    # Control-free outputs, their means and the open-loop state covariances.
    drift = np.zeros(n)
    mean = np.array(model.mu0, dtype=float)
    cov = np.array(model.Sigma_x, dtype=float)
    free = np.empty((T, p))
    means = np.empty((T, p))
    covs = []
    for t in range(T):
        free[t] = outputs[t] - C @ drift
        means[t] = C @ mean
        covs.append(cov)
        drift = A @ drift + B @ inputs[t]
        mean = A @ mean
        cov = A @ cov @ A.T + model.W

    gram = np.empty((T * p, T * p))
    for t in range(T):
        power = np.eye(n)
        for s in range(t, -1, -1):
            block = C @ power @ covs[s] @ C.T
            if s == t:
                block = block + model.V
            gram[t * p:(t + 1) * p, s * p:(s + 1) * p] = block
            gram[s * p:(s + 1) * p, t * p:(t + 1) * p] = block.T
            power = power @ A

    centered = (free - means).reshape(-1)
    innovations = np.empty((T, p))
    for t in range(T):
        head = slice(0, t * p)
        row = slice(t * p, (t + 1) * p)
        if t == 0:
            innovations[0] = centered[row]
            continue
        coef = np.linalg.lstsq(gram[head, head], centered[head], rcond=None)[0]
        innovations[t] = centered[row] - gram[row, head] @ coef
    return innovations
