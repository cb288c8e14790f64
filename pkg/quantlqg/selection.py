"""
Offline quantizer selection.

Quantizer positions and times are 0-based throughout; `theta` is a
sequence of bank positions, one per stage.
"""

import dataclasses
import logging

import numpy as np

from .errors import IndexOutOfRangeError, InstanceTooLargeError
from .settings import DEFAULT_SETTINGS
from .synthesis import upsilon_recursion
from .utils import frozen, matrix_powers

logger = logging.getLogger(__name__)


def _check_theta(theta, T, M):
    theta = np.asarray(theta, dtype=int)
    if theta.shape != (T,):
        raise IndexOutOfRangeError(
            f'Selection has length {theta.size}, expected {T};'
        )
    if np.any(theta < 0) or np.any(theta >= M):
        raise IndexOutOfRangeError(
            f'Selection holds positions outside [0, {M});'
        )
    return theta


def delay_matrix(delays, T):
    """Returns Phi with Phi[i, j] = 1 iff i >= d_j, shape (T, M).

    >>> delay_matrix([1, 2], 3)
    >>> array([[0, 0], [1, 0], [1, 1]])
    """
    delays = np.asarray(delays, dtype=int)
    return (np.arange(T)[:, None] >= delays[None, :]).astype(int)


def arrival_indicator(theta, k, t, delays):
    """Returns 1 when the innovation sent at k has arrived by t.

    Args:
        theta (sequence): The selected positions.
        k (int): The origin time.
        t (int): The current time, k <= t.
        delays (sequence): The delay of every bank position.

    Returns:
        flag (int): The arrival indicator.
    """
    if k > t or k < 0:
        raise IndexOutOfRangeError(
            f'Origin {k} must lie in [0, {t}];'
        )
    return int(delays[theta[k]] <= t - k)


def arrival_matrix(theta, delays):
    """Returns the (T, T) matrix of arrival indicators, indexed [k, t]."""
    theta = np.asarray(theta, dtype=int)
    T = len(theta)
    d = np.asarray(delays, dtype=int)[theta]
    lag = np.arange(T)[None, :] - np.arange(T)[:, None]
    return ((lag >= 0) & (lag >= d[:, None])).astype(int)


def ntilde_table(stats, riccati):
    """Returns Psi(t,k)'N_t Psi(t,k) for every k <= t, shape (T, T, p, p).

    The table is indexed [k, t] and is zero for t < k.
    """
    table = np.einsum(
        'tkap,tab,tkbq->ktpq', stats.psi, riccati.N, stats.psi
    )
    return frozen(table)


def n_tilde(stats, riccati, k, t):
    """Returns the p x p matrix Psi(t,k)'N_t Psi(t,k)."""
    stats.check_time(t)
    stats.check_time(k, 'Origin')
    if k > t:
        raise IndexOutOfRangeError(
            f'Origin index {k} is after the current time {t};'
        )
    psi = stats.psi[t, k]
    return psi.T @ riccati.N[t] @ psi


def _suffix_sums(ntilde):
    """S[t, s] = sum of ntilde[t, l] over l >= s, with S[t, T] = 0."""
    T = ntilde.shape[0]
    sums = np.zeros((T, T + 1) + ntilde.shape[2:])
    sums[:, :T] = np.cumsum(ntilde[:, ::-1], axis=1)[:, ::-1]
    return sums


def delay_weights(ntilde, delays):
    """Returns G[t, i] = sum of ntilde[t, l] over t + d_i <= l < T."""
    T = ntilde.shape[0]
    sums = _suffix_sums(ntilde)
    starts = np.minimum(
        np.arange(T)[:, None] + np.asarray(delays, dtype=int)[None, :], T
    )
    return sums[np.arange(T)[:, None], starts]


def delay_weight(ntilde, delays, t, i):
    """Returns the PSD matrix paired with F_t^i in beta_t^i."""
    T = ntilde.shape[0]
    start = min(t + int(delays[i]), T)
    return np.sum(ntilde[t, start:], axis=0)


def beta_coefficients(stats, riccati, bank, moments, ntilde=None):
    """Returns beta[t, i] = tr(G_t^i F_t^i), shape (T, M).

    Args:
        stats (InnovationStatistics): Supplies Psi.
        riccati (RiccatiSolution): Supplies N.
        bank (QuantizerBank): Supplies the delays.
        moments (CellMomentTable): Supplies F.
        ntilde (ndarray): A precomputed table (default=None, computed).

    Returns:
        beta (ndarray): The coefficients.
    """
    if ntilde is None:
        ntilde = ntilde_table(stats, riccati)
    weights = delay_weights(ntilde, bank.delays)
    return np.einsum('tipq,tiqp->ti', weights, moments.F)


def h_matrix(ntilde, t, d):
    """Returns H(t, d) = sum of ntilde[t, l] over t + d <= l < T."""
    return delay_weight(ntilde, [d], t, 0)


def beta_constant_delay(ntilde, moments, d):
    """Returns beta for a bank where every quantizer has delay d."""
    weights = delay_weights(ntilde, [d])[:, 0]
    return np.einsum('tpq,tiqp->ti', weights, moments.F)


def beta_upsilon(stats, riccati, bank, moments):
    """Returns beta through the backward matrices Y_t.

    beta[t, i] = tr((A^d K_t)' Y_{t+d} (A^d K_t) F_t^i) with d = d_i, and
    zero when t + d_i >= T.
    """
    model = stats.model
    T = stats.horizon
    upsilon = upsilon_recursion(riccati.N, model.A)
    powers = matrix_powers(model.A, max(bank.delays) + 1)
    beta = np.zeros((T, bank.size))
    for i, d in enumerate(bank.delays):
        for t in range(T - d):
            Z = powers[d] @ stats.K[t]
            beta[t, i] = np.trace(Z.T @ upsilon[t + d] @ Z @ moments.F[t, i])
    return beta


@dataclasses.dataclass(frozen=True, eq=False)
class SelectionSchedule:
    """Per-stage adjusted prices and the selected quantizers.

    Args:
        beta (ndarray): beta_t^i, shape (T, M).
        c (ndarray): c_t^i = lambda_i - beta_t^i, shape (T, M).
        theta_star (tuple): The selected bank position per stage.
        prices (ndarray): lambda_i per bank position.
        C0 (float): The quantization-dependent cost (default=None).
        J_star (float): The total cost of the schedule (default=None).
    """
    beta: np.ndarray
    c: np.ndarray
    theta_star: tuple
    prices: np.ndarray
    C0: float = None
    J_star: float = None

    @property
    def horizon(self):
        """The number of stages T."""
        return len(self.theta_star)

    @property
    def price_part(self):
        """The total price paid, sum of lambda_{theta_t}."""
        return float(np.sum(self.prices[list(self.theta_star)]))

    @property
    def selection_part(self):
        """The selection-dependent part of C0, sum of min_i c_t^i."""
        T = self.horizon
        return float(np.sum(self.c[np.arange(T), list(self.theta_star)]))

    def labels(self, bank):
        """Returns the selected quantizer labels."""
        return tuple(bank.labels[i] for i in self.theta_star)


def optimal_schedule(beta, prices):
    """Selects argmin_i c_t^i at every stage, lowest position on ties.

    Args:
        beta (array_like): beta_t^i, shape (T, M).
        prices (array_like): lambda_i, shape (M,).

    Returns:
        schedule (SelectionSchedule): The schedule without cost totals.
    """
    beta = frozen(beta)
    prices = frozen(prices)
    c = frozen(prices[None, :] - beta)
    theta = tuple(int(i) for i in np.argmin(c, axis=1))
    return SelectionSchedule(beta=beta, c=c, theta_star=theta, prices=prices)


def cost_constant(stats, riccati, ntilde=None):
    """Returns the selection-independent part of C0.

    sum_t tr(Sigma_t N_t) + sum_{k <= t} tr(Ntilde_{k,t} M_k).
    """
    if ntilde is None:
        ntilde = ntilde_table(stats, riccati)
    filt = np.einsum('tab,tba->', stats.Sigma_filt, riccati.N)
    innov = np.einsum('ktpq,kqp->', ntilde, stats.M)
    return float(filt + innov)


def evaluate_C0(theta, stats, riccati, moments, delays, prices,
                method='pi', ntilde=None):
    """Evaluates C0 for any selection sequence.

    Args:
        theta (sequence): The bank position per stage.
        stats (InnovationStatistics): The innovation statistics.
        riccati (RiccatiSolution): Supplies N.
        moments (CellMomentTable): Supplies F and M - F.
        delays (sequence): The delay of every bank position.
        prices (sequence): The price of every bank position.
        method (str): "pi" for the nonlinear form with Pi_t, "beta" for the
            linear form, "moments" for sum_t tr(N_t E[e_t e_t']) plus prices
            (default="pi").
        ntilde (ndarray): A precomputed table (default=None, computed).

    Returns:
        C0 (float): The quantization-dependent cost.
    """
    T = stats.horizon
    delays = np.asarray(delays, dtype=int)
    prices = np.asarray(prices, dtype=float)
    theta = _check_theta(theta, T, len(delays))
    if ntilde is None:
        ntilde = ntilde_table(stats, riccati)
    price = float(np.sum(prices[theta]))

    if method == 'moments':
        second = sum(
            np.trace(riccati.N[t] @ error_second_moment(
                theta, stats, moments, delays, t))
            for t in range(T)
        )
        return float(second + price)

    constant = cost_constant(stats, riccati, ntilde)
    if method == 'beta':
        weights = delay_weights(ntilde, delays)
        F = moments.F_of(theta)
        selected = weights[np.arange(T), theta]
        beta = np.einsum('tpq,tqp->t', selected, F)
        return float(constant + price - np.sum(beta))
    if method == 'pi':
        arrived = arrival_matrix(theta, delays)
        pi = -np.einsum('tl,tlpq->tpq', arrived, ntilde)
        F = moments.F_of(theta)
        return float(constant + np.einsum('tpq,tqp->', pi, F) + price)
    raise ValueError(f'Unknown evaluation method "{method}";')


def error_second_moment(theta, stats, moments, delays, t):
    """Returns E[e_t e_t'] for the estimation error e_t = X_t - Xbar_t.

    Args:
        theta (sequence): The bank position per stage.
        stats (InnovationStatistics): The innovation statistics.
        moments (CellMomentTable): Supplies M - F.
        delays (sequence): The delay of every bank position.
        t (int): The time.

    Returns:
        second (ndarray): The n x n second moment.
    """
    stats.check_time(t)
    return stats.Sigma_filt[t] + delta_second_moment(
        theta, stats, moments, delays, t)


def delta_second_moment(theta, stats, moments, delays, t):
    """Returns E[D_t D_t'] for D_t = Xhat_t - Xbar_t (sensor vs controller)."""
    stats.check_time(t)
    T = stats.horizon
    theta = _check_theta(theta, T, len(delays))
    arrived = arrival_matrix(theta, delays)[:t + 1, t]
    residual = moments.Mcal_of(theta)[:t + 1]
    cov = np.where(
        arrived[:, None, None] == 1, residual, stats.M[:t + 1]
    )
    psi = stats.psi[t, :t + 1]
    return np.einsum('kap,kpq,kbq->ab', psi, cov, psi)


def theoretical_cost(model, riccati, C0):
    """Returns J* = tr(P_0 (Sigma_x + mu0 mu0')) + r_0 + C0."""
    second = model.Sigma_x + np.outer(model.mu0, model.mu0)
    return float(np.trace(riccati.P[0] @ second) + riccati.r[0] + C0)


def plan_schedule(model, bank, riccati, stats, moments):
    """Builds the optimal schedule with its C0 and J*.

    Example:
        schedule = plan_schedule(model, bank, riccati, stats, moments)
        print(schedule.labels(bank), schedule.J_star)
    """
    ntilde = ntilde_table(stats, riccati)
    beta = beta_coefficients(stats, riccati, bank, moments, ntilde)
    schedule = optimal_schedule(beta, bank.prices)
    C0 = cost_constant(stats, riccati, ntilde) + schedule.selection_part
    J_star = theoretical_cost(model, riccati, C0)
    logger.info(
        'Selected quantizers %s, C0=%.6g, J*=%.6g',
        list(schedule.labels(bank)), C0, J_star
    )
    return dataclasses.replace(schedule, C0=C0, J_star=J_star)


def brute_force_schedule(stats, riccati, moments, delays, prices,
                         cap=DEFAULT_SETTINGS.brute_force_cap, ntilde=None,
                         chunk=4096):
    """Enumerates every selection sequence under the nonlinear Pi-form.

    Args:
        stats (InnovationStatistics): The innovation statistics.
        riccati (RiccatiSolution): Supplies N.
        moments (CellMomentTable): Supplies F.
        delays (sequence): The delay of every bank position.
        prices (sequence): The price of every bank position.
        cap (int): The largest number of sequences to enumerate.
        ntilde (ndarray): The table to use (default=None, computed).
        chunk (int): Sequences evaluated per vectorized block.

    Returns:
        theta (tuple): The minimizing sequence (first in lexicographic
            order among ties).
        objective (float): Its selection-dependent cost
            sum_t tr(Pi_t F_t) + lambda_{theta_t}.

    Raises:
        InstanceTooLargeError: When M^T exceeds the cap.
    """
    T = stats.horizon
    M = len(delays)
    count = M ** T
    if count > cap:
        raise InstanceTooLargeError(
            f'Brute force needs {count} sequences, the cap is {cap};'
        )
    if ntilde is None:
        ntilde = ntilde_table(stats, riccati)
    delays = np.asarray(delays, dtype=int)
    prices = np.asarray(prices, dtype=float)
    lags = np.arange(T)

    best_value, best_theta = np.inf, None
    radix = M ** np.arange(T - 1, -1, -1, dtype=np.int64)
    for start in range(0, count, chunk):
        index = np.arange(start, min(start + chunk, count), dtype=np.int64)
        thetas = (index[:, None] // radix[None, :]) % M
        values = np.zeros(len(index))
        for t in range(T):
            chosen = thetas[:, t]
            arrived = (lags[None, t:] - t) >= delays[chosen][:, None]
            pi = -np.einsum('kl,lpq->kpq', arrived.astype(float),
                            ntilde[t, t:])
            F = moments.F[t, chosen]
            values += np.einsum('kpq,kqp->k', pi, F) + prices[chosen]
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_value = float(values[k])
            best_theta = tuple(int(i) for i in thetas[k])
    logger.debug('Brute force over %d sequences: %.12g', count, best_value)
    return best_theta, best_value
