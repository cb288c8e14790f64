"""
Seeded Monte Carlo estimation of the closed-loop cost.

Trials are split into fixed-size chunks. Each chunk is simulated by a
vectorized engine that follows `run_trial` step by step across all of its
trials, and chunks run on a thread pool. Chunk boundaries depend only on
the chunk size, so the aggregate does not depend on the worker count.
"""

import concurrent.futures
import dataclasses
import logging

import numpy as np

from ..errors import QuantLQGError, TrialError
from ..innovation import propagate_statistics
from ..quantizer import build_moment_tables, quantize_many
from ..selection import evaluate_C0, plan_schedule, theoretical_cost
from ..settings import DEFAULT_SETTINGS
from ..synthesis import solve_riccati
from .trial import draw_noise, noise_factors, run_trial, trial_generator

logger = logging.getLogger(__name__)

MAX_SEED = 2**64


@dataclasses.dataclass(frozen=True)
class SimulationConfig:
    """What to simulate.

    Args:
        trials (int): The number of trials N >= 1.
        master_seed (int): The 64-bit master seed.
        schedule (tuple): Bank positions per stage (default=None, the
            optimal schedule).
        record_trajectories (bool): Keep full records of the first trials.
        record_limit (int): How many trials to record (default=10).
        collect_samples (bool): Keep per-trial innovations, errors and
            estimates.
    """
    trials: int
    master_seed: int
    schedule: tuple = None
    record_trajectories: bool = False
    record_limit: int = 10
    collect_samples: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(
                f'Number of trials must be at least 1, got: {self.trials};'
            )
        if not 0 <= self.master_seed < MAX_SEED:
            raise ValueError(
                f'Master seed must be a 64-bit unsigned integer, got: '
                f'{self.master_seed};'
            )


@dataclasses.dataclass(frozen=True, eq=False)
class CostReport:
    """Empirical against theoretical cost of one schedule.

    Args:
        trials (int): N.
        empirical_mean (float): The sample mean of the realized cost.
        empirical_stderr (float): Sample standard deviation over sqrt(N);
            None when N = 1.
        theoretical (float): J* of the simulated schedule.
        C0 (float): The quantization-dependent part of J*.
        breakdown (dict): Mean state, input and price cost.
        schedule (tuple): The simulated bank positions.
        master_seed (int): The seed the trials derive from.
        innovations (ndarray): Per-trial innovations (T, p), when collected.
        errors (ndarray): Per-trial errors X_t - Xbar_t, when collected.
        estimates (ndarray): Per-trial estimates Xbar_t, when collected.
        trajectories (tuple): Recorded `TrajectoryRecord` items.
    """
    trials: int
    empirical_mean: float
    empirical_stderr: float
    theoretical: float
    C0: float
    breakdown: dict
    schedule: tuple
    master_seed: int
    innovations: np.ndarray = None
    errors: np.ndarray = None
    estimates: np.ndarray = None
    trajectories: tuple = ()

    @property
    def deviation(self):
        """|empirical_mean - theoretical|."""
        return abs(self.empirical_mean - self.theoretical)

    def within(self, sigmas):
        """True when the deviation is within sigmas standard errors.

        Returns None when the standard error is undefined (N = 1).
        """
        if self.empirical_stderr is None:
            return None
        return self.deviation <= sigmas * self.empirical_stderr

    def to_dict(self):
        """Returns the JSON-ready summary (samples are left out)."""
        return {
            'trials': self.trials,
            'master_seed': self.master_seed,
            'empirical_mean': self.empirical_mean,
            'empirical_stderr': self.empirical_stderr,
            'stderr_defined': self.empirical_stderr is not None,
            'theoretical': self.theoretical,
            'C0': self.C0,
            'breakdown': dict(self.breakdown),
            'schedule': list(self.schedule),
        }


def _arrival_plan(theta, delays, T):
    plan = [[] for _ in range(T)]
    for k, i in enumerate(theta):
        arrival = k + delays[i]
        if arrival < T:
            plan[arrival].append(k)
    return [sorted(origins) for origins in plan]


def simulate_chunk(model, bank, riccati, stats, moments, theta, seed,
                   indices, factors=None, collect=False):
    """Simulates the given trials together.

    Returns:
        result (dict): "state", "input" and "price" cost per trial, plus
            "innovations", "errors" and "estimates" when `collect` is set.
    """
    T = model.T
    A, B, C = model.A, model.B, model.C
    factors = factors if factors is not None else noise_factors(model)
    draws = [
        draw_noise(trial_generator(seed, index), model, factors)
        for index in indices
    ]
    x = np.stack([d[0] for d in draws])
    process = np.stack([d[1] for d in draws])
    measurement = np.stack([d[2] for d in draws])
    count = len(indices)

    plan = _arrival_plan(theta, bank.delays, T)
    xi_bar = np.zeros((count, T, model.p))
    state_cost = np.zeros(count)
    input_cost = np.zeros(count)
    innovations = np.empty((count, T, model.p)) if collect else None
    errors = np.empty((count, T, model.n)) if collect else None
    estimates = np.empty((count, T, model.n)) if collect else None

    xhat = xbar = u_prev = None
    for t in range(T):
        y = x @ C.T + measurement[:, t]
        if t == 0:
            prediction = np.broadcast_to(model.mu0, x.shape)
            xbar = np.array(prediction)
        else:
            prediction = xhat @ A.T + u_prev @ B.T
            xbar = xbar @ A.T + u_prev @ B.T
        xi = y - prediction @ C.T
        xhat = prediction + xi @ stats.K[t].T

        i = theta[t]
        cells = quantize_many(bank.quantizers[i], xi)
        xi_bar[:, t] = moments.means[i][t, cells]
        for k in plan[t]:
            xbar = xbar + xi_bar[:, k] @ stats.psi[t, k].T
        u = -(xbar @ riccati.L[t].T)

        state_cost += np.einsum('ka,ab,kb->k', x, model.Q1, x)
        input_cost += np.einsum('ka,ab,kb->k', u, model.R, u)
        if collect:
            innovations[:, t] = xi
            errors[:, t] = x - xbar
            estimates[:, t] = xbar
        x = x @ A.T + u @ B.T + process[:, t]
        u_prev = u
    state_cost += np.einsum('ka,ab,kb->k', x, model.Q2, x)

    price = float(np.sum(bank.prices[list(theta)]))
    result = {
        'state': state_cost,
        'input': input_cost,
        'price': np.full(count, price),
    }
    if collect:
        result['innovations'] = innovations
        result['errors'] = errors
        result['estimates'] = estimates
    return result


def _locate_failure(model, bank, riccati, stats, moments, theta, seed,
                    indices, error):
    for index in indices:
        try:
            run_trial(model, bank, riccati, stats, moments, theta, seed,
                      index)
        except (QuantLQGError, ArithmeticError, ValueError) as e:
            raise TrialError(index, e) from e
    raise TrialError(indices[0], error) from error


def offline_tables(model, bank, settings=DEFAULT_SETTINGS, riccati=None,
                   stats=None, moments=None):
    """Returns (riccati, stats, moments), building the missing ones."""
    riccati = riccati if riccati is not None else solve_riccati(
        model, settings)
    stats = stats if stats is not None else propagate_statistics(
        model, settings)
    moments = moments if moments is not None else build_moment_tables(
        bank, stats, settings)
    return riccati, stats, moments


def monte_carlo(model, bank, config, riccati=None, stats=None, moments=None,
                settings=DEFAULT_SETTINGS):
    """Estimates the expected cost of a schedule by simulation.

    Args:
        model (ScenarioModel): The plant.
        bank (QuantizerBank): The quantizers.
        config (SimulationConfig): Trials, seed and schedule.
        riccati (RiccatiSolution): Control gains (default=None, solved).
        stats (InnovationStatistics): Sensor gains (default=None, built).
        moments (CellMomentTable): Decoder table (default=None, built).
        settings (Settings): Chunk size and worker count.

    Returns:
        report (CostReport): Empirical against theoretical cost.

    Raises:
        TrialError: Names the first failing trial.

    Example:
        report = monte_carlo(model, bank, SimulationConfig(10000, 7))
        print(report.empirical_mean, report.theoretical)
    """
    riccati, stats, moments = offline_tables(
        model, bank, settings, riccati, stats, moments)
    if config.schedule is None:
        theta = plan_schedule(model, bank, riccati, stats, moments).theta_star
    else:
        theta = tuple(int(i) for i in config.schedule)
    C0 = evaluate_C0(theta, stats, riccati, moments, bank.delays,
                     bank.prices, method='beta')
    theoretical = theoretical_cost(model, riccati, C0)

    chunk_size = settings.simulation.chunk_size
    chunks = [
        list(range(start, min(start + chunk_size, config.trials)))
        for start in range(0, config.trials, chunk_size)
    ]
    factors = noise_factors(model)

    def run(indices):
        try:
            result = simulate_chunk(
                model, bank, riccati, stats, moments, theta,
                config.master_seed, indices, factors, config.collect_samples
            )
        except (QuantLQGError, ArithmeticError, ValueError) as e:
            _locate_failure(model, bank, riccati, stats, moments, theta,
                            config.master_seed, indices, e)
        logger.debug('Finished trials %d..%d', indices[0], indices[-1])
        return result

    workers = max(1, settings.simulation.workers)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, chunks))

    parts = {
        key: np.concatenate([r[key] for r in results])
        for key in ('state', 'input', 'price')
    }
    costs = parts['state'] + parts['input'] + parts['price']
    N = config.trials
    mean = float(np.mean(costs))
    stderr = float(np.std(costs, ddof=1) / np.sqrt(N)) if N > 1 else None

    trajectories = ()
    if config.record_trajectories:
        trajectories = tuple(
            run_trial(model, bank, riccati, stats, moments, theta,
                      config.master_seed, index)
            for index in range(min(config.record_limit, N))
        )

    report = CostReport(
        trials=N,
        empirical_mean=mean,
        empirical_stderr=stderr,
        theoretical=theoretical,
        C0=C0,
        breakdown={k: float(np.mean(v)) for k, v in parts.items()},
        schedule=theta,
        master_seed=config.master_seed,
        innovations=(np.concatenate([r['innovations'] for r in results])
                     if config.collect_samples else None),
        errors=(np.concatenate([r['errors'] for r in results])
                if config.collect_samples else None),
        estimates=(np.concatenate([r['estimates'] for r in results])
                   if config.collect_samples else None),
        trajectories=trajectories,
    )
    if stderr is None:
        logger.info(
            'Single trial: cost %.6g, theoretical %.6g (stderr undefined)',
            mean, theoretical
        )
    else:
        logger.info(
            'Empirical cost %.6g +/- %.3g over %d trials, theoretical %.6g',
            mean, stderr, N, theoretical
        )
    return report


def compare_schedules(model, bank, schedules, config, riccati=None,
                      stats=None, moments=None, settings=DEFAULT_SETTINGS):
    """Simulates several schedules on the same seeds.

    Args:
        schedules (dict): Maps a name to bank positions per stage (None
            for the optimal schedule).

    Returns:
        reports (dict): Maps every name to its `CostReport`.
    """
    riccati, stats, moments = offline_tables(
        model, bank, settings, riccati, stats, moments)
    return {
        name: monte_carlo(
            model, bank, dataclasses.replace(config, schedule=theta),
            riccati, stats, moments, settings
        )
        for name, theta in schedules.items()
    }
