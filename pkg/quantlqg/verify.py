"""
Independent oracles that cross-check the toolkit on one scenario.
"""

import dataclasses
import logging

import numpy as np

from .errors import InstanceTooLargeError
from .estimator import ChannelMessage, batch_estimate
from .innovation import batch_innovations
from .milp import build_milp, milp_objective
from .model import validate_scenario
from .quantizer import compute_delays, product_grid, quantize
from .selection import (
    beta_coefficients,
    beta_constant_delay,
    beta_upsilon,
    brute_force_schedule,
    error_second_moment,
    evaluate_C0,
    ntilde_table,
    plan_schedule,
)
from .settings import DEFAULT_SETTINGS
from .simulate import SimulationConfig, monte_carlo, offline_tables, run_trial
from .utils import psd_factor, relative_frobenius

logger = logging.getLogger(__name__)

PASS = 'PASS'
FAIL = 'FAIL'
SKIP = 'SKIP'

FAULTS = ('ntilde',)


@dataclasses.dataclass(frozen=True)
class CheckResult:
    """The outcome of one oracle check.

    Args:
        name (str): The check name.
        status (str): PASS, FAIL or SKIP.
        detail (str): The measured discrepancy or the reason to skip.
    """
    name: str
    status: str
    detail: str = ''

    @property
    def failed(self):
        """True for a failed check."""
        return self.status == FAIL

    def __str__(self):
        return f'{self.status} {self.name}: {self.detail}'


def _check(name, ok, detail):
    return CheckResult(name, PASS if ok else FAIL, detail)


def _scale(*arrays):
    return max([1.0] + [float(np.max(np.abs(a))) for a in arrays])


def random_scenario(rng, n=2, m=1, p=2, T=5):
    """Returns a random well-posed scenario as a raw mapping."""
    def spd(size, floor):
        g = rng.standard_normal((size, size))
        return g @ g.T / size + floor * np.eye(size)

    A = rng.standard_normal((n, n))
    A = 1.05 * A / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-9)
    return {
        'A': A.tolist(),
        'B': rng.standard_normal((n, m)).tolist(),
        'C': rng.standard_normal((p, n)).tolist(),
        'W': spd(n, 0.1).tolist(),
        'V': spd(p, 0.1).tolist(),
        'Sigma_x': spd(n, 0.1).tolist(),
        'mu0': rng.standard_normal(n).tolist(),
        'Q1': spd(n, 0.0).tolist(),
        'Q2': spd(n, 0.0).tolist(),
        'R': spd(m, 0.1).tolist(),
        'T': T,
    }


def random_bank(rng, p=2, size=3, bit_rate=1, price_scale=5.0):
    """Returns a random bank whose delays lie in {0, 1, 2, 3}."""
    quantizers = []
    for k in range(size):
        levels = int(rng.choice([1, 2, 4, 8]))
        splits = [[] for _ in range(p)]
        if levels > 1:
            if p == 1:
                splits[0] = sorted(rng.standard_normal(levels - 1).tolist())
            elif levels == 2:
                splits[0] = [float(rng.standard_normal())]
            else:
                splits[0] = sorted(
                    rng.standard_normal(levels // 2 - 1).tolist())
                splits[1] = [float(rng.standard_normal())]
        price = 0.0 if levels == 1 else float(price_scale * rng.uniform())
        quantizers.append(product_grid(splits, price=price, label=k + 1))
    return compute_delays(quantizers, bit_rate)


def riccati_oracle(model):
    """Bellman backups by completing the square of the joint (x, u) form.

    Returns:
        P (ndarray): Shape (T+1, n, n).
        L (ndarray): Shape (T, m, n).
    """
    A, B, T, n = model.A, model.B, model.T, model.n
    P = [None] * (T + 1)
    L = [None] * T
    P[T] = np.array(model.Q2)
    for k in range(T - 1, -1, -1):
        top = np.hstack([model.Q1 + A.T @ P[k + 1] @ A, A.T @ P[k + 1] @ B])
        bottom = np.hstack([B.T @ P[k + 1] @ A, model.R + B.T @ P[k + 1] @ B])
        H = np.vstack([top, bottom])
        Hxx, Hxu = H[:n, :n], H[:n, n:]
        Hux, Huu = H[n:, :n], H[n:, n:]
        L[k] = np.linalg.solve(Huu, Hux)
        P[k] = Hxx - Hxu @ L[k]
        P[k] = (P[k] + P[k].T) / 2.0
    return np.stack(P), np.stack(L)


def _moment_oracle(stats, bank, moments, rng, samples):
    worst = 0.0
    for i, q in enumerate(bank.quantizers):
        if q.is_null:
            continue
        factor = psd_factor(stats.M[0])
        xi = rng.standard_normal((samples, factor.shape[0])) @ factor.T
        lo, hi = q.cells[None, :, :, 0], q.cells[None, :, :, 1]
        inside = np.all((xi[:, None] >= lo) & (xi[:, None] < hi), axis=2)
        for j in range(q.levels):
            hits = xi[inside[:, j]]
            if len(hits) < 30:
                continue
            stderr = hits.std(axis=0, ddof=1) / np.sqrt(len(hits))
            gap = np.abs(hits.mean(axis=0) - moments.means[i][0, j])
            worst = max(worst, float(np.max(gap / np.maximum(stderr, 1e-300))))
    return worst


def run_checks(model, bank, settings=DEFAULT_SETTINGS, seed=0, trials=10000,
               brute_force_cap=None, inject_fault=None):
    """Runs every oracle check on one scenario and bank.

    Args:
        model (ScenarioModel): The plant.
        bank (QuantizerBank): The quantizers.
        settings (Settings): The numerical settings.
        seed (int): The seed of every random draw.
        trials (int): Trials for the statistical checks.
        brute_force_cap (int): Largest M^T to enumerate (default=None, from
            the settings).
        inject_fault (str): "ntilde" corrupts the table the brute force sees.

    Returns:
        results (list): The `CheckResult` items in run order.
    """
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f'Unknown fault "{inject_fault}";')
    cap = brute_force_cap or settings.brute_force_cap
    riccati, stats, moments = offline_tables(model, bank, settings)
    ntilde = ntilde_table(stats, riccati)
    schedule = plan_schedule(model, bank, riccati, stats, moments)
    rng = np.random.default_rng(seed)
    results = []

    P, L = riccati_oracle(model)
    gap = max(float(np.max(np.abs(P - riccati.P))),
              float(np.max(np.abs(L - riccati.L))))
    results.append(_check(
        'riccati-oracle', gap <= 1e-10 * _scale(P, L), f'max gap {gap:.3e}'))

    record = run_trial(model, bank, riccati, stats, moments,
                       schedule.theta_star, seed)
    batch = batch_innovations(model, record.outputs, record.inputs)
    gap = float(np.max(np.abs(batch - record.innovations)))
    results.append(_check(
        'innovation-batch', gap <= 1e-9 * _scale(batch),
        f'max gap {gap:.3e}'))

    deliveries = [[] for _ in range(model.T)]
    for k, i in enumerate(schedule.theta_star):
        arrival = k + bank.delays[i]
        if arrival < model.T:
            deliveries[arrival].append(_message(record, bank, k, i))
    direct = np.stack([
        batch_estimate(deliveries, record.inputs, stats, moments, t)
        for t in range(model.T)
    ])
    gap = float(np.max(np.abs(direct - record.estimates)))
    results.append(_check(
        'estimator-batch', gap <= 1e-12 * _scale(direct) * model.T,
        f'max gap {gap:.3e}'))

    beta = schedule.beta
    results.append(_check(
        'beta-nonnegative', float(beta.min()) >= -1e-9,
        f'min beta {float(beta.min()):.3e}'))
    tail = all(
        schedule.c[t, i] == bank.prices[i]
        for i, d in enumerate(bank.delays)
        for t in range(max(model.T - d, 0), model.T)
    )
    results.append(_check('tail-rule', tail, 'c = price for t >= T - d'))

    thetas = [tuple(int(v) for v in rng.integers(0, bank.size, model.T))
              for _ in range(20)]
    gap = 0.0
    for theta in thetas:
        values = [
            evaluate_C0(theta, stats, riccati, moments, bank.delays,
                        bank.prices, method=method, ntilde=ntilde)
            for method in ('pi', 'beta', 'moments')
        ]
        gap = max(gap, (max(values) - min(values)) / max(1.0, abs(values[0])))
    results.append(_check(
        'C0-forms', gap <= 1e-9, f'max relative gap {gap:.3e}'))

    try:
        corrupt = ntilde * 1.5 if inject_fault == 'ntilde' else ntilde
        _, value = brute_force_schedule(
            stats, riccati, moments, bank.delays, bank.prices, cap=cap,
            ntilde=corrupt)
        expected = schedule.selection_part
        gap = abs(value - expected)
        results.append(_check(
            'brute-force', gap <= 1e-10 * max(1.0, abs(expected)),
            f'brute {value:.12g} vs argmin {expected:.12g}'))
    except InstanceTooLargeError as e:
        results.append(CheckResult('brute-force', SKIP, str(e)))

    program = build_milp(schedule.c, bank.labels)
    value = milp_objective(program, schedule.theta_star)
    gap = abs(value - schedule.selection_part)
    results.append(_check(
        'milp-objective', gap <= 1e-9 * max(1.0, abs(value)),
        f'gap {gap:.3e}'))

    if model.is_full_observation:
        gap = float(np.max(np.abs(
            beta_upsilon(stats, riccati, bank, moments) - beta)))
        results.append(_check(
            'upsilon-beta', gap <= 1e-9 * _scale(beta),
            f'max gap {gap:.3e}'))
    if len(set(bank.delays)) == 1:
        constant = beta_constant_delay(ntilde, moments, bank.delays[0])
        gap = float(np.max(np.abs(constant - beta_coefficients(
            stats, riccati, bank, moments, ntilde))))
        results.append(_check(
            'constant-delay-beta', gap <= 1e-10 * _scale(beta),
            f'max gap {gap:.3e}'))

    worst = _moment_oracle(stats, bank, moments, rng, 200000)
    results.append(_check(
        'moment-oracle', worst <= 4.0, f'worst gap {worst:.2f} stderr'))

    report = monte_carlo(
        model, bank,
        SimulationConfig(trials=trials, master_seed=seed,
                         collect_samples=True),
        riccati, stats, moments, settings)
    results.extend(_statistical_checks(report, stats, moments, bank,
                                       settings))
    for result in results:
        logger.info('%s', result)
    return results


def _message(record, bank, k, i):
    j = quantize(bank.quantizers[i], record.innovations[k])
    return ChannelMessage.send(i, j, k, bank.delays)


def _statistical_checks(report, stats, moments, bank, settings):
    N = report.trials
    xi = report.innovations
    results = []

    bound = 5.0 * max(np.max(np.sum(np.abs(M), axis=1)) for M in stats.M)
    bound /= np.sqrt(N)
    T = xi.shape[1]
    worst = 0.0
    for t in range(T):
        for s in range(t):
            cross = xi[:, t].T @ xi[:, s] / N
            worst = max(worst, float(np.max(np.abs(cross))))
    results.append(_check(
        'innovation-whiteness', worst < bound,
        f'worst cross moment {worst:.3e} (bound {bound:.3e})'))

    tol = 0.05 * np.sqrt(1e4 / N)
    worst = max(
        relative_frobenius(np.cov(xi[:, t].T, bias=True).reshape(
            stats.M[t].shape), stats.M[t])
        for t in range(T)
    )
    results.append(_check(
        'innovation-covariance', worst <= tol,
        f'worst relative gap {worst:.3f} (tolerance {tol:.3f})'))

    errors = report.errors
    worst = 0.0
    for t in range(T):
        sample = errors[:, t].T @ errors[:, t] / N
        expected = error_second_moment(
            report.schedule, stats, moments, bank.delays, t)
        worst = max(worst, relative_frobenius(sample, expected))
    results.append(_check(
        'error-second-moment', worst <= tol,
        f'worst relative gap {worst:.3f} (tolerance {tol:.3f})'))

    sigmas = settings.simulation.acceptance_sigmas
    ok = report.within(sigmas)
    results.append(_check(
        'cost-identity', bool(ok),
        f'empirical {report.empirical_mean:.6g} +/- '
        f'{report.empirical_stderr or 0.0:.3g}, theoretical '
        f'{report.theoretical:.6g}'))
    return results


def default_instance(seed, n=2, m=1, p=2, T=5, size=3):
    """Returns the seeded random (model, bank) used without input files."""
    rng = np.random.default_rng(seed)
    model = validate_scenario(random_scenario(rng, n, m, p, T))
    bank = random_bank(rng, p, size)
    return model, bank
