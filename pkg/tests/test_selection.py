"""
Test for quantlqg/selection.py
"""

import numpy as np
import pytest

from quantlqg import (
    IndexOutOfRangeError,
    InstanceTooLargeError,
    arrival_indicator,
    beta_coefficients,
    beta_constant_delay,
    beta_upsilon,
    brute_force_schedule,
    build_moment_tables,
    delay_matrix,
    delay_weight,
    delta_second_moment,
    error_second_moment,
    evaluate_C0,
    h_matrix,
    load_bank,
    n_tilde,
    optimal_schedule,
    plan_schedule,
    propagate_statistics,
    solve_riccati,
    theoretical_cost,
)
from quantlqg.selection import arrival_matrix, delay_weights, ntilde_table

from .helper import (
    assert_close,
    assert_psd,
    reference_bank,
    reference_model,
    scenario_path,
)


def _pipeline(T=5, bit_rate=1, perfect=False, bank=None):
    model = reference_model(T=T, perfect=perfect)
    bank = bank if bank is not None else reference_bank(bit_rate)
    riccati = solve_riccati(model)
    stats = propagate_statistics(model)
    moments = build_moment_tables(bank, stats)
    return model, bank, riccati, stats, moments


@pytest.mark.selection
def test_delay_matrix():
    assert delay_matrix([1, 2], 3).tolist() == [[0, 0], [1, 0], [1, 1]]
    assert delay_matrix([0], 2).tolist() == [[1], [1]]


@pytest.mark.selection
def test_arrivals():
    theta = [2, 0, 0, 1, 0]
    delays = (1, 2, 3)
    assert arrival_indicator(theta, 0, 2, delays) == 0
    assert arrival_indicator(theta, 0, 3, delays) == 1
    assert arrival_indicator(theta, 1, 2, delays) == 1
    assert arrival_indicator(theta, 2, 2, delays) == 0
    with pytest.raises(IndexOutOfRangeError):
        arrival_indicator(theta, 3, 2, delays)

    arrived = arrival_matrix(theta, delays)
    assert arrived.shape == (5, 5)
    assert arrived[0].tolist() == [0, 0, 0, 1, 1]
    assert arrived[3].tolist() == [0, 0, 0, 0, 0]
    assert arrived[4].tolist() == [0, 0, 0, 0, 0]
    for k in range(5):
        for t in range(k, 5):
            assert arrived[k, t] == arrival_indicator(theta, k, t, delays)


@pytest.mark.selection
def test_ntilde():
    _, _, riccati, stats, _ = _pipeline()
    table = ntilde_table(stats, riccati)
    assert table.shape == (5, 5, 2, 2)
    assert_close(table[1, 3], n_tilde(stats, riccati, 1, 3),
                 atol=1e-12, rtol=1e-12)
    assert not np.any(table[3, 1])
    assert_psd(table[0, 4])
    with pytest.raises(IndexOutOfRangeError):
        n_tilde(stats, riccati, 3, 1)


@pytest.mark.selection
def test_delay_weights():
    _, bank, riccati, stats, _ = _pipeline(T=8)
    table = ntilde_table(stats, riccati)
    weights = delay_weights(table, bank.delays)
    for t in range(8):
        for i in range(bank.size):
            assert_close(weights[t, i], delay_weight(table, bank.delays, t, i),
                         atol=1e-12, rtol=1e-12)
        # Shorter delays see more of the future.
        assert_psd(weights[t, 0] - weights[t, 1])
        assert_psd(weights[t, 1] - weights[t, 2])
    assert not np.any(weights[7, 0])
    assert not np.any(weights[5, 2])
    assert_close(h_matrix(table, 2, 2), weights[2, 1])


@pytest.mark.selection
def test_beta_coefficients():
    model, bank, riccati, stats, moments = _pipeline(T=8)
    beta = beta_coefficients(stats, riccati, bank, moments)
    assert beta.shape == (8, 3)
    assert beta.min() >= -1e-9

    # Tail rule: nothing sent at t >= T - d_i arrives in time.
    for i, d in enumerate(bank.delays):
        assert not np.any(beta[model.T - d:, i])

    fast = beta_upsilon(stats, riccati, bank, moments)
    assert_close(fast, beta, atol=1e-9, rtol=1e-9)


@pytest.mark.selection
def test_beta_full_observation():
    _, bank, riccati, stats, moments = _pipeline(T=20, perfect=True)
    beta = beta_coefficients(stats, riccati, bank, moments)
    fast = beta_upsilon(stats, riccati, bank, moments)
    assert_close(fast, beta, atol=1e-9 * max(1.0, np.abs(beta).max()))


@pytest.mark.selection
def test_beta_constant_delay():
    _, bank, riccati, stats, moments = _pipeline(T=8, bit_rate=3)
    assert bank.delays == (1, 1, 1)
    table = ntilde_table(stats, riccati)
    beta = beta_coefficients(stats, riccati, bank, moments, table)
    constant = beta_constant_delay(table, moments, 1)
    assert_close(constant, beta, atol=1e-10 * max(1.0, np.abs(beta).max()))


@pytest.mark.selection
def test_optimal_schedule():
    beta = np.array([[5.0, 30.0], [0.0, 0.0], [1.0, 1.0]])
    schedule = optimal_schedule(beta, [10.0, 20.0])
    assert schedule.theta_star == (1, 0, 0)
    assert schedule.c.tolist() == [[5.0, -10.0], [10.0, 20.0], [9.0, 19.0]]
    assert schedule.price_part == 40.0
    assert schedule.selection_part == 9.0

    # Ties go to the lowest position.
    schedule = optimal_schedule(np.zeros((2, 2)), [1.0, 1.0])
    assert schedule.theta_star == (0, 0)


@pytest.mark.selection
def test_plan_schedule():
    model, bank, riccati, stats, moments = _pipeline(T=8)
    schedule = plan_schedule(model, bank, riccati, stats, moments)
    assert schedule.horizon == 8
    assert len(schedule.labels(bank)) == 8
    for t in range(8):
        assert schedule.c[t, schedule.theta_star[t]] == schedule.c[t].min()

    C0 = evaluate_C0(schedule.theta_star, stats, riccati, moments,
                     bank.delays, bank.prices)
    assert schedule.C0 == pytest.approx(C0, rel=1e-9)

    second = model.Sigma_x + np.outer(model.mu0, model.mu0)
    J = np.trace(riccati.P[0] @ second) + riccati.r[0] + schedule.C0
    assert schedule.J_star == pytest.approx(J, rel=1e-12)
    assert theoretical_cost(model, riccati, schedule.C0) == schedule.J_star


@pytest.mark.selection
def test_C0_forms():
    _, bank, riccati, stats, moments = _pipeline(T=6)
    rng = np.random.default_rng(5)
    for _ in range(10):
        theta = rng.integers(0, bank.size, 6)
        values = [
            evaluate_C0(theta, stats, riccati, moments, bank.delays,
                        bank.prices, method=method)
            for method in ('pi', 'beta', 'moments')
        ]
        assert values[1] == pytest.approx(values[0], rel=1e-9)
        assert values[2] == pytest.approx(values[0], rel=1e-9)

    with pytest.raises(ValueError):
        evaluate_C0([0] * 6, stats, riccati, moments, bank.delays,
                    bank.prices, method='guess')
    with pytest.raises(IndexOutOfRangeError):
        evaluate_C0([0] * 5, stats, riccati, moments, bank.delays,
                    bank.prices)
    with pytest.raises(IndexOutOfRangeError):
        evaluate_C0([3] * 6, stats, riccati, moments, bank.delays,
                    bank.prices)


@pytest.mark.selection
def test_error_second_moment():
    model, bank, riccati, stats, moments = _pipeline(T=6)
    theta = [0, 2, 1, 0, 0, 1]
    for t in range(6):
        second = error_second_moment(theta, stats, moments, bank.delays, t)
        delta = delta_second_moment(theta, stats, moments, bank.delays, t)
        assert_psd(delta)
        assert_close(second, stats.Sigma_filt[t] + delta)

    # Without any arrival the error is the open-loop state covariance.
    bank = load_bank(scenario_path('bank_null.json'))
    moments = build_moment_tables(bank, stats)
    cov = np.array(model.Sigma_x)
    for t in range(6):
        second = error_second_moment([0] * 6, stats, moments, bank.delays, t)
        assert_close(second, cov, atol=1e-9, rtol=1e-9)
        cov = model.A @ cov @ model.A.T + model.W


@pytest.mark.selection
def test_brute_force():
    _, bank, riccati, stats, moments = _pipeline(T=5)
    schedule = optimal_schedule(
        beta_coefficients(stats, riccati, bank, moments), bank.prices)
    theta, value = brute_force_schedule(
        stats, riccati, moments, bank.delays, bank.prices)
    assert value == pytest.approx(schedule.selection_part, rel=1e-10)
    assert theta == schedule.theta_star

    with pytest.raises(InstanceTooLargeError):
        brute_force_schedule(
            stats, riccati, moments, bank.delays, bank.prices, cap=242)


@pytest.mark.selection
def test_delay_sensitivity():
    model, slow, riccati, stats, moments = _pipeline(T=50, bit_rate=1)
    first = plan_schedule(model, slow, riccati, stats, moments)
    again = plan_schedule(model, slow, riccati, stats, moments)
    assert first.theta_star == again.theta_star
    assert np.array_equal(first.c, again.c)

    fast = reference_bank(3)
    second = plan_schedule(model, fast, riccati, stats,
                           build_moment_tables(fast, stats))
    assert first.theta_star != second.theta_star

    for i, d in enumerate(slow.delays):
        for t in range(model.T - d, model.T):
            assert first.c[t, i] == slow.prices[i]
    # Only the one-step quantizer can still help at the last two stages.
    assert first.labels(slow)[-2:] == (1, 1)


@pytest.mark.selection
def test_open_loop():
    bank = load_bank(scenario_path('bank_open_loop.json'))
    model, bank, riccati, stats, moments = _pipeline(T=50, bank=bank)
    schedule = plan_schedule(model, bank, riccati, stats, moments)
    assert schedule.labels(bank) == (0,) * 50
    assert schedule.price_part == 0.0


@pytest.mark.selection
def test_price_monotonicity():
    _, bank, riccati, stats, moments = _pipeline(T=50)
    position = bank.position(2)
    uses = []
    for price in (150.0, 200.0, 250.0, 300.0, 400.0, 1e6):
        priced = bank.with_prices({2: price})
        assert priced.position(2) == position
        schedule = optimal_schedule(
            beta_coefficients(stats, riccati, priced, moments),
            priced.prices)
        uses.append(schedule.theta_star.count(position))
    assert uses == sorted(uses, reverse=True)
    assert uses[0] > 0
    assert uses[-1] == 0
