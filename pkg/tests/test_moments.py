"""
Test for quantlqg/quantizer/moments.py
"""

import math

import numpy as np
import pytest

from quantlqg import (
    DEFAULT_SETTINGS,
    QuadratureNotConvergedError,
    UnknownCellError,
    UnsupportedDimensionError,
    build_moment_tables,
    cell_moments,
    load_bank,
    load_scenario,
    offline_tables,
    product_grid,
    propagate_statistics,
    reduction_covariance,
    validate_scenario,
)
from quantlqg.settings import QuadratureSettings

from .helper import (
    assert_close,
    assert_psd,
    reference_bank,
    reference_model,
    scenario_path,
)


@pytest.mark.moments
def test_half_line():
    sigma = 1.7
    M = np.array([[sigma ** 2]])
    spec = product_grid([[0.0]], price=1, label=1)
    probs, means = cell_moments(M, spec.cells)
    assert_close(probs, [0.5, 0.5], atol=1e-12)
    assert_close(means[:, 0], [-sigma * math.sqrt(2.0 / math.pi),
                               sigma * math.sqrt(2.0 / math.pi)], atol=1e-6)

    F = reduction_covariance(probs, means)
    assert_close(F, 2.0 * M / math.pi, atol=1e-10)


@pytest.mark.moments
def test_interval_tails():
    M = np.array([[1.0]])
    spec = product_grid([[-1.0, 0.0, 1.0]], price=1, label=1)
    probs, means = cell_moments(M, spec.cells)
    tail = 0.15865525393145707
    assert_close(probs, [tail, 0.5 - tail, 0.5 - tail, tail], atol=1e-12)
    assert_close(probs @ means, [0.0], atol=1e-12)

    # Far tails keep their relative accuracy.
    spec = product_grid([[9.0]], price=1, label=1)
    probs, means = cell_moments(M, spec.cells)
    assert probs[1] == pytest.approx(1.1285884059538324e-19, rel=1e-9)
    assert 9.0 < means[1, 0] < 9.2


@pytest.mark.moments
@pytest.mark.parametrize('rho', [0.0, 0.5, -0.5, 0.9, -0.9])
def test_quadrants(rho):
    M = np.array([[1.0, rho], [rho, 1.0]])
    spec = product_grid([[0.0], [0.0]], price=1, label=1)
    probs, means = cell_moments(M, spec.cells)
    same = 0.25 + math.asin(rho) / (2.0 * math.pi)
    opposite = 0.5 - same
    assert_close(probs, [same, opposite, opposite, same], atol=1e-6)
    assert_close(probs @ means, [0.0, 0.0], atol=1e-9)


@pytest.mark.moments
def test_half_plane():
    M = np.array([[4.0, 1.0], [1.0, 2.0]])
    spec = product_grid([[0.0], []], price=1, label=1)
    probs, means = cell_moments(M, spec.cells)
    assert_close(probs, [0.5, 0.5], atol=1e-9)
    # E[xi | xi_1 >= 0] = M e_1 sqrt(2 / pi) / sqrt(M_11).
    scale = math.sqrt(2.0 / math.pi) / 2.0
    assert_close(means[1], [4.0 * scale, 1.0 * scale], atol=1e-8)
    assert_close(means[0], [-4.0 * scale, -1.0 * scale], atol=1e-8)


@pytest.mark.moments
def test_octants():
    M = np.eye(3)
    spec = product_grid([[0.0], [0.0], [0.0]], price=1, label=1)
    probs, means = cell_moments(M, spec.cells)
    assert_close(probs, np.full(8, 0.125), atol=1e-8)
    half = math.sqrt(2.0 / math.pi)
    assert_close(np.abs(means), np.full((8, 3), half), atol=1e-7)
    assert_close(means[7], [half, half, half], atol=1e-7)


@pytest.mark.moments
def test_point_mass():
    spec = product_grid([[0.0], [-1.0]], price=1, label=1)
    probs, means = cell_moments(np.zeros((2, 2)), spec.cells)
    assert probs.tolist() == [0.0, 0.0, 0.0, 1.0]
    assert not np.any(means)


@pytest.mark.moments
def test_unsupported_dimension():
    spec = product_grid([[0.0], [], [], []], price=1, label=1)
    with pytest.raises(UnsupportedDimensionError):
        cell_moments(np.eye(4), spec.cells)

    spec = product_grid([[0.0], []], price=1, label=1)
    with pytest.raises(UnsupportedDimensionError):
        cell_moments(np.eye(3), spec.cells)

    model = load_scenario(scenario_path('four_outputs.json'))
    bank = load_bank(scenario_path('bank_four_outputs.json'))
    with pytest.raises(UnsupportedDimensionError):
        build_moment_tables(bank, propagate_statistics(model))

    with pytest.raises(UnsupportedDimensionError):
        build_moment_tables(
            bank, propagate_statistics(reference_model(T=2)))


@pytest.mark.moments
def test_quadrature_not_converged():
    config = QuadratureSettings(max_nodes=16)
    spec = product_grid([[0.0], [0.0]], price=1, label=1)
    with pytest.raises(QuadratureNotConvergedError) as info:
        cell_moments(np.eye(2), spec.cells, config)
    assert info.value.location == (None, None, 0)

    settings = DEFAULT_SETTINGS.replace(quadrature=config)
    model = reference_model(T=2)
    with pytest.raises(QuadratureNotConvergedError) as info:
        build_moment_tables(
            reference_bank(), propagate_statistics(model), settings)
    assert info.value.location == (0, 0, 0)


@pytest.mark.moments
def test_build_moment_tables():
    model = reference_model(T=6)
    stats = propagate_statistics(model)
    bank = reference_bank().with_null_quantizer()
    moments = build_moment_tables(bank, stats)

    assert moments.horizon == 6
    assert moments.F.shape == (6, 4, 2, 2)
    assert [p.shape for p in moments.probs] == [
        (6, 1), (6, 2), (6, 4), (6, 8)]

    # The null quantizer carries no information.
    assert not np.any(moments.F[:, 0])
    assert_close(moments.Mcal[:, 0], stats.M)

    for t in range(6):
        for i in range(bank.size):
            assert moments.probs[i][t].sum() == pytest.approx(1.0, abs=1e-9)
            assert_psd(moments.F[t, i])
            assert_psd(moments.Mcal[t, i], atol=1e-9)
            assert_close(moments.F[t, i] + moments.Mcal[t, i], stats.M[t],
                         atol=1e-12, rtol=1e-12)
        # Nested partitions: each refinement reduces at least as much.
        for coarse, fine in ((1, 2), (2, 3)):
            assert np.trace(moments.F[t, fine]) >= \
                np.trace(moments.F[t, coarse])
            assert_psd(moments.F[t, fine] - moments.F[t, coarse], atol=1e-9)

    assert moments.prob(2, 1, 0) == pytest.approx(0.5, abs=1e-9)
    assert moments.mean(2, 1, 1)[0] > 0.0
    assert_close(moments.F_of([1] * 6), moments.F[:, 1])
    assert_close(moments.Mcal_of([0] * 6), stats.M)

    with pytest.raises(UnknownCellError):
        moments.mean(0, 1, 2)
    with pytest.raises(UnknownCellError):
        moments.prob(6, 0, 0)
    with pytest.raises(UnknownCellError):
        moments.mean(0, -1, 0)


@pytest.mark.moments
@pytest.mark.parametrize('variances', [(1.0, 1e4), (1e-4, 1e4), (1e6, 1.0)])
def test_anisotropic_quadrants(variances):
    M = np.diag(variances)
    spec = product_grid([[0.0], [0.0]], price=1, label=1)
    probs, means = cell_moments(M, spec.cells)
    assert_close(probs, np.full(4, 0.25), atol=1e-9)
    half = np.sqrt(np.array(variances) * 2.0 / math.pi)
    assert_close(means[3], half, rtol=1e-7)
    assert_close(means[0], -half, rtol=1e-7)


@pytest.mark.moments
def test_scaled_axes():
    rho = 0.5
    unit = np.array([[1.0, rho], [rho, 1.0]])
    scale = np.array([1.0, 300.0])
    spec = product_grid([[-1.0, 0.0, 1.0], [0.0]], price=1, label=1)
    probs, means = cell_moments(unit, spec.cells)

    # Splits at zero are invariant under scaling the second axis.
    scaled_probs, scaled_means = cell_moments(
        unit * np.outer(scale, scale), spec.cells)
    assert_close(scaled_probs, probs, atol=1e-9)
    assert_close(scaled_means, means * scale, atol=1e-9, rtol=1e-7)


@pytest.mark.moments
def test_output_units():
    raw = reference_model(T=6).to_dict()
    raw['C'][1] = [100.0 * v for v in raw['C'][1]]
    raw['V'][1][1] *= 1e4
    model = validate_scenario(raw)
    bank = reference_bank()

    # Measuring the second output in other units scales the innovation.
    _, _, moments = offline_tables(reference_model(T=6), bank)
    _, _, scaled = offline_tables(model, bank)
    D = np.diag([1.0, 100.0])
    for t in range(6):
        for i in range(bank.size):
            assert_close(scaled.F[t, i], D @ moments.F[t, i] @ D,
                         atol=1e-9, rtol=1e-6)
