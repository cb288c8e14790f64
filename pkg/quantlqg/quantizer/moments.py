"""
Moments of a centered Gaussian restricted to the cells of a quantizer.

For p = 1 the moments are closed form. For p = 2 and p = 3 the last
coordinate is integrated analytically (its law given the others is normal)
and the remaining coordinates use a panel-refined tensor Gauss-Legendre
rule over each box, clipped at a fixed number of standard deviations. The
rule runs in coordinates scaled to unit variance, so axes measured in very
different units are resolved alike.
"""

import dataclasses
import functools
import itertools
import logging

import numpy as np
import scipy.special
import scipy.stats

from ..errors import (
    PartitionError,
    QuadratureNotConvergedError,
    UnknownCellError,
    UnsupportedDimensionError,
)
from ..settings import DEFAULT_SETTINGS
from ..utils import frozen, min_eigenvalue, symmetrize

logger = logging.getLogger(__name__)

MAX_DIM = 3


def _interval_mass(alpha, beta):
    # Upper-tail form where both bounds sit right of zero.
    upper = alpha > 0
    return np.where(
        upper,
        scipy.special.ndtr(-alpha) - scipy.special.ndtr(-beta),
        scipy.special.ndtr(beta) - scipy.special.ndtr(alpha),
    )


def _pdf(z):
    return np.where(np.isfinite(z), scipy.stats.norm.pdf(z), 0.0)


def _last_coordinate(center, sd, lo, hi):
    """Mass and partial first moment of N(center, sd^2) over [lo, hi)."""
    if sd == 0.0:
        mass = ((center >= lo) & (center < hi)).astype(float)
        return mass, center * mass
    with np.errstate(invalid='ignore'):
        alpha = (lo - center) / sd
        beta = (hi - center) / sd
    mass = _interval_mass(alpha, beta)
    moment = center * mass + sd * (_pdf(alpha) - _pdf(beta))
    return mass, moment


@functools.lru_cache(maxsize=None)
def _legendre(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _panel_rule(lo, hi, panels, order):
    """Nodes and weights of a composite Gauss-Legendre rule on [lo, hi]."""
    nodes, weights = _legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2.0
    mid = (edges[1:] + edges[:-1]) / 2.0
    x = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
    w = (half[:, None] * weights[None, :]).reshape(-1)
    return x, w


class _BoxIntegrator:
    """Integrates the Gaussian moments over one box for p >= 2."""

    def __init__(self, M, limit):
        p = M.shape[0]
        self.__p = p
        S11 = M[:p - 1, :p - 1]
        s12 = M[:p - 1, p - 1]
        self.__gain = np.linalg.solve(S11, s12)
        self.__sd = float(np.sqrt(max(M[p - 1, p - 1] - s12 @ self.__gain,
                                      0.0)))
        self.__outer = scipy.stats.multivariate_normal(
            mean=np.zeros(p - 1), cov=S11
        )
        self.__outer_sd = np.sqrt(np.diag(S11))
        self.__limit = limit

    def resolves(self, box, panels, order, config):
        """True when the rule reproduces every outer marginal mass."""
        for d in range(self.__p - 1):
            lo = max(box[d, 0], -self.__limit)
            hi = min(box[d, 1], self.__limit)
            if lo >= hi:
                continue
            sd = self.__outer_sd[d]
            x, w = _panel_rule(lo, hi, panels, order)
            estimate = float(w @ scipy.stats.norm.pdf(x, scale=sd))
            exact = float(_interval_mass(np.asarray(lo / sd),
                                         np.asarray(hi / sd)))
            if abs(estimate - exact) > config.rtol * exact + config.atol:
                return False
        return True

    def estimate(self, box, panels, order):
        """Returns [mass, partial first moments] for one refinement level."""
        p = self.__p
        rules = []
        for d in range(p - 1):
            lo = max(box[d, 0], -self.__limit)
            hi = min(box[d, 1], self.__limit)
            if lo >= hi:
                return np.zeros(p + 1)
            rules.append(_panel_rule(lo, hi, panels, order))
        grids = np.meshgrid(*[r[0] for r in rules], indexing='ij')
        z = np.stack([g.reshape(-1) for g in grids], axis=1)
        w = np.ones(len(z))
        for wg in np.meshgrid(*[r[1] for r in rules], indexing='ij'):
            w = w * wg.reshape(-1)
        density = np.atleast_1d(self.__outer.pdf(z)).reshape(-1) * w
        mass, moment = _last_coordinate(
            z @ self.__gain, self.__sd, box[p - 1, 0], box[p - 1, 1]
        )
        result = np.empty(p + 1)
        result[0] = density @ mass
        result[1:p] = (density * mass) @ z
        result[p] = density @ moment
        return result


def _closed_form_1d(M, cells):
    sd = float(np.sqrt(M[0, 0]))
    lo = cells[:, 0, 0] / sd
    hi = cells[:, 0, 1] / sd
    probs = _interval_mass(lo, hi)
    partial = sd * (_pdf(lo) - _pdf(hi))
    return probs, partial[:, None]


def _point_mass(cells):
    p = cells.shape[1]
    holds = np.all((cells[:, :, 0] <= 0.0) & (cells[:, :, 1] > 0.0), axis=1)
    return holds.astype(float), np.zeros((len(cells), p))


def cell_moments(M, cells, config=DEFAULT_SETTINGS.quadrature):
    """Returns the probability and conditional mean of every cell.

    Args:
        M (array_like): The p x p covariance of the centered Gaussian. An
            identically zero M is treated as a point mass at the origin.
        cells (array_like): The boxes, shape (l, p, 2), closed below.
        config (QuadratureSettings): The quadrature parameters.

    Returns:
        probs (ndarray): The cell probabilities, shape (l,).
        means (ndarray): The conditional means, shape (l, p); zero for
            cells of zero probability.

    Raises:
        UnsupportedDimensionError: For p > 3.
        QuadratureNotConvergedError: When refinement hits the node cap;
            `location` holds `(None, None, j)`.
    """
    M = symmetrize(np.asarray(M, dtype=float))
    cells = np.asarray(cells, dtype=float)
    p = M.shape[0]
    if p > MAX_DIM:
        raise UnsupportedDimensionError(
            f'Cell moments support p <= {MAX_DIM}, but got: p={p};'
        )
    if cells.shape[1] != p:
        raise UnsupportedDimensionError(
            f'Cells act on {cells.shape[1]} dims, covariance on {p};'
        )

    if not np.any(M):
        probs, partial = _point_mass(cells)
    elif p == 1:
        probs, partial = _closed_form_1d(M, cells)
    else:
        # Integrate with unit variance on every axis, then scale back.
        scale = np.sqrt(np.diag(M))
        scale[scale == 0.0] = 1.0
        unit = M / np.outer(scale, scale)
        boxes = cells / scale[None, :, None]
        limit = config.clip_sigmas * float(np.sqrt(np.max(np.diag(unit))))
        integrator = _BoxIntegrator(unit, limit)
        probs = np.empty(len(cells))
        partial = np.empty((len(cells), p))
        for j, box in enumerate(boxes):
            values = _refine(integrator, box, config, j)
            probs[j] = values[0]
            partial[j] = values[1:] * scale

    means = np.zeros((len(cells), p))
    positive = probs > 0
    means[positive] = partial[positive] / probs[positive, None]
    return probs, means


def _refine(integrator, box, config, j):
    panels = config.initial_panels
    change = float('inf')
    previous = integrator.estimate(box, panels, config.order)
    while True:
        panels *= 2
        if panels * config.order > config.max_nodes:
            raise QuadratureNotConvergedError(
                f'Cell moments did not converge within {config.max_nodes} '
                f'nodes per dimension, last change {change:.3e};',
                change,
                (None, None, j)
            )
        current = integrator.estimate(box, panels, config.order)
        diff = np.abs(current - previous)
        change = float(np.max(diff))
        converged = np.all(diff <= config.rtol * np.abs(current) + config.atol)
        if converged and integrator.resolves(box, panels, config.order,
                                             config):
            return current
        previous = current


def reduction_covariance(probs, means):
    """Returns F = sum_j prob_j mean_j mean_j', symmetrized.

    Args:
        probs (array_like): The cell probabilities, shape (l,).
        means (array_like): The conditional means, shape (l, p).

    Returns:
        F (ndarray): The p x p covariance reduction.
    """
    probs = np.asarray(probs, dtype=float)
    means = np.asarray(means, dtype=float)
    return symmetrize((means * probs[:, None]).T @ means)


@dataclasses.dataclass(frozen=True, eq=False)
class CellMomentTable:
    """Offline cell moments over every stage and quantizer.

    Args:
        probs (tuple): Per quantizer position, an array (T, l_i).
        means (tuple): Per quantizer position, an array (T, l_i, p).
        F (ndarray): Covariance reductions F_t^i, shape (T, M, p, p).
        Mcal (ndarray): Residual covariances M_t - F_t^i, same shape.
    """
    probs: tuple
    means: tuple
    F: np.ndarray
    Mcal: np.ndarray

    @property
    def horizon(self):
        """The number of stages T."""
        return self.F.shape[0]

    def mean(self, t, i, j):
        """Returns E[xi_t | xi_t in cell j of quantizer i]."""
        try:
            if min(t, i, j) < 0:
                raise IndexError
            return self.means[i][t, j]
        except IndexError as e:
            raise UnknownCellError(
                f'No cell (t={t}, quantizer={i}, cell={j}) in the table;'
            ) from e

    def prob(self, t, i, j):
        """Returns P(xi_t in cell j of quantizer i)."""
        try:
            if min(t, i, j) < 0:
                raise IndexError
            return float(self.probs[i][t, j])
        except IndexError as e:
            raise UnknownCellError(
                f'No cell (t={t}, quantizer={i}, cell={j}) in the table;'
            ) from e

    def F_of(self, theta):
        """Returns F_t(theta_t) for t = 0..T-1."""
        theta = np.asarray(theta, dtype=int)
        return self.F[np.arange(self.horizon), theta]

    def Mcal_of(self, theta):
        """Returns M_t - F_t(theta_t) for t = 0..T-1."""
        theta = np.asarray(theta, dtype=int)
        return self.Mcal[np.arange(self.horizon), theta]


def _check_partition(probs, means, M, tol, where):
    total = float(np.sum(probs))
    if abs(total - 1.0) > tol:
        raise PartitionError(
            f'Cells of {where} do not partition R^p, probabilities sum '
            f'to {total:.9f};'
        )
    scale = max(1.0, float(np.sqrt(np.max(np.diag(M)))))
    drift = float(np.max(np.abs(probs @ means)))
    if drift > tol * scale:
        raise PartitionError(
            f'Cells of {where} give a nonzero total mean {drift:.3e};'
        )


def build_moment_tables(bank, stats, settings=DEFAULT_SETTINGS):
    """Computes moments for every (t, i, j).

    Stages with bit-identical M_t share one computation.

    Args:
        bank (QuantizerBank): The quantizers.
        stats (InnovationStatistics): Supplies M_0..M_{T-1}.
        settings (Settings): Quadrature and partition tolerances.

    Returns:
        table (CellMomentTable): The offline table.
    """
    T = stats.horizon
    p = stats.M.shape[1]
    if bank.dim != p:
        raise UnsupportedDimensionError(
            f'Quantizers act on {bank.dim} dims, innovations on {p};'
        )
    if p > MAX_DIM:
        raise UnsupportedDimensionError(
            f'Cell moments support p <= {MAX_DIM}, but got: p={p};'
        )

    memo = {}
    probs = [np.empty((T, q.levels)) for q in bank.quantizers]
    means = [np.empty((T, q.levels, p)) for q in bank.quantizers]
    F = np.empty((T, bank.size, p, p))
    Mcal = np.empty((T, bank.size, p, p))

    for t, i in itertools.product(range(T), range(bank.size)):
        q = bank.quantizers[i]
        M_t = stats.M[t]
        key = (M_t.tobytes(), i)
        if key not in memo:
            if q.is_null:
                if not np.all(np.isinf(q.cells)):
                    raise PartitionError(
                        f'Single cell of quantizer {q.label} is not R^p;'
                    )
                memo[key] = (np.ones(1), np.zeros((1, p)))
            else:
                try:
                    result = cell_moments(M_t, q.cells, settings.quadrature)
                except QuadratureNotConvergedError as e:
                    raise e.at(t, i, e.location[2]) from e
                _check_partition(
                    *result, M_t, settings.partition_tol,
                    f'quantizer {q.label} at t={t}'
                )
                memo[key] = result
        probs[i][t], means[i][t] = memo[key]
        F[t, i] = reduction_covariance(*memo[key])
        Mcal[t, i] = M_t - F[t, i]
        if min_eigenvalue(Mcal[t, i]) < -settings.riccati_psd_tol:
            logger.warning(
                'Residual covariance of quantizer %s at t=%d is not PSD',
                q.label, t
            )

    if logger.isEnabledFor(logging.DEBUG):
        for i, q in enumerate(bank.quantizers):
            logger.debug(
                'Quantizer %s: tr(F) in [%.6g, %.6g]', q.label,
                np.trace(F[:, i], axis1=1, axis2=2).min(),
                np.trace(F[:, i], axis1=1, axis2=2).max()
            )
    return CellMomentTable(
        probs=tuple(frozen(a) for a in probs),
        means=tuple(frozen(a) for a in means),
        F=frozen(F),
        Mcal=frozen(Mcal),
    )
