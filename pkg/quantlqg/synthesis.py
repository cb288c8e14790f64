"""
Backward Riccati recursion of the certainty-equivalent controller.
"""

import dataclasses
import logging

import numpy as np

from .errors import IndexOutOfRangeError, SingularInnerMatrixError
from .settings import DEFAULT_SETTINGS
from .utils import frozen, spd_solve, symmetrize

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Gains and cost bookkeeping of the finite-horizon Riccati recursion.

    Args:
        P (ndarray): P_0..P_T, shape (T+1, n, n); P_T = Q2.
        L (ndarray): L_0..L_{T-1}, shape (T, m, n).
        N (ndarray): N_0..N_{T-1} = L'(R + B'PB)L, shape (T, n, n).
        r (ndarray): r_0..r_T, shape (T+1,); r_T = 0.
    """
    P: np.ndarray
    L: np.ndarray
    N: np.ndarray
    r: np.ndarray

    @property
    def horizon(self):
        """The number of decision stages T."""
        return len(self.L)

    def gain(self, k):
        """Returns L_k, checking the index."""
        if not 0 <= k < self.horizon:
            raise IndexOutOfRangeError(
                f'Gain index {k} is outside [0, {self.horizon});'
            )
        return self.L[k]

    def identical_to(self, other):
        """True when every stored array is bit-identical to `other`'s."""
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            for f in dataclasses.fields(self)
        )


def solve_riccati(model, settings=DEFAULT_SETTINGS):
    """Runs the backward recursion from P_T = Q2.

    The inner matrix R + B'P_{k+1}B is solved through its Cholesky factor
    and every P_k is symmetrized after the update.

    Args:
        model (ScenarioModel): The validated model.
        settings (Settings): Supplies the condition-number cap.

    Returns:
        solution (RiccatiSolution): The gains and cost terms.

    Raises:
        SingularInnerMatrixError: When R + B'P_{k+1}B is ill-conditioned.

    Example:
        from quantlqg import validate_scenario, solve_riccati

        riccati = solve_riccati(validate_scenario(raw))
        print(riccati.P[0], riccati.r[0])
    """
    A, B, T = model.A, model.B, model.T
    n, m = model.n, model.m

    P = np.empty((T + 1, n, n))
    L = np.empty((T, m, n))
    N = np.empty((T, n, n))
    r = np.empty(T + 1)

    P[T] = model.Q2
    r[T] = 0.0
    for k in range(T - 1, -1, -1):
        p_next = P[k + 1]
        S = symmetrize(model.R + B.T @ p_next @ B)
        L[k] = spd_solve(
            S, B.T @ p_next @ A,
            settings.cond_cap, SingularInnerMatrixError,
            f'Inner matrix R + B\'P B at k={k}'
        )
        N[k] = symmetrize(L[k].T @ S @ L[k])
        P[k] = symmetrize(model.Q1 + A.T @ p_next @ A - N[k])
        r[k] = r[k + 1] + np.trace(p_next @ model.W)

    logger.info('Riccati solved over T=%d: r_0=%.6g', T, r[0])
    logger.info('P_0 =\n%s', np.array2string(P[0], precision=6))
    return RiccatiSolution(P=frozen(P), L=frozen(L), N=frozen(N), r=frozen(r))


def control_gain_apply(L_k, xbar):
    """Returns the certainty-equivalent input -L_k xbar.

    >>> control_gain_apply([[0.6]], [1.0])
    >>> array([-0.6])

    Args:
        L_k (array_like): The m x n gain.
        xbar (array_like): The controller estimate (n-vector).

    Returns:
        u (ndarray): The input (m-vector).
    """
    return -(np.asarray(L_k, dtype=float) @ np.asarray(xbar, dtype=float))


def upsilon_recursion(N, A):
    """Returns Y_0..Y_T with Y_T = 0 and Y_t = A'Y_{t+1}A + N_t.

    Args:
        N (array_like): N_0..N_{T-1}, shape (T, n, n).
        A (array_like): The n x n state transition.

    Returns:
        upsilon (ndarray): Shape (T+1, n, n).
    """
    N = np.asarray(N, dtype=float)
    A = np.asarray(A, dtype=float)
    T, n = N.shape[0], A.shape[0]
    upsilon = np.zeros((T + 1, n, n))
    for t in range(T - 1, -1, -1):
        upsilon[t] = symmetrize(A.T @ upsilon[t + 1] @ A + N[t])
    return frozen(upsilon)
