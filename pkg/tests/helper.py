"""
Helper functions for tests automation.
"""

import os

import numpy as np

from quantlqg import load_bank, load_scenario, validate_scenario

SCENARIOS = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios'
)


class ShapesNotMatchError(AssertionError):
    """This error is raised when array shapes are not matched."""
    pass


class ValuesNotCloseError(AssertionError):
    """This error is raised when array values are not close."""
    pass


class MatrixNotSymmetricError(AssertionError):
    """This error is raised when a matrix is not symmetric."""
    pass


class MatrixNotPSDError(AssertionError):
    """This error is raised when a matrix has a negative eigenvalue."""
    pass


def assert_close(actual, expected, atol=1e-12, rtol=0.0):
    """Checks two arrays entry by entry.

    Args:
        actual (array_like): The computed values.
        expected (array_like): The reference values.
        atol (float): The absolute tolerance.
        rtol (float): The tolerance relative to |expected|.
    """
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if actual.shape != expected.shape:
        raise ShapesNotMatchError(f'{actual.shape} != {expected.shape}')
    gap = np.abs(actual - expected)
    bound = atol + rtol * np.abs(expected)
    if np.any(gap > bound):
        worst = np.unravel_index(np.argmax(gap - bound), gap.shape)
        raise ValuesNotCloseError(
            f'{actual[worst]} != {expected[worst]} at {tuple(worst)} '
            f'(gap {gap[worst]:.3e})'
        )
    return True


def assert_symmetric(a, atol=0.0):
    """Checks that a matrix equals its transpose."""
    a = np.asarray(a, dtype=float)
    gap = float(np.max(np.abs(a - a.T), initial=0.0))
    if gap > atol:
        raise MatrixNotSymmetricError(f'asymmetry {gap:.3e}')
    return True


def assert_psd(a, atol=1e-10):
    """Checks that the smallest eigenvalue is at least -atol * scale."""
    a = np.asarray(a, dtype=float)
    w = np.linalg.eigvalsh((a + a.T) / 2.0)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if w.size and w[0] < -atol * scale:
        raise MatrixNotPSDError(f'smallest eigenvalue {w[0]:.3e}')
    return True


def scenario_path(name):
    """Returns the path of a file under scenarios/."""
    return os.path.join(SCENARIOS, name)


def reference_model(T=None, perfect=False):
    """Returns the two-state reference plant.

    Args:
        T (int): Replaces the horizon of 50 (default=None).
        perfect (bool): Use C = I and V = 0.
    """
    model = load_scenario(
        scenario_path('perfect.json' if perfect else 'reference.json')
    )
    if T is not None:
        model = model.with_horizon(T)
    return model


def reference_bank(bit_rate=1):
    """Returns the three reference quantizers at bit-rate 1 or 3."""
    return load_bank(scenario_path(f'bank_rate{bit_rate}.json'))


def scalar_raw(T=2, **changes):
    """Returns a raw scalar scenario with every coefficient equal to one."""
    raw = {
        'A': [[1.0]], 'B': [[1.0]], 'C': [[1.0]],
        'W': [[1.0]], 'V': [[1.0]], 'Sigma_x': [[1.0]], 'mu0': [0.0],
        'Q1': [[1.0]], 'Q2': [[1.0]], 'R': [[1.0]], 'T': T,
    }
    raw.update(changes)
    return raw


def scalar_model(T=2, **changes):
    """Returns the validated scalar scenario."""
    return validate_scenario(scalar_raw(T, **changes))
