"""
Linear algebra utilities.
"""

import numpy as np
import scipy.linalg


def frozen(array):
    """Returns a read-only float copy of the array.

    >>> frozen([[1, 0], [0, 1]]).flags.writeable
    >>> False

    Args:
        array (array_like): The values to freeze.

    Returns:
        result (ndarray): The read-only copy.
    """
    result = np.array(array, dtype=float, copy=True)
    result.flags.writeable = False
    return result


def symmetrize(a):
    """Returns (a + a') / 2; a symmetric input comes back bit-identical."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


def min_eigenvalue(a):
    """Returns the smallest eigenvalue of a symmetric matrix."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(symmetrize(a))[0])


def clamp_psd(a):
    """Projects a symmetric matrix onto the PSD cone.

    Negative eigenvalues are set to zero. A matrix that already has no
    negative eigenvalue is returned unchanged.

    Args:
        a (ndarray): The symmetric matrix.

    Returns:
        result (ndarray): The clamped matrix.
    """
    a = symmetrize(a)
    w, v = np.linalg.eigh(a)
    if w.size == 0 or w[0] >= 0.0:
        return a
    return symmetrize((v * np.clip(w, 0.0, None)) @ v.T)


def psd_factor(a):
    """Returns F with F F' = a for a symmetric PSD matrix.

    The factor comes from the symmetric eigendecomposition, so singular
    covariances (for example a noise-free channel) are handled.

    Args:
        a (ndarray): The symmetric PSD matrix.

    Returns:
        factor (ndarray): The square factor.
    """
    w, v = np.linalg.eigh(symmetrize(a))
    return v * np.sqrt(np.clip(w, 0.0, None))


def condition_number(a):
    """Returns the 2-norm condition number (inf for singular input)."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 1.0
    with np.errstate(divide='ignore', invalid='ignore'):
        value = np.linalg.cond(a)
    if not np.isfinite(value):
        return float('inf')
    return float(value)


def spd_solve(a, b, cond_cap, error_cls, what):
    """Solves a x = b for a symmetric positive-definite matrix a.

    Args:
        a (ndarray): The SPD matrix.
        b (ndarray): The right-hand side.
        cond_cap (float): The largest acceptable condition number.
        error_cls (type): The exception raised when a is ill-conditioned.
        what (str): The name of a used in the error message.

    Returns:
        x (ndarray): The solution.
    """
    cond = condition_number(a)
    if cond > cond_cap:
        raise error_cls(
            f'{what} is numerically singular, condition number {cond:.3e} '
            f'exceeds {cond_cap:.1e};'
        )
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as e:
        raise error_cls(f'{what} is not positive definite;') from e
    return scipy.linalg.cho_solve(factor, b)


def relative_frobenius(actual, expected):
    """Returns ||actual - expected||_F / ||expected||_F."""
    expected = np.asarray(expected, dtype=float)
    scale = np.linalg.norm(expected)
    diff = np.linalg.norm(np.asarray(actual, dtype=float) - expected)
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)


def matrix_powers(a, count):
    """Returns the stack [I, a, a^2, ..., a^(count-1)]."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    powers = np.empty((count, n, n))
    if count == 0:
        return powers
    powers[0] = np.eye(n)
    for k in range(1, count):
        powers[k] = a @ powers[k - 1]
    return powers
