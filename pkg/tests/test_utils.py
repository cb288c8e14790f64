"""
Test for quantlqg/utils.py
"""

import numpy as np
import pytest

from quantlqg import SingularInnerMatrixError
from quantlqg.utils import (
    clamp_psd,
    condition_number,
    frozen,
    matrix_powers,
    min_eigenvalue,
    psd_factor,
    relative_frobenius,
    spd_solve,
    symmetrize,
)

from .helper import assert_close, assert_psd


@pytest.mark.utils
def test_frozen():
    source = np.eye(2)
    a = frozen(source)
    assert not a.flags.writeable
    with pytest.raises(ValueError):
        a[0, 0] = 2.0
    source[0, 0] = 5.0
    assert a[0, 0] == 1.0


@pytest.mark.utils
def test_symmetrize():
    a = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert np.array_equal(symmetrize(a), a)
    assert_close(symmetrize([[0.0, 1.0], [0.0, 0.0]]),
                 [[0.0, 0.5], [0.5, 0.0]])


@pytest.mark.utils
def test_clamp_psd():
    a = np.array([[1.0, 0.0], [0.0, -1e-15]])
    clamped = clamp_psd(a)
    assert min_eigenvalue(clamped) >= 0.0
    assert_close(clamped, [[1.0, 0.0], [0.0, 0.0]])

    b = np.diag([2.0, 1.0])
    assert np.array_equal(clamp_psd(b), b)


@pytest.mark.utils
def test_psd_factor():
    a = np.array([[1.0, 1.0], [1.0, 1.0]])
    f = psd_factor(a)
    assert_close(f @ f.T, a, atol=1e-12)

    f = psd_factor(np.zeros((2, 2)))
    assert_close(f, np.zeros((2, 2)))


@pytest.mark.utils
def test_spd_solve():
    a = np.array([[2.0, 1.0], [1.0, 2.0]])
    x = spd_solve(a, np.array([3.0, 3.0]), 1e12, SingularInnerMatrixError,
                  'a')
    assert_close(x, [1.0, 1.0], atol=1e-12)

    with pytest.raises(SingularInnerMatrixError):
        spd_solve(np.diag([1.0, 1e-14]), np.ones(2), 1e12,
                  SingularInnerMatrixError, 'a')

    with pytest.raises(SingularInnerMatrixError):
        spd_solve(np.diag([1.0, -1.0]), np.ones(2), 1e12,
                  SingularInnerMatrixError, 'a')

    assert condition_number(np.zeros((2, 2))) == float('inf')


@pytest.mark.utils
def test_matrix_powers():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    powers = matrix_powers(a, 4)
    assert powers.shape == (4, 2, 2)
    assert_close(powers[0], np.eye(2))
    assert_close(powers[3], [[1.0, 3.0], [0.0, 1.0]])
    assert_psd(powers[0])


@pytest.mark.utils
def test_relative_frobenius():
    assert relative_frobenius([[1.1]], [[1.0]]) == pytest.approx(0.1)
    assert relative_frobenius([[0.5]], [[0.0]]) == pytest.approx(0.5)
