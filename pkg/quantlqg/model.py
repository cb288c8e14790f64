"""
Plant, noise, cost and horizon of a scenario.
"""

import dataclasses
import logging
import numbers

import numpy as np

from .errors import (
    DimensionMismatchError,
    MalformedFieldError,
    NonpositiveHorizonError,
    NotPSDError,
    ScenarioValidationError,
)
from .settings import DEFAULT_SETTINGS
from .utils import clamp_psd, frozen, min_eigenvalue, symmetrize

logger = logging.getLogger(__name__)

MATRIX_FIELDS = ('A', 'B', 'C', 'W', 'V', 'Sigma_x', 'Q1', 'Q2', 'R')
FIELDS = MATRIX_FIELDS + ('mu0', 'T')
ALIASES = {'Q': 'Q1', 'Qf': 'Q2', 'Q_f': 'Q2'}
PSD_FIELDS = ('W', 'V', 'Sigma_x', 'Q1', 'Q2')


@dataclasses.dataclass(frozen=True, eq=False)
class ScenarioModel:
    """A validated linear-Gaussian plant with a quadratic cost.

    Instances are produced by `validate_scenario`; every array is read-only,
    so a model can be shared freely between threads.

    Args:
        A (ndarray): The n x n state transition.
        B (ndarray): The n x m input map.
        C (ndarray): The p x n output map.
        W (ndarray): The n x n process-noise covariance.
        V (ndarray): The p x p measurement-noise covariance.
        Sigma_x (ndarray): The n x n initial-state covariance.
        mu0 (ndarray): The initial mean (n-vector).
        Q1 (ndarray): The n x n stage state weight.
        Q2 (ndarray): The n x n terminal weight.
        R (ndarray): The m x m input weight (positive definite).
        T (int): The horizon; stages 0..T-1 plus the terminal stage T.

    Example:
        from quantlqg import validate_scenario

        model = validate_scenario({
            'A': [[1.0]], 'B': [[1.0]], 'C': [[1.0]],
            'W': [[1.0]], 'V': [[1.0]], 'Sigma_x': [[1.0]], 'mu0': [0.0],
            'Q1': [[1.0]], 'Q2': [[1.0]], 'R': [[1.0]], 'T': 2
        })
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Sigma_x: np.ndarray
    mu0: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    R: np.ndarray
    T: int

    @property
    def n(self):
        """The state dimension."""
        return self.A.shape[0]

    @property
    def m(self):
        """The input dimension."""
        return self.B.shape[1]

    @property
    def p(self):
        """The output dimension."""
        return self.C.shape[0]

    @property
    def is_full_observation(self):
        """True when C = I and V = 0 (perfect state measurements)."""
        return (
            self.p == self.n
            and np.array_equal(self.C, np.eye(self.n))
            and not np.any(self.V)
        )

    def to_dict(self):
        """Returns the raw description (nested lists) of this model."""
        raw = {name: getattr(self, name).tolist() for name in MATRIX_FIELDS}
        raw['mu0'] = self.mu0.tolist()
        raw['T'] = int(self.T)
        return raw

    def with_horizon(self, T):
        """Returns the same plant over another horizon, re-validated."""
        raw = self.to_dict()
        raw['T'] = T
        return validate_scenario(raw)

    def __eq__(self, other):
        if not isinstance(other, ScenarioModel):
            return NotImplemented
        return self.T == other.T and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in MATRIX_FIELDS + ('mu0',)
        )

    __hash__ = None


@dataclasses.dataclass
class TrajectoryRecord:
    """One closed-loop run of the plant.

    Args:
        states (ndarray): X_0..X_T, shape (T+1, n).
        inputs (ndarray): U_0..U_{T-1}, shape (T, m).
        outputs (ndarray): Y_0..Y_{T-1}, shape (T, p).
        innovations (ndarray): The sensor innovations, shape (T, p).
        selections (ndarray): The quantizer positions used at 0..T-1.
        prices (ndarray): The price paid at every stage.
        realized_cost (float): The realized value of the quadratic criterion.
        estimates (ndarray): The controller estimates, shape (T, n).
        arrivals (list): Origin times delivered at every stage.
    """
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    innovations: np.ndarray
    selections: np.ndarray
    prices: np.ndarray
    realized_cost: float
    estimates: np.ndarray = None
    arrivals: list = None

    @property
    def horizon(self):
        """The number of decision stages T."""
        return len(self.inputs)

    @property
    def errors(self):
        """The estimation errors X_t - Xbar_t for t = 0..T-1."""
        return self.states[:-1] - self.estimates

    def recompute_cost(self, model):
        """Re-evaluates the criterion from the stored trajectory."""
        return trajectory_cost(model, self.states, self.inputs, self.prices)

    def is_consistent(self, model, rtol=1e-9):
        """Checks lengths and the stored cost against a re-evaluation."""
        T = model.T
        lengths_ok = (
            len(self.states) == T + 1
            and len(self.inputs) == T
            and len(self.outputs) == T
            and len(self.innovations) == T
            and len(self.selections) == T
            and len(self.prices) == T
        )
        if not lengths_ok:
            return False
        expected = self.recompute_cost(model)
        return abs(expected - self.realized_cost) <= rtol * max(
            1.0, abs(expected)
        )


def _parse_matrix(name, value, errors):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        errors.append(MalformedFieldError(
            name, f'Field "{name}" is not a numeric matrix;'))
        return None
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim == 3:
        errors.append(MalformedFieldError(
            name,
            f'Field "{name}" is a sequence of matrices; time-varying '
            'matrices are not supported;'
        ))
        return None
    if a.ndim != 2:
        errors.append(MalformedFieldError(
            name, f'Field "{name}" must be a 2-D matrix, got {a.ndim}-D;'))
        return None
    if not np.all(np.isfinite(a)):
        errors.append(MalformedFieldError(
            name, f'Field "{name}" has non-finite entries;'))
        return None
    return a


def _parse_vector(name, value, errors):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        errors.append(MalformedFieldError(
            name, f'Field "{name}" is not a numeric vector;'))
        return None
    if a.ndim == 2 and 1 in a.shape:
        a = a.reshape(-1)
    a = np.atleast_1d(a)
    if a.ndim != 1:
        errors.append(MalformedFieldError(
            name, f'Field "{name}" must be a vector;'))
        return None
    if not np.all(np.isfinite(a)):
        errors.append(MalformedFieldError(
            name, f'Field "{name}" has non-finite entries;'))
        return None
    return a


def _check_shape(name, a, shape, errors):
    if a is not None and shape is not None and a.shape != shape:
        errors.append(DimensionMismatchError(
            name,
            f'Field "{name}" has shape {a.shape}, expected {shape};'
        ))
        return None
    return a


def _check_psd(name, a, settings, errors, definite=False):
    if a is None:
        return None
    if np.max(np.abs(a - a.T), initial=0.0) > settings.symmetry_tol:
        errors.append(NotPSDError(name, f'Matrix "{name}" is not symmetric;'))
        return None
    a = symmetrize(a)
    lam = min_eigenvalue(a)
    if definite:
        if lam <= 0.0:
            errors.append(NotPSDError(
                name,
                f'Matrix "{name}" must be positive definite, smallest '
                f'eigenvalue is {lam:.3e};'
            ))
            return None
        return a
    if lam < -settings.psd_tol:
        errors.append(NotPSDError(
            name,
            f'Matrix "{name}" is not PSD, smallest eigenvalue is {lam:.3e};'
        ))
        return None
    scale = np.max(np.abs(np.linalg.eigvalsh(a)), initial=0.0)
    if lam < -64.0 * np.finfo(float).eps * max(scale, 1.0):
        logger.debug('Clamping "%s" (smallest eigenvalue %.3e)', name, lam)
        a = clamp_psd(a)
    return a


def validate_scenario(raw, settings=DEFAULT_SETTINGS):
    """Validates a raw scenario description.

    Every invariant is checked and all violations are reported together.

    Args:
        raw (dict|ScenarioModel): The keys "A", "B", "C", "W", "V",
            "Sigma_x", "mu0", "Q1", "Q2", "R" and "T" ("Q", "Qf" and "Q_f"
            are accepted as aliases of "Q1" and "Q2").
        settings (Settings): The tolerances to use.

    Returns:
        model (ScenarioModel): The validated model.

    Raises:
        ScenarioValidationError: Carries every violated invariant as
            `DimensionMismatchError`, `NotPSDError`,
            `NonpositiveHorizonError` or `MalformedFieldError`.
    """
    if isinstance(raw, ScenarioModel):
        raw = raw.to_dict()
    if not isinstance(raw, dict):
        raise ScenarioValidationError([MalformedFieldError(
            'scenario',
            f'Scenario must be a mapping, but got: {type(raw)};'
        )])

    raw = dict(raw)
    for alias, name in ALIASES.items():
        if alias in raw and name not in raw:
            raw[name] = raw.pop(alias)

    errors = []
    for name in FIELDS:
        if name not in raw:
            errors.append(MalformedFieldError(
                name, f'Field "{name}" is missing;'))

    parsed = {}
    for name in MATRIX_FIELDS:
        if name in raw:
            parsed[name] = _parse_matrix(name, raw[name], errors)
    mu0 = _parse_vector('mu0', raw['mu0'], errors) if 'mu0' in raw else None

    T = raw.get('T')
    if 'T' in raw:
        if isinstance(T, bool) or not isinstance(T, numbers.Integral):
            errors.append(MalformedFieldError(
                'T', f'Horizon must be an integer, but got: {T!r};'))
            T = None
        elif T < 1:
            errors.append(NonpositiveHorizonError(
                'T', f'Horizon must be at least 1, but got: {T};'))
            T = None

    A = parsed.get('A')
    n = m = p = None
    if A is not None:
        if A.shape[0] != A.shape[1]:
            errors.append(DimensionMismatchError(
                'A', f'Matrix "A" must be square, but has shape {A.shape};'))
            parsed['A'] = None
        n = A.shape[0]
    if parsed.get('B') is not None:
        m = parsed['B'].shape[1]
    if parsed.get('C') is not None:
        p = parsed['C'].shape[0]

    expected = {
        'B': (n, m) if n is not None else None,
        'C': (p, n) if n is not None else None,
        'W': (n, n) if n is not None else None,
        'V': (p, p) if p is not None else None,
        'Sigma_x': (n, n) if n is not None else None,
        'Q1': (n, n) if n is not None else None,
        'Q2': (n, n) if n is not None else None,
        'R': (m, m) if m is not None else None,
    }
    for name, shape in expected.items():
        if name in parsed:
            parsed[name] = _check_shape(name, parsed[name], shape, errors)
    if mu0 is not None and n is not None and mu0.shape != (n,):
        errors.append(DimensionMismatchError(
            'mu0', f'Vector "mu0" has length {mu0.size}, expected {n};'))
        mu0 = None

    for name in PSD_FIELDS:
        if name in parsed:
            parsed[name] = _check_psd(name, parsed[name], settings, errors)
    if 'R' in parsed:
        parsed['R'] = _check_psd(
            'R', parsed['R'], settings, errors, definite=True)

    if errors:
        raise ScenarioValidationError(errors)

    model = ScenarioModel(
        A=frozen(parsed['A']),
        B=frozen(parsed['B']),
        C=frozen(parsed['C']),
        W=frozen(parsed['W']),
        V=frozen(parsed['V']),
        Sigma_x=frozen(parsed['Sigma_x']),
        mu0=frozen(mu0),
        Q1=frozen(parsed['Q1']),
        Q2=frozen(parsed['Q2']),
        R=frozen(parsed['R']),
        T=int(T),
    )
    logger.debug(
        'Validated scenario n=%d m=%d p=%d T=%d',
        model.n, model.m, model.p, model.T
    )
    return model


def _vector(model, value, size, what):
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.shape != (size,):
        raise DimensionMismatchError(
            what, f'Vector "{what}" has length {v.size}, expected {size};')
    return v


def stage_cost(model, x, u, theta_price):
    """Returns x'Q1 x + u'R u + theta_price.

    Args:
        model (ScenarioModel): The validated model.
        x (array_like): The state (n-vector).
        u (array_like): The input (m-vector).
        theta_price (float): The price of the quantizer used at this stage.

    Returns:
        cost (float): The stage cost.
    """
    x = _vector(model, x, model.n, 'x')
    u = _vector(model, u, model.m, 'u')
    return float(x @ model.Q1 @ x + u @ model.R @ u + theta_price)


def trajectory_cost(model, states, inputs, prices):
    """Returns the realized criterion of one trajectory.

    Args:
        model (ScenarioModel): The validated model.
        states (array_like): X_0..X_T, shape (T+1, n).
        inputs (array_like): U_0..U_{T-1}, shape (T, m).
        prices (array_like): The price paid at each stage (length T).

    Returns:
        cost (float): The sum of stage costs plus X_T'Q2 X_T.
    """
    states = np.asarray(states, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    if len(states) != model.T + 1 or len(inputs) != model.T:
        raise DimensionMismatchError(
            'trajectory',
            f'Trajectory lengths {len(states)}/{len(inputs)} do not match '
            f'horizon {model.T};'
        )
    total = sum(
        stage_cost(model, states[t], inputs[t], prices[t])
        for t in range(model.T)
    )
    terminal = states[-1]
    return float(total + terminal @ model.Q2 @ terminal)
