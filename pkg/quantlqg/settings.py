"""
Numerical settings.

The packaged `settings.yaml` holds the defaults. A user file can override
any subset of its keys:

    quadrature:
      max_nodes: 512
    simulation:
      workers: 4
"""

import dataclasses
import importlib.resources
import logging
import os

import yaml

from .errors import SettingsError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class QuadratureSettings:
    """Parameters of the panel-refined Gauss-Legendre rule."""
    order: int = 16
    initial_panels: int = 1
    max_nodes: int = 1024
    rtol: float = 1e-9
    atol: float = 1e-15
    clip_sigmas: float = 10.0


@dataclasses.dataclass(frozen=True)
class SimulationSettings:
    """Parameters of the Monte Carlo engine."""
    chunk_size: int = 1000
    workers: int = 1
    acceptance_sigmas: float = 2.0


@dataclasses.dataclass(frozen=True)
class Settings:
    """Every tolerance and cap used across the toolkit."""
    symmetry_tol: float = 1e-12
    psd_tol: float = 1e-10
    cond_cap: float = 1e12
    riccati_psd_tol: float = 1e-9
    partition_tol: float = 1e-6
    brute_force_cap: int = 10**6
    quadrature: QuadratureSettings = QuadratureSettings()
    simulation: SimulationSettings = SimulationSettings()

    def replace(self, **changes):
        """Returns a copy with the given top-level fields replaced."""
        return dataclasses.replace(self, **changes)


_NESTED = {
    'quadrature': QuadratureSettings,
    'simulation': SimulationSettings,
}


def _build(cls, content, where):
    if content is None:
        return cls()
    if not isinstance(content, dict):
        raise SettingsError(
            f'Section "{where}" must be a mapping, but got: {type(content)};'
        )
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(content) - set(known))
    if unknown:
        raise SettingsError(
            f'Unknown settings in "{where}": {", ".join(unknown)};'
        )
    values = {}
    for name, value in content.items():
        if name in _NESTED and cls is Settings:
            values[name] = _build(_NESTED[name], value, name)
        else:
            default = known[name].default
            try:
                values[name] = type(default)(value)
            except (TypeError, ValueError) as e:
                raise SettingsError(
                    f'Setting "{where}.{name}" has a bad value {value!r};'
                ) from e
    return cls(**values)


def _merge(base, override):
    merged = dict(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(path=None):
    """Loads the packaged defaults and overlays an optional user file.

    Args:
        path (str|Path): The YAML file with overrides (default=None).

    Returns:
        settings (Settings): The immutable settings.

    Example:
        from quantlqg import load_settings

        settings = load_settings('my_settings.yaml')
        print(settings.quadrature.max_nodes)
    """
    resource = importlib.resources.files(__package__) / 'settings.yaml'
    content = yaml.safe_load(resource.read_text(encoding='utf-8')) or {}
    if path is not None:
        if not os.path.isfile(path):
            raise SettingsError(f'Settings file "{path}" does not exist;')
        with open(path, 'r', encoding='utf-8') as f:
            override = yaml.safe_load(f)
        if override is not None and not isinstance(override, dict):
            raise SettingsError(
                f'Settings file must hold a mapping, but got: '
                f'{type(override)};'
            )
        content = _merge(content, override)
        logger.debug('Loaded settings overrides from %s', path)
    return _build(Settings, content, 'settings')


DEFAULT_SETTINGS = Settings()
