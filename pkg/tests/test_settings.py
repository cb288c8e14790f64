"""
Test for quantlqg/settings.py
"""

import pytest

from quantlqg import DEFAULT_SETTINGS, SettingsError, load_settings


@pytest.mark.settings
def test_packaged_defaults():
    settings = load_settings()
    assert settings == DEFAULT_SETTINGS
    assert settings.cond_cap == 1e12
    assert settings.quadrature.order == 16
    assert settings.simulation.acceptance_sigmas == 2.0


@pytest.mark.settings
def test_user_overrides(tmp_path):
    path = tmp_path / 'settings.yaml'
    path.write_text(
        'cond_cap: 1.0e+8\n'
        'quadrature:\n'
        '  max_nodes: 512\n'
        'simulation:\n'
        '  workers: 4\n'
    )
    settings = load_settings(str(path))
    assert settings.cond_cap == 1e8
    assert settings.quadrature.max_nodes == 512
    assert settings.quadrature.order == 16
    assert settings.simulation.workers == 4
    assert settings.simulation.chunk_size == 1000


@pytest.mark.settings
def test_bad_settings(tmp_path):
    path = tmp_path / 'unknown.yaml'
    path.write_text('quadrature:\n  nodes: 3\n')
    with pytest.raises(SettingsError):
        load_settings(str(path))

    path = tmp_path / 'value.yaml'
    path.write_text('cond_cap: many\n')
    with pytest.raises(SettingsError):
        load_settings(str(path))

    path = tmp_path / 'list.yaml'
    path.write_text('- 1\n- 2\n')
    with pytest.raises(SettingsError):
        load_settings(str(path))

    with pytest.raises(SettingsError):
        load_settings(str(tmp_path / 'missing.yaml'))


@pytest.mark.settings
def test_replace():
    settings = DEFAULT_SETTINGS.replace(cond_cap=10.0)
    assert settings.cond_cap == 10.0
    assert DEFAULT_SETTINGS.cond_cap == 1e12
