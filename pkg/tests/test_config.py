"""
Tests for the configuration layer.
"""

import pytest

from app.config import ENV_PREFIX, Settings, load_settings
from app.exceptions import UsageError


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in Settings.model_fields:
        monkeypatch.delenv(ENV_PREFIX + name.upper(), raising=False)


def test_defaults():
    settings = load_settings()
    assert settings == Settings()
    assert settings.newton_tol == 1e-9
    assert settings.rouche_samples == 4096
    assert settings.workers == 1


def test_environment_layer(monkeypatch):
    monkeypatch.setenv("QUASIROOTS_NEWTON_TOL", "1e-10")
    monkeypatch.setenv("QUASIROOTS_WORKERS", "4")
    settings = load_settings()
    assert settings.newton_tol == 1e-10
    assert settings.workers == 4


def test_file_layer_beats_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("QUASIROOTS_MAX_DEPTH", "20")
    config = tmp_path / "settings.env"
    config.write_text("# numerics\nmax_depth=30\nQUASIROOTS_GUARD_EPS=1e-9\n")
    settings = load_settings(str(config))
    assert settings.max_depth == 30
    assert settings.guard_eps == 1e-9


def test_overrides_win(tmp_path):
    config = tmp_path / "settings.env"
    config.write_text("newton_tol=1e-10\n")
    settings = load_settings(str(config), newton_tol=1e-11, workers=None)
    assert settings.newton_tol == 1e-11
    assert settings.workers == 1


@pytest.mark.parametrize("overrides", [{"newton_tol": -1.0}, {"rouche_samples": 16}, {"window_fraction": 1.5}])
def test_invalid_values(overrides):
    with pytest.raises(UsageError):
        load_settings(**overrides)


def test_unknown_key(tmp_path):
    config = tmp_path / "settings.env"
    config.write_text("colour=blue\n")
    with pytest.raises(UsageError):
        load_settings(str(config))


def test_missing_file(tmp_path):
    with pytest.raises(UsageError):
        load_settings(str(tmp_path / "absent.env"))


def test_settings_are_frozen():
    settings = Settings()
    with pytest.raises(Exception):
        settings.workers = 2
