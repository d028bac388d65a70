"""
Tests for settings loading and environment overrides.
"""

import json
from pathlib import Path

import pytest

from strichartz.config import (
    ascent_from_settings,
    create_default_settings,
    load_settings,
    quadrature_from_settings,
    thread_count,
)
from strichartz.models import ParameterError


def test_missing_file_gives_defaults(workdir):
    assert load_settings() == create_default_settings()
    assert load_settings(workdir / "nope.json") == create_default_settings()


def test_partial_file_is_filled(workdir):
    (workdir / "settings.json").write_text(json.dumps({"ascent": {"restarts": 3}, "extra": {"a": 1}}))
    settings = load_settings()
    assert settings["ascent"]["restarts"] == 3
    assert settings["ascent"]["step_init"] == 1.0
    assert settings["dmnls"] == create_default_settings()["dmnls"]
    assert settings["extra"] == {"a": 1}


@pytest.mark.parametrize("text", ["{", "[]", '{"ascent": 5}'])
def test_invalid_file(workdir, text):
    (workdir / "settings.json").write_text(text)
    with pytest.raises(ParameterError):
        load_settings()


def test_repository_settings_match_defaults():
    path = Path(__file__).resolve().parent.parent / "settings.json"
    assert load_settings(path) == create_default_settings()


def test_ascent_overrides():
    cfg = ascent_from_settings(create_default_settings(), seed=7, restarts=None)
    assert cfg.seed == 7
    assert cfg.restarts == 16
    with pytest.raises(ParameterError):
        ascent_from_settings(create_default_settings(), backtrack_factor=2.0)


def test_quadrature_scaling():
    settings = create_default_settings()
    assert quadrature_from_settings(settings).time_panels == 8
    assert quadrature_from_settings(settings, B=3.0, width=5).time_panels == 75
    settings["quadrature"]["x_points"] = "64"
    assert quadrature_from_settings(settings).grid_size(5) == 64


@pytest.mark.parametrize("value,expected", [(None, 1), ("", 1), ("4", 4)])
def test_thread_count(monkeypatch, workdir, value, expected):
    if value is not None:
        monkeypatch.setenv("STRICHARTZ_THREADS", value)
    assert thread_count(workdir / ".env") == expected


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_invalid_thread_count(monkeypatch, workdir, value):
    monkeypatch.setenv("STRICHARTZ_THREADS", value)
    with pytest.raises(ParameterError):
        thread_count(workdir / ".env")


def test_thread_count_from_env_file(workdir):
    (workdir / ".env").write_text("STRICHARTZ_THREADS=3\n")
    assert thread_count(workdir / ".env") == 3
