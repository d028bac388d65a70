"""
Configuration loading for the Strichartz toolkit.

Numerical defaults come from settings.json (one section per concern); a
missing file or missing keys fall back to the built-in defaults below.
Environment overrides are read from .env through python-dotenv.
"""

import copy
import json
import math
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv

from strichartz.models import AscentConfig, ParameterError, QuadratureSpec

SETTINGS_FILE = "settings.json"
THREADS_VARIABLE = "STRICHARTZ_THREADS"


def create_default_settings() -> Dict[str, Dict[str, Any]]:
    """Built-in defaults, used when settings.json is absent or incomplete."""
    return {
        "quadrature": {
            "time_panels": 8,
            "gauss_order": 10,
            "x_points": "auto",
            "panels_per_unit": 1.0,
        },
        "ascent": {
            "step_init": 1.0,
            "backtrack_factor": 0.5,
            "armijo": 1e-4,
            "grad_tol": 1e-9,
            "max_iters": 5000,
            "restarts": 16,
            "seed": 0,
        },
        "threshold": {
            "scan_step": 0.05,
            "scan_max": 4.0,
            "bisection_width": 1e-4,
            "grid_step": 0.1,
            "grid_limit": 2.0,
            "nm_starts": 4,
        },
        "dmnls": {
            "dt": 1e-2,
            "horizon": 10.0,
            "sample_stride": 10,
            "shift_grid": 64,
            "drift_tolerance": 1e-5,
            "residual_gate": 1e-3,
        },
        "output": {
            "out_dir": "results",
            "log_dir": "logs",
        },
    }


def load_settings(path: Union[str, Path, None] = None) -> Dict[str, Dict[str, Any]]:
    """
    Load settings.json, filling missing sections and keys from the defaults.

    Args:
        path: Settings file; defaults to settings.json in the working directory

    Returns:
        Settings dictionary with every default section present

    Raises:
        ParameterError: if the file exists but is not a JSON object of sections
    """
    settings = create_default_settings()
    settings_path = Path(path) if path else Path(SETTINGS_FILE)
    try:
        with open(settings_path, "r", encoding="utf-8") as f:
            loaded = json.load(f)
    except FileNotFoundError:
        return settings
    except json.JSONDecodeError as e:
        raise ParameterError(f"Invalid settings file {settings_path}: {e}") from e

    if not isinstance(loaded, dict):
        raise ParameterError(f"Settings file {settings_path} must hold a JSON object")
    for section, values in loaded.items():
        if not isinstance(values, dict):
            raise ParameterError(f"Settings section '{section}' must be an object")
        settings.setdefault(section, {}).update(values)
    return settings


def snapshot(settings: Dict[str, Any]) -> Dict[str, Any]:
    """Deep copy suitable for embedding in a run manifest."""
    return copy.deepcopy(settings)


def thread_count(env_file: Optional[Union[str, Path]] = None) -> int:
    """
    Worker cap from STRICHARTZ_THREADS (default 1).

    Raises:
        ParameterError: if the variable is set to anything but an integer >= 1
    """
    load_dotenv(env_file)
    raw = os.getenv(THREADS_VARIABLE)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError as e:
        raise ParameterError(f"{THREADS_VARIABLE} must be an integer, got {raw!r}") from e
    if value < 1:
        raise ParameterError(f"{THREADS_VARIABLE} must be >= 1, got {value}")
    return value


def quadrature_from_settings(
    settings: Dict[str, Any], B: Optional[float] = None, width: Optional[int] = None
) -> QuadratureSpec:
    """
    QuadratureSpec from the 'quadrature' section.

    When B and the support width are given, the panel count is raised to
    panels_per_unit * B * width^2 so the t-oscillation is resolved.
    """
    section = settings["quadrature"]
    panels = int(section["time_panels"])
    if B is not None and width is not None:
        panels = max(panels, int(math.ceil(float(section["panels_per_unit"]) * B * width * width)))
    x_points = section["x_points"]
    return QuadratureSpec(
        time_panels=panels,
        gauss_order=int(section["gauss_order"]),
        x_points=x_points if x_points == "auto" else int(x_points),
    )


def ascent_from_settings(settings: Dict[str, Any], **overrides) -> AscentConfig:
    """AscentConfig from the 'ascent' section; keyword overrides that are not None win."""
    section = dict(settings["ascent"])
    section.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return AscentConfig(
            step_init=float(section["step_init"]),
            backtrack_factor=float(section["backtrack_factor"]),
            grad_tol=float(section["grad_tol"]),
            max_iters=int(section["max_iters"]),
            restarts=int(section["restarts"]),
            seed=int(section["seed"]),
            armijo=float(section["armijo"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParameterError(f"Invalid ascent settings: {e}") from e
