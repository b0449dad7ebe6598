"""
Configuration Module

Loads `config/settings.yaml` into typed settings objects. Every section has
built-in defaults, so a partial (or absent) YAML file is valid.

Environment variables:
- CREDAL_CONFIG: path of an alternative settings file
- CREDAL_THREADS: cap on worker threads (default: available cores)
"""

import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from src.utils.exceptions import ValidationError

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "settings.yaml"

logger = logging.getLogger(__name__)


@dataclass
class CalibrationSettings:
    alpha: float = 0.05
    conformity: str = "identity"


@dataclass
class PredictionSettings:
    delta: float = 0.05
    resolution: Optional[int] = None
    k_cap: int = 20


@dataclass
class UncertaintySettings:
    tol: float = 1e-7
    max_iterations: int = 10000


@dataclass
class EvaluationSettings:
    epsilons: List[float] = field(default_factory=lambda: [0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
    seeds: int = 20
    split_fraction: float = 0.5
    grid_steps: int = 10


@dataclass
class SyntheticSettings:
    n: int = 1000
    seed: int = 0
    temperature: float = 1.5
    means: List[List[float]] = field(default_factory=lambda: [[0.0, 0.0], [2.0, 0.0], [1.0, 1.7]])
    covariances: List[List[List[float]]] = field(
        default_factory=lambda: [[[1.0, 0.0], [0.0, 1.0]] for _ in range(3)])
    priors: List[float] = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])


@dataclass
class LoggingSettings:
    level: str = "INFO"
    file: Optional[str] = None


@dataclass
class Settings:
    """All configurable defaults, grouped by the command that uses them."""

    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    prediction: PredictionSettings = field(default_factory=PredictionSettings)
    uncertainty: UncertaintySettings = field(default_factory=UncertaintySettings)
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    synthetic: SyntheticSettings = field(default_factory=SyntheticSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "Settings":
        sections = {}
        for section in fields(cls):
            section_type = section.default_factory
            values = raw.get(section.name) or {}
            if not isinstance(values, dict):
                raise ValidationError(f"settings section '{section.name}' must be a mapping")
            known = {f.name for f in fields(section_type)}
            unknown = set(values) - known
            if unknown:
                logger.warning(f"Ignoring unknown keys in '{section.name}': {sorted(unknown)}")
            sections[section.name] = section_type(**{k: v for k, v in values.items() if k in known})
        return cls(**sections)


def load_settings(path: Optional[str] = None) -> Settings:
    """
    Load settings from YAML.

    Resolution order: explicit path, then $CREDAL_CONFIG, then the bundled
    config/settings.yaml. A missing default file yields built-in defaults;
    a missing explicit file is an error.
    """
    explicit = path or os.environ.get("CREDAL_CONFIG")
    config_path = Path(explicit) if explicit else DEFAULT_CONFIG_PATH

    if not config_path.exists():
        if explicit:
            raise ValidationError(f"settings file not found: {config_path}")
        return Settings()

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ValidationError(f"cannot parse settings file {config_path}: {e}") from e

    if not isinstance(raw, dict):
        raise ValidationError(f"settings file {config_path} must contain a mapping")
    return Settings.from_dict(raw)


def worker_count() -> int:
    """Worker cap from $CREDAL_THREADS, defaulting to the available cores."""
    value = os.environ.get("CREDAL_THREADS")
    if value:
        try:
            threads = int(value)
        except ValueError:
            raise ValidationError(f"CREDAL_THREADS must be an integer, got {value!r}")
        if threads < 1:
            raise ValidationError("CREDAL_THREADS must be at least 1")
        return threads
    return os.cpu_count() or 1
