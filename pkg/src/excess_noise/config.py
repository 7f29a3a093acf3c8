"""Scenario configuration: a single JSON document.

Example::

    {"basis": {"kind": "box", "n_modes": 4, "box_length": 3.14159, "grid_points": 512},
     "gain": {"indicator": "uniform", "strength": 1.0},
     "loss": {"indicator": {"interval": [0.0, 1.0]}, "strength": 2.0},
     "threshold": true}

An indicator is ``"uniform"``, ``{"interval": [a, b]}`` or
``{"samples": [...]}`` (one non-negative value per grid point).
"""

import hashlib
import json
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .basis import ModeBasis, make_box_basis
from .coupling import ReservoirProfile, interval_profile, uniform_profile
from .errors import ConfigError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BoxBasisConfig(_Strict):
    kind: Literal["box"]
    n_modes: int = Field(ge=1, le=64)
    box_length: float = Field(gt=0, allow_inf_nan=False)
    grid_points: int = Field(ge=64)
    frequency_offset: float = Field(default=0.0, ge=0, allow_inf_nan=False)


class IntervalIndicator(_Strict):
    interval: tuple[float, float]


class SamplesIndicator(_Strict):
    samples: list[float]


Indicator = Union[Literal["uniform"], IntervalIndicator, SamplesIndicator]


class ReservoirConfig(_Strict):
    indicator: Any
    strength: float = Field(ge=0, allow_inf_nan=False)

    @field_validator("indicator", mode="before")
    @classmethod
    def _indicator(cls, value):
        if value == "uniform":
            return "uniform"
        if isinstance(value, dict) and set(value) == {"interval"}:
            iv = IntervalIndicator.model_validate(value)
            a, b = iv.interval
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValueError(f"interval must be finite with a < b, got [{a}, {b}]")
            return iv
        if isinstance(value, dict) and set(value) == {"samples"}:
            sm = SamplesIndicator.model_validate(value)
            arr = np.asarray(sm.samples, dtype=float)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError("samples must be finite and non-negative")
            return sm
        raise ValueError("indicator must be 'uniform', {'interval': [a, b]} or {'samples': [...]}")


class ScenarioConfig(_Strict):
    basis: BoxBasisConfig
    gain: ReservoirConfig
    loss: Optional[ReservoirConfig] = None
    threshold: bool = False
    target_frequency: Optional[float] = Field(default=None, allow_inf_nan=False)
    seed: Optional[int] = None

    def canonical(self) -> dict:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _check_cross_fields(cfg: ScenarioConfig) -> None:
    length = cfg.basis.box_length
    for name in ("gain", "loss"):
        res = getattr(cfg, name)
        if res is None:
            continue
        ind = res.indicator
        if isinstance(ind, IntervalIndicator):
            a, b = ind.interval
            if a < 0 or b > length:
                raise ConfigError(f"{name}.indicator", f"interval [{a}, {b}] outside [0, {length}]")
        elif isinstance(ind, SamplesIndicator):
            if len(ind.samples) != cfg.basis.grid_points:
                raise ConfigError(
                    f"{name}.indicator",
                    f"{len(ind.samples)} samples, expected grid_points={cfg.basis.grid_points}",
                )
            if not any(ind.samples):
                raise ConfigError(f"{name}.indicator", "samples are all zero")
    if cfg.threshold and cfg.loss is None:
        raise ConfigError("threshold", "threshold tuning needs a loss reservoir")


def validate_config(data: Any) -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = ".".join(str(p) for p in err["loc"])
        kind = err["type"]
        if kind == "extra_forbidden":
            msg = f"unknown field '{err['loc'][-1]}'"
        elif kind == "missing":
            msg = "missing required field"
        else:
            msg = err["msg"]
        raise ConfigError(path, msg) from None
    _check_cross_fields(cfg)
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a JSON object")
    return validate_config(data)


def build_basis(cfg: ScenarioConfig) -> ModeBasis:
    b = cfg.basis
    return make_box_basis(b.n_modes, b.box_length, b.grid_points, b.frequency_offset)


def build_profile(res: ReservoirConfig, basis: ModeBasis, kind: str) -> ReservoirProfile:
    ind = res.indicator
    if ind == "uniform":
        return uniform_profile(basis.grid, res.strength, kind)
    if isinstance(ind, IntervalIndicator):
        return interval_profile(basis.grid, *ind.interval, res.strength, kind)
    return ReservoirProfile(np.asarray(ind.samples, dtype=float), res.strength, kind)


def set_path(cfg: ScenarioConfig, path: str, value: float) -> ScenarioConfig:
    """Return a copy of ``cfg`` with the numeric field at dotted ``path`` replaced."""
    data = cfg.canonical()
    parts = path.split(".")
    node = data
    try:
        for key in parts[:-1]:
            node = node[int(key)] if isinstance(node, list) else node[key]
        last = int(parts[-1]) if isinstance(node, list) else parts[-1]
        current = node[last]
    except (KeyError, IndexError, ValueError, TypeError):
        raise ConfigError(path, "no such field") from None
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(path, "sweep parameter must name a numeric field")
    node[last] = value
    return validate_config(data)
