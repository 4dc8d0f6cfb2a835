"""Job configuration files (YAML) for the command-line front end.

Numbers may be written as expressions without parameters, e.g.
``theta: pi/6`` or ``domain: [0, 5*pi]``; they are evaluated with the
library's own expression parser so ``pi/6`` is exactly ``math.pi / 6``.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import expr as ex
from . import presets
from .errors import HelixlabError

KINDS = ("curve", "plane-curve-surface", "extrusion", "ruled", "builtin:example-5.1")
TOLERANCE_KEYS = ("const", "sing", "angle", "K", "H", "det", "minimal", "geodesic",
                  "curvature_line", "premise", "developable")
Number = Union[float, int, str]


class ConfigError(Exception):
    """Invalid job configuration; ``errors`` lists (field path, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


def number(value) -> float:
    if isinstance(value, bool):
        raise ValueError("expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(ex.evaluate(ex.parse(str(value), [])))
    except HelixlabError as err:
        raise ValueError(f"cannot read {value!r} as a number: {err}") from None


def _interval(value):
    lo, hi = (number(x) for x in value)
    if not hi > lo:
        raise ValueError(f"upper bound {hi!r} must exceed lower bound {lo!r}")
    return (lo, hi)


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CurveConfig(_Model):
    components: list[str] = Field(min_length=2)
    param: str = "t"
    domain: tuple[Number, Number] = (0.0, 1.0)

    _domain = field_validator("domain")(classmethod(lambda cls, v: _interval(v)))


class SlantConfig(_Model):
    index: int = Field(ge=1)
    axis: list[Number]

    _axis = field_validator("axis")(classmethod(lambda cls, v: [number(x) for x in v]))


class GeodesicConfig(_Model):
    start: tuple[Number, Number]
    direction: list[Number]
    length: float = Field(gt=0)
    step: Optional[float] = Field(default=None, gt=0)

    _start = field_validator("start")(classmethod(lambda cls, v: tuple(number(x) for x in v)))
    _dir = field_validator("direction")(classmethod(lambda cls, v: [number(x) for x in v]))


class CurvatureLineConfig(_Model):
    start: tuple[Number, Number]
    branch: Literal["min", "max"] = "max"
    length: float = Field(gt=0)
    step: Optional[float] = Field(default=None, gt=0)

    _start = field_validator("start")(classmethod(lambda cls, v: tuple(number(x) for x in v)))


class RuledConfig(_Model):
    hypersurface: Literal["sphere", "ellipsoid"] = "sphere"
    axes: Optional[list[float]] = None
    literal_tangent: bool = False


class OutputConfig(_Model):
    dir: str = "helixlab-out"


class JobConfig(_Model):
    kind: Literal[KINDS]
    curve: Optional[CurveConfig] = None
    theta: Optional[Number] = None
    second_domain: Optional[tuple[Number, Number]] = None
    direction: Optional[list[Number]] = None
    grid: tuple[int, int] = (60, 20)
    tolerances: dict[str, float] = Field(default_factory=dict)
    output: OutputConfig = Field(default_factory=OutputConfig)
    slant: Optional[SlantConfig] = None
    geodesic: Optional[GeodesicConfig] = None
    curvature_line: Optional[CurvatureLineConfig] = None
    ruled: RuledConfig = Field(default_factory=RuledConfig)
    extrusion_thetas: Optional[list[Number]] = None

    @field_validator("theta")
    @classmethod
    def _theta(cls, v):
        if v is None:
            return v
        t = number(v)
        if not 0.0 <= t <= math.pi / 2 + 1e-12:
            raise ValueError("theta must lie in [0, pi/2]")
        return t

    @field_validator("extrusion_thetas")
    @classmethod
    def _thetas(cls, v):
        return None if v is None else [cls._theta(x) for x in v]

    @field_validator("tolerances")
    @classmethod
    def _tolerances(cls, v):
        for k, x in v.items():
            if k not in TOLERANCE_KEYS:
                raise ValueError(f"unknown tolerance {k!r}; expected one of {', '.join(TOLERANCE_KEYS)}")
            if not x > 0:
                raise ValueError(f"tolerance {k!r} must be positive")
        return v

    @field_validator("second_domain")
    @classmethod
    def _second(cls, v):
        return None if v is None else _interval(v)

    @field_validator("direction")
    @classmethod
    def _direction(cls, v):
        return None if v is None else [number(x) for x in v]

    @field_validator("grid")
    @classmethod
    def _grid(cls, v):
        if v[0] < 2 or v[1] < 2:
            raise ValueError("grid needs at least 2 samples in each direction")
        return v

    @model_validator(mode="after")
    def _needs(self):
        if self.kind != "builtin:example-5.1" and self.curve is None:
            raise ValueError(f"kind {self.kind!r} needs a 'curve' section")
        if self.kind in ("plane-curve-surface", "extrusion", "ruled") and self.theta is None:
            raise ValueError(f"kind {self.kind!r} needs 'theta'")
        return self


def builtin_example() -> dict:
    return {
        "kind": "builtin:example-5.1",
        "curve": {
            "components": list(presets.EXAMPLE_CURVE),
            "param": "u",
            "domain": list(presets.EXAMPLE_U_DOMAIN),
        },
        "theta": presets.EXAMPLE_THETA,
        "second_domain": list(presets.EXAMPLE_V_DOMAIN),
        "grid": [60, 20],
        "geodesic": {"start": ["pi/4", 0.2], "direction": [1.0, 0.5], "length": 1.0, "step": 1e-3},
        "curvature_line": {"start": ["pi/4", 0.0], "branch": "max", "length": 1.0, "step": 1e-3},
    }


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _loc(loc) -> str:
    parts = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(("." if parts else "") + str(item))
    return "".join(parts) or "<root>"


def load_config(source) -> JobConfig:
    """Read a YAML job file, or the preset name ``builtin:example-5.1``."""
    if str(source) == "builtin:example-5.1":
        raw = builtin_example()
    else:
        path = Path(source)
        try:
            raw = yaml.safe_load(path.read_text())
        except OSError as err:
            raise ConfigError([("<file>", str(err))]) from None
        except yaml.YAMLError as err:
            raise ConfigError([("<file>", f"not valid YAML: {err}")]) from None
        if not isinstance(raw, dict):
            raise ConfigError([("<root>", "expected a mapping")])
        if raw.get("kind") == "builtin:example-5.1":
            raw = _merge(builtin_example(), raw)
    try:
        cfg = JobConfig.model_validate(raw)
    except ValidationError as err:
        raise ConfigError(
            (_loc(e["loc"]), e["msg"].removeprefix("Value error, ")) for e in err.errors()
        ) from None
    _check_expressions(cfg)
    return cfg


def _check_expressions(cfg: JobConfig):
    if cfg.curve is None:
        return
    errors = []
    for i, text in enumerate(cfg.curve.components):
        try:
            ex.parse(text, [cfg.curve.param])
        except HelixlabError as err:
            errors.append((f"curve.components[{i}]", str(err)))
    if errors:
        raise ConfigError(errors)
