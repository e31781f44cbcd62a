"""Run configuration: a JSON document with a fixed schema.

Schema (every key except ``preset`` is optional)::

    {
      "preset": str,                      # one of experiments.PRESET_NAMES
      "overrides": {str: any},            # preset parameters, see `presets`
      "grid": {"n_x1": int, "n_x2": int, "n_t": int},
      "steps": {"tau_rho": float, "tau_m": float, "tau_a": float,
                "tau_phi_t": float, "tau_grad_phi": float, "tau_phi0": float},
      "max_iters": int,
      "tol": float,
      "out_dir": str,
      "snapshot_times": [float, ...],     # each in [0, 1]
      "formats": [str, ...],              # subset of "csv", "pgm", "png"
      "history_stride": int
    }

Missing step sizes fall back to the preset's recommended values.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields

from nlmfg.exceptions import ConfigurationError
from nlmfg.experiments import DEFAULT_GRID, DEFAULT_SNAPSHOTS, PRESET_NAMES, preset, preset_info, resolve_params
from nlmfg.pdhg.solver import StepSizes
from nlmfg.problem import ProblemSpec

FORMATS = ("csv", "pgm", "png")


@dataclass(frozen=True)
class RunConfig:
    preset: str
    overrides: dict = field(default_factory=dict)
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    steps: StepSizes = StepSizes()
    max_iters: int = 5000
    tol: float = 1e-4
    out_dir: str = "out"
    snapshot_times: tuple[float, ...] = DEFAULT_SNAPSHOTS
    formats: tuple[str, ...] = FORMATS
    history_stride: int = 10

    def build(self) -> ProblemSpec:
        return preset(self.preset, self.overrides, **self.grid)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["steps"] = self.steps.to_dict()
        out["snapshot_times"] = list(self.snapshot_times)
        out["formats"] = list(self.formats)
        return out

    def to_json(self) -> str:
        """Canonical serialization: sorted keys, two-space indent, trailing newline."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


_KEYS = {f.name for f in fields(RunConfig)}
_STEP_KEYS = {f.name for f in fields(StepSizes)}


def _fail(key: str, expected: str, value) -> ConfigurationError:
    return ConfigurationError(f"config key {key!r}: expected {expected}, got {value!r}")


def _int(key, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise _fail(key, f"integer >= {minimum}", value)
    return value


def _positive(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not (math.isfinite(value) and value > 0):
        raise _fail(key, "positive number", value)
    return float(value)


def _object(key, value):
    if not isinstance(value, dict):
        raise _fail(key, "object", value)
    return value


def _list(key, value):
    if not isinstance(value, list):
        raise _fail(key, "array", value)
    return value


def from_dict(doc: dict) -> RunConfig:
    """Validate a decoded document and fill defaults."""
    _object("<root>", doc)
    unknown = sorted(set(doc) - _KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config key(s) {unknown}; allowed: {sorted(_KEYS)}")
    if "preset" not in doc:
        raise ConfigurationError("config key 'preset' is required")
    name = doc["preset"]
    if not isinstance(name, str):
        raise _fail("preset", "string", name)
    if name not in PRESET_NAMES:
        raise ConfigurationError(f"unknown preset {name!r}; expected one of {list(PRESET_NAMES)}")
    info = preset_info(name)

    overrides = dict(_object("overrides", doc.get("overrides", {})))
    resolve_params(name, overrides)

    grid = dict(info.grid)
    for key, value in _object("grid", doc.get("grid", {})).items():
        if key not in grid:
            raise ConfigurationError(f"unknown config key 'grid.{key}'; allowed: {sorted(grid)}")
        grid[key] = _int(f"grid.{key}", value, 2)

    steps = info.steps.to_dict()
    for key, value in _object("steps", doc.get("steps", {})).items():
        if key not in _STEP_KEYS:
            raise ConfigurationError(f"unknown config key 'steps.{key}'; allowed: {sorted(_STEP_KEYS)}")
        steps[key] = _positive(f"steps.{key}", value)

    times = []
    for t in _list("snapshot_times", doc.get("snapshot_times", list(DEFAULT_SNAPSHOTS))):
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0.0 <= t <= 1.0:
            raise _fail("snapshot_times", "numbers in [0, 1]", t)
        times.append(float(t))

    formats = _list("formats", doc.get("formats", list(FORMATS)))
    for f in formats:
        if f not in FORMATS:
            raise _fail("formats", f"entries from {list(FORMATS)}", f)

    out_dir = doc.get("out_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise _fail("out_dir", "non-empty string", out_dir)

    return RunConfig(
        preset=name,
        overrides=overrides,
        grid=grid,
        steps=StepSizes(**steps),
        max_iters=_int("max_iters", doc.get("max_iters", 5000), 1),
        tol=_positive("tol", doc.get("tol", 1e-4)),
        out_dir=out_dir,
        snapshot_times=tuple(times),
        formats=tuple(formats),
        history_stride=_int("history_stride", doc.get("history_stride", 10), 1),
    )


def parse_config(source: str | os.PathLike) -> RunConfig:
    """Parse a config from a file path or from JSON text (anything starting with ``{``)."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    return from_dict(doc)
