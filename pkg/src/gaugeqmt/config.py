"""TOML run configuration.

Example::

    [model]
    name = "landau"        # or "expr"
    m = 0
    g = [0.0, 0.5, 1.0]    # gauge-family values, one row per value

    [grid]
    n = 256
    n_sigma = 8.0          # or: bounds = [x_min, x_max, y_min, y_max]

    [derivative]
    h_rel = 1e-3
    richardson = true

    [sweep]
    param = "B"
    from = 0.5
    to = 4.0
    points = 4
    spacing = "log"        # or "linear"

    [output]
    path = "results.csv"

An ``expr`` model instead gives ``params``, ``amplitude``, ``phase`` and
optionally ``alpha`` (which may use ``g``), ``alpha_derivatives``,
``gamma`` (base connection per parameter), ``values`` (fixed values of
parameters that are not swept) and ``normalization``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, QMTError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SECTIONS = ("model", "grid", "derivative", "sweep", "output")


@dataclass(frozen=True)
class ModelConfig:
    name: str = "landau"
    m: int = 0
    g: tuple[float, ...] = (0.0,)
    params: tuple[str, ...] = ("B",)
    amplitude: str | None = None
    phase: str = "0"
    alpha: str | None = None
    alpha_derivatives: Mapping[str, str] = field(default_factory=dict)
    gamma: Mapping[str, str] = field(default_factory=dict)
    values: Mapping[str, float] = field(default_factory=dict)
    normalization: str = "enforce"


@dataclass(frozen=True)
class GridConfig:
    n: int = 256
    n_sigma: float = 8.0
    bounds: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class DerivativeConfig:
    h_rel: float = 1e-3
    richardson: bool = True


@dataclass(frozen=True)
class SweepConfig:
    param: str = "B"
    start: float = 1.0
    stop: float = 1.0
    points: int = 1
    spacing: str = "linear"
    jobs: int = 1

    def values(self) -> list[float]:
        if self.points == 1:
            return [float(self.start)]
        if self.spacing == "log":
            vals = np.geomspace(self.start, self.stop, self.points)
        else:
            vals = np.linspace(self.start, self.stop, self.points)
        return [float(v) for v in vals]


@dataclass(frozen=True)
class OutputConfig:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    derivative: DerivativeConfig = field(default_factory=DerivativeConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False)


def _get(section: Mapping, key: str, kind, default, where: str):
    if key not in section:
        return default
    value = section[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where}.{key}: must be finite")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}.{key}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {value!r}")
    return value


def _number_list(value, where: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"{where}: expected a number or a list of numbers")
    return tuple(float(v) for v in value)


def _check_keys(section: Mapping, allowed: set[str], where: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"[{where}]: unknown keys {unknown}")


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    """Validate a decoded TOML document and build a :class:`RunConfig`."""
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown sections {unknown}")
    for name in SECTIONS:
        if name in data and not isinstance(data[name], dict):
            raise ConfigError(f"[{name}] must be a table")

    m = data.get("model", {})
    _check_keys(
        m,
        {"name", "m", "g", "params", "amplitude", "phase", "alpha", "alpha_derivatives", "gamma", "values", "normalization"},
        "model",
    )
    name = _get(m, "name", str, "landau", "model")
    if name not in ("landau", "expr"):
        raise ConfigError(f"model.name: unknown model {name!r} (expected 'landau' or 'expr')")
    g = _number_list(m.get("g", [0.0]), "model.g")
    if not g:
        raise ConfigError("model.g: gauge list must not be empty")
    mnum = _get(m, "m", int, 0, "model")
    if mnum < 0:
        raise ConfigError("model.m: must be >= 0")
    params = m.get("params", ["B"])
    if not isinstance(params, list) or not params or not all(isinstance(p, str) for p in params):
        raise ConfigError("model.params: expected a nonempty list of names")
    amplitude = _get(m, "amplitude", str, None, "model")
    if name == "expr" and amplitude is None:
        raise ConfigError("model.amplitude: required for the expr model")
    for key in ("alpha_derivatives", "gamma", "values"):
        if key in m and not isinstance(m[key], dict):
            raise ConfigError(f"model.{key}: expected a table")
    values = {k: _get(m["values"], k, float, None, "model.values") for k in m.get("values", {})}
    model = ModelConfig(
        name=name,
        m=mnum,
        g=g,
        params=tuple(params) if name == "expr" else ("B",),
        amplitude=amplitude,
        phase=_get(m, "phase", str, "0", "model"),
        alpha=_get(m, "alpha", str, None, "model"),
        alpha_derivatives={k: _get(m["alpha_derivatives"], k, str, None, "model.alpha_derivatives") for k in m.get("alpha_derivatives", {})},
        gamma={k: _get(m["gamma"], k, str, None, "model.gamma") for k in m.get("gamma", {})},
        values=values,
        normalization=_get(m, "normalization", str, "enforce", "model"),
    )
    if model.normalization not in ("enforce", "trust"):
        raise ConfigError("model.normalization: expected 'enforce' or 'trust'")

    gsec = data.get("grid", {})
    _check_keys(gsec, {"n", "n_sigma", "bounds"}, "grid")
    n = _get(gsec, "n", int, 256, "grid")
    if n < 4:
        raise ConfigError("grid.n: must be >= 4")
    n_sigma = _get(gsec, "n_sigma", float, 8.0, "grid")
    if n_sigma <= 0:
        raise ConfigError("grid.n_sigma: must be positive")
    bounds = None
    if "bounds" in gsec:
        bounds = _number_list(gsec["bounds"], "grid.bounds")
        if len(bounds) != 4 or not (bounds[1] > bounds[0] and bounds[3] > bounds[2]):
            raise ConfigError("grid.bounds: expected [x_min, x_max, y_min, y_max] with max > min")
    grid = GridConfig(n, n_sigma, bounds)

    dsec = data.get("derivative", {})
    _check_keys(dsec, {"h_rel", "richardson"}, "derivative")
    h_rel = _get(dsec, "h_rel", float, 1e-3, "derivative")
    if not 0 < h_rel < 0.1:
        raise ConfigError("derivative.h_rel: must lie in (0, 0.1)")
    deriv = DerivativeConfig(h_rel, _get(dsec, "richardson", bool, True, "derivative"))

    s = data.get("sweep", {})
    _check_keys(s, {"param", "from", "to", "points", "spacing", "jobs"}, "sweep")
    param = _get(s, "param", str, "B", "sweep")
    if param not in model.params:
        raise ConfigError(f"sweep.param: {param!r} is not a model parameter {list(model.params)}")
    start = _get(s, "from", float, 1.0, "sweep")
    stop = _get(s, "to", float, start, "sweep")
    points = _get(s, "points", int, 1, "sweep")
    if points < 1:
        raise ConfigError("sweep.points: must be >= 1")
    spacing = _get(s, "spacing", str, "linear", "sweep")
    if spacing not in ("linear", "log"):
        raise ConfigError("sweep.spacing: expected 'linear' or 'log'")
    if param == "B" and (start <= 0 or stop <= 0):
        raise ConfigError("sweep.from/to: B must be positive")
    if spacing == "log" and (start <= 0 or stop <= 0):
        raise ConfigError("sweep.from/to: log spacing needs positive bounds")
    jobs = _get(s, "jobs", int, 1, "sweep")
    if jobs < 1:
        raise ConfigError("sweep.jobs: must be >= 1")
    sweep = SweepConfig(param, start, stop, points, spacing, jobs)

    missing = [p for p in model.params if p != param and p not in model.values]
    if missing:
        raise ConfigError(f"model.values: no fixed value for non-swept parameters {missing}")

    o = data.get("output", {})
    _check_keys(o, {"path", "format"}, "output")
    fmt = _get(o, "format", str, "csv", "output")
    if fmt != "csv":
        raise ConfigError("output.format: only 'csv' is supported")
    output = OutputConfig(_get(o, "path", str, None, "output"), fmt)

    return RunConfig(model, grid, deriv, sweep, output, raw=data)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a TOML config file.

    Raises:
        ConfigError: unreadable file, TOML syntax error (with line and column)
            or schema violation (naming the offending field).
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except QMTError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
