"""
Flat `key = value` run configuration

One key per line, `#` starts a comment. Keys:

    mode                 simulate | sweep | sample
    n_agents             population size (>= 2)
    log_mean             mean of ln(opinion)
    log_variance         variance of ln(opinion)
    seed                 population seed (unsigned 64-bit)
    match_moments        true | false (default false)
    stratified           true | false, quantile-placed population (default false)
    alpha, beta          coupling strengths (required for simulate)
    noise_d              noise intensity D
    dt                   time step
    steps_total          number of update steps
    truth | log_truth    true value, raw or as its logarithm (exactly one)
    record_every         rows of the time series (default 10)
    output               output path (default stdout)

Sweep only:

    alpha_values, beta_values   comma list or start:stop:count (default 0:2:51)
    replicates                  default 10
    master_seed                 default: seed
    resample_population         true | false
    shared_noise                true | false
"""
from dataclasses import dataclass, replace
from enum import Enum
import math
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from wisdomsim.errors import ConfigError, ParameterError
from wisdomsim.opinion_model import (
    DEFAULT_RECORD_EVERY,
    REFERENCE_AGENTS,
    REFERENCE_DT,
    REFERENCE_LOG_MEANS,
    REFERENCE_LOG_VARIANCE,
    REFERENCE_NOISE_D,
    REFERENCE_STEPS,
    ModelParams,
    PopulationSpec,
)
from wisdomsim.sweep_engine import DEFAULT_REPLICATES, SweepGrid, default_axis


class Mode(str, Enum):
    SIMULATE = "simulate"
    SWEEP = "sweep"
    SAMPLE = "sample"


@dataclass(frozen=True)
class GridSettings:
    """Sweep-only part of a run configuration"""

    alpha_values: Tuple[float, ...]
    beta_values: Tuple[float, ...]
    replicates: int = DEFAULT_REPLICATES
    master_seed: int = 0
    resample_population: bool = False
    shared_noise: bool = False


@dataclass(frozen=True)
class RunConfig:
    mode: Mode
    population: PopulationSpec
    params: ModelParams
    truth: float
    grid: Optional[GridSettings] = None
    output_path: Optional[Path] = None
    record_every: int = DEFAULT_RECORD_EVERY

    def __post_init__(self):
        if self.mode is Mode.SWEEP and self.grid is None:
            raise ParameterError("sweep mode requires grid settings", field="alpha_values")
        if self.mode is not Mode.SWEEP and self.grid is not None:
            raise ParameterError(f"{self.mode.value} mode does not take grid settings", field="alpha_values")
        if not (math.isfinite(self.truth) and self.truth > 0.0):
            raise ParameterError(f"truth must be positive, got {self.truth!r}", field="truth")
        if self.record_every < 1:
            raise ParameterError(f"record_every must be >= 1, got {self.record_every!r}", field="record_every")

    def sweep_grid(self) -> SweepGrid:
        if self.grid is None:
            raise ParameterError("configuration has no grid settings")
        return SweepGrid(
            alpha_values=self.grid.alpha_values,
            beta_values=self.grid.beta_values,
            replicates=self.grid.replicates,
            master_seed=self.grid.master_seed,
            base_params=self.params,
            population=self.population,
            truth=self.truth,
            resample_population=self.grid.resample_population,
            shared_noise=self.grid.shared_noise,
        )

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, population=replace(self.population, seed=seed))


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _parse_int(text: str) -> int:
    return int(text.replace("_", ""), 10)


def _parse_axis(text: str) -> Tuple[float, ...]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), _parse_int(parts[2].strip())
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        return tuple(float(v) for v in np.round(np.linspace(start, stop, count), 12))
    return tuple(float(part) for part in text.split(",") if part.strip())


_CONVERTERS: Dict[str, Callable[[str], object]] = {
    "mode": Mode,
    "n_agents": _parse_int,
    "log_mean": float,
    "log_variance": float,
    "seed": _parse_int,
    "match_moments": _parse_bool,
    "stratified": _parse_bool,
    "alpha": float,
    "beta": float,
    "noise_d": float,
    "dt": float,
    "steps_total": _parse_int,
    "truth": float,
    "log_truth": float,
    "record_every": _parse_int,
    "output": Path,
    "alpha_values": _parse_axis,
    "beta_values": _parse_axis,
    "replicates": _parse_int,
    "master_seed": _parse_int,
    "resample_population": _parse_bool,
    "shared_noise": _parse_bool,
}

GRID_KEYS = ("alpha_values", "beta_values", "replicates", "master_seed",
             "resample_population", "shared_noise")
REQUIRED_KEYS = ("mode", "n_agents", "log_mean", "log_variance", "seed",
                 "noise_d", "dt", "steps_total")


def _read_lines(text: str) -> Tuple[Dict[str, object], Dict[str, int]]:
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"expected 'key = value', got {content!r}", line=number)
        key, value = (part.strip() for part in content.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError("unknown key", key=key, line=number)
        if key in values:
            raise ConfigError(f"duplicate key, first set on line {lines[key]}", key=key, line=number)
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"invalid value {value!r}: {exc}", key=key, line=number) from None
        lines[key] = number
    return values, lines


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a configuration document

    Raises:
        ConfigError: unknown, duplicate, missing or invalid keys; the message
            names the key and its line
    """
    values, lines = _read_lines(text)

    missing = [key for key in REQUIRED_KEYS if key not in values]
    if "truth" not in values and "log_truth" not in values:
        missing.append("truth (or log_truth)")
    mode = values.get("mode")
    if mode is Mode.SIMULATE:
        missing.extend(key for key in ("alpha", "beta") if key not in values)
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    if "truth" in values and "log_truth" in values:
        raise ConfigError("give either truth or log_truth, not both", key="log_truth", line=lines["log_truth"])
    if mode is not Mode.SWEEP:
        for key in GRID_KEYS:
            if key in values:
                raise ConfigError(f"only valid in sweep mode, not {mode.value}", key=key, line=lines[key])

    def located(exc: ParameterError) -> ConfigError:
        key = exc.field if exc.field in lines else None
        return ConfigError(str(exc), key=key, line=lines.get(key))

    if "truth" in values:
        truth = values["truth"]
    else:
        try:
            truth = math.exp(values["log_truth"])
        except OverflowError:
            truth = math.inf
        if not (math.isfinite(truth) and truth > 0.0):
            raise ConfigError(f"exp(log_truth) = {truth!r} is not a positive finite number",
                              key="log_truth", line=lines["log_truth"])
    try:
        population = PopulationSpec(
            n_agents=values["n_agents"],
            log_mean=values["log_mean"],
            log_variance=values["log_variance"],
            seed=values["seed"],
            match_moments=values.get("match_moments", False),
            stratified=values.get("stratified", False),
        )
        params = ModelParams(
            alpha=values.get("alpha", 0.0),
            beta=values.get("beta", 0.0),
            noise_d=values["noise_d"],
            dt=values["dt"],
            steps_total=values["steps_total"],
        )
        grid = None
        if mode is Mode.SWEEP:
            grid = GridSettings(
                alpha_values=values.get("alpha_values", default_axis()),
                beta_values=values.get("beta_values", default_axis()),
                replicates=values.get("replicates", DEFAULT_REPLICATES),
                master_seed=values.get("master_seed", values["seed"]),
                resample_population=values.get("resample_population", False),
                shared_noise=values.get("shared_noise", False),
            )
        config = RunConfig(
            mode=mode,
            population=population,
            params=params,
            truth=truth,
            grid=grid,
            output_path=values.get("output"),
            record_every=values.get("record_every", DEFAULT_RECORD_EVERY),
        )
        if grid is not None:
            config.sweep_grid()
    except ParameterError as exc:
        raise located(exc) from None
    return config


def _format_float(value: float) -> str:
    return repr(float(value))


def render_config(config: RunConfig) -> str:
    """Configuration document that parse_config turns back into `config`"""
    population, params = config.population, config.params
    if params.heterogeneous:
        raise ParameterError("per-agent coefficients cannot be written to a configuration file")
    entries = [
        ("mode", config.mode.value),
        ("n_agents", str(population.n_agents)),
        ("log_mean", _format_float(population.log_mean)),
        ("log_variance", _format_float(population.log_variance)),
        ("seed", str(population.seed)),
        ("match_moments", str(population.match_moments).lower()),
        ("stratified", str(population.stratified).lower()),
        ("alpha", _format_float(params.alpha)),
        ("beta", _format_float(params.beta)),
        ("noise_d", _format_float(params.noise_d)),
        ("dt", _format_float(params.dt)),
        ("steps_total", str(params.steps_total)),
        ("truth", _format_float(config.truth)),
        ("record_every", str(config.record_every)),
    ]
    if config.output_path is not None:
        entries.append(("output", str(config.output_path)))
    if config.grid is not None:
        grid = config.grid
        entries.extend([
            ("alpha_values", ", ".join(_format_float(v) for v in grid.alpha_values)),
            ("beta_values", ", ".join(_format_float(v) for v in grid.beta_values)),
            ("replicates", str(grid.replicates)),
            ("master_seed", str(grid.master_seed)),
            ("resample_population", str(grid.resample_population).lower()),
            ("shared_noise", str(grid.shared_noise).lower()),
        ])
    return "".join(f"{key} = {value}\n" for key, value in entries)


def reference_defaults(mode: Mode = Mode.SIMULATE, log_truth: float = -2.9, seed: int = 1) -> RunConfig:
    """No-information run of the reference experiments (alpha=0, beta=1, D=1e-3, N=100)"""
    grid = None
    if mode is Mode.SWEEP:
        grid = GridSettings(alpha_values=default_axis(), beta_values=default_axis(), master_seed=seed)
    return RunConfig(
        mode=mode,
        population=PopulationSpec(
            n_agents=REFERENCE_AGENTS,
            log_mean=REFERENCE_LOG_MEANS[0],
            log_variance=REFERENCE_LOG_VARIANCE,
            seed=seed,
        ),
        params=ModelParams(alpha=0.0, beta=1.0, noise_d=REFERENCE_NOISE_D, dt=REFERENCE_DT,
                           steps_total=REFERENCE_STEPS),
        truth=math.exp(log_truth),
        grid=grid,
    )
