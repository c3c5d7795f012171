"""
Mean-field social-influence opinion model

Each of N agents holds a positive opinion x_i(t). Opinions are pulled toward
the arithmetic mean of the population with strength alpha (social influence)
and back toward the agent's own initial opinion with strength beta
(individual conviction), and receive Gaussian noise of intensity D:

    x_i(t + dt) = x_i(t) + dt * alpha * (<x(t)> - x_i(t))
                         + dt * beta * (x_i(0) - x_i(t))
                         + D * sqrt(dt) * GRND_i

All agents are updated simultaneously from the pre-step mean. Coupling acts on
raw opinions; the crowd metrics act on their logarithms.
"""
from dataclasses import dataclass, field, replace
import logging
import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import special

from wisdomsim import metrics
from wisdomsim.errors import ParameterError, PositivityViolation
from wisdomsim.random_streams import (
    NOISE_STREAM,
    POPULATION_STREAM,
    NoiseSource,
    SingleRunStreams,
    ZeroNoise,
    seed_sequence,
)

logger = logging.getLogger(__name__)

# Reference setting of the aggregate-information experiments
REFERENCE_DT = 0.01
REFERENCE_NOISE_D = 1e-3
REFERENCE_STEPS = 3000
REFERENCE_AGENTS = 100
REFERENCE_LOG_VARIANCE = 0.72
REFERENCE_LOG_MEANS = (-3.0, -2.9)

DEFAULT_RECORD_EVERY = 10
MAX_SEED = 2 ** 64 - 1

TIMESERIES_COLUMNS = (
    "time",
    "collective_error",
    "group_diversity",
    "wisdom_indicator",
    "arithmetic_mean",
    "geometric_mean",
)

Coefficient = Union[float, np.ndarray]


def check_seed(seed: int, name: str) -> None:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {seed!r}", field=name)


@dataclass(frozen=True)
class ModelParams:
    """
    Drift and noise parameters of the opinion update

    agent_alpha / agent_beta optionally give one coefficient per agent; when
    set they replace the homogeneous alpha / beta inside the update.
    """

    alpha: float
    beta: float
    noise_d: float
    dt: float
    steps_total: int
    agent_alpha: Optional[Tuple[float, ...]] = None
    agent_beta: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        for name in ("alpha", "beta", "noise_d", "dt"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
                raise ParameterError(f"{name} must be a number, got {value!r}", field=name)
            object.__setattr__(self, name, float(value))
        for name in ("alpha", "beta", "noise_d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ParameterError(f"{name} must be a finite non-negative number, got {value!r}", field=name)
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ParameterError(f"dt must be a finite positive number, got {self.dt!r}", field="dt")
        if isinstance(self.steps_total, bool) or not isinstance(self.steps_total, (int, np.integer)) \
                or self.steps_total < 1:
            raise ParameterError(f"steps_total must be a positive integer, got {self.steps_total!r}",
                                 field="steps_total")
        for name in ("agent_alpha", "agent_beta"):
            values = getattr(self, name)
            if values is None:
                continue
            values = tuple(float(v) for v in values)
            object.__setattr__(self, name, values)
            if not all(math.isfinite(v) and v >= 0.0 for v in values):
                raise ParameterError(f"{name} entries must be finite and non-negative", field=name)
        if self.agent_alpha is not None and self.agent_beta is not None \
                and len(self.agent_alpha) != len(self.agent_beta):
            raise ParameterError("agent_alpha and agent_beta must have the same length", field="agent_beta")
        number = self.stability_number
        if number > 1.0:
            raise ParameterError(
                f"stability violated: dt*(alpha+beta)={number:g} > 1",
                field="dt",
            )

    @property
    def heterogeneous(self) -> bool:
        return self.agent_alpha is not None or self.agent_beta is not None

    @property
    def stability_number(self) -> float:
        """dt * max_i (alpha_i + beta_i); the update is a convex combination when <= 1"""
        alpha = np.asarray(self.agent_alpha if self.agent_alpha is not None else self.alpha)
        beta = np.asarray(self.agent_beta if self.agent_beta is not None else self.beta)
        return float(self.dt * np.max(alpha + beta))

    @property
    def noise_scale(self) -> float:
        return self.noise_d * math.sqrt(self.dt)

    def coefficients(self, n_agents: int) -> Tuple[Coefficient, Coefficient]:
        """(alpha, beta) as used by the update for a population of n_agents"""
        result = []
        for name, per_agent, shared in (("agent_alpha", self.agent_alpha, self.alpha),
                                        ("agent_beta", self.agent_beta, self.beta)):
            if per_agent is None:
                result.append(shared)
                continue
            if len(per_agent) != n_agents:
                raise ParameterError(
                    f"{name} has {len(per_agent)} entries for a population of {n_agents}", field=name
                )
            result.append(np.asarray(per_agent))
        return result[0], result[1]


@dataclass(frozen=True)
class PopulationSpec:
    """
    Log-normal starting population

    log_mean and log_variance are the mean and variance of ln(opinion). With
    match_moments the Gaussian sample is standardised so that its sample mean
    and population variance hit those values exactly. With stratified the
    log-opinions sit at the normal quantiles (i + 0.5) / N instead of being
    drawn, so the population is the same for every seed.
    """

    n_agents: int
    log_mean: float
    log_variance: float
    seed: int
    match_moments: bool = False
    stratified: bool = False

    def __post_init__(self):
        if isinstance(self.n_agents, bool) or not isinstance(self.n_agents, (int, np.integer)) \
                or self.n_agents < 2:
            raise ParameterError(f"n_agents must be an integer >= 2, got {self.n_agents!r}", field="n_agents")
        for name in ("log_mean", "log_variance"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not math.isfinite(self.log_mean):
            raise ParameterError(f"log_mean must be finite, got {self.log_mean!r}", field="log_mean")
        if not (math.isfinite(self.log_variance) and self.log_variance > 0.0):
            raise ParameterError(f"log_variance must be positive, got {self.log_variance!r}",
                                 field="log_variance")
        check_seed(self.seed, "seed")


@dataclass(frozen=True, eq=False)
class PopulationState:
    """
    Opinions of the population at one instant

    opinions has shape (N,) for one run or (R, N) for R replicates advanced
    together; initial_opinions has the same shape or (N,) when the replicates
    share a starting population. Both arrays are read-only.
    """

    opinions: np.ndarray
    initial_opinions: np.ndarray
    steps_elapsed: int = 0
    time: float = 0.0

    def __post_init__(self):
        opinions = np.array(self.opinions, dtype=float)
        initial = np.array(self.initial_opinions, dtype=float)
        if opinions.ndim not in (1, 2) or opinions.shape[-1] < 2:
            raise ParameterError(f"opinions must hold at least 2 agents, got shape {opinions.shape}")
        if initial.shape not in (opinions.shape, opinions.shape[-1:]):
            raise ParameterError(
                f"initial_opinions shape {initial.shape} does not match opinions shape {opinions.shape}"
            )
        for name, values in (("opinions", opinions), ("initial_opinions", initial)):
            if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
                raise ParameterError(f"{name} must be finite and strictly positive")
        opinions.setflags(write=False)
        initial.setflags(write=False)
        object.__setattr__(self, "opinions", opinions)
        object.__setattr__(self, "initial_opinions", initial)

    @property
    def n_agents(self) -> int:
        return self.opinions.shape[-1]

    @property
    def mean(self) -> Union[float, np.ndarray]:
        """Arithmetic mean <x(t)> (per replicate for batched states)"""
        return self.opinions.mean(axis=-1)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Metric time series of one run, sampled every record_every steps"""

    steps: np.ndarray
    time: np.ndarray
    collective_error: np.ndarray
    group_diversity: np.ndarray
    wisdom_indicator: np.ndarray
    arithmetic_mean: np.ndarray
    geometric_mean: np.ndarray
    final_state: PopulationState = field(repr=False)

    def __len__(self) -> int:
        return int(self.steps.size)

    def metric_matrix(self) -> np.ndarray:
        """(rows, 5) matrix of the recorded metrics, time column excluded"""
        return np.column_stack([
            self.collective_error,
            self.group_diversity,
            self.wisdom_indicator.astype(float),
            self.arithmetic_mean,
            self.geometric_mean,
        ])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "time": self.time,
            "collective_error": self.collective_error,
            "group_diversity": self.group_diversity,
            "wisdom_indicator": self.wisdom_indicator.astype(np.int64),
            "arithmetic_mean": self.arithmetic_mean,
            "geometric_mean": self.geometric_mean,
        }, columns=list(TIMESERIES_COLUMNS))


def sample_initial_population(spec: PopulationSpec, stream: Tuple[int, ...] = ()) -> PopulationState:
    """
    Draw a log-normal population

    Args:
        spec: population parameters and seed
        stream: optional spawn key below the seed, used to draw further
            independent populations from the same spec

    Returns:
        PopulationState at time 0 with opinions == initial_opinions
    """
    sd = math.sqrt(spec.log_variance)
    if spec.stratified:
        logs = spec.log_mean + sd * special.ndtri((np.arange(spec.n_agents) + 0.5) / spec.n_agents)
    else:
        rng = np.random.default_rng(seed_sequence(spec.seed, (POPULATION_STREAM,) + tuple(stream)))
        logs = rng.normal(spec.log_mean, sd, spec.n_agents)
    if spec.match_moments:
        logs = spec.log_mean + (logs - logs.mean()) / logs.std() * sd
    opinions = np.exp(logs)
    return PopulationState(opinions=opinions, initial_opinions=opinions)


def _drift(opinion, initial_opinion, population_mean, alpha, beta):
    return alpha * (population_mean - opinion) + beta * (initial_opinion - opinion)


def drift(opinion, initial_opinion, population_mean, params: ModelParams):
    """alpha * (<x> - x) + beta * (x(0) - x); scalars or arrays"""
    if params.heterogeneous:
        if np.ndim(opinion) == 0:
            raise ParameterError("per-agent coefficients need a vector of opinions, got a scalar",
                                 field="agent_alpha" if params.agent_alpha is not None else "agent_beta")
        alpha, beta = params.coefficients(np.shape(opinion)[-1])
    else:
        alpha, beta = params.alpha, params.beta
    return _drift(opinion, initial_opinion, population_mean, alpha, beta)


def _advance(x: np.ndarray, x0: np.ndarray, alpha: Coefficient, beta: Coefficient,
             dt: float, noise_scale: float, grnd: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    return x + dt * alpha * (mean - x) + dt * beta * (x0 - x) + noise_scale * grnd


def _check_positive(x: np.ndarray, step_index: int) -> None:
    if np.all(x > 0.0):
        return
    where = tuple(int(i) for i in np.argwhere(~(x > 0.0))[0])
    replicate = where[0] if x.ndim == 2 else None
    raise PositivityViolation(step_index, where[-1], float(x[where]), replicate_index=replicate)


def integrate(opinions: np.ndarray, initial_opinions: np.ndarray, params: ModelParams,
              noise: NoiseSource, steps: Optional[int] = None, start_step: int = 0,
              record_every: Optional[int] = None,
              recorder: Optional[Callable[[int, np.ndarray], None]] = None) -> np.ndarray:
    """
    Advance raw opinion arrays by `steps` updates (default params.steps_total)

    recorder(step_number, opinions) is called after every record_every-th step
    and after the last one. Raises PositivityViolation at the first step that
    produces a non-positive opinion; step numbers count from start_step + 1.
    """
    x = np.array(opinions, dtype=float)
    x0 = np.asarray(initial_opinions, dtype=float)
    alpha, beta = params.coefficients(x.shape[-1])
    steps = params.steps_total if steps is None else steps
    last = start_step + steps
    for k in range(start_step + 1, last + 1):
        x = _advance(x, x0, alpha, beta, params.dt, params.noise_scale, noise.draw())
        _check_positive(x, k)
        if recorder is not None and (k == last or (record_every and k % record_every == 0)):
            recorder(k, x)
    return x


def step(state: PopulationState, params: ModelParams, noise_source: NoiseSource) -> PopulationState:
    """
    One simultaneous update of every agent from the pre-step mean

    Raises:
        PositivityViolation: an updated opinion is <= 0; step_index is the
            number of steps elapsed after this update
    """
    k = state.steps_elapsed + 1
    x = integrate(state.opinions, state.initial_opinions, params, noise_source, steps=1,
                  start_step=state.steps_elapsed)
    return replace(state, opinions=x, steps_elapsed=k, time=k * params.dt)


def run_trajectory(initial: PopulationState, params: ModelParams, truth: float,
                   record_every: int, noise: NoiseSource) -> TrajectoryRecord:
    """Run params.steps_total steps from `initial`, recording metrics along the way"""
    if record_every < 1:
        raise ParameterError(f"record_every must be >= 1, got {record_every!r}", field="record_every")
    if initial.opinions.ndim != 1:
        raise ParameterError("trajectories are recorded for single runs only")
    rows = []

    def record(step_number: int, x: np.ndarray) -> None:
        rows.append((step_number, metrics.evaluate(x, truth)))

    record(initial.steps_elapsed, initial.opinions)
    final = integrate(initial.opinions, initial.initial_opinions, params, noise,
                      start_step=initial.steps_elapsed, record_every=record_every, recorder=record)
    steps = np.array([s for s, _ in rows], dtype=np.int64)
    last_step = initial.steps_elapsed + params.steps_total
    logger.debug("recorded %d rows over %d steps", len(rows), params.steps_total)
    return TrajectoryRecord(
        steps=steps,
        time=steps * params.dt,
        collective_error=np.array([m.collective_error for _, m in rows]),
        group_diversity=np.array([m.group_diversity for _, m in rows]),
        wisdom_indicator=np.array([m.wisdom_indicator for _, m in rows], dtype=np.int64),
        arithmetic_mean=np.array([m.arithmetic_mean_raw for _, m in rows]),
        geometric_mean=np.array([m.geometric_mean_raw for _, m in rows]),
        final_state=PopulationState(final, initial.initial_opinions, last_step, last_step * params.dt),
    )


def noise_for(params: ModelParams, seed: int, stream_key: Tuple[int, ...], n_agents: int) -> NoiseSource:
    """Per-agent Gaussian substreams, or zeros when params.noise_d == 0"""
    if params.noise_d == 0.0:
        return ZeroNoise(n_agents)
    return SingleRunStreams(seed, stream_key, n_agents)


def simulate(spec: PopulationSpec, params: ModelParams, truth: float,
             record_every: int = DEFAULT_RECORD_EVERY) -> TrajectoryRecord:
    """
    Sample a population from `spec` and run it for params.steps_total steps

    Deterministic in (spec.seed, params): the noise substreams hang off the
    same seed as the population.
    """
    initial = sample_initial_population(spec)
    noise = noise_for(params, spec.seed, (NOISE_STREAM,), spec.n_agents)
    logger.info("simulating N=%d alpha=%g beta=%g D=%g for %d steps",
                spec.n_agents, params.alpha, params.beta, params.noise_d, params.steps_total)
    return run_trajectory(initial, params, truth, record_every, noise)
