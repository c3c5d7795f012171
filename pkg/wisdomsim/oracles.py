"""
Closed-form predictions for the opinion model

These are independent oracles for the integrator and the sweep tables.

No-information regime (alpha = 0)
---------------------------------
Each opinion is an Ornstein-Uhlenbeck process about its own start,

    dx_i = beta * (x_i(0) - x_i) dt + D dW_i,

so E[x_i(t)] = x_i(0) e^{-beta t} + x_i(0) (1 - e^{-beta t}) = x_i(0) and
Var[x_i(t)] = D^2 / (2 beta) * (1 - e^{-2 beta t}).

Aggregate regime, deterministic part (D = 0)
--------------------------------------------
Averaging the update over agents cancels the alpha term exactly, because
sum_i (<x> - x_i) = 0:

    d<x>/dt = beta * (<x(0)> - <x>).

Starting from <x(0)> the mean therefore never moves, and every agent obeys
a scalar linear ODE with constant forcing,

    dx_i/dt = alpha <x(0)> + beta x_i(0) - (alpha + beta) x_i.

Its fixed point is x_i* = (alpha <x(0)> + beta x_i(0)) / (alpha + beta) and
the solution is x_i(t) = x_i* + (x_i(0) - x_i*) e^{-(alpha + beta) t}.

Averaging x_i* over agents gives back <x(0)>, so the oracle preserves the
mean. Writing x_i* = c + beta / (alpha + beta) * x_i(0) with a constant c
shows that the raw-opinion variance at the fixed point is
(beta / (alpha + beta))^2 times the initial variance. The log-variance used
by the crowd metrics has no such closed form.

The Euler map with step dt applies the same argument per step: the mean stays
at <x(0)> and x_i - x_i* shrinks by exactly (1 - dt (alpha + beta)) per step.

Noise on the mean (D > 0)
-------------------------
The mean obeys an OU process with noise D / sqrt(N), so its stationary
standard deviation is D / sqrt(2 beta N).
"""
from dataclasses import dataclass
import math

import numpy as np

from wisdomsim.errors import DegenerateDynamicsError, ParameterError
from wisdomsim.opinion_model import ModelParams, PopulationState, drift


@dataclass(frozen=True, eq=False)
class StationaryPrediction:
    """Fixed point, raw-variance ratio and decay rate of the D = 0 dynamics"""

    stationary_opinions: np.ndarray
    raw_variance_ratio: float
    decay_rate: float


def _require_positive_beta(beta: float) -> None:
    if not beta > 0.0:
        raise ParameterError(f"beta must be positive, got {beta!r}", field="beta")


def _require_coupling(alpha: float, beta: float) -> float:
    rate = alpha + beta
    if rate == 0.0:
        raise DegenerateDynamicsError("alpha + beta == 0: opinions are constant, there is no decay")
    return rate


def _require_deterministic(params: ModelParams) -> None:
    if params.noise_d != 0.0:
        raise ParameterError("closed-form solutions require noise_d == 0", field="noise_d")
    if params.heterogeneous:
        raise ParameterError("closed-form solutions require homogeneous alpha and beta")


def _initial_vector(initial: PopulationState) -> np.ndarray:
    x0 = np.asarray(initial.initial_opinions, dtype=float)
    if x0.ndim != 1:
        raise ParameterError("oracles take a single population, not a batch")
    return x0


def ou_no_info_solution(x0: float, beta: float, t: float) -> float:
    """Expected opinion at time t in the no-information regime"""
    _require_positive_beta(beta)
    if t < 0.0:
        raise ParameterError(f"t must be non-negative, got {t!r}", field="t")
    decay = math.exp(-beta * t)
    return x0 * decay + x0 * (1.0 - decay)


def ou_variance(noise_d: float, beta: float, t: float) -> float:
    """Variance of one no-information opinion at time t"""
    _require_positive_beta(beta)
    return noise_d ** 2 / (2.0 * beta) * (1.0 - math.exp(-2.0 * beta * t))


def ou_stationary_variance(noise_d: float, beta: float) -> float:
    _require_positive_beta(beta)
    return noise_d ** 2 / (2.0 * beta)


def mean_fluctuation_bound(noise_d: float, beta: float, n_agents: int) -> float:
    """Stationary standard deviation of the population mean <x(t)>"""
    _require_positive_beta(beta)
    return noise_d / math.sqrt(2.0 * beta * n_agents)


def stationary_prediction(initial: PopulationState, alpha: float, beta: float) -> StationaryPrediction:
    rate = _require_coupling(alpha, beta)
    x0 = _initial_vector(initial)
    fixed_point = (alpha * x0.mean() + beta * x0) / rate
    return StationaryPrediction(
        stationary_opinions=fixed_point,
        raw_variance_ratio=(beta / rate) ** 2,
        decay_rate=rate,
    )


def deterministic_solution(initial: PopulationState, params: ModelParams, t: float) -> np.ndarray:
    """Exact opinions at time t of the noise-free continuous dynamics"""
    _require_deterministic(params)
    if t < 0.0:
        raise ParameterError(f"t must be non-negative, got {t!r}", field="t")
    prediction = stationary_prediction(initial, params.alpha, params.beta)
    x0 = _initial_vector(initial)
    x_star = prediction.stationary_opinions
    return x_star + (x0 - x_star) * math.exp(-prediction.decay_rate * t)


def discrete_solution(initial: PopulationState, params: ModelParams, steps: int) -> np.ndarray:
    """Exact opinions after `steps` noise-free Euler updates"""
    _require_deterministic(params)
    prediction = stationary_prediction(initial, params.alpha, params.beta)
    x0 = _initial_vector(initial)
    x_star = prediction.stationary_opinions
    return x_star + (x0 - x_star) * (1.0 - params.dt * prediction.decay_rate) ** steps


def is_stationary(state: PopulationState, params: ModelParams, tol: float = 1e-6) -> bool:
    """True when every agent's drift is below tol in absolute value"""
    x = state.opinions
    mean = x.mean(axis=-1, keepdims=True)
    return bool(np.max(np.abs(drift(x, state.initial_opinions, mean, params))) < tol)
