"""
Steps class for single-population simulation actions
Wraps the opinion model, metrics and oracles in Allure steps and attaches the evidence
"""
import io
from typing import Optional

import allure
import numpy as np

from wisdomsim import csv_output, metrics, oracles
from wisdomsim.opinion_model import (
    ModelParams,
    PopulationSpec,
    PopulationState,
    TrajectoryRecord,
    integrate,
    noise_for,
    run_trajectory,
    sample_initial_population,
    simulate,
    step,
)
from wisdomsim.random_streams import NOISE_STREAM, ZeroNoise


class SimulationSteps:
    """Steps class for simulation test actions"""

    @allure.step("Sample initial population")
    def sample_population(self, spec: PopulationSpec) -> PopulationState:
        """
        Draw the starting population of a run

        Args:
            spec: population parameters and seed

        Returns:
            PopulationState at time 0
        """
        state = sample_initial_population(spec)
        snapshot = metrics.evaluate(state.opinions, 1.0)
        allure.attach(
            f"n_agents: {state.n_agents}\n"
            f"mean ln x: {np.log(state.opinions).mean():.6f}\n"
            f"var ln x: {snapshot.group_diversity:.6f}\n"
            f"arithmetic mean: {snapshot.arithmetic_mean_raw:.6g}\n"
            f"geometric mean: {snapshot.geometric_mean_raw:.6g}",
            name="Initial population",
            attachment_type=allure.attachment_type.TEXT
        )
        return state

    @allure.step("Simulate run with truth={truth}")
    def run_simulation(self, spec: PopulationSpec, params: ModelParams, truth: float,
                       record_every: int = 10) -> TrajectoryRecord:
        """
        Sample a population and run it, attaching the metric time series

        Returns:
            TrajectoryRecord of the run
        """
        record = simulate(spec, params, truth, record_every)
        self.attach_timeseries(record)
        return record

    @allure.step("Run trajectory from an explicit population")
    def run_from_state(self, initial: PopulationState, params: ModelParams, truth: float,
                       record_every: int = 10, seed: int = 0) -> TrajectoryRecord:
        noise = noise_for(params, seed, (NOISE_STREAM,), initial.n_agents)
        record = run_trajectory(initial, params, truth, record_every, noise)
        self.attach_timeseries(record)
        return record

    @allure.step("Advance population by {steps} noise-free steps")
    def advance_deterministic(self, initial: PopulationState, params: ModelParams, steps: int) -> np.ndarray:
        """
        Integrate a D = 0 run without recording metrics

        Returns:
            opinions after `steps` updates
        """
        return integrate(initial.opinions, initial.initial_opinions, params,
                         ZeroNoise(initial.opinions.shape), steps=steps)

    @allure.step("Apply {count} single update steps")
    def apply_steps(self, state: PopulationState, params: ModelParams, count: int,
                    noise_source=None) -> PopulationState:
        source = noise_source if noise_source is not None else ZeroNoise(state.opinions.shape)
        for _ in range(count):
            state = step(state, params, source)
        return state

    @allure.step("Evaluate crowd metrics against truth={truth}")
    def evaluate(self, opinions, truth: float) -> metrics.CrowdMetrics:
        result = metrics.evaluate(opinions, truth)
        allure.attach(
            f"collective error: {result.collective_error!r}\n"
            f"group diversity: {result.group_diversity!r}\n"
            f"wisdom indicator: {result.wisdom_indicator}",
            name="Crowd metrics",
            attachment_type=allure.attachment_type.TEXT
        )
        return result

    @allure.step("Compute closed-form solution at t={t}")
    def deterministic_solution(self, initial: PopulationState, params: ModelParams, t: float) -> np.ndarray:
        return oracles.deterministic_solution(initial, params, t)

    @allure.step("Compute closed-form Euler map after {steps} steps")
    def discrete_solution(self, initial: PopulationState, params: ModelParams, steps: int) -> np.ndarray:
        return oracles.discrete_solution(initial, params, steps)

    @allure.step("Compare simulated opinions with the oracle")
    def max_abs_error(self, simulated: np.ndarray, predicted: np.ndarray, name: str = "Oracle comparison") -> float:
        """
        Max-norm distance between two opinion vectors

        Returns:
            max_i |simulated_i - predicted_i|
        """
        error = float(np.max(np.abs(np.asarray(simulated) - np.asarray(predicted))))
        allure.attach(
            f"max |x_sim - x_oracle| = {error!r}",
            name=name,
            attachment_type=allure.attachment_type.TEXT
        )
        return error

    @staticmethod
    def timeseries_csv(record: TrajectoryRecord) -> str:
        sink = io.StringIO()
        csv_output.emit_timeseries_csv(record, sink)
        return sink.getvalue()

    def attach_timeseries(self, record: TrajectoryRecord, name: Optional[str] = None) -> None:
        allure.attach(
            self.timeseries_csv(record),
            name=name or "Metric time series",
            attachment_type=allure.attachment_type.CSV
        )
