import math

import allure
import numpy as np
import pytest

from steps.simulation_steps import SimulationSteps
from steps.sweep_steps import SweepSteps
from wisdomsim.opinion_model import ModelParams, PopulationSpec, PopulationState


def noise_free(alpha: float, beta: float, dt: float = 0.01, steps: int = 3000) -> ModelParams:
    return ModelParams(alpha=alpha, beta=beta, noise_d=0.0, dt=dt, steps_total=steps)


def quantile_population(log_mean: float) -> PopulationSpec:
    """N=100 population on the normal quantiles, variance 0.72 exactly"""
    return PopulationSpec(n_agents=100, log_mean=log_mean, log_variance=0.72, seed=11,
                          match_moments=True, stratified=True)


SWEEP_PARAMS = ModelParams(alpha=0.0, beta=0.0, noise_d=1e-3, dt=0.01, steps_total=3000)


@allure.epic("Wisdom of Crowds Simulation")
@allure.feature("Acceptance")
@allure.story("No-information regime")
class TestNoInformationRegime:
    """Without social influence the crowd keeps its starting performance"""

    @allure.title("Error, diversity and wisdom stay near their starting values")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.acceptance
    @pytest.mark.parametrize("log_truth, start_error", [
        (-2.9, 0.01),
        (-3.0 + math.sqrt(0.018), 0.018),
    ], ids=["E0=0.01", "E0=0.018"])
    def test_metrics_hold(self, simulation_steps: SimulationSteps, reference_population: PopulationSpec,
                          no_info_params: ModelParams, log_truth: float, start_error: float):
        with allure.step("Step 1: Simulate 3000 steps with alpha=0, beta=1"):
            record = simulation_steps.run_simulation(reference_population, no_info_params, math.exp(log_truth))

        with allure.step("Step 2: Starting error matches the chosen truth"):
            assert record.collective_error[0] == pytest.approx(start_error, abs=1e-12)

        with allure.step("Step 3: Final error within 0.005 of the start"):
            assert abs(record.collective_error[-1] - record.collective_error[0]) <= 0.005

        with allure.step("Step 4: Final diversity within 0.02 of 0.72"):
            assert abs(record.group_diversity[-1] - 0.72) <= 0.02

        with allure.step("Step 5: Wisdom indicator never moves by more than 4"):
            assert np.max(np.abs(record.wisdom_indicator - record.wisdom_indicator[0])) <= 4


@allure.epic("Wisdom of Crowds Simulation")
@allure.feature("Acceptance")
@allure.story("Noise-free aggregate-information regime")
class TestNoiseFreeRegime:
    """Noise-free runs against the closed-form solution"""

    @allure.title("Simulation reaches the closed-form solution at t=30")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.acceptance
    @pytest.mark.oracle
    def test_closed_form_agreement(self, simulation_steps: SimulationSteps, reference_population: PopulationSpec):
        initial = simulation_steps.sample_population(reference_population)
        params = noise_free(1.0, 0.5)

        with allure.step("Step 1: Integrate 3000 steps and evaluate the oracle at t=30"):
            simulated = simulation_steps.advance_deterministic(initial, params, 3000)
            predicted = simulation_steps.deterministic_solution(initial, params, 30.0)

        with allure.step("Step 2: Max-norm distance is below 1e-3 of the largest opinion"):
            error = simulation_steps.max_abs_error(simulated, predicted)
            assert error <= 1e-3 * initial.opinions.max()

    @allure.title("Euler error halves with the time step")
    @pytest.mark.acceptance
    @pytest.mark.oracle
    def test_first_order_convergence(self, simulation_steps: SimulationSteps, reference_population: PopulationSpec):
        initial = simulation_steps.sample_population(reference_population)
        predicted = simulation_steps.deterministic_solution(initial, noise_free(1.0, 0.5), 2.0)

        with allure.step("Step 1: Error at t=2 with dt=0.01 and dt=0.005"):
            coarse = simulation_steps.max_abs_error(
                simulation_steps.advance_deterministic(initial, noise_free(1.0, 0.5, dt=0.01, steps=200), 200),
                predicted, name="dt=0.01")
            fine = simulation_steps.max_abs_error(
                simulation_steps.advance_deterministic(initial, noise_free(1.0, 0.5, dt=0.005, steps=400), 400),
                predicted, name="dt=0.005")

        with allure.step("Step 2: Ratio is 2 within 10%"):
            assert coarse / fine == pytest.approx(2.0, rel=0.1)

    @allure.title("Equal alpha and beta quarter the raw variance")
    @pytest.mark.acceptance
    def test_variance_quartered(self, simulation_steps: SimulationSteps, reference_population: PopulationSpec):
        initial = simulation_steps.sample_population(reference_population)
        final = simulation_steps.advance_deterministic(initial, noise_free(1.0, 1.0), 3000)
        assert np.var(final) == pytest.approx(0.25 * np.var(initial.opinions), rel=0.01)

    @allure.title("Pure social influence conserves the arithmetic mean")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.acceptance
    def test_mean_conserved(self, simulation_steps: SimulationSteps, reference_population: PopulationSpec):
        initial = simulation_steps.sample_population(reference_population)
        record = simulation_steps.run_from_state(initial, noise_free(1.0, 0.0), 1.0, record_every=1)
        start = record.arithmetic_mean[0]
        assert np.max(np.abs(record.arithmetic_mean - start)) <= 1e-12 * start * 3000

    @allure.title("Pure social influence raises the geometric mean monotonically")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.acceptance
    def test_geometric_mean_rises(self, simulation_steps: SimulationSteps, reference_population: PopulationSpec):
        initial = simulation_steps.sample_population(reference_population)
        record = simulation_steps.run_from_state(initial, noise_free(1.0, 0.0), 1.0, record_every=1)
        gm = record.geometric_mean

        with allure.step("Step 1: No step decreases the geometric mean beyond rounding"):
            assert np.all(np.diff(gm) >= -1e-14 * gm[:-1])

        with allure.step("Step 2: Early steps increase it strictly"):
            assert np.all(np.diff(gm[:200]) > 0)

        with allure.step("Step 3: It ends above its start and at most at the arithmetic mean"):
            assert gm[-1] > gm[0]
            assert gm[-1] <= record.arithmetic_mean[-1]


@allure.epic("Wisdom of Crowds Simulation")
@allure.feature("Acceptance")
@allure.story("Sweeps")
class TestSweepRegimes:
    """Heatmap-level behaviour of the (alpha, beta) sweep"""

    @allure.title("Social influence never improves a crowd whose estimates are centred below truth")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.acceptance
    def test_influence_worsens_error(self, sweep_steps: SweepSteps):
        alphas, betas = (0.0, 0.1, 0.5, 1.0, 2.0), (0.5, 1.0, 2.0)
        grid = sweep_steps.build_grid(alphas, betas, quantile_population(-3.0), SWEEP_PARAMS,
                                      math.exp(-3.14), replicates=2)
        start = sweep_steps.starting_metrics(grid).collective_error
        assert start == pytest.approx(0.0196, abs=1e-12)

        with allure.step("Step 1: Run the sweep"):
            frame = sweep_steps.as_frame(sweep_steps.run(grid))
            influenced = frame[frame.alpha >= 0.1]
            isolated = frame[frame.alpha == 0.0]

        with allure.step("Step 2: Every influenced cell ends at or above the starting error"):
            assert np.all(influenced.final_error_mean >= start)

        with allure.step("Step 3: The alpha=0 column keeps its starting error and stays best"):
            assert np.all(np.abs(isolated.final_error_mean - start) <= 0.005)
            assert isolated.final_error_mean.max() < influenced.final_error_mean.min()

    @allure.title("Strong influence without conviction pulls a low crowd toward a high truth")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.acceptance
    def test_error_minimum_in_consensus_corner(self, sweep_steps: SweepSteps):
        alphas, betas = (0.0, 0.5, 1.0, 2.0), (0.0, 0.25, 0.5, 1.0)
        population = quantile_population(-2.9)
        grid = sweep_steps.build_grid(alphas, betas, population, SWEEP_PARAMS, math.exp(-2.0),
                                      replicates=3, shared_noise=True)
        start = sweep_steps.starting_metrics(grid)
        assert start.collective_error == pytest.approx(0.81, abs=1e-12)

        with allure.step("Step 1: Run the sweep"):
            frame = sweep_steps.as_frame(sweep_steps.run(grid))

        with allure.step("Step 2: Lowest final error sits at alpha=2, beta=0"):
            best = frame.iloc[int(np.nanargmin(frame.final_error_mean.to_numpy()))]
            assert (best.alpha, best.beta) == (2.0, 0.0)

        with allure.step("Step 3: It reaches the consensus floor (ln T - ln <x(0)>)^2"):
            floor = (-2.0 - math.log(start.arithmetic_mean_raw)) ** 2
            allure.attach(f"floor = {floor!r}\nminimum = {best.final_error_mean!r}",
                          name="Consensus floor", attachment_type=allure.attachment_type.TEXT)
            assert best.final_error_mean == pytest.approx(floor, abs=0.03)
            assert best.final_error_mean < 0.5 * start.collective_error

    @allure.title("A moderate influence and conviction balance reaches the wisdom maximum")
    @pytest.mark.acceptance
    def test_wisdom_maximum_reached(self, sweep_steps: SweepSteps):
        alpha = 0.5
        # beta for fixed-point weights w = alpha / (alpha + beta) from 0.15 to 0.35
        weights = np.round(np.arange(0.15, 0.355, 0.01), 2)
        betas = sorted({round(float(alpha * (1 - w) / w), 12) for w in weights})
        grid = sweep_steps.build_grid((alpha,), betas, quantile_population(-3.0), SWEEP_PARAMS,
                                      math.exp(-2.9), replicates=1)
        start = sweep_steps.starting_metrics(grid).wisdom_indicator
        assert 42 <= start <= 50

        with allure.step("Step 1: Some cell ends with W >= 49"):
            frame = sweep_steps.as_frame(sweep_steps.run(grid))
            assert frame.final_wisdom_mean.max() >= 49

    @allure.title("Influence lowers the wisdom indicator when the truth is below the median")
    @pytest.mark.acceptance
    def test_wisdom_lost(self, sweep_steps: SweepSteps):
        grid = sweep_steps.build_grid((0.1, 0.5, 1.0, 2.0), (0.0, 0.5, 1.0, 2.0), quantile_population(-3.0),
                                      SWEEP_PARAMS, math.exp(-3.14), replicates=2)
        start = sweep_steps.starting_metrics(grid).wisdom_indicator

        frame = sweep_steps.as_frame(sweep_steps.run(grid))
        assert np.all(frame.final_wisdom_mean < start)

    @allure.title("A single two-agent step matches the hand-computed update")
    @pytest.mark.smoke
    def test_two_agent_step(self, simulation_steps: SimulationSteps):
        state = PopulationState(opinions=[1.0, 3.0], initial_opinions=[1.0, 3.0])
        after = simulation_steps.apply_steps(state, noise_free(1.0, 1.0, dt=0.1, steps=1), 1)
        np.testing.assert_allclose(after.opinions, [1.1, 2.9], rtol=1e-15)
        assert after.steps_elapsed == 1
