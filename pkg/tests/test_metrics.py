import math

import allure
import numpy as np
import pytest

from steps.simulation_steps import SimulationSteps
from wisdomsim import metrics
from wisdomsim.errors import MetricDomainError


def brute_force_wisdom(opinions, truth) -> int:
    ranked = sorted(opinions)
    n = len(ranked)
    best = 0
    for i in range(1, n // 2 + 1):
        if ranked[i - 1] <= truth <= ranked[n - i]:
            best = i
    return best


@allure.epic("Wisdom of Crowds Simulation")
@allure.feature("Crowd Metrics")
@allure.story("Collective error and group diversity")
class TestErrorAndDiversity:
    """Test class for the log-space crowd measures"""

    @allure.title("Collective error matches the reference starting errors")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.smoke
    @pytest.mark.parametrize("log_truth, expected", [(-2.9, 0.01), (-3.14, 0.0196)])
    def test_collective_error_reference_values(self, log_truth, expected):
        opinions = np.exp([-3.2, -3.0, -2.8])

        with allure.step("Step 1: Evaluate the error of a crowd with mean ln x = -3"):
            error = metrics.collective_error(opinions, math.exp(log_truth))

        with allure.step("Step 2: Compare with (ln T - <ln x>)^2"):
            assert error == pytest.approx(expected, rel=1e-9)

    @allure.title("A crowd that agrees with the truth has zero error")
    @pytest.mark.regression
    def test_collective_error_identity(self):
        assert metrics.collective_error([0.05] * 5, 0.05) == pytest.approx(0.0, abs=1e-24)

    @allure.title("Group diversity uses the 1/N variance of log-opinions")
    @pytest.mark.smoke
    def test_group_diversity_values(self):
        with allure.step("Step 1: Symmetric two-point crowd"):
            assert metrics.group_diversity(np.exp([-1.0, 1.0])) == pytest.approx(1.0, rel=1e-12)

        with allure.step("Step 2: Unanimous crowd"):
            assert metrics.group_diversity([0.3] * 4) == pytest.approx(0.0, abs=1e-24)

    @allure.title("Error and diversity ignore order; diversity ignores scale")
    @pytest.mark.regression
    def test_invariances(self):
        rng = np.random.default_rng(11)
        opinions = np.exp(rng.normal(-3.0, 0.85, 50))
        shuffled = rng.permutation(opinions)

        with allure.step("Step 1: Permute the opinions"):
            assert metrics.collective_error(shuffled, 0.05) == pytest.approx(
                metrics.collective_error(opinions, 0.05), rel=1e-12)
            assert metrics.group_diversity(shuffled) == pytest.approx(
                metrics.group_diversity(opinions), rel=1e-12)

        with allure.step("Step 2: Rescale every opinion by the same factor"):
            assert metrics.group_diversity(opinions * 7.5) == pytest.approx(
                metrics.group_diversity(opinions), rel=1e-9)

    @allure.title("Non-positive opinions and truths are rejected")
    @pytest.mark.regression
    @pytest.mark.parametrize("opinions, truth", [
        ([1.0, 0.0], 1.0),
        ([1.0, -2.0], 1.0),
        ([1.0, float("nan")], 1.0),
        ([1.0, 2.0], 0.0),
        ([], 1.0),
    ])
    def test_domain_errors(self, opinions, truth):
        with pytest.raises(MetricDomainError):
            metrics.evaluate(opinions, truth)


@allure.epic("Wisdom of Crowds Simulation")
@allure.feature("Crowd Metrics")
@allure.story("Wisdom-of-crowds indicator")
class TestWisdomIndicator:
    """Test class for the order-statistic bracket depth"""

    @allure.title("Indicator on a four-agent crowd")
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.smoke
    @pytest.mark.parametrize("truth, expected", [(2.5, 2), (5.0, 0), (1.0, 1), (0.5, 0), (4.0, 1), (2.0, 2)])
    def test_four_agents(self, truth, expected):
        assert metrics.wisdom_indicator([3.0, 1.0, 4.0, 2.0], truth) == expected

    @allure.title("Odd crowds top out at floor(N/2)")
    @pytest.mark.regression
    def test_odd_population_maximum(self):
        assert metrics.wisdom_indicator([1.0, 2.0, 3.0], 2.0) == 1
        assert metrics.wisdom_indicator([1.0, 2.0, 3.0, 4.0, 5.0], 3.0) == 2

    @allure.title("Indicator agrees with an exhaustive scan on 1000 random crowds")
    @allure.description(
        "Random crowds of 2 to 12 agents, half of them drawn from a small integer set so that\n"
        "ties and truths equal to an opinion are frequent."
    )
    @allure.severity(allure.severity_level.CRITICAL)
    @pytest.mark.oracle
    @pytest.mark.acceptance
    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(2024)
        mismatches = []

        with allure.step("Step 1: Compare 1000 random instances with the brute-force scan"):
            for case in range(1000):
                n = int(rng.integers(2, 13))
                if case % 2:
                    opinions = rng.integers(1, 6, n).astype(float)
                    truth = float(rng.integers(0, 7))
                else:
                    opinions = np.exp(rng.normal(0.0, 1.0, n))
                    truth = float(np.exp(rng.normal(0.0, 1.2)))
                got = metrics.wisdom_indicator(opinions, truth)
                want = brute_force_wisdom(list(opinions), truth)
                if got != want:
                    mismatches.append((list(opinions), truth, got, want))

        with allure.step("Step 2: Verify there are no mismatches"):
            allure.attach(
                f"mismatches: {len(mismatches)}\n" + "\n".join(map(str, mismatches[:10])),
                name="Brute-force comparison",
                attachment_type=allure.attachment_type.TEXT
            )
            assert not mismatches, f"wisdom_indicator disagrees with the scan: {mismatches[:3]}"

    @allure.title("Indicator is unchanged when computed on logarithms")
    @pytest.mark.regression
    def test_log_transform_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            opinions = np.exp(rng.normal(-3.0, 0.85, int(rng.integers(2, 40))))
            truth = float(np.exp(rng.normal(-3.0, 0.9)))
            assert metrics.wisdom_indicator(np.log(opinions), math.log(truth)) == \
                metrics.wisdom_indicator(opinions, truth)


@allure.epic("Wisdom of Crowds Simulation")
@allure.feature("Crowd Metrics")
@allure.story("Snapshot evaluation")
class TestEvaluate:

    @allure.title("evaluate bundles every measure and keeps GM <= AM")
    @pytest.mark.smoke
    def test_evaluate_bundle(self, simulation_steps: SimulationSteps):
        opinions = np.exp([-3.5, -3.0, -2.5, -2.0])

        with allure.step("Step 1: Evaluate the snapshot"):
            result = simulation_steps.evaluate(opinions, math.exp(-2.9))

        with allure.step("Step 2: Cross-check against the single-measure functions"):
            assert result.collective_error == pytest.approx(metrics.collective_error(opinions, math.exp(-2.9)))
            assert result.group_diversity == pytest.approx(metrics.group_diversity(opinions))
            assert result.wisdom_indicator == 2
            assert result.arithmetic_mean_raw == pytest.approx(opinions.mean())
            assert result.geometric_mean_raw == pytest.approx(math.exp(-2.75))
            assert result.geometric_mean_raw <= result.arithmetic_mean_raw

    @allure.title("Unanimous crowd never reports GM above AM")
    @pytest.mark.regression
    @pytest.mark.parametrize("value", [0.1, 0.049787068367863944, 3.3, 1e-5])
    def test_unanimous_gm_not_above_am(self, value):
        result = metrics.evaluate([value] * 7, 1.0)
        assert result.geometric_mean_raw <= result.arithmetic_mean_raw
        assert result.geometric_mean_raw == pytest.approx(value, rel=1e-14)
