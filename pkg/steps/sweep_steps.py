"""
Steps class for (alpha, beta) sweep actions
"""
import io
from typing import List, Optional, Sequence, Tuple

import allure
import pandas as pd

from wisdomsim import csv_output
from wisdomsim.metrics import CrowdMetrics
from wisdomsim.opinion_model import ModelParams, PopulationSpec
from wisdomsim.sweep_engine import (
    SweepCellResult,
    SweepGrid,
    error_contour,
    initial_metrics,
    run_cell,
    run_sweep,
)


class SweepSteps:
    """Steps class for sweep test actions"""

    @allure.step("Build sweep grid: {alpha_values} x {beta_values}, {replicates} replicates")
    def build_grid(self, alpha_values: Sequence[float], beta_values: Sequence[float],
                   population: PopulationSpec, params: ModelParams, truth: float,
                   replicates: int = 2, master_seed: int = 7, **options) -> SweepGrid:
        """
        Create a SweepGrid around a population and base parameters

        Args:
            options: resample_population / shared_noise flags

        Returns:
            SweepGrid instance
        """
        return SweepGrid(
            alpha_values=tuple(alpha_values),
            beta_values=tuple(beta_values),
            replicates=replicates,
            master_seed=master_seed,
            base_params=params,
            population=population,
            truth=truth,
            **options,
        )

    @allure.step("Measure starting metrics of the grid population")
    def starting_metrics(self, grid: SweepGrid) -> CrowdMetrics:
        result = initial_metrics(grid)
        allure.attach(
            f"E(0) = {result.collective_error!r}\n"
            f"D(0) = {result.group_diversity!r}\n"
            f"W(0) = {result.wisdom_indicator}",
            name="Starting metrics",
            attachment_type=allure.attachment_type.TEXT
        )
        return result

    @allure.step("Run sweep (workers={workers})")
    def run(self, grid: SweepGrid, workers: Optional[int] = None) -> List[SweepCellResult]:
        results = run_sweep(grid, workers=workers)
        allure.attach(
            self.heatmap_csv(results),
            name="Heatmap table",
            attachment_type=allure.attachment_type.CSV
        )
        return results

    @allure.step("Run single cell alpha={alpha}, beta={beta}")
    def run_cell(self, grid: SweepGrid, alpha: float, beta: float) -> SweepCellResult:
        return run_cell(grid, alpha, beta)

    @allure.step("Locate where the final error crosses {level}")
    def contour(self, results: Sequence[SweepCellResult], level: float) -> List[Tuple[float, float]]:
        points = error_contour(results, level)
        allure.attach(
            "\n".join(f"beta={b!r}, alpha={a!r}" for b, a in points) or "no crossings",
            name="Error contour",
            attachment_type=allure.attachment_type.TEXT
        )
        return points

    @staticmethod
    def heatmap_csv(results: Sequence[SweepCellResult]) -> str:
        sink = io.StringIO()
        csv_output.emit_heatmap_csv(results, sink)
        return sink.getvalue()

    @staticmethod
    def as_frame(results: Sequence[SweepCellResult]) -> pd.DataFrame:
        """Heatmap rows as a DataFrame for column-wise assertions"""
        return csv_output.heatmap_frame(results)
