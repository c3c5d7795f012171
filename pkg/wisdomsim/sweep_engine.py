"""
(alpha, beta) parameter sweeps

Every cell of the grid runs `replicates` simulations advanced together as an
(R, N) batch and reports long-term (final-step) crowd metrics. All randomness
comes from substreams keyed by grid indices, so the table does not depend on
which worker ran which cell or in what order.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from wisdomsim import metrics
from wisdomsim.errors import ParameterError, PositivityViolation, SweepFailedError
from wisdomsim.opinion_model import (
    ModelParams,
    PopulationSpec,
    TrajectoryRecord,
    check_seed,
    integrate,
    sample_initial_population,
)
from wisdomsim.random_streams import NOISE_STREAM, GaussianStreams, ZeroNoise

logger = logging.getLogger(__name__)

DEFAULT_REPLICATES = 10

HEATMAP_COLUMNS = (
    "alpha",
    "beta",
    "final_error_mean",
    "final_error_sd",
    "final_diversity_mean",
    "final_wisdom_mean",
    "replicates",
)


def default_axis() -> Tuple[float, ...]:
    """0, 0.04, ..., 2.0 (51 points)"""
    return tuple(float(v) for v in np.round(np.linspace(0.0, 2.0, 51), 12))


def _axis(values: Sequence[float], name: str) -> Tuple[float, ...]:
    axis = tuple(float(v) for v in values)
    if not axis:
        raise ParameterError(f"{name} must not be empty", field=name)
    if not all(math.isfinite(v) and v >= 0.0 for v in axis):
        raise ParameterError(f"{name} entries must be finite and non-negative", field=name)
    if any(b <= a for a, b in zip(axis, axis[1:])):
        raise ParameterError(f"{name} must be strictly ascending", field=name)
    return axis


@dataclass(frozen=True)
class SweepGrid:
    """
    Cartesian (alpha, beta) grid with replicate settings

    base_params supplies noise_d, dt and steps_total; alpha and beta are
    overridden per cell. With shared_noise every cell sees the same noise
    realisations (substreams keyed by replicate only); with
    resample_population each replicate draws its own starting population
    instead of sharing population.seed's draw.
    """

    alpha_values: Tuple[float, ...]
    beta_values: Tuple[float, ...]
    replicates: int
    master_seed: int
    base_params: ModelParams
    population: PopulationSpec
    truth: float
    resample_population: bool = False
    shared_noise: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha_values", _axis(self.alpha_values, "alpha_values"))
        object.__setattr__(self, "beta_values", _axis(self.beta_values, "beta_values"))
        if isinstance(self.replicates, bool) or not isinstance(self.replicates, (int, np.integer)) \
                or self.replicates < 1:
            raise ParameterError(f"replicates must be a positive integer, got {self.replicates!r}",
                                 field="replicates")
        check_seed(self.master_seed, "master_seed")
        if not (math.isfinite(self.truth) and self.truth > 0.0):
            raise ParameterError(f"truth must be positive, got {self.truth!r}", field="truth")
        if self.base_params.heterogeneous:
            raise ParameterError("sweeps run homogeneous alpha and beta only", field="base_params")
        worst = self.base_params.dt * (self.alpha_values[-1] + self.beta_values[-1])
        if worst > 1.0:
            raise ParameterError(
                f"stability violated on the grid: dt*(alpha+beta)={worst:g} > 1 "
                f"at alpha={self.alpha_values[-1]:g}, beta={self.beta_values[-1]:g}",
                field="dt",
            )

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.alpha_values), len(self.beta_values)

    def cells(self) -> List[Tuple[int, int]]:
        """(alpha index, beta index) pairs in row-major, beta-fastest order"""
        return [(i, j) for i in range(len(self.alpha_values)) for j in range(len(self.beta_values))]

    def index_of(self, alpha: float, beta: float) -> Tuple[int, int]:
        try:
            return self.alpha_values.index(float(alpha)), self.beta_values.index(float(beta))
        except ValueError:
            raise ParameterError(f"cell (alpha={alpha!r}, beta={beta!r}) is not on the grid") from None

    def params_for(self, alpha: float, beta: float) -> ModelParams:
        return replace(self.base_params, alpha=alpha, beta=beta)

    def noise_keys(self, alpha_index: int, beta_index: int) -> List[Tuple[int, ...]]:
        if self.shared_noise:
            return [(NOISE_STREAM, r) for r in range(self.replicates)]
        return [(NOISE_STREAM, alpha_index, beta_index, r) for r in range(self.replicates)]

    def initial_batch(self) -> np.ndarray:
        """(replicates, N) starting opinions"""
        if self.resample_population:
            return np.stack([
                sample_initial_population(self.population, stream=(r,)).opinions
                for r in range(self.replicates)
            ])
        shared = sample_initial_population(self.population).opinions
        return np.tile(shared, (self.replicates, 1))


@dataclass(frozen=True)
class SweepCellResult:
    """Replicate-averaged long-term metrics of one (alpha, beta) cell"""

    alpha: float
    beta: float
    final_error_mean: float
    final_diversity_mean: float
    final_wisdom_mean: float
    final_error_sd: float
    replicates_used: int
    failure: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.failure is not None


def _failed_cell(alpha: float, beta: float, reason: str) -> SweepCellResult:
    nan = float("nan")
    return SweepCellResult(alpha, beta, nan, nan, nan, nan, 0, failure=reason)


def _run_cell_at(grid: SweepGrid, alpha_index: int, beta_index: int) -> SweepCellResult:
    alpha = grid.alpha_values[alpha_index]
    beta = grid.beta_values[beta_index]
    params = grid.params_for(alpha, beta)
    initial = grid.initial_batch()
    shape = initial.shape
    if params.noise_d == 0.0:
        noise = ZeroNoise(shape)
    else:
        noise = GaussianStreams(grid.master_seed, grid.noise_keys(alpha_index, beta_index), shape[1])
    try:
        final = integrate(initial, initial, params, noise)
    except PositivityViolation as exc:
        logger.warning("cell alpha=%g beta=%g failed: %s", alpha, beta, exc)
        return _failed_cell(alpha, beta, str(exc))
    finals = [metrics.evaluate(row, grid.truth) for row in final]
    errors = np.array([m.collective_error for m in finals])
    return SweepCellResult(
        alpha=alpha,
        beta=beta,
        final_error_mean=float(errors.mean()),
        final_diversity_mean=float(np.mean([m.group_diversity for m in finals])),
        final_wisdom_mean=float(np.mean([m.wisdom_indicator for m in finals])),
        final_error_sd=float(errors.std(ddof=1)) if errors.size > 1 else 0.0,
        replicates_used=len(finals),
    )


def _run_cell_task(grid: SweepGrid, cell: Tuple[int, int]) -> SweepCellResult:
    return _run_cell_at(grid, *cell)


def run_cell(grid: SweepGrid, alpha: float, beta: float) -> SweepCellResult:
    """Run every replicate of one grid cell and aggregate final-step metrics"""
    alpha_index, beta_index = grid.index_of(alpha, beta)
    return _run_cell_at(grid, alpha_index, beta_index)


def run_sweep(grid: SweepGrid, workers: Optional[int] = None) -> List[SweepCellResult]:
    """
    Run all cells of the grid

    Args:
        grid: sweep definition
        workers: process count; None or 1 runs in this process

    Returns:
        one result per cell in row-major (beta-fastest) order

    Raises:
        SweepFailedError: every cell failed
    """
    cells = grid.cells()
    logger.info("sweeping %d x %d cells, %d replicates each, workers=%s",
                grid.shape[0], grid.shape[1], grid.replicates, workers or 1)
    task = partial(_run_cell_task, grid)
    if workers is not None and workers > 1:
        chunk = max(1, len(cells) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, cells, chunksize=chunk))
    else:
        results = [task(cell) for cell in cells]
    failures = sum(r.failed for r in results)
    if failures == len(results):
        raise SweepFailedError(f"all {failures} cells failed; first: {results[0].failure}")
    logger.info("sweep finished: %d cells, %d failed", len(results), failures)
    return results


def initial_metrics(grid: SweepGrid) -> metrics.CrowdMetrics:
    """Crowd metrics of the grid's shared starting population"""
    return metrics.evaluate(sample_initial_population(grid.population).opinions, grid.truth)


def error_contour(results: Sequence[SweepCellResult], level: float) -> List[Tuple[float, float]]:
    """
    Points where final_error_mean crosses `level` along each beta row

    Crossings are located by linear interpolation in alpha between
    neighbouring cells; failed cells break the row.

    Returns:
        (beta, alpha) pairs sorted by beta, then alpha
    """
    rows = {}
    for result in results:
        rows.setdefault(result.beta, []).append(result)
    points = []
    for beta, row in rows.items():
        row = sorted(row, key=lambda r: r.alpha)
        for left, right in zip(row, row[1:]):
            e1, e2 = left.final_error_mean, right.final_error_mean
            if e1 == level:
                points.append((beta, left.alpha))
                continue
            if not (math.isfinite(e1) and math.isfinite(e2)):
                continue
            if (e1 - level) * (e2 - level) < 0.0:
                points.append((beta, left.alpha + (level - e1) * (right.alpha - left.alpha) / (e2 - e1)))
        last = row[-1]
        if last.final_error_mean == level:
            points.append((beta, last.alpha))
    return sorted(points)


def detect_steady_state(trajectory: TrajectoryRecord, window: int, tol: float) -> Optional[int]:
    """
    Earliest recorded row after which the metrics have settled

    A window is the `window` + 1 consecutive rows starting at some row; it is
    settled when every metric (error, diversity, wisdom, arithmetic and
    geometric mean) varies by less than tol inside it. Returns the smallest
    start row s such that every complete window starting at or after s is
    settled, or None when the last complete window is not settled or the
    trajectory is shorter than one window.
    """
    if len(trajectory) == 0:
        raise ParameterError("trajectory is empty")
    if window < 1:
        raise ParameterError(f"window must be >= 1, got {window!r}", field="window")
    if not tol > 0.0:
        raise ParameterError(f"tol must be positive, got {tol!r}", field="tol")
    matrix = trajectory.metric_matrix()
    if matrix.shape[0] < window + 1:
        return None
    windows = np.lib.stride_tricks.sliding_window_view(matrix, window + 1, axis=0)
    settled = np.all(np.ptp(windows, axis=-1) < tol, axis=-1)
    if not settled[-1]:
        return None
    unsettled = np.flatnonzero(~settled)
    return int(unsettled[-1] + 1) if unsettled.size else 0
