"""
CSV emitters and readers

Reals are written with 17 significant digits so that every value reads back
to the same double; rows end with LF and the file ends with a newline.
"""
from contextlib import contextmanager
import logging
import os
from pathlib import Path
import sys
import tempfile
from typing import IO, Iterator, Optional, Sequence, Tuple

import pandas as pd

from wisdomsim.opinion_model import TIMESERIES_COLUMNS, PopulationState, TrajectoryRecord
from wisdomsim.sweep_engine import HEATMAP_COLUMNS, SweepCellResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SAMPLE_COLUMNS = ("opinion",)
CONTOUR_COLUMNS = ("beta", "alpha")


def emit_frame(frame: pd.DataFrame, sink: IO[str]) -> None:
    """Write a frame with the shared numeric format contract"""
    frame.to_csv(sink, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="nan")


def emit_timeseries_csv(record: TrajectoryRecord, sink: IO[str]) -> None:
    if len(record) == 0:
        raise ValueError("cannot emit an empty trajectory")
    emit_frame(record.to_frame(), sink)


def heatmap_frame(results: Sequence[SweepCellResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (r.alpha, r.beta, r.final_error_mean, r.final_error_sd,
             r.final_diversity_mean, r.final_wisdom_mean, r.replicates_used)
            for r in results
        ],
        columns=list(HEATMAP_COLUMNS),
    ).astype({"replicates": "int64"})


def emit_heatmap_csv(results: Sequence[SweepCellResult], sink: IO[str]) -> None:
    emit_frame(heatmap_frame(results), sink)


def emit_sample_csv(state: PopulationState, sink: IO[str]) -> None:
    """Initial population, one opinion per line"""
    emit_frame(pd.DataFrame({"opinion": state.initial_opinions}, columns=list(SAMPLE_COLUMNS)), sink)


def emit_contour_csv(points: Sequence[Tuple[float, float]], sink: IO[str]) -> None:
    emit_frame(pd.DataFrame(list(points), columns=list(CONTOUR_COLUMNS)).astype(float), sink)


def _read(source, columns: Sequence[str]) -> pd.DataFrame:
    frame = pd.read_csv(source, float_precision="round_trip")
    if tuple(frame.columns) != tuple(columns):
        raise ValueError(f"unexpected header {list(frame.columns)}, expected {list(columns)}")
    return frame


def read_timeseries_csv(source) -> pd.DataFrame:
    return _read(source, TIMESERIES_COLUMNS)


def read_heatmap_csv(source) -> pd.DataFrame:
    return _read(source, HEATMAP_COLUMNS)


@contextmanager
def atomic_output(path: Optional[Path]) -> Iterator[IO[str]]:
    """
    Text sink that only appears at `path` once the block succeeds

    Writes go to a temporary file beside the target, renamed over it on
    success and removed on failure. None or '-' means stdout.
    """
    if path is None or str(path) == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", newline="", dir=directory,
        prefix=f".{path.name}.", suffix=".tmp", delete=False,
    )
    try:
        with handle:
            yield handle
        os.replace(handle.name, path)
        logger.info("wrote %s", path)
    except BaseException:
        Path(handle.name).unlink(missing_ok=True)
        raise
