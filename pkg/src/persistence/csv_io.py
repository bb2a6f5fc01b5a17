"""CSV readers and writers.

Every file starts with an optional ``#`` comment block, then one line of
column names, then comma-separated rows. Floats are written with 17
significant digits so files are exact and byte-stable across reruns.
"""

import io
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import EmptySeriesError
from ..core.series import IntervalHistogram, TimeSeries, Trajectory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FMT = "%.17g"


def _comment_block(header: str) -> List[str]:
    return [f"# {line}" if line else "#" for line in header.splitlines()]


def write_columns(path: PathLike, names: Sequence[str], columns: Sequence[np.ndarray],
                  header: str = "", fmt: Union[str, Sequence[str]] = FLOAT_FMT) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = _comment_block(header) + [",".join(names)]
    data = np.column_stack([np.asarray(c) for c in columns]) if len(columns[0]) else None
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
        if data is not None:
            np.savetxt(fh, data, delimiter=",", fmt=fmt)
    logger.debug(f"Wrote {path}")
    return path


def write_rows(path: PathLike, names: Sequence[str], rows: Iterable[Sequence], header: str = "") -> Path:
    """Heterogeneous rows (numbers, strings, None) for aggregate tables."""
    def cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return repr(value)
        return str(value).replace(",", ";")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = _comment_block(header) + [",".join(names)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_trajectory(path: PathLike, trajectory: Trajectory, header: str = "") -> Path:
    """`t,n_R` (three-level) or `t,n` (two-level); the header records the
    resolved parameters, and the seed and index are appended to it."""
    meta = f"{header.rstrip()}\n" if header else ""
    meta += f"seed = {trajectory.seed}\nindex = {trajectory.index}"
    return write_columns(path, ["t", trajectory.column], [trajectory.times, trajectory.values], meta)


def write_histogram(path: PathLike, histogram: IntervalHistogram, header: str = "") -> Path:
    return write_columns(
        path, ["bin_left", "bin_right", "count"],
        [histogram.bin_edges[:-1], histogram.bin_edges[1:], histogram.counts],
        header, fmt=[FLOAT_FMT, FLOAT_FMT, "%d"],
    )


def read_columns(path: PathLike, min_columns: int = 2) -> Tuple[np.ndarray, Optional[List[str]]]:
    """Numeric rows of a CSV (comment lines skipped) and the column names, if present."""
    path = Path(path)
    body = [line for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    names = None
    if body:
        first = [cell.strip() for cell in body[0].split(",")]
        try:
            [float(cell) for cell in first[:min_columns]]
        except ValueError:
            names = first
            body = body[1:]
    if not body:
        raise EmptySeriesError(f"{path} has no data rows")
    data = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",", ndmin=2,
                      usecols=tuple(range(min_columns)))
    return data, names


def read_series(path: PathLike) -> Tuple[TimeSeries, Optional[str]]:
    """First two columns as (t, value); the column-name line is optional.

    Returns the series and the name of the value column if one was given.
    """
    data, names = read_columns(path, 2)
    logger.info(f"Read {data.shape[0]} samples from {path}")
    return TimeSeries(data[:, 0], data[:, 1]), (names[1] if names and len(names) > 1 else None)


def read_histogram(path: PathLike) -> IntervalHistogram:
    data, _ = read_columns(path, 3)
    counts = np.rint(data[:, 2]).astype(np.int64)
    return IntervalHistogram(bin_width=float(data[0, 1] - data[0, 0]),
                             bin_edges=np.append(data[:, 0], data[-1, 1]),
                             counts=counts, total_events=int(counts.sum()))
