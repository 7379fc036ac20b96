"""Metric curves read back from TrainLog CSVs."""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from training.log import LOG_COLUMNS
from utils.errors import LogFormatError
from utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CurveSeries:
    """Named (epoch, value) points with strictly increasing epochs."""
    name: str
    points: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        points = tuple((int(e), float(v)) for e, v in self.points)
        for (a, _), (b, _) in zip(points, points[1:]):
            if b <= a:
                raise ValueError(f"{self.name}: epochs must be strictly increasing ({a} then {b})")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def epochs(self) -> np.ndarray:
        return np.array([e for e, _ in self.points], dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points], dtype=np.float64)


def load_log(path: Union[str, Path]) -> List[CurveSeries]:
    """
    Parse a long-format TrainLog CSV into one series per metric.

    Returns:
        Series sorted by metric name, points sorted by epoch

    Raises:
        LogFormatError: Bad header, malformed row or duplicate epoch (with line number)
    """
    path = Path(path)
    if not path.read_text().strip():
        return []
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise LogFormatError(f"{path}: {e}", _parser_line(str(e))) from e
    if list(frame.columns) != LOG_COLUMNS:
        raise LogFormatError(f"{path}: header must be {','.join(LOG_COLUMNS)}", 1)

    points: Dict[str, Dict[int, float]] = {}
    for offset, (epoch, name, value) in enumerate(frame.itertuples(index=False, name=None)):
        line = offset + 2
        try:
            epoch, value = int(epoch), float(value)
        except ValueError:
            raise LogFormatError(f"{path}: malformed row {epoch!r},{name!r},{value!r}", line)
        if not name:
            raise LogFormatError(f"{path}: empty metric name", line)
        metric = points.setdefault(name, {})
        if epoch in metric:
            raise LogFormatError(f"{path}: duplicate epoch {epoch} for {name}", line)
        metric[epoch] = value

    series = [CurveSeries(name, tuple(sorted(values.items()))) for name, values in sorted(points.items())]
    logger.debug(f"Loaded {len(series)} series from {path}")
    return series


def _parser_line(message: str) -> Optional[int]:
    # pandas reports "Expected 3 fields in line 7, saw 4"
    marker = "line "
    if marker in message:
        digits = message.split(marker, 1)[1].split(",")[0].strip()
        if digits.isdigit():
            return int(digits)
    return None


def series_by_name(series: Sequence[CurveSeries]) -> Dict[str, CurveSeries]:
    return {s.name: s for s in series}


def gap_series(real: CurveSeries, fake: CurveSeries, name: str = "west_gap") -> CurveSeries:
    """Pointwise real - fake over identical epoch grids."""
    if not np.array_equal(real.epochs, fake.epochs):
        raise ValueError(f"{real.name} and {fake.name} have different epoch grids")
    return CurveSeries(name, tuple((e, r - f) for (e, r), (_, f) in zip(real.points, fake.points)))


def trend_slope(s: CurveSeries, window: float = 1.0) -> float:
    """
    Least-squares slope over the trailing ``window`` fraction of points.

    Raises:
        ValueError: If window is outside (0, 1] or fewer than 2 points fall in it
    """
    if not 0 < window <= 1:
        raise ValueError(f"window must be in (0, 1], got {window}")
    count = math.ceil(window * len(s))
    if count < 2:
        raise ValueError(f"{s.name}: need at least 2 points for a slope, have {count}")
    epochs = s.epochs[-count:].astype(np.float64)
    values = s.values[-count:]
    return float(np.polyfit(epochs, values, 1)[0])


def summarize(series: Sequence[CurveSeries]) -> Dict[str, Dict[str, Optional[float]]]:
    """min / max / final / slope per metric (slope is None below 2 points)."""
    summary = {}
    for s in series:
        if not len(s):
            continue
        values = s.values
        summary[s.name] = {
            "points": len(s),
            "min": float(values.min()),
            "max": float(values.max()),
            "final": float(values[-1]),
            "slope": trend_slope(s) if len(s) >= 2 else None,
        }
    return summary
