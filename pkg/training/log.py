"""Per-epoch training records and their CSV form."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import pandas as pd

from utils.logging import get_logger

logger = get_logger(__name__)

LOG_COLUMNS = ["epoch", "metric_name", "value"]


@dataclass
class EpochRecord:
    epoch: int
    values: Dict[str, float]
    seconds: float = 0.0


@dataclass
class TrainLog:
    """
    One record per completed epoch, epochs strictly increasing.

    The CSV written by ``save`` is long format (``epoch,metric_name,value``)
    sorted by epoch then metric name. Wall time goes to a sibling
    ``*_timing.csv`` so the main file only depends on the seed.
    """
    name: str = "train"
    records: List[EpochRecord] = field(default_factory=list)

    def append(self, epoch: int, seconds: float = 0.0, **values: float) -> EpochRecord:
        if self.records and epoch <= self.records[-1].epoch:
            raise ValueError(f"Epoch {epoch} does not follow {self.records[-1].epoch}")
        record = EpochRecord(int(epoch), {k: float(v) for k, v in values.items()}, float(seconds))
        self.records.append(record)
        return record

    def __len__(self) -> int:
        return len(self.records)

    @property
    def metrics(self) -> List[str]:
        names = set()
        for record in self.records:
            names.update(record.values)
        return sorted(names)

    def series(self, metric: str) -> List[Tuple[int, float]]:
        return [(r.epoch, r.values[metric]) for r in self.records if metric in r.values]

    def last(self, metric: str) -> float:
        return self.series(metric)[-1][1]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (r.epoch, name, value)
            for r in self.records
            for name, value in r.values.items()
        ]
        frame = pd.DataFrame(rows, columns=LOG_COLUMNS)
        return frame.sort_values(["epoch", "metric_name"], kind="mergesort").reset_index(drop=True)

    def save(self, path: Union[str, Path]) -> Path:
        """Write the metric CSV and the timing CSV next to it."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")

        timing = pd.DataFrame(
            [(r.epoch, r.seconds) for r in self.records], columns=["epoch", "seconds"]
        )
        timing.to_csv(timing_path(path), index=False, lineterminator="\n")
        logger.info(f"Wrote {len(self.records)} epochs of '{self.name}' to {path}")
        return path


def timing_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_timing{path.suffix}")
