"""Per-step loss CSV logs for the remover and the detector."""

import logging
from pathlib import Path

import pandas as pd

from deshadow_oct.const.column import ColumnNames

logger = logging.getLogger(__name__)

REMOVER_LOSS_CSV = "remover_loss.csv"
DETECTOR_LOSS_CSV = "detector_loss.csv"

_STEP_COLUMNS = [
    ColumnNames.STEP.value,
    ColumnNames.POSITION.value,
    ColumnNames.CYCLE.value,
    ColumnNames.PHASE.value,
    ColumnNames.EPOCH.value,
]
REMOVER_COLUMNS = _STEP_COLUMNS + [
    ColumnNames.CONTENT.value,
    ColumnNames.STYLE.value,
    ColumnNames.SHADOW.value,
    ColumnNames.TV.value,
    ColumnNames.TOTAL.value,
    ColumnNames.LEARNING_RATE.value,
]
DETECTOR_COLUMNS = _STEP_COLUMNS + [ColumnNames.BCE.value, ColumnNames.LEARNING_RATE.value]


class LossLog:
    """Buffers one row per optimizer step and appends them to a CSV on flush.

    Without a path the rows are only kept in memory.
    """

    def __init__(self, path: Path | None, columns: list[str]) -> None:
        self.path = Path(path) if path is not None else None
        self.columns = columns
        self.rows: list[dict] = []
        self._pending: list[dict] = []

    def append(self, row: dict) -> None:
        self.rows.append(row)
        self._pending.append(row)

    def flush(self) -> None:
        if self.path is None or not self._pending:
            self._pending = []
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        df = pd.DataFrame(self._pending, columns=self.columns)
        df.to_csv(self.path, mode="a", header=not self.path.exists(), index=False)
        self._pending = []

    def truncate(self, next_position: int) -> None:
        """Drop rows written at or after ``next_position`` (resume after interruption)."""
        self._pending = []
        if self.path is None or not self.path.exists():
            self.rows = []
            return
        df = pd.read_csv(self.path, float_precision="round_trip")
        kept = df[df[ColumnNames.POSITION.value] < next_position]
        dropped = len(df) - len(kept)
        if dropped:
            logger.info(f"Dropping {dropped} rows past position {next_position} from {self.path}")
        kept.to_csv(self.path, index=False)
        self.rows = kept.to_dict("records")

    def epoch_mean(self, position: int, epoch: int, column: str) -> float:
        values = [
            r[column]
            for r in self.rows
            if r[ColumnNames.POSITION.value] == position and r[ColumnNames.EPOCH.value] == epoch
        ]
        return sum(values) / len(values) if values else float("nan")
