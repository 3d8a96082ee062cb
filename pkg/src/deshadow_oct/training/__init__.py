"""Alternating training schedule.

The trainer lives in :mod:`deshadow_oct.training.trainer`; it is not re-exported
here because it depends on the configuration that embeds :class:`TrainConfig`.
"""

from deshadow_oct.training.schedule import (
    CYCLE_PHASES,
    PhaseEpochs,
    Position,
    TrainConfig,
    learning_rate,
    positions,
)

__all__ = ["CYCLE_PHASES", "PhaseEpochs", "Position", "TrainConfig", "learning_rate", "positions"]
