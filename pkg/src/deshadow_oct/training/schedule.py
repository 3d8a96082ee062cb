"""Alternating training schedule: positions, epochs per phase and learning-rate decay."""

from dataclasses import dataclass

from pydantic import BaseModel, Field

from deshadow_oct.const.column import Phase


class PhaseEpochs(BaseModel):
    detector_pretrain: int = Field(default=5, ge=1, description="Detector epochs on baselines")
    remover: int = Field(default=1, ge=1, description="Remover epochs per cycle")
    detector_on_removed: int = Field(
        default=5, ge=1, description="Detector epochs on deshadowed images per cycle"
    )
    detector_on_gt: int = Field(
        default=5, ge=1, description="Detector epochs on baselines per cycle"
    )

    def of(self, phase: Phase) -> int:
        return getattr(self, phase.value)


class TrainConfig(BaseModel):
    """Optimization hyperparameters and the alternating schedule."""

    lr: float = Field(default=1e-5, gt=0.0, description="Base Adam learning rate")
    batch: int = Field(default=2, ge=1, description="Mini-batch size")
    lr_halving_period: int = Field(
        default=10, ge=1, description="Halve a network's lr every this many of its own epochs"
    )
    schedule: PhaseEpochs = Field(default_factory=PhaseEpochs)
    cycles: int = Field(default=10, ge=1, description="Maximum remover/detector cycles")
    early_stop_patience: int = Field(
        default=3, ge=1, description="Cycles of small probe improvement before stopping"
    )
    early_stop_min_improvement: float = Field(
        default=0.01, ge=0.0, description="Relative probe-loss improvement counted as progress"
    )
    probe_size: int = Field(default=2, ge=1, description="Images in the fixed probe batch")
    rng_seed: int = Field(default=0, description="Seed for shuffling, augmentation and init")


@dataclass(frozen=True)
class Position:
    """One phase of the schedule; ``index`` is its rank in the full run."""

    index: int
    cycle: int
    phase: Phase

    @property
    def name(self) -> str:
        return f"c{self.cycle:03d}_{self.phase.value}"

    @property
    def trains_detector(self) -> bool:
        return self.phase is not Phase.REMOVER


CYCLE_PHASES = (Phase.REMOVER, Phase.DETECTOR_ON_REMOVED, Phase.DETECTOR_ON_GT)


def positions(cycles: int) -> list[Position]:
    """Pretraining once, then (remover, detector on removed, detector on gt) per cycle."""
    out = [Position(0, 0, Phase.DETECTOR_PRETRAIN)]
    for cycle in range(1, cycles + 1):
        for phase in CYCLE_PHASES:
            out.append(Position(len(out), cycle, phase))
    return out


def learning_rate(base_lr: float, accumulated_epochs: int, halving_period: int) -> float:
    """Step decay on a network's own accumulated epoch count."""
    return base_lr * 0.5 ** (accumulated_epochs // halving_period)
