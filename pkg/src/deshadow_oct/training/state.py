"""Everything needed to continue a training run bit-identically."""

from dataclasses import dataclass, field
from pathlib import Path

from deshadow_oct.core.checkpoint import load_checkpoint, read_meta, save_checkpoint
from deshadow_oct.error.exceptions import CheckpointError, ConfigError

CHECKPOINT_DIR = "checkpoints"
LATEST_CHECKPOINT = "latest.ckpt"

_REQUIRED = ("meta", "config", "detector", "remover", "detector_opt", "remover_opt", "rng")


def checkpoint_name(position_name: str) -> str:
    return f"ckpt_{position_name}.ckpt"


def require_same_config(stored: str | None, current: str) -> None:
    if stored != current:
        raise ConfigError(
            f"Checkpoint config hash {str(stored)[:12]} does not match "
            f"the current config {current[:12]}; refusing to resume"
        )


def check_resumable(path: Path, config_hash: str) -> dict:
    """Compare a checkpoint's config hash from its header alone; returns its meta.

    Raises:
        ConfigError: If the checkpoint was written under a different config.
    """
    meta = read_meta(path)
    require_same_config(meta.get("config_hash"), config_hash)
    return meta


@dataclass
class ModelCheckpoint:
    """Weights, optimizer states and schedule position after a completed phase.

    ``next_position`` indexes the first schedule position that has not run yet.
    """

    config_hash: str
    config: dict
    next_position: int
    cycle: int
    phase: str
    epoch: int
    detector: dict
    remover: dict
    detector_opt: dict
    remover_opt: dict
    rng: dict
    counters: dict[str, int] = field(default_factory=dict)
    ledger: list[dict] = field(default_factory=list)
    probe_history: list[float] = field(default_factory=list)
    stopped_early: bool = False

    def to_state(self) -> dict:
        return {
            "meta": {
                "config_hash": self.config_hash,
                "next_position": self.next_position,
                "cycle": self.cycle,
                "phase": self.phase,
                "epoch": self.epoch,
                "stopped_early": self.stopped_early,
            },
            "config": self.config,
            "counters": self.counters,
            "ledger": self.ledger,
            "probe_history": self.probe_history,
            "detector": self.detector,
            "remover": self.remover,
            "detector_opt": self.detector_opt,
            "remover_opt": self.remover_opt,
            "rng": self.rng,
        }

    @classmethod
    def from_state(cls, state: dict, source: str = "<state>") -> "ModelCheckpoint":
        missing = [key for key in _REQUIRED if key not in state]
        if missing:
            raise CheckpointError(f"{source}: missing sections {', '.join(missing)}")
        meta = state["meta"]
        return cls(
            config_hash=meta["config_hash"],
            config=state["config"],
            next_position=meta["next_position"],
            cycle=meta["cycle"],
            phase=meta["phase"],
            epoch=meta["epoch"],
            detector=state["detector"],
            remover=state["remover"],
            detector_opt=state["detector_opt"],
            remover_opt=state["remover_opt"],
            rng=state["rng"],
            counters=state.get("counters", {}),
            ledger=state.get("ledger", []),
            probe_history=state.get("probe_history", []),
            stopped_early=meta.get("stopped_early", False),
        )

    def save(self, path: Path) -> None:
        save_checkpoint(path, self.to_state())

    @classmethod
    def load(cls, path: Path) -> "ModelCheckpoint":
        return cls.from_state(load_checkpoint(path), str(path))
