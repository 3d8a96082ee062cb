"""Alternating detector/remover training.

The schedule is a list of positions: detector pretraining once, then per cycle
one remover phase followed by two detector phases (on the remover's output and
on the baselines). Exactly one network trains in each position while the other
is frozen and hash-checked. A checkpoint is written after every position and
a run can continue from any of them bit-identically: every position reseeds
the global generators and every shuffle or augmentation draw derives its seed
from (rng_seed, position, epoch, index).
"""

from collections.abc import Sequence
import copy
from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np
import torch
from tqdm import tqdm

from deshadow_oct.augment.affine import augment_pair
from deshadow_oct.const.column import ColumnNames, Phase
from deshadow_oct.core.config import Config
from deshadow_oct.core.dataset import Sample
from deshadow_oct.core.reproducibility import (
    derive_seed,
    enable_determinism,
    rng_state,
    seed_everything,
    set_rng_state,
)
from deshadow_oct.error.exceptions import (
    ContractViolationError,
    ShapeError,
    ValidationError,
)
from deshadow_oct.imaging.bscan import BScan, ShadowMask
from deshadow_oct.imaging.resize import resize
from deshadow_oct.losses.mixture import total_loss
from deshadow_oct.nets.backbone import Backbone
from deshadow_oct.nets.common import frozen, images_to_tensor, masks_to_tensor
from deshadow_oct.nets.detector import ShadowDetector, bce_loss
from deshadow_oct.nets.remover import ShadowRemover, remover_infer_batch
from deshadow_oct.training.loss_log import (
    DETECTOR_COLUMNS,
    DETECTOR_LOSS_CSV,
    REMOVER_COLUMNS,
    REMOVER_LOSS_CSV,
    LossLog,
)
from deshadow_oct.training.schedule import CYCLE_PHASES, Position, learning_rate, positions
from deshadow_oct.training.state import (
    CHECKPOINT_DIR,
    LATEST_CHECKPOINT,
    ModelCheckpoint,
    check_resumable,
    checkpoint_name,
    require_same_config,
)

logger = logging.getLogger(__name__)

# seed stream for network initialization, disjoint from position indices
_INIT_STREAM = 2**31 - 1


@dataclass(frozen=True)
class PairedData:
    """Baselines with their ground-truth shadow masks, at network size."""

    images: tuple[BScan, ...]
    masks: tuple[ShadowMask, ...]

    def __post_init__(self) -> None:
        errors: list[str] = []
        if not self.images:
            raise ValidationError("Training needs at least one (image, mask) pair")
        if len(self.images) != len(self.masks):
            errors.append(f"{len(self.images)} images but {len(self.masks)} masks")
        for k, (img, mask) in enumerate(zip(self.images, self.masks)):
            if not mask.is_binary:
                errors.append(f"pair {k} ({img.source_id}): mask is not a binary ground truth")
            if mask.shape != img.shape:
                errors.append(f"pair {k} ({img.source_id}): mask {mask.shape} != {img.shape}")
        if errors:
            raise ValidationError("\n".join(errors))

    def __len__(self) -> int:
        return len(self.images)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], size: tuple[int, int]) -> "PairedData":
        """Resize every sample to ``size``; samples without a mask are an error."""
        missing = [s.stem for s in samples if s.mask is None]
        if missing:
            raise ValidationError(f"Samples without a shadow mask: {', '.join(missing[:5])}")
        return cls(
            images=tuple(resize(s.image, size) for s in samples),
            masks=tuple(resize(s.mask, size) for s in samples),
        )


def regenerate_removed(
    remover: torch.nn.Module, images: Sequence[BScan], batch_size: int
) -> list[BScan]:
    """Deshadow ``images`` with the remover as it is now, verifying it stays unchanged."""
    with frozen(remover):
        return remover_infer_batch(remover, list(images), batch_size=batch_size)


def _relative_improvement(old: float, new: float) -> float:
    return (old - new) / abs(old) if old else 0.0


class Trainer:
    """Owns both networks, their optimizers and the schedule bookkeeping."""

    def __init__(
        self,
        config: Config,
        data: PairedData,
        backbone: Backbone | None = None,
        out_dir: Path | None = None,
    ) -> None:
        size = tuple(config.imaging.network_size)
        if data.images[0].shape != size:
            raise ShapeError(f"Training images are {data.images[0].shape}, network expects {size}")

        self.config = config
        self.cfg = config.train
        self.data = data
        self.backbone = backbone
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.schedule = positions(self.cfg.cycles)

        enable_determinism()
        seed_everything(derive_seed(self.cfg.rng_seed, _INIT_STREAM))
        self.detector = ShadowDetector(config.detector, size)
        self.remover = ShadowRemover(config.remover, size)
        self.detector_opt = torch.optim.Adam(self.detector.parameters(), lr=self.cfg.lr)
        self.remover_opt = torch.optim.Adam(self.remover.parameters(), lr=self.cfg.lr)

        self.counters = {
            "detector_epochs": 0,
            "remover_epochs": 0,
            "detector_steps": 0,
            "remover_steps": 0,
        }
        self.ledger: list[dict] = []
        self.probe_history: list[float] = []
        self.next_position = 0
        self.stopped_early = False

        log_dir = self.out_dir
        self.remover_log = LossLog(log_dir / REMOVER_LOSS_CSV if log_dir else None, REMOVER_COLUMNS)
        self.detector_log = LossLog(
            log_dir / DETECTOR_LOSS_CSV if log_dir else None, DETECTOR_COLUMNS
        )

    # --- batching ---

    def _batches(self, position: Position, epoch: int) -> list[list[int]]:
        n, size = len(self.data), self.cfg.batch
        order = np.random.default_rng(derive_seed(self.cfg.rng_seed, position.index, epoch))
        perm = order.permutation(n)
        stop = n - n % size if n >= size else n
        return [perm[i : i + size].tolist() for i in range(0, stop, size)]

    def _augmented(
        self,
        images: Sequence[BScan],
        indices: list[int],
        position: Position,
        epoch: int,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        pairs = [
            augment_pair(
                images[i],
                self.data.masks[i],
                self.config.augment,
                derive_seed(self.cfg.rng_seed, position.index, epoch, i),
            )
            for i in indices
        ]
        return (
            images_to_tensor([img for img, _ in pairs]),
            masks_to_tensor([mask for _, mask in pairs]),
        )

    def _set_lr(self, optimizer: torch.optim.Optimizer, accumulated_epochs: int) -> float:
        lr = learning_rate(self.cfg.lr, accumulated_epochs, self.cfg.lr_halving_period)
        for group in optimizer.param_groups:
            group["lr"] = lr
        return lr

    def _row(self, position: Position, epoch: int, step: int) -> dict:
        return {
            ColumnNames.STEP.value: step,
            ColumnNames.POSITION.value: position.index,
            ColumnNames.CYCLE.value: position.cycle,
            ColumnNames.PHASE.value: position.phase.value,
            ColumnNames.EPOCH.value: epoch,
        }

    # --- phases ---

    def _detector_epochs(self, position: Position, images: Sequence[BScan]) -> int:
        n_epochs = self.cfg.schedule.of(position.phase)
        with frozen(self.remover):
            for epoch in tqdm(range(n_epochs), desc=position.name, leave=False):
                lr = self._set_lr(self.detector_opt, self.counters["detector_epochs"])
                self.detector.train()
                for batch in self._batches(position, epoch):
                    x, y = self._augmented(images, batch, position, epoch)
                    loss = bce_loss(self.detector(x), y)
                    self.detector_opt.zero_grad()
                    loss.backward()
                    self.detector_opt.step()
                    self.counters["detector_steps"] += 1
                    row = self._row(position, epoch, self.counters["detector_steps"])
                    row[ColumnNames.BCE.value] = float(loss.detach())
                    row[ColumnNames.LEARNING_RATE.value] = lr
                    self.detector_log.append(row)
                self.counters["detector_epochs"] += 1
                mean = self.detector_log.epoch_mean(position.index, epoch, ColumnNames.BCE.value)
                logger.info(f"{position.name} epoch {epoch + 1}/{n_epochs}: mean BCE {mean:.5f}")
        return n_epochs

    def _remover_epochs(self, position: Position) -> int:
        if self.backbone is None:
            raise ContractViolationError("The remover phase needs a feature backbone")
        n_epochs = self.cfg.schedule.of(position.phase)
        with frozen(self.detector) as detector:
            for epoch in tqdm(range(n_epochs), desc=position.name, leave=False):
                lr = self._set_lr(self.remover_opt, self.counters["remover_epochs"])
                self.remover.train()
                for batch in self._batches(position, epoch):
                    x, _ = self._augmented(self.data.images, batch, position, epoch)
                    with torch.no_grad():
                        pred_mask = detector(x)
                    breakdown = total_loss(
                        x, self.remover(x), pred_mask, self.config.loss, self.backbone, detector
                    )
                    self.remover_opt.zero_grad()
                    breakdown.total.backward()
                    self.remover_opt.step()
                    self.counters["remover_steps"] += 1
                    row = self._row(position, epoch, self.counters["remover_steps"])
                    row.update(breakdown.as_row())
                    row[ColumnNames.LEARNING_RATE.value] = lr
                    self.remover_log.append(row)
                self.counters["remover_epochs"] += 1
                mean = self.remover_log.epoch_mean(position.index, epoch, ColumnNames.TOTAL.value)
                logger.info(f"{position.name} epoch {epoch + 1}/{n_epochs}: mean loss {mean:.5g}")
        return n_epochs

    def probe_loss(self) -> float:
        """Generator total loss on the first ``probe_size`` un-augmented baselines."""
        if self.backbone is None:
            raise ContractViolationError("The probe loss needs a feature backbone")
        x = images_to_tensor(self.data.images[: self.cfg.probe_size])
        with frozen(self.detector) as detector, frozen(self.remover) as remover:
            with torch.no_grad():
                breakdown = total_loss(
                    x, remover(x), detector(x), self.config.loss, self.backbone, detector
                )
        return float(breakdown.total)

    def _check_early_stop(self) -> None:
        patience = self.cfg.early_stop_patience
        if len(self.probe_history) <= patience:
            return
        old, new = self.probe_history[-1 - patience], self.probe_history[-1]
        improvement = _relative_improvement(old, new)
        if improvement < self.cfg.early_stop_min_improvement:
            logger.info(
                f"Probe loss improved {improvement:.2%} over {patience} cycles "
                f"({old:.5g} -> {new:.5g}); stopping early"
            )
            self.stopped_early = True

    def run_position(self, position: Position) -> ModelCheckpoint:
        """Train one schedule position, record it and write its checkpoint."""
        seed_everything(derive_seed(self.cfg.rng_seed, position.index))
        logger.info(f"Position {position.index}: {position.name}")

        if position.phase is Phase.REMOVER:
            epochs = self._remover_epochs(position)
        elif position.phase is Phase.DETECTOR_ON_REMOVED:
            removed = regenerate_removed(self.remover, self.data.images, self.cfg.batch)
            epochs = self._detector_epochs(position, removed)
        else:
            epochs = self._detector_epochs(position, self.data.images)

        self.ledger.append(
            {
                "position": position.index,
                "cycle": position.cycle,
                "phase": position.phase.value,
                "epochs": epochs,
            }
        )
        self.next_position = position.index + 1

        if self.backbone is not None and position.phase in (
            Phase.DETECTOR_PRETRAIN,
            Phase.REMOVER,
        ):
            self.probe_history.append(self.probe_loss())
        if position.phase is Phase.DETECTOR_ON_GT:
            self._check_early_stop()

        checkpoint = self.snapshot(position, epochs)
        self._persist(position, checkpoint)
        return checkpoint

    # --- named phases ---

    def _position(self, cycle: int, phase: Phase) -> Position:
        if phase is Phase.DETECTOR_PRETRAIN:
            return self.schedule[0]
        if not 1 <= cycle <= self.cfg.cycles:
            raise ValidationError(f"Cycle {cycle} outside 1..{self.cfg.cycles}")
        return self.schedule[1 + 3 * (cycle - 1) + CYCLE_PHASES.index(phase)]

    def pretrain_detector(self) -> ShadowDetector:
        self.run_position(self._position(0, Phase.DETECTOR_PRETRAIN))
        return self.detector

    def train_remover_phase(self, cycle: int = 1) -> ShadowRemover:
        self.run_position(self._position(cycle, Phase.REMOVER))
        return self.remover

    def train_detector_adversarial(self, cycle: int = 1) -> ShadowDetector:
        """Detector epochs on fresh remover outputs, then on the baselines."""
        self.run_position(self._position(cycle, Phase.DETECTOR_ON_REMOVED))
        self.run_position(self._position(cycle, Phase.DETECTOR_ON_GT))
        return self.detector

    def run(self, stop_after: int | None = None) -> ModelCheckpoint:
        """Run the remaining schedule; ``stop_after`` limits the positions of this call."""
        remaining = self.schedule[self.next_position :]
        if stop_after is not None:
            remaining = remaining[:stop_after]
        last: ModelCheckpoint | None = None
        for position in tqdm(remaining, desc="Training schedule"):
            if self.stopped_early:
                break
            last = self.run_position(position)
        if last is None:
            done = self.schedule[self.next_position - 1] if self.next_position else None
            last = self.snapshot(done, self.ledger[-1]["epochs"] if self.ledger else 0)
        return last

    # --- checkpointing ---

    def snapshot(self, position: Position | None, epochs: int) -> ModelCheckpoint:
        return ModelCheckpoint(
            config_hash=self.config.config_hash(),
            config=self.config.model_dump(mode="json"),
            next_position=self.next_position,
            cycle=position.cycle if position else 0,
            phase=position.phase.value if position else "",
            epoch=epochs,
            detector={k: v.detach().clone() for k, v in self.detector.state_dict().items()},
            remover={k: v.detach().clone() for k, v in self.remover.state_dict().items()},
            detector_opt=copy.deepcopy(self.detector_opt.state_dict()),
            remover_opt=copy.deepcopy(self.remover_opt.state_dict()),
            rng=rng_state(),
            counters=dict(self.counters),
            ledger=copy.deepcopy(self.ledger),
            probe_history=list(self.probe_history),
            stopped_early=self.stopped_early,
        )

    def _persist(self, position: Position, checkpoint: ModelCheckpoint) -> None:
        self.remover_log.flush()
        self.detector_log.flush()
        if self.out_dir is None:
            return
        ckpt_dir = self.out_dir / CHECKPOINT_DIR
        checkpoint.save(ckpt_dir / checkpoint_name(position.name))
        checkpoint.save(ckpt_dir / LATEST_CHECKPOINT)

    def restore(self, checkpoint: ModelCheckpoint) -> None:
        """Continue from ``checkpoint``.

        Raises:
            ConfigError: If the checkpoint was written under a different config.
        """
        require_same_config(checkpoint.config_hash, self.config.config_hash())
        self.detector.load_state_dict(checkpoint.detector)
        self.remover.load_state_dict(checkpoint.remover)
        self.detector_opt.load_state_dict(checkpoint.detector_opt)
        self.remover_opt.load_state_dict(checkpoint.remover_opt)
        self.counters.update(checkpoint.counters)
        self.ledger = copy.deepcopy(checkpoint.ledger)
        self.probe_history = list(checkpoint.probe_history)
        self.next_position = checkpoint.next_position
        self.stopped_early = checkpoint.stopped_early
        set_rng_state(checkpoint.rng)
        self.remover_log.truncate(self.next_position)
        self.detector_log.truncate(self.next_position)
        logger.info(f"Resuming at position {self.next_position} of {len(self.schedule)}")

    def resume_from(self, path: Path) -> None:
        """Check the config hash from the header, then load and restore the checkpoint."""
        check_resumable(path, self.config.config_hash())
        self.restore(ModelCheckpoint.load(path))


def run_schedule(
    data: PairedData,
    config: Config,
    backbone: Backbone,
    out_dir: Path | None = None,
    resume: Path | None = None,
    stop_after: int | None = None,
) -> ModelCheckpoint:
    """Full alternating schedule, optionally continuing from a checkpoint file.

    Returns the checkpoint of the last completed position.
    """
    trainer = Trainer(config, data, backbone, out_dir)
    if resume is not None:
        trainer.resume_from(resume)
    return trainer.run(stop_after=stop_after)


def networks_from_checkpoint(
    checkpoint: ModelCheckpoint,
) -> tuple[Config, ShadowDetector, ShadowRemover]:
    """Rebuild both networks (eval mode) from a checkpoint's embedded config."""
    config = Config.from_dict(checkpoint.config, source="checkpoint")
    size = tuple(config.imaging.network_size)
    detector = ShadowDetector(config.detector, size)
    remover = ShadowRemover(config.remover, size)
    detector.load_state_dict(checkpoint.detector)
    remover.load_state_dict(checkpoint.remover)
    return config, detector.eval(), remover.eval()
