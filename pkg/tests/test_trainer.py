import numpy as np
import pandas as pd
import pytest
import torch
from torch import nn

from deshadow_oct.augment.affine import AugmentConfig
from deshadow_oct.const.column import ColumnNames, Phase
from deshadow_oct.core.dataset import DatasetManager
from deshadow_oct.error.exceptions import (
    CheckpointError,
    ConfigError,
    ContractViolationError,
    ShapeError,
    ValidationError,
)
from deshadow_oct.imaging.bscan import BScan, MaskKind, ShadowMask
from deshadow_oct.nets.common import images_to_tensor, masks_to_tensor, weights_hash
from deshadow_oct.nets.detector import bce_loss
from deshadow_oct.training import PhaseEpochs, TrainConfig, learning_rate, positions
from deshadow_oct.training.loss_log import DETECTOR_LOSS_CSV, REMOVER_LOSS_CSV
from deshadow_oct.training.state import (
    CHECKPOINT_DIR,
    LATEST_CHECKPOINT,
    ModelCheckpoint,
    check_resumable,
)
from deshadow_oct.training.trainer import (
    PairedData,
    Trainer,
    networks_from_checkpoint,
    regenerate_removed,
    run_schedule,
)


@pytest.fixture(scope="module")
def paired(phantom_dir) -> PairedData:
    samples = DatasetManager(phantom_dir).load_all(require_masks=True)
    return PairedData.from_samples(samples, (64, 64))


class ScaleRemover(nn.Module):
    """Remover stand-in whose output is its input times one parameter."""

    def __init__(self, scale: float):
        super().__init__()
        self.scale = nn.Parameter(torch.tensor(scale))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x * self.scale


class TestSchedule:
    def test_learning_rate_halves_every_ten_epochs(self):
        assert learning_rate(1e-5, 0, 10) == 1e-5
        assert learning_rate(1e-5, 19, 10) == 5e-6
        assert learning_rate(1e-5, 20, 10) == 2.5e-6

    def test_positions(self):
        schedule = positions(2)
        assert [p.index for p in schedule] == list(range(7))
        assert schedule[0].phase is Phase.DETECTOR_PRETRAIN
        assert [p.phase for p in schedule[1:4]] == [
            Phase.REMOVER,
            Phase.DETECTOR_ON_REMOVED,
            Phase.DETECTOR_ON_GT,
        ]
        assert schedule[4].cycle == 2
        assert schedule[1].name == "c001_remover"
        assert not schedule[1].trains_detector

    def test_default_epoch_ledger(self):
        epochs = PhaseEpochs()
        ledger = [epochs.of(p.phase) for p in positions(1)]
        assert ledger == [5, 1, 5, 5]

    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.batch == 2
        assert cfg.lr == 1e-5
        assert cfg.cycles == 10


class TestPairedData:
    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            PairedData(images=(), masks=())

    def test_rejects_soft_masks_and_count_mismatch(self):
        img = BScan(pixels=np.zeros((8, 8)))
        soft = ShadowMask(values=np.full((8, 8), 0.5), kind=MaskKind.PREDICTED_SOFT)
        with pytest.raises(ValidationError) as excinfo:
            PairedData(images=(img, img), masks=(soft,))
        assert "2 images but 1 masks" in str(excinfo.value)
        assert "not a binary" in str(excinfo.value)

    def test_from_samples_resizes(self, phantom_dir):
        samples = DatasetManager(phantom_dir).load_all(require_masks=True)
        data = PairedData.from_samples(samples, (32, 32))
        assert len(data) == len(samples)
        assert data.images[0].shape == (32, 32)
        assert data.masks[0].is_binary


class TestRegenerateRemoved:
    def test_uses_current_remover(self):
        imgs = [BScan(pixels=np.full((8, 8), 0.8))]
        remover = ScaleRemover(0.5)
        first = regenerate_removed(remover, imgs, batch_size=1)
        with torch.no_grad():
            remover.scale.fill_(0.25)
        second = regenerate_removed(remover, imgs, batch_size=1)
        np.testing.assert_allclose(first[0].pixels, 0.4, rtol=1e-6)
        np.testing.assert_allclose(second[0].pixels, 0.2, rtol=1e-6)


class TestTrainer:
    def test_size_mismatch(self, tiny_config, paired):
        config = tiny_config.model_copy(
            update={"imaging": tiny_config.imaging.model_copy(update={"network_size": (32, 32)})}
        )
        with pytest.raises(ShapeError):
            Trainer(config, paired)

    def test_remover_phase_needs_backbone(self, tiny_config, paired):
        trainer = Trainer(tiny_config, paired)
        trainer.pretrain_detector()
        with pytest.raises(ContractViolationError):
            trainer.train_remover_phase()

    def test_only_one_network_changes_per_phase(self, tiny_config, paired, random_backbone):
        trainer = Trainer(tiny_config, paired, random_backbone)

        remover_before = weights_hash(trainer.remover)
        detector_before = weights_hash(trainer.detector)
        trainer.pretrain_detector()
        assert weights_hash(trainer.remover) == remover_before
        assert weights_hash(trainer.detector) != detector_before

        detector_before = weights_hash(trainer.detector)
        trainer.train_remover_phase(cycle=1)
        assert weights_hash(trainer.detector) == detector_before
        assert weights_hash(trainer.remover) != remover_before

        remover_before = weights_hash(trainer.remover)
        trainer.train_detector_adversarial(cycle=1)
        assert weights_hash(trainer.remover) == remover_before
        assert weights_hash(trainer.detector) != detector_before

        assert [(e["phase"], e["epochs"]) for e in trainer.ledger] == [
            ("detector_pretrain", 1),
            ("remover", 1),
            ("detector_on_removed", 1),
            ("detector_on_gt", 1),
        ]
        assert len(trainer.probe_history) == 2

    def test_run_writes_logs_and_checkpoints(self, tiny_config, paired, random_backbone, tmp_path):
        final = run_schedule(paired, tiny_config, random_backbone, tmp_path)
        assert final.next_position == 4
        assert final.counters["detector_epochs"] == 3
        assert final.counters["remover_epochs"] == 1

        remover_log = pd.read_csv(tmp_path / REMOVER_LOSS_CSV)
        detector_log = pd.read_csv(tmp_path / DETECTOR_LOSS_CSV)
        assert len(remover_log) == final.counters["remover_steps"] == 2
        assert len(detector_log) == final.counters["detector_steps"] == 6
        assert (remover_log["total"] >= 0).all()
        assert (detector_log["lr"] == tiny_config.train.lr).all()

        ckpt_dir = tmp_path / CHECKPOINT_DIR
        assert (ckpt_dir / LATEST_CHECKPOINT).exists()
        assert len(list(ckpt_dir.glob("ckpt_*.ckpt"))) == 4

        config, detector, remover = networks_from_checkpoint(
            ModelCheckpoint.load(ckpt_dir / LATEST_CHECKPOINT)
        )
        assert config == tiny_config
        assert not detector.training and not remover.training

    def test_resume_matches_uninterrupted_run(self, tiny_config, paired, random_backbone, tmp_path):
        full_dir, split_dir = tmp_path / "full", tmp_path / "split"
        full = Trainer(tiny_config, paired, random_backbone, full_dir)
        full.run()

        first = Trainer(tiny_config, paired, random_backbone, split_dir)
        first.run(stop_after=2)
        assert first.next_position == 2

        resumed = Trainer(tiny_config, paired, random_backbone, split_dir)
        resumed.restore(ModelCheckpoint.load(split_dir / CHECKPOINT_DIR / LATEST_CHECKPOINT))
        resumed.run()

        assert weights_hash(resumed.detector) == weights_hash(full.detector)
        assert weights_hash(resumed.remover) == weights_hash(full.remover)
        assert resumed.counters == full.counters
        for name in (REMOVER_LOSS_CSV, DETECTOR_LOSS_CSV):
            pd.testing.assert_frame_equal(
                pd.read_csv(split_dir / name), pd.read_csv(full_dir / name)
            )

    def test_resume_drops_rows_past_checkpoint(
        self, tiny_config, paired, random_backbone, tmp_path
    ):
        trainer = Trainer(tiny_config, paired, random_backbone, tmp_path)
        trainer.run()
        early = ModelCheckpoint.load(
            tmp_path / CHECKPOINT_DIR / "ckpt_c000_detector_pretrain.ckpt"
        )

        resumed = Trainer(tiny_config, paired, random_backbone, tmp_path)
        resumed.restore(early)
        assert pd.read_csv(tmp_path / DETECTOR_LOSS_CSV)["position"].max() == 0
        assert not (tmp_path / REMOVER_LOSS_CSV).exists() or pd.read_csv(
            tmp_path / REMOVER_LOSS_CSV
        ).empty

    def test_resume_refuses_other_config(self, tiny_config, paired, random_backbone):
        trainer = Trainer(tiny_config, paired, random_backbone)
        checkpoint = trainer.snapshot(None, 0)
        other = tiny_config.model_copy(
            update={"train": tiny_config.train.model_copy(update={"lr": 5e-4})}
        )
        with pytest.raises(ConfigError, match="refusing to resume"):
            Trainer(other, paired, random_backbone).restore(checkpoint)

    def test_resumable_check_reads_header_only(self, tiny_config, paired, tmp_path):
        trainer = Trainer(tiny_config, paired)
        path = tmp_path / "a.ckpt"
        trainer.snapshot(None, 0).save(path)
        data = bytearray(path.read_bytes())
        data[-1] ^= 0xFF
        path.write_bytes(bytes(data))

        meta = check_resumable(path, tiny_config.config_hash())
        assert meta["next_position"] == 0
        with pytest.raises(CheckpointError, match="checksum"):
            ModelCheckpoint.load(path)

    def test_resumable_check_refuses_other_config(self, tiny_config, paired, tmp_path):
        path = tmp_path / "a.ckpt"
        Trainer(tiny_config, paired).snapshot(None, 0).save(path)
        with pytest.raises(ConfigError, match="refusing to resume"):
            check_resumable(path, "0" * 64)

    def test_checkpoint_round_trip(self, tiny_config, paired, random_backbone, tmp_path):
        trainer = Trainer(tiny_config, paired, random_backbone)
        trainer.pretrain_detector()
        checkpoint = trainer.snapshot(trainer.schedule[0], 1)
        checkpoint.save(tmp_path / "a.ckpt")
        ModelCheckpoint.load(tmp_path / "a.ckpt").save(tmp_path / "b.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_early_stop_on_flat_probe_loss(self, tiny_config, paired):
        trainer = Trainer(tiny_config, paired)
        trainer.probe_history = [1.0, 0.999, 0.998, 0.997]
        trainer._check_early_stop()
        assert trainer.stopped_early

    def test_no_early_stop_while_improving(self, tiny_config, paired):
        trainer = Trainer(tiny_config, paired)
        trainer.probe_history = [1.0, 0.8, 0.6, 0.4]
        trainer._check_early_stop()
        assert not trainer.stopped_early

    def test_remover_phase_leaves_backbone_untouched(self, tiny_config, paired, random_backbone):
        before = weights_hash(random_backbone)
        trainer = Trainer(tiny_config, paired, random_backbone)
        trainer.pretrain_detector()
        trainer.train_remover_phase()
        assert weights_hash(random_backbone) == before


def _with_train(config, augment=None, **schedule):
    train = config.train.model_copy(
        update={
            "lr_halving_period": 1000,
            "schedule": config.train.schedule.model_copy(update=schedule),
        }
    )
    update = {"train": train}
    if augment is not None:
        update["augment"] = augment
    return config.model_copy(update=update)


@pytest.mark.slow
class TestOverfit:
    def test_detector_pretraining_fits_four_images(self, tiny_config, paired):
        config = _with_train(
            tiny_config, augment=AugmentConfig.identity((64, 64)), detector_pretrain=400
        )
        config = config.model_copy(
            update={"detector": config.detector.model_copy(update={"base_filters": 16})}
        )
        trainer = Trainer(config, paired)
        detector = trainer.pretrain_detector().eval()
        with torch.no_grad():
            bce = bce_loss(
                detector(images_to_tensor(paired.images)), masks_to_tensor(paired.masks)
            )
        assert float(bce) < 0.05

    def test_remover_loss_decreases(self, tiny_config, paired, random_backbone):
        decreased = 0
        for seed in range(10):
            config = _with_train(
                tiny_config, augment=AugmentConfig.identity((64, 64)), remover=10
            )
            config = config.model_copy(
                update={"train": config.train.model_copy(update={"rng_seed": seed})}
            )
            trainer = Trainer(config, paired, random_backbone)
            trainer.pretrain_detector()
            trainer.train_remover_phase()
            first = trainer.remover_log.epoch_mean(1, 0, ColumnNames.TOTAL.value)
            last = trainer.remover_log.epoch_mean(1, 9, ColumnNames.TOTAL.value)
            decreased += last < first
        assert decreased >= 8
