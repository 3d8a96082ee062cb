"""Frozen ResNet-152 feature extractor for the content and style losses.

Convolutions are counted zero-based over the 151 non-projection convolutions
in module registration order; indices 9, 33, 141 and 150 are the last
convolutions of the four residual stages. A tap is the output of that
convolution (before its batch norm).
"""

from dataclasses import dataclass
from enum import Enum
import hashlib
import json
import logging
import os
from pathlib import Path
import threading

from pydantic import BaseModel, Field, field_validator
import torch
from torch import nn
from torchvision.models import resnet152

from deshadow_oct.error.exceptions import BackboneInitError
from deshadow_oct.imaging.bscan import BScan
from deshadow_oct.nets.common import count_parameters, freeze, images_to_tensor

logger = logging.getLogger(__name__)

# --- constants ---
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
DEFAULT_TAPS = (9, 33, 141)
N_CONVS = 151
HOME_ENV = "DESHADOW_OCT_HOME"
WEIGHTS_FILENAME = "resnet152-imagenet.pth"


class BackboneMode(Enum):
    PRETRAINED = "pretrained"
    RANDOM_SEEDED = "random_seeded"


class BackboneConfig(BaseModel):
    """Which backbone weights to load and where to tap activations."""

    mode: BackboneMode = Field(default=BackboneMode.PRETRAINED, description="Weight source")
    weights_path: Path | None = Field(
        default=None, description=f"state_dict file; defaults to ${HOME_ENV}/{WEIGHTS_FILENAME}"
    )
    seed: int = Field(default=0, description="Seed for random_seeded weights")
    taps: tuple[int, ...] = Field(default=DEFAULT_TAPS, description="Tapped convolution indices")
    strict: bool = Field(
        default=True, description="Fail when pretrained weights are missing instead of falling back"
    )

    @field_validator("taps")
    @classmethod
    def _check_taps(cls, taps: tuple[int, ...]) -> tuple[int, ...]:
        if not taps:
            raise ValueError("at least one tap is required")
        if list(taps) != sorted(set(taps)):
            raise ValueError(f"taps must be strictly increasing, got {taps}")
        if taps[0] < 0 or taps[-1] >= N_CONVS:
            raise ValueError(f"taps must lie in [0, {N_CONVS - 1}], got {taps}")
        return taps


def cache_dir() -> Path:
    return Path(os.environ.get(HOME_ENV, Path.home() / ".cache" / "deshadow-oct")).expanduser()


def default_weights_path() -> Path:
    return cache_dir() / WEIGHTS_FILENAME


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class FeatureStack:
    """Activations at the tapped convolutions, shallowest first."""

    tap_ids: tuple[int, ...]
    features: list[torch.Tensor]

    def __iter__(self):
        return iter(self.features)

    def __len__(self) -> int:
        return len(self.features)

    def shapes(self) -> list[tuple[int, ...]]:
        return [tuple(f.shape[1:]) for f in self.features]


def indexed_convs(model: nn.Module) -> list[tuple[str, nn.Conv2d]]:
    """Non-projection convolutions in registration order."""
    return [
        (name, module)
        for name, module in model.named_modules()
        if isinstance(module, nn.Conv2d) and "downsample" not in name
    ]


class Backbone(nn.Module):
    """ResNet-152 truncated after the stage holding the deepest tap."""

    def __init__(self, model: nn.Module, taps: tuple[int, ...], weights_checksum: str):
        super().__init__()
        convs = indexed_convs(model)
        if len(convs) != N_CONVS:
            raise BackboneInitError(f"Expected {N_CONVS} convolutions, found {len(convs)}")
        self.taps = tuple(taps)
        self.weights_checksum = weights_checksum
        self.tap_names = [convs[i][0] for i in self.taps]
        self.parameter_count = count_parameters(model, trainable_only=False)

        deepest = self.tap_names[-1]
        last_stage = 0
        if deepest.startswith("layer"):
            last_stage = int(deepest.split(".")[0][len("layer") :])
        self.stem = nn.Sequential(model.conv1, model.bn1, model.relu, model.maxpool)
        self.stages = nn.ModuleList(getattr(model, f"layer{k}") for k in range(1, last_stage + 1))

        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))

        # per-thread so concurrent extraction calls do not mix activations
        self._local = threading.local()
        modules = dict(model.named_modules())
        for name in self.tap_names:
            modules[name].register_forward_hook(self._capture(name))
        freeze(self)

    def _capture(self, name: str):
        def hook(_module: nn.Module, _inputs, output: torch.Tensor) -> None:
            self._local.captured[name] = output

        return hook

    def train(self, mode: bool = True) -> "Backbone":
        # batch-norm statistics stay fixed
        return super().train(False)

    def forward(self, x: torch.Tensor) -> FeatureStack:
        """Features of a (N, 1, H, W) batch in [0, 1]."""
        x = (x.repeat(1, 3, 1, 1) - self.mean) / self.std
        self._local.captured = {}
        x = self.stem(x)
        for stage in self.stages:
            x = stage(x)
        features = [self._local.captured[name] for name in self.tap_names]
        self._local.captured = {}
        return FeatureStack(tap_ids=self.taps, features=features)

    def extract_features(self, img: BScan) -> FeatureStack:
        param = self.mean
        with torch.no_grad():
            return self(images_to_tensor([img], dtype=param.dtype, device=param.device))


def _random_model(seed: int) -> nn.Module:
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return resnet152(weights=None, zero_init_residual=True)


def _verify_manifest(weights_path: Path, model: nn.Module, checksum: str) -> None:
    manifest_path = weights_path.with_name(weights_path.name + ".manifest.json")
    if not manifest_path.exists():
        logger.debug(f"No weights manifest next to {weights_path}")
        return
    manifest = json.loads(manifest_path.read_text())
    errors: list[str] = []
    count = count_parameters(model, trainable_only=False)
    if "parameter_count" in manifest and int(manifest["parameter_count"]) != count:
        errors.append(f"parameter count {count} != manifest {manifest['parameter_count']}")
    if "sha256" in manifest and manifest["sha256"] != checksum:
        errors.append(f"checksum {checksum[:12]} != manifest {str(manifest['sha256'])[:12]}")
    if errors:
        raise BackboneInitError(f"{weights_path}: " + "; ".join(errors))


def load_backbone(
    weights_path: Path | None = None,
    mode: BackboneMode | str = BackboneMode.PRETRAINED,
    seed: int = 0,
    taps: tuple[int, ...] = DEFAULT_TAPS,
    strict: bool = True,
) -> Backbone:
    """Build the frozen feature extractor.

    Raises:
        BackboneInitError: If pretrained weights are missing (strict mode),
            unreadable, or disagree with their manifest.
    """
    mode = BackboneMode(mode)
    taps = BackboneConfig(taps=taps).taps

    if mode is BackboneMode.RANDOM_SEEDED:
        return Backbone(_random_model(seed), taps, weights_checksum=f"random:{seed}")

    weights_path = Path(weights_path) if weights_path is not None else default_weights_path()
    if not weights_path.exists():
        if strict:
            raise BackboneInitError(
                f"Pretrained backbone weights not found at {weights_path}; "
                f"run scripts/fetch_backbone_weights.sh or set {HOME_ENV}"
            )
        logger.warning(f"{weights_path} missing, falling back to random weights (seed {seed})")
        return Backbone(_random_model(seed), taps, weights_checksum=f"random:{seed}")

    checksum = file_sha256(weights_path)
    model = resnet152(weights=None)
    try:
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    except Exception as e:
        raise BackboneInitError(f"Corrupt backbone weights {weights_path}: {e}") from e
    _verify_manifest(weights_path, model, checksum)
    logger.info(f"Loaded backbone weights {weights_path} (sha256 {checksum[:12]})")
    return Backbone(model, taps, weights_checksum=checksum)


def backbone_from_config(cfg: BackboneConfig) -> Backbone:
    return load_backbone(cfg.weights_path, cfg.mode, cfg.seed, cfg.taps, cfg.strict)
