"""Configuration management for deshadow-oct.

Every value that changes numerical results lives here; paths and toggles are
command-line flags. The canonical JSON dump of a config is hashed and the hash
is recorded in manifests and checkpoints.
"""

import hashlib
import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, model_validator
from pydantic import ValidationError as PydanticValidationError
import yaml

from deshadow_oct.augment.affine import AugmentConfig
from deshadow_oct.error.exceptions import ConfigError
from deshadow_oct.evaluation.compensation import CompensationExponents
from deshadow_oct.evaluation.metrics import PSNR_CAP_DB
from deshadow_oct.losses.mixture import LossWeights
from deshadow_oct.nets.backbone import BackboneConfig
from deshadow_oct.nets.detector import DetectorConfig
from deshadow_oct.nets.remover import RemoverConfig
from deshadow_oct.phantom.generator import PhantomSpec
from deshadow_oct.phantom.shadows import ShadowSettings
from deshadow_oct.training.schedule import TrainConfig

YAML_SUFFIXES = {".yaml", ".yml"}


class ImagingConfig(BaseModel):
    """Network input geometry and output quantization."""

    network_size: tuple[int, int] = Field(default=(512, 512), description="Network (H, W)")
    bit_depth: Literal[8, 16] = Field(default=16, description="Bit depth of written images")


class SimulationConfig(BaseModel):
    """Phantom dataset generation."""

    n_images: int = Field(default=10, ge=1, description="Number of (shadowed, mask, gt) triples")
    seed: int = Field(default=0, description="Base seed; image k uses a seed derived from it")
    mean_jitter: float = Field(
        default=0.05, ge=0.0, description="Uniform per-image jitter of each layer mean"
    )
    boundary_jitter: float = Field(
        default=0.01, ge=0.0, description="Uniform per-image jitter of each boundary fraction"
    )


class EvaluationConfig(BaseModel):
    psnr_cap_db: float = Field(default=PSNR_CAP_DB, gt=0.0, description="PSNR reported for MSE 0")
    roi_size: int = Field(default=5, ge=1, description="Side of every ROI window")
    rois_per_side: int = Field(default=5, ge=1, description="Clear and shadowed ROIs per layer")


class Config(BaseModel):
    """Main configuration for deshadow-oct."""

    imaging: ImagingConfig = Field(default_factory=ImagingConfig)
    phantom: PhantomSpec = Field(default_factory=lambda: PhantomSpec(height=512, width=512))
    shadows: ShadowSettings = Field(default_factory=ShadowSettings)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    backbone: BackboneConfig = Field(default_factory=BackboneConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    remover: RemoverConfig = Field(default_factory=RemoverConfig)
    loss: LossWeights = Field(default_factory=LossWeights)
    train: TrainConfig = Field(default_factory=TrainConfig)
    compensation: CompensationExponents = Field(default_factory=CompensationExponents)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    @model_validator(mode="after")
    def _check_sizes(self) -> "Config":
        if tuple(self.augment.out_size) != tuple(self.imaging.network_size):
            raise ValueError(
                f"augment.out_size {self.augment.out_size} must equal "
                f"imaging.network_size {self.imaging.network_size}"
            )
        return self

    @classmethod
    def from_dict(cls, data: dict, source: str = "<dict>") -> "Config":
        try:
            return cls.model_validate(data or {})
        except PydanticValidationError as e:
            raise ConfigError(f"Invalid configuration in {source}:\n{e}") from e

    @classmethod
    def load_from_file(cls, config_path: Path) -> "Config":
        """Load configuration from a YAML or JSON file."""
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigError(f"Config file not found: {config_path}")

        text = config_path.read_text()
        try:
            if config_path.suffix.lower() in YAML_SUFFIXES:
                data = yaml.safe_load(text)
            else:
                data = json.loads(text)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot parse config {config_path}: {e}") from e
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"Config {config_path} must be a mapping, got {type(data).__name__}")

        return cls.from_dict(data, source=str(config_path))

    def save_to_file(self, config_path: Path) -> None:
        """Save configuration as YAML or JSON depending on the suffix."""
        config_path = Path(config_path)
        config_path.parent.mkdir(parents=True, exist_ok=True)
        data = self.model_dump(mode="json")

        with open(config_path, "w") as f:
            if config_path.suffix.lower() in YAML_SUFFIXES:
                yaml.safe_dump(data, f, sort_keys=False)
            else:
                json.dump(data, f, indent=2)

    @classmethod
    def get_default(cls) -> "Config":
        """Get default configuration."""
        return cls()

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_seed(self, seed: int) -> "Config":
        """Copy with every seed (simulation, training, augmentation, backbone) set to ``seed``."""
        data = self.model_dump(mode="json")
        data["simulation"]["seed"] = seed
        data["train"]["rng_seed"] = seed
        data["augment"]["rng_seed"] = seed
        data["backbone"]["seed"] = seed
        return Config.from_dict(data, source="--seed override")


def load_config(config_path: Path | None = None) -> Config:
    """Load configuration from file or return default.

    Args:
        config_path: Path to configuration file. If None, the default
            locations are searched and the built-in defaults are the fallback.

    Returns:
        Config object
    """
    if config_path is None:
        default_locations = [
            Path.home() / ".config" / "deshadow-oct" / "config.yaml",
            Path.cwd() / "deshadow-oct.yaml",
        ]

        for location in default_locations:
            if location.exists():
                return Config.load_from_file(location)

        return Config.get_default()

    return Config.load_from_file(config_path)
