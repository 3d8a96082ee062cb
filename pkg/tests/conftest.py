from pathlib import Path

import numpy as np
import pytest

from deshadow_oct.commands.simulate import write_phantom_dataset
from deshadow_oct.core.config import Config
from deshadow_oct.imaging.bscan import BScan, MaskKind, ShadowMask
from deshadow_oct.nets.backbone import load_backbone

CONFIGS_DIR = Path(__file__).parent.parent / "configs"
TINY_CONFIG = CONFIGS_DIR / "tiny.yaml"


@pytest.fixture
def tiny_config() -> Config:
    return Config.load_from_file(TINY_CONFIG)


@pytest.fixture(scope="session")
def random_backbone():
    """Seeded ResNet-152 tapped at the end of the first stage; built once per session."""
    return load_backbone(mode="random_seeded", seed=0, taps=(9,))


@pytest.fixture(scope="session")
def phantom_dir(tmp_path_factory) -> Path:
    out_dir = tmp_path_factory.mktemp("phantoms")
    write_phantom_dataset(Config.load_from_file(TINY_CONFIG), out_dir)
    return out_dir


@pytest.fixture
def flat_image() -> BScan:
    return BScan(pixels=np.full((32, 32), 0.5), source_id="flat")


@pytest.fixture
def band_mask() -> ShadowMask:
    values = np.zeros((32, 32))
    values[8:, 10:16] = 1.0
    return ShadowMask(values=values, kind=MaskKind.GROUND_TRUTH_BINARY)
