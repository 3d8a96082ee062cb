"""DatasetManager for discovering and loading B-scan datasets.

A dataset directory holds ``images/`` and, when available, ``masks/`` and
``ground_truth/`` with files matched by stem, plus an optional ``rois.tsv``.
"""

from dataclasses import dataclass
import logging
from pathlib import Path

from deshadow_oct.error.exceptions import ValidationError
from deshadow_oct.imaging.bscan import BScan, ShadowMask
from deshadow_oct.imaging.io import SUPPORTED_SUFFIXES, load_image, load_mask

logger = logging.getLogger(__name__)

IMAGES_DIR = "images"
MASKS_DIR = "masks"
GROUND_TRUTH_DIR = "ground_truth"
ROI_FILE = "rois.tsv"
MANIFEST_FILE = "manifest.json"


@dataclass
class SampleInfo:
    """Files belonging to one B-scan.

    Attributes:
        stem: Shared file stem.
        image_path: Shadowed (or clinical) input image.
        mask_path: Ground-truth shadow mask, if any.
        ground_truth_path: Shadow-free reference, if any.
    """

    stem: str
    image_path: Path
    mask_path: Path | None = None
    ground_truth_path: Path | None = None


@dataclass(frozen=True)
class Sample:
    stem: str
    image: BScan
    mask: ShadowMask | None
    ground_truth: BScan | None


def _index(directory: Path) -> dict[str, Path]:
    if not directory.is_dir():
        return {}
    files = [p for p in directory.iterdir() if p.suffix.lower() in SUPPORTED_SUFFIXES]
    index: dict[str, Path] = {}
    for path in sorted(files):
        if path.stem in index:
            raise ValidationError(f"Duplicate stem '{path.stem}' in {directory}")
        index[path.stem] = path
    return index


class DatasetManager:
    """Discovers samples in a dataset directory and loads them in stem order."""

    def __init__(self, data_dir: Path) -> None:
        self.data_dir = Path(data_dir)

    @property
    def roi_file(self) -> Path:
        return self.data_dir / ROI_FILE

    def get_samples(self, require_masks: bool = False) -> list[SampleInfo]:
        """List samples sorted by stem.

        Raises:
            FileNotFoundError: If the dataset or its ``images/`` directory is missing.
            ValidationError: If ``require_masks`` and some image has no mask.
        """
        images_dir = self.data_dir / IMAGES_DIR
        if not images_dir.is_dir():
            raise FileNotFoundError(f"Dataset images directory not found: {images_dir}")

        masks = _index(self.data_dir / MASKS_DIR)
        truths = _index(self.data_dir / GROUND_TRUTH_DIR)
        samples = [
            SampleInfo(
                stem=stem,
                image_path=path,
                mask_path=masks.get(stem),
                ground_truth_path=truths.get(stem),
            )
            for stem, path in _index(images_dir).items()
        ]

        if require_masks:
            missing = [s.stem for s in samples if s.mask_path is None]
            if missing:
                raise ValidationError(
                    f"{len(missing)} images have no mask in {self.data_dir / MASKS_DIR}: "
                    f"{', '.join(missing[:5])}"
                )
        orphans = sorted(set(masks) - {s.stem for s in samples})
        if orphans:
            logger.warning(
                f"{len(orphans)} masks without an image ignored: {', '.join(orphans[:5])}"
            )
        return samples

    def load_sample(self, info: SampleInfo) -> Sample:
        image = load_image(info.image_path)
        mask = load_mask(info.mask_path) if info.mask_path else None
        truth = load_image(info.ground_truth_path) if info.ground_truth_path else None

        errors: list[str] = []
        if mask is not None and mask.shape != image.shape:
            errors.append(f"mask {mask.shape} does not match image {image.shape}")
        if truth is not None and truth.shape != image.shape:
            errors.append(f"ground truth {truth.shape} does not match image {image.shape}")
        if errors:
            raise ValidationError(f"{info.stem}: " + "; ".join(errors))
        return Sample(stem=info.stem, image=image, mask=mask, ground_truth=truth)

    def load_all(self, require_masks: bool = False) -> list[Sample]:
        return [self.load_sample(info) for info in self.get_samples(require_masks)]
