"""Automatic measurement windows derived from a phantom's layer map and shadow mask."""

from collections.abc import Sequence
import logging

import numpy as np

from deshadow_oct.imaging.bscan import Layer, RegionOfInterest, ShadowMask

logger = logging.getLogger(__name__)

ROIS_PER_SIDE = 5
ROI_SIZE = 5


def _window_row(layer_map: np.ndarray, layer_index: int, col: int, size: int) -> int | None:
    """Top row of a size x size window centred in the layer over columns [col, col+size)."""
    inside = layer_map[:, col : col + size] == layer_index
    if not inside.any(axis=0).all():
        return None
    rows = np.arange(layer_map.shape[0])
    top = max(int(rows[inside[:, j]].min()) for j in range(size))
    bottom = min(int(rows[inside[:, j]].max()) for j in range(size))
    if bottom - top + 1 < size:
        return None
    row = (top + bottom - size + 1) // 2
    if not inside[row : row + size].all():
        return None
    return row


def _distance_to_shadow(col: int, size: int, shadow_cols: np.ndarray) -> int:
    left = shadow_cols[shadow_cols < col]
    right = shadow_cols[shadow_cols >= col + size]
    gaps = []
    if left.size:
        gaps.append(col - int(left.max()))
    if right.size:
        gaps.append(int(right.min()) - (col + size - 1))
    return min(gaps) if gaps else 0


def _non_overlapping(cols: list[int], size: int) -> list[int]:
    chosen: list[int] = []
    for col in cols:
        if all(abs(col - c) >= size for c in chosen):
            chosen.append(col)
    return chosen


def _evenly_spaced(cols: list[int], count: int) -> list[int]:
    indices = np.linspace(0, len(cols) - 1, count).round().astype(int)
    return [cols[i] for i in indices]


def auto_rois(
    layer_map: np.ndarray,
    mask: ShadowMask,
    layer_labels: Sequence[Layer | None],
    count: int = ROIS_PER_SIDE,
    size: int = ROI_SIZE,
    margin: int = 2,
) -> list[RegionOfInterest]:
    """Pick ``count`` clear and ``count`` shadowed windows in every labeled layer.

    Clear windows sit in columns with no shadow at all, as close to a shadow as
    ``margin`` allows; shadowed windows lie entirely under the mask and are
    spread evenly across the shadowed columns. Every window is fully inside its
    layer. Layers without enough room on either side get no windows.
    """
    values = mask.values
    height, width = values.shape
    shadow_cols = np.flatnonzero(values.max(axis=0) > 0)
    rois: list[RegionOfInterest] = []

    for layer_index, label in enumerate(layer_labels):
        if label is None:
            continue
        clear: list[tuple[int, int]] = []
        shadowed: list[tuple[int, int]] = []
        for col in range(width - size + 1):
            row = _window_row(layer_map, layer_index, col, size)
            if row is None:
                continue
            lo, hi = max(col - margin, 0), min(col + size + margin, width)
            if values[:, lo:hi].max() == 0.0:
                clear.append((col, row))
            elif values[row : row + size, col : col + size].min() == 1.0:
                shadowed.append((col, row))

        rows_of = dict(clear + shadowed)
        by_distance = sorted(
            (c for c, _ in clear), key=lambda c: (_distance_to_shadow(c, size, shadow_cols), c)
        )
        clear_cols = _non_overlapping(by_distance, size)[:count]

        shadow_candidates = [c for c, _ in shadowed]
        spread = _non_overlapping(shadow_candidates, size)
        if len(spread) >= count:
            shadow_cols_chosen = _evenly_spaced(spread, count)
        elif len(shadow_candidates) >= count:
            shadow_cols_chosen = _evenly_spaced(shadow_candidates, count)
        else:
            shadow_cols_chosen = []

        if len(clear_cols) < count or len(shadow_cols_chosen) < count:
            logger.warning(
                f"Layer {label.value}: only {len(clear_cols)} clear and "
                f"{len(shadow_cols_chosen)} shadowed windows fit, skipping layer"
            )
            continue

        for col in sorted(clear_cols):
            rois.append(RegionOfInterest(rows_of[col], col, label, shadowed=False, size=size))
        for col in shadow_cols_chosen:
            rois.append(RegionOfInterest(rows_of[col], col, label, shadowed=True, size=size))
    return rois
