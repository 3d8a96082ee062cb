"""Tab-separated ROI files: one window per row (stem, layer, shadowed, row, col)."""

from pathlib import Path

import pandas as pd

from deshadow_oct.const.column import ColumnNames
from deshadow_oct.error.exceptions import ValidationError
from deshadow_oct.imaging.bscan import Layer, RegionOfInterest

ROI_COLUMNS = [
    ColumnNames.STEM.value,
    ColumnNames.LAYER.value,
    ColumnNames.SHADOWED.value,
    ColumnNames.ROW.value,
    ColumnNames.COL.value,
]

RoiTable = dict[str, list[RegionOfInterest]]


def write_rois(rois: RoiTable, path: Path) -> None:
    rows = [
        {
            ColumnNames.STEM.value: stem,
            ColumnNames.LAYER.value: roi.layer_label.value,
            ColumnNames.SHADOWED.value: int(roi.shadowed),
            ColumnNames.ROW.value: roi.row,
            ColumnNames.COL.value: roi.col,
        }
        for stem in sorted(rois)
        for roi in rois[stem]
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=ROI_COLUMNS).to_csv(path, sep="\t", index=False)


def read_rois(path: Path, size: int = 5) -> RoiTable:
    """Load an ROI file, grouped by image stem.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValidationError: On missing columns, unknown layers or malformed values.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"ROI file not found: {path}")

    df = pd.read_csv(path, sep="\t", dtype={ColumnNames.STEM.value: str})
    missing = [c for c in ROI_COLUMNS if c not in df.columns]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")

    errors: list[str] = []
    table: RoiTable = {}
    valid_layers = {layer.value for layer in Layer}
    for line, record in enumerate(df.to_dict("records"), start=2):
        layer = str(record[ColumnNames.LAYER.value])
        if layer not in valid_layers:
            errors.append(f"line {line}: unknown layer '{layer}'")
            continue
        try:
            shadowed = int(record[ColumnNames.SHADOWED.value])
            row = int(record[ColumnNames.ROW.value])
            col = int(record[ColumnNames.COL.value])
        except (TypeError, ValueError):
            errors.append(f"line {line}: non-integer shadowed/row/col")
            continue
        if shadowed not in (0, 1):
            errors.append(f"line {line}: shadowed flag must be 0 or 1, got {shadowed}")
            continue
        try:
            roi = RegionOfInterest(row, col, Layer(layer), shadowed=bool(shadowed), size=size)
        except ValidationError as e:
            errors.append(f"line {line}: {e}")
            continue
        table.setdefault(str(record[ColumnNames.STEM.value]), []).append(roi)

    if errors:
        raise ValidationError(f"{path}:\n" + "\n".join(errors))
    return table


def split_by_layer(
    rois: list[RegionOfInterest],
) -> dict[Layer, tuple[list[RegionOfInterest], list[RegionOfInterest]]]:
    """Group one image's windows into (clear, shadowed) per layer."""
    out: dict[Layer, tuple[list[RegionOfInterest], list[RegionOfInterest]]] = {}
    for roi in rois:
        clear, shadowed = out.setdefault(roi.layer_label, ([], []))
        (shadowed if roi.shadowed else clear).append(roi)
    return out
