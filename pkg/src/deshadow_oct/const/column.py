from enum import Enum


class ColumnNames(Enum):
    # ROI file
    STEM = "stem"
    LAYER = "layer"
    SHADOWED = "shadowed"
    ROW = "row"
    COL = "col"

    # training logs
    POSITION = "position"
    STEP = "step"
    CYCLE = "cycle"
    PHASE = "phase"
    EPOCH = "epoch"
    CONTENT = "content"
    STYLE = "style"
    SHADOW = "shadow"
    TV = "tv"
    TOTAL = "total"
    BCE = "bce"
    LEARNING_RATE = "lr"

    # evaluation
    METHOD = "method"
    CONTRAST = "contrast"
    COLUMN = "column"
    INTENSITY = "intensity"


class Method(Enum):
    BASELINE = "baseline"
    DESHADOWED = "deshadowed"
    COMPENSATED = "compensated"


class Phase(Enum):
    DETECTOR_PRETRAIN = "detector_pretrain"
    REMOVER = "remover"
    DETECTOR_ON_REMOVED = "detector_on_removed"
    DETECTOR_ON_GT = "detector_on_gt"
