"""Networks: frozen ResNet-152 feature extractor, shadow detector and shadow remover."""

from deshadow_oct.nets.backbone import (
    Backbone,
    BackboneConfig,
    BackboneMode,
    FeatureStack,
    backbone_from_config,
    load_backbone,
)
from deshadow_oct.nets.common import count_parameters, freeze, frozen, weights_hash
from deshadow_oct.nets.detector import DetectorConfig, ShadowDetector, bce_loss, detector_loss
from deshadow_oct.nets.remover import RemoverConfig, ShadowRemover, remover_infer_batch

__all__ = [
    "Backbone",
    "BackboneConfig",
    "BackboneMode",
    "DetectorConfig",
    "FeatureStack",
    "RemoverConfig",
    "ShadowDetector",
    "ShadowRemover",
    "backbone_from_config",
    "bce_loss",
    "count_parameters",
    "detector_loss",
    "freeze",
    "frozen",
    "load_backbone",
    "remover_infer_batch",
    "weights_hash",
]
