"""Random paired affine augmentation used during training only."""

from deshadow_oct.augment.affine import AffineParams, AugmentConfig, augment_pair, sample_params

__all__ = ["AffineParams", "AugmentConfig", "augment_pair", "sample_params"]
