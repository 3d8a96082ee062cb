"""Core utilities: configuration, datasets, checkpoints, manifests and seeding."""
