"""deshadow-oct - adversarial shadow detection and removal for OCT B-scans."""

__version__ = "0.1.0"
