"""Command modules for the deshadow-oct CLI."""
