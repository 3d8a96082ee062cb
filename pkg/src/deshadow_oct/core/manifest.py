"""Run manifest written into every artifact directory.

A manifest records what is needed to reproduce the directory: the config and
its hash, the seed, the package version and the backbone identity. It holds no
timestamps so that seeded reruns produce identical bytes.
"""

import json
from pathlib import Path

from pydantic import BaseModel, Field

from deshadow_oct import __version__
from deshadow_oct.core.dataset import MANIFEST_FILE


class LedgerEntry(BaseModel):
    """Epochs actually run at one schedule position."""

    position: int
    cycle: int
    phase: str
    epochs: int


class RunManifest(BaseModel):
    command: str = Field(description="Sub-command that produced the directory")
    config_hash: str
    seed: int
    code_version: str = __version__
    config: dict = Field(default_factory=dict, description="Embedded config (JSON form)")
    backbone_checksum: str | None = None
    taps: list[int] | None = None
    n_backbone_convs: int | None = None
    phase_ledger: list[LedgerEntry] = Field(default_factory=list)
    outputs: dict[str, str] = Field(
        default_factory=dict, description="Artifact name -> path relative to the directory"
    )
    notes: dict[str, object] = Field(default_factory=dict)

    def save(self, out_dir: Path) -> Path:
        """Write ``manifest.json`` into ``out_dir``, replacing an older one."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_FILE
        data = self.model_dump(mode="json")
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_FILE
        if not path.exists():
            raise FileNotFoundError(f"Manifest not found: {path}")
        return cls.model_validate_json(path.read_text())
