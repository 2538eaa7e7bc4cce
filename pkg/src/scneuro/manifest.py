from datetime import UTC, datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

MANIFEST_NAME = "manifest.json"


def code_version() -> str:
    try:
        return version("scneuro")
    except PackageNotFoundError:
        return "unknown"


class RunManifest(BaseModel):
    """Everything needed to reproduce one CLI run and find its outputs."""

    command: str
    config: dict[str, Any]
    options: dict[str, Any] = Field(default_factory=dict)
    seed: int
    code_version: str = Field(default_factory=code_version)
    outputs: list[str] = Field(default_factory=list)
    created: datetime = Field(default_factory=lambda: datetime.now(UTC))
    wall_clock: float = 0.0
    events_per_second: float = 0.0

    def write(self, out_dir: Path) -> Path:
        path = out_dir / MANIFEST_NAME
        path.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
