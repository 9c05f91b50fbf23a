"""Persistent artifact cache for generated captions and images.

Layout, per config hash::

    <cache_root>/<config_hash>/<sample_id>.caption.txt
    <cache_root>/<config_hash>/<sample_id>.image.png
    <cache_root>/<config_hash>/failures.jsonl

Sample ids are percent-encoded in filenames so arbitrary id strings stay
filesystem-safe. Writes are first-writer-wins: an artifact is staged to a
temp file and hard-linked into place, so a concurrent duplicate producer
loses the race and discards its copy instead of overwriting.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable
from urllib.parse import quote

from ..imagery import CanonicalImage

__all__ = ["ArtifactCache", "GenerationFailure"]


@dataclass(frozen=True)
class GenerationFailure:
    """Ledger entry for a sample whose generation did not complete."""

    sample_id: str
    stage: str  # "caption" or "image"
    error: str

    def to_json(self) -> dict:
        return {"sample_id": self.sample_id, "stage": self.stage,
                "error": self.error}


def _safe(sample_id: str) -> str:
    return quote(sample_id, safe="")


class ArtifactCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def namespace(self, config_hash: str) -> Path:
        return self.root / config_hash

    def caption_path(self, config_hash: str, sample_id: str) -> Path:
        return self.namespace(config_hash) / f"{_safe(sample_id)}.caption.txt"

    def image_path(self, config_hash: str, sample_id: str) -> Path:
        return self.namespace(config_hash) / f"{_safe(sample_id)}.image.png"

    def ledger_path(self, config_hash: str) -> Path:
        return self.namespace(config_hash) / "failures.jsonl"

    def get_caption(self, config_hash: str, sample_id: str) -> str | None:
        path = self.caption_path(config_hash, sample_id)
        if path.is_file():
            return path.read_text(encoding="utf-8")
        return None

    def put_caption(self, config_hash: str, sample_id: str,
                    caption: str) -> bool:
        path = self.caption_path(config_hash, sample_id)
        return self._write_once(path, caption.encode("utf-8"))

    def get_image_path(self, config_hash: str, sample_id: str) -> Path | None:
        path = self.image_path(config_hash, sample_id)
        return path if path.is_file() else None

    def put_image(self, config_hash: str, sample_id: str,
                  image: CanonicalImage) -> Path:
        path = self.image_path(config_hash, sample_id)
        import io

        buffer = io.BytesIO()
        image.to_pil().save(buffer, format="PNG")
        self._write_once(path, buffer.getvalue())
        return path

    def write_failures(self, config_hash: str,
                       failures: Iterable[GenerationFailure]) -> Path:
        """Rewrite the failure ledger with this run's failures."""
        path = self.ledger_path(config_hash)
        failures = list(failures)
        if not failures:
            if path.exists():
                path.unlink()
            return path
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for failure in failures:
                handle.write(json.dumps(failure.to_json(), sort_keys=True))
                handle.write("\n")
        return path

    def read_failures(self, config_hash: str) -> list[GenerationFailure]:
        path = self.ledger_path(config_hash)
        if not path.is_file():
            return []
        out = []
        for raw in path.read_text(encoding="utf-8").splitlines():
            if raw.strip():
                doc = json.loads(raw)
                out.append(GenerationFailure(doc["sample_id"], doc["stage"],
                                             doc["error"]))
        return out

    @staticmethod
    def _write_once(path: Path, data: bytes) -> bool:
        """Atomically create ``path`` with ``data``; False if it existed."""
        if path.exists():
            return False
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".stage-")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
                handle.flush()
                os.fsync(handle.fileno())
            try:
                os.link(tmp, path)
                return True
            except FileExistsError:
                return False
        finally:
            os.unlink(tmp)
