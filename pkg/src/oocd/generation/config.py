"""Generation hyperparameters and the synthetic-pair record."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

__all__ = ["GenerationConfig", "SyntheticPair"]


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs that fully determine what the generators produce.

    The hash of a config is a pure function of every field, so any change
    (steps, guidance, seed, resolution, backend choice, caption limits)
    lands generated artifacts in a fresh cache namespace.
    """

    ddim_steps: int = 500
    guidance_scale: float = 7.5
    seed: int = 42
    resolution: int = 512
    backend_caption: str = "mock-caption"
    backend_image: str = "mock-image"
    candidate_count: int = 1
    max_caption_tokens: int = 64

    def __post_init__(self) -> None:
        if self.ddim_steps < 1:
            raise ValueError("ddim_steps must be >= 1")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.guidance_scale <= 0:
            raise ValueError("guidance_scale must be positive")
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")
        if self.max_caption_tokens < 1:
            raise ValueError("max_caption_tokens must be >= 1")

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class SyntheticPair:
    """Generated caption and generated image for one source sample."""

    sample_id: str
    generated_caption: str
    generated_image_path: Path
    config_hash: str

    def validate(self) -> None:
        if not self.generated_caption.strip():
            raise ValueError(f"empty generated caption for {self.sample_id}")
        if not Path(self.generated_image_path).is_file():
            raise ValueError(
                f"missing generated image {self.generated_image_path}")
