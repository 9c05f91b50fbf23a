"""Canonical image handling shared by generation and embedding.

Everything that hashes or embeds an image goes through
:class:`CanonicalImage` so that "the same picture" always means the same
bytes: decoded RGB pixels prefixed with their dimensions, independent of
the container format the file happened to use.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EncoderFailure

__all__ = ["CanonicalImage", "load_image"]


@dataclass(frozen=True)
class CanonicalImage:
    width: int
    height: int
    rgb: bytes  # row-major, 3 bytes per pixel

    @classmethod
    def from_pixels(cls, pixels: np.ndarray) -> "CanonicalImage":
        arr = np.ascontiguousarray(pixels, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) uint8 pixels, got {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], rgb=arr.tobytes())

    @classmethod
    def from_pil(cls, image: Image.Image) -> "CanonicalImage":
        rgb = image.convert("RGB")
        return cls(width=rgb.width, height=rgb.height, rgb=rgb.tobytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "CanonicalImage":
        with Image.open(io.BytesIO(data)) as img:
            return cls.from_pil(img)

    @classmethod
    def from_path(cls, path: str | Path) -> "CanonicalImage":
        with Image.open(path) as img:
            return cls.from_pil(img)

    @property
    def canonical_bytes(self) -> bytes:
        return b"rgb:%d:%d:" % (self.width, self.height) + self.rgb

    @property
    def pixel_hash(self) -> str:
        """16-hex-char content hash of the decoded pixels."""
        return hashlib.blake2b(self.canonical_bytes, digest_size=8).hexdigest()

    def to_array(self) -> np.ndarray:
        arr = np.frombuffer(self.rgb, dtype=np.uint8)
        return arr.reshape(self.height, self.width, 3)

    def to_pil(self) -> Image.Image:
        return Image.frombytes("RGB", (self.width, self.height), self.rgb)

    def resized(self, width: int, height: int) -> "CanonicalImage":
        if (width, height) == (self.width, self.height):
            return self
        return CanonicalImage.from_pil(
            self.to_pil().resize((width, height), Image.BILINEAR))

    def save_png(self, path: str | Path) -> None:
        # Lossless container so downstream embedding sees these exact pixels.
        self.to_pil().save(path, format="PNG")


def load_image(image) -> CanonicalImage:
    """Coerce a path, raw bytes, pixel array, or PIL image to canonical form."""
    if isinstance(image, CanonicalImage):
        return image
    try:
        if isinstance(image, (str, Path)):
            return CanonicalImage.from_path(image)
        if isinstance(image, bytes):
            return CanonicalImage.from_bytes(image)
        if isinstance(image, np.ndarray):
            return CanonicalImage.from_pixels(image)
        if isinstance(image, Image.Image):
            return CanonicalImage.from_pil(image)
    except (OSError, ValueError) as exc:
        raise EncoderFailure(f"cannot decode image {image!r}: {exc}") from exc
    raise EncoderFailure(f"unsupported image input type {type(image)!r}")
