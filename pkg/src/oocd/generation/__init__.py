"""Synthetic caption/image generation behind pluggable backends."""

from .backends import (CaptionBackend, ImageBackend, MockCaptionBackend,
                       MockImageBackend, SubprocessCaptionBackend,
                       SubprocessImageBackend, register_caption_backend,
                       register_image_backend, resolve_caption_backend,
                       resolve_image_backend)
from .cache import ArtifactCache, GenerationFailure
from .config import GenerationConfig, SyntheticPair
from .pipeline import (GenerationOutcome, condense_captions, generate_caption,
                       generate_image, generate_pairs, load_pairs)

__all__ = [
    "ArtifactCache",
    "CaptionBackend",
    "GenerationConfig",
    "GenerationFailure",
    "GenerationOutcome",
    "ImageBackend",
    "MockCaptionBackend",
    "MockImageBackend",
    "SubprocessCaptionBackend",
    "SubprocessImageBackend",
    "SyntheticPair",
    "condense_captions",
    "generate_caption",
    "generate_image",
    "generate_pairs",
    "load_pairs",
    "register_caption_backend",
    "register_image_backend",
    "resolve_caption_backend",
    "resolve_image_backend",
]
