"""Synthetic-pair production: caption from image, image from caption.

For each source sample this produces the generated caption (from the
original image) and the generated image (from the original caption),
routed through the artifact cache so repeated runs cost zero backend
calls. Generated images are produced at the configured resolution and
then resized to the source image's own size before being stored as PNG.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from ..corpus import Sample
from ..errors import EncoderFailure, GenerationFailed
from ..imagery import CanonicalImage, load_image
from .backends import (CaptionBackend, ImageBackend, resolve_caption_backend,
                       resolve_image_backend)
from .cache import ArtifactCache, GenerationFailure
from .config import GenerationConfig, SyntheticPair

__all__ = [
    "GenerationOutcome",
    "generate_caption",
    "generate_image",
    "generate_pairs",
    "load_pairs",
    "condense_captions",
]


class TextEmbedder(Protocol):
    def embed_text(self, text: str) -> np.ndarray: ...


@dataclass
class GenerationOutcome:
    """Pairs produced (input order preserved) plus the failure ledger."""

    pairs: list[SyntheticPair] = field(default_factory=list)
    failures: list[GenerationFailure] = field(default_factory=list)
    caption_backend_calls: int = 0
    image_backend_calls: int = 0


def condense_captions(candidates: Sequence[str],
                      condenser: TextEmbedder) -> str:
    """Reduce candidate captions to one by picking the medoid.

    The kept caption is the candidate whose summed cosine similarity to
    all candidates is largest under the given text embedder; ties go to
    the earliest candidate. With a single candidate no embedding happens.
    """
    if len(candidates) == 1:
        return candidates[0]
    vectors = np.stack([np.asarray(condenser.embed_text(c), dtype=np.float64)
                        for c in candidates])
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    unit = vectors / norms
    sims = unit @ unit.T
    return candidates[int(np.argmax(sims.sum(axis=1)))]


def _cap_tokens(caption: str, max_tokens: int) -> str:
    tokens = caption.split()
    if len(tokens) <= max_tokens:
        return caption
    return " ".join(tokens[:max_tokens])


def generate_caption(image, backend: CaptionBackend, config: GenerationConfig,
                     *, condenser: TextEmbedder | None = None) -> str:
    """One caption for the image, condensing multiple candidates if needed."""
    try:
        canonical = load_image(image)
    except EncoderFailure as exc:
        raise GenerationFailed(str(exc)) from exc
    candidates = backend.generate(canonical, config)
    if len(candidates) > 1:
        if condenser is None:
            raise GenerationFailed(
                "multiple caption candidates but no condenser embedder given")
        caption = condense_captions(candidates, condenser)
    else:
        caption = candidates[0]
    caption = _cap_tokens(caption, config.max_caption_tokens)
    if not caption.strip():
        raise GenerationFailed("backend produced an empty caption")
    return caption


def generate_image(caption: str, backend: ImageBackend,
                   config: GenerationConfig,
                   *, native_size: tuple[int, int] | None = None
                   ) -> CanonicalImage:
    """Image for the caption at config resolution, resized to native size."""
    if not caption.strip():
        raise GenerationFailed("cannot generate an image from an empty caption")
    pixels = backend.generate(caption, config)
    image = CanonicalImage.from_pixels(pixels)
    if native_size is not None:
        image = image.resized(*native_size)
    return image


def _produce_pair(sample: Sample, config: GenerationConfig,
                  cache: ArtifactCache, caption_backend: CaptionBackend,
                  image_backend: ImageBackend,
                  condenser: TextEmbedder | None,
                  caption_lock: threading.Lock,
                  image_lock: threading.Lock) -> SyntheticPair:
    chash = config.config_hash

    caption = cache.get_caption(chash, sample.id)
    if caption is None:
        try:
            original = CanonicalImage.from_path(sample.image_path)
        except OSError as exc:
            raise GenerationFailed(
                f"cannot read source image {sample.image_path}: {exc}",
                sample_id=sample.id) from exc
        with caption_lock:
            caption = generate_caption(original, caption_backend, config,
                                       condenser=condenser)
        cache.put_caption(chash, sample.id, caption)

    image_path = cache.get_image_path(chash, sample.id)
    if image_path is None:
        try:
            source = CanonicalImage.from_path(sample.image_path)
        except OSError as exc:
            raise GenerationFailed(
                f"cannot read source image {sample.image_path}: {exc}",
                sample_id=sample.id) from exc
        with image_lock:
            generated = generate_image(sample.caption, image_backend, config,
                                       native_size=(source.width,
                                                    source.height))
        image_path = cache.put_image(chash, sample.id, generated)

    return SyntheticPair(sample_id=sample.id, generated_caption=caption,
                         generated_image_path=image_path, config_hash=chash)


class _NullLock:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def generate_pairs(samples: Sequence[Sample], config: GenerationConfig,
                   cache: ArtifactCache, *,
                   caption_backend: CaptionBackend | None = None,
                   image_backend: ImageBackend | None = None,
                   condenser: TextEmbedder | None = None,
                   workers: int = 1) -> GenerationOutcome:
    """Produce one synthetic pair per sample, reusing cached artifacts.

    Per-sample failures are collected into the ledger (also persisted as
    ``failures.jsonl`` in the cache namespace); the successful pairs are
    still returned, in input order. Only a total failure raises. Backends
    that do not declare themselves reentrant are serialized even when
    ``workers`` > 1.
    """
    if caption_backend is None:
        caption_backend = resolve_caption_backend(config.backend_caption)
    if image_backend is None:
        image_backend = resolve_image_backend(config.backend_image)

    caption_lock = _NullLock() if caption_backend.reentrant else threading.Lock()
    image_lock = _NullLock() if image_backend.reentrant else threading.Lock()

    outcome = GenerationOutcome()
    results: list[SyntheticPair | GenerationFailure | None]
    results = [None] * len(samples)

    def work(idx: int, sample: Sample) -> None:
        try:
            results[idx] = _produce_pair(
                sample, config, cache, caption_backend, image_backend,
                condenser, caption_lock, image_lock)
        except GenerationFailed as exc:
            stage = "caption" if cache.get_caption(
                config.config_hash, sample.id) is None else "image"
            results[idx] = GenerationFailure(sample.id, stage, str(exc))

    if workers > 1 and samples:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for idx, sample in enumerate(samples):
                pool.submit(work, idx, sample)
    else:
        for idx, sample in enumerate(samples):
            work(idx, sample)

    for item in results:
        if isinstance(item, SyntheticPair):
            outcome.pairs.append(item)
        elif isinstance(item, GenerationFailure):
            outcome.failures.append(item)

    cache.write_failures(config.config_hash, outcome.failures)
    outcome.caption_backend_calls = caption_backend.calls
    outcome.image_backend_calls = image_backend.calls

    if samples and not outcome.pairs:
        raise GenerationFailed(
            f"all {len(samples)} samples failed; first error: "
            f"{outcome.failures[0].error}")
    return outcome


def load_pairs(samples: Sequence[Sample], config: GenerationConfig,
               cache: ArtifactCache
               ) -> tuple[list[SyntheticPair], list[str]]:
    """Reconstruct cached pairs; returns (pairs, ids missing artifacts)."""
    chash = config.config_hash
    pairs: list[SyntheticPair] = []
    missing: list[str] = []
    for sample in samples:
        caption = cache.get_caption(chash, sample.id)
        image_path = cache.get_image_path(chash, sample.id)
        if caption is None or image_path is None:
            missing.append(sample.id)
            continue
        pairs.append(SyntheticPair(sample_id=sample.id,
                                   generated_caption=caption,
                                   generated_image_path=image_path,
                                   config_hash=chash))
    return pairs, missing
