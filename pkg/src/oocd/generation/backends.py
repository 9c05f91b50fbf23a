"""Caption and image generator backends.

Two contracts are defined here:

* a caption backend turns an image into one or more candidate captions;
* an image backend turns a prompt string into square RGB pixels at the
  configured resolution.

Both must be deterministic for a fixed (input, config). The built-in mock
backends are hash-driven and integer-only, so they are bit-identical
across platforms and need no model weights. Real models run out of
process behind :class:`SubprocessBackend`, which speaks a line-oriented
JSON protocol on the child's stdin/stdout:

    request : {"id": ..., "kind": "caption"|"image", "payload": ..., "config": ...}
    response: {"id": ..., "ok": true, "result": ...}
              {"id": ..., "ok": false, "error": "..."}

Caption payloads carry ``{"image_base64": <PNG>}`` and return
``{"captions": [...]}``; image payloads carry ``{"prompt": <text>}`` and
return ``{"image_base64": <PNG>}``.

Backends are addressed by string id. ``register_caption_backend`` /
``register_image_backend`` add factories; ids of the form
``adapter:<command line>`` spawn the given command as a protocol adapter.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import shlex
import subprocess
import threading
from typing import Callable

import numpy as np

from ..errors import BackendUnavailable, GenerationFailed
from ..imagery import CanonicalImage
from .config import GenerationConfig

__all__ = [
    "CaptionBackend",
    "ImageBackend",
    "MockCaptionBackend",
    "MockImageBackend",
    "SubprocessCaptionBackend",
    "SubprocessImageBackend",
    "register_caption_backend",
    "register_image_backend",
    "resolve_caption_backend",
    "resolve_image_backend",
]


class CaptionBackend:
    """Image -> candidate captions. Subclasses implement ``_generate``."""

    #: safe to call concurrently from several workers
    reentrant = False

    def __init__(self) -> None:
        self.calls = 0

    def generate(self, image: CanonicalImage,
                 config: GenerationConfig) -> list[str]:
        self.calls += 1
        captions = self._generate(image, config)
        if not captions:
            raise GenerationFailed("caption backend returned no candidates")
        return captions

    def _generate(self, image: CanonicalImage,
                  config: GenerationConfig) -> list[str]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class ImageBackend:
    """Prompt -> square RGB pixel array at ``config.resolution``."""

    reentrant = False

    def __init__(self) -> None:
        self.calls = 0

    def generate(self, prompt: str, config: GenerationConfig) -> np.ndarray:
        self.calls += 1
        pixels = self._generate(prompt, config)
        expected = (config.resolution, config.resolution, 3)
        if pixels.shape != expected:
            raise GenerationFailed(
                f"image backend produced shape {pixels.shape}, "
                f"expected {expected}")
        return pixels

    def _generate(self, prompt: str, config: GenerationConfig) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass


class MockCaptionBackend(CaptionBackend):
    """Hash-defined captions: candidate 1 is ``mock-caption-<pixel hash>``.

    Extra candidates (when ``config.candidate_count`` > 1) append an
    ``-alt<k>`` suffix. Pure function of the pixels, no floating point.
    """

    reentrant = True

    def _generate(self, image: CanonicalImage,
                  config: GenerationConfig) -> list[str]:
        base = f"mock-caption-{image.pixel_hash}"
        captions = [base]
        for k in range(2, config.candidate_count + 1):
            captions.append(f"{base}-alt{k}")
        return captions


class MockImageBackend(ImageBackend):
    """Procedural pixels from an extendable hash of (prompt, seed, size)."""

    reentrant = True

    def _generate(self, prompt: str, config: GenerationConfig) -> np.ndarray:
        material = f"{prompt}\x00{config.seed}\x00{config.resolution}"
        n = config.resolution * config.resolution * 3
        raw = hashlib.shake_256(material.encode("utf-8")).digest(n)
        arr = np.frombuffer(raw, dtype=np.uint8)
        return arr.reshape(config.resolution, config.resolution, 3).copy()


class _SubprocessClient:
    """One adapter child process plus the request plumbing around it."""

    def __init__(self, command: list[str]):
        self._command = command
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()
        self._next_id = 0

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self._command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise BackendUnavailable(
                    f"cannot start adapter {self._command!r}: {exc}") from exc
        return self._proc

    def request(self, kind: str, payload: dict,
                config: GenerationConfig) -> dict:
        with self._lock:
            proc = self._ensure_started()
            self._next_id += 1
            req = {
                "id": self._next_id,
                "kind": kind,
                "payload": payload,
                "config": config.to_json(),
            }
            assert proc.stdin is not None and proc.stdout is not None
            try:
                proc.stdin.write(json.dumps(req) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise BackendUnavailable(
                    f"adapter {self._command!r} died: {exc}") from exc
            if not line:
                raise BackendUnavailable(
                    f"adapter {self._command!r} closed its output")
            try:
                resp = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GenerationFailed(
                    f"adapter sent malformed response: {line!r}") from exc
            if resp.get("id") != req["id"]:
                raise GenerationFailed(
                    f"adapter answered request {resp.get('id')!r}, "
                    f"expected {req['id']}")
            if not resp.get("ok"):
                raise GenerationFailed(
                    f"adapter error: {resp.get('error', 'unknown')}")
            return resp.get("result", {})

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None


class SubprocessCaptionBackend(CaptionBackend):
    def __init__(self, command: list[str]):
        super().__init__()
        self._client = _SubprocessClient(command)

    def _generate(self, image: CanonicalImage,
                  config: GenerationConfig) -> list[str]:
        buffer = io.BytesIO()
        image.to_pil().save(buffer, format="PNG")
        payload = {
            "image_base64": base64.b64encode(buffer.getvalue()).decode("ascii")
        }
        result = self._client.request("caption", payload, config)
        captions = result.get("captions")
        if not isinstance(captions, list) or not captions:
            raise GenerationFailed("adapter returned no 'captions' list")
        return [str(c) for c in captions]

    def close(self) -> None:
        self._client.close()


class SubprocessImageBackend(ImageBackend):
    def __init__(self, command: list[str]):
        super().__init__()
        self._client = _SubprocessClient(command)

    def _generate(self, prompt: str, config: GenerationConfig) -> np.ndarray:
        result = self._client.request("image", {"prompt": prompt}, config)
        encoded = result.get("image_base64")
        if not isinstance(encoded, str):
            raise GenerationFailed("adapter returned no 'image_base64'")
        png = base64.b64decode(encoded)
        return CanonicalImage.from_bytes(png).to_array()

    def close(self) -> None:
        self._client.close()


_CAPTION_FACTORIES: dict[str, Callable[[], CaptionBackend]] = {
    "mock-caption": MockCaptionBackend,
}
_IMAGE_FACTORIES: dict[str, Callable[[], ImageBackend]] = {
    "mock-image": MockImageBackend,
}


def register_caption_backend(backend_id: str,
                             factory: Callable[[], CaptionBackend]) -> None:
    _CAPTION_FACTORIES[backend_id] = factory


def register_image_backend(backend_id: str,
                           factory: Callable[[], ImageBackend]) -> None:
    _IMAGE_FACTORIES[backend_id] = factory


def resolve_caption_backend(backend_id: str) -> CaptionBackend:
    if backend_id in _CAPTION_FACTORIES:
        return _CAPTION_FACTORIES[backend_id]()
    if backend_id.startswith("adapter:"):
        return SubprocessCaptionBackend(shlex.split(backend_id[len("adapter:"):]))
    raise BackendUnavailable(f"no caption backend registered as '{backend_id}'")


def resolve_image_backend(backend_id: str) -> ImageBackend:
    if backend_id in _IMAGE_FACTORIES:
        return _IMAGE_FACTORIES[backend_id]()
    if backend_id.startswith("adapter:"):
        return SubprocessImageBackend(shlex.split(backend_id[len("adapter:"):]))
    raise BackendUnavailable(f"no image backend registered as '{backend_id}'")
