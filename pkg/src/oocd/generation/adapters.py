"""Reference out-of-process adapters for real generator models.

These serve the line-oriented JSON protocol documented in
:mod:`oocd.generation.backends` and are installed as the console scripts
``oocd-caption-adapter`` (BLIP-2 captioning via ``transformers``) and
``oocd-image-adapter`` (latent diffusion via ``diffusers``, DDIM sampler,
Stable Diffusion v1.4 weights). Both need the ``real`` extra plus model
weights; neither is required by the core pipeline or the test suite,
which run on the mock backends.

Point a run at them with backend ids like::

    "backend_caption": "adapter:oocd-caption-adapter"
    "backend_image":   "adapter:oocd-image-adapter"
"""

from __future__ import annotations

import base64
import io
import json
import sys
from typing import Callable


def _serve(handle: Callable[[dict, dict], dict]) -> None:
    """Answer one JSON request per stdin line until EOF."""
    for raw in sys.stdin:
        if not raw.strip():
            continue
        try:
            request = json.loads(raw)
            result = handle(request.get("payload", {}),
                            request.get("config", {}))
            response = {"id": request.get("id"), "ok": True, "result": result}
        except Exception as exc:  # report, keep serving
            response = {"id": request.get("id") if isinstance(request, dict)
                        else None, "ok": False, "error": str(exc)}
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()


def caption_adapter_main() -> None:
    try:
        import torch
        from PIL import Image
        from transformers import Blip2ForConditionalGeneration, Blip2Processor
    except ImportError as exc:
        sys.stderr.write(f"caption adapter needs the 'real' extra: {exc}\n")
        raise SystemExit(2)

    model_name = "Salesforce/blip2-opt-2.7b"
    processor = Blip2Processor.from_pretrained(model_name)
    model = Blip2ForConditionalGeneration.from_pretrained(
        model_name,
        torch_dtype=torch.float16 if torch.cuda.is_available() else torch.float32,
    )
    device = "cuda" if torch.cuda.is_available() else "cpu"
    model.to(device).eval()

    def handle(payload: dict, config: dict) -> dict:
        image = Image.open(io.BytesIO(
            base64.b64decode(payload["image_base64"]))).convert("RGB")
        torch.manual_seed(int(config.get("seed", 0)))
        inputs = processor(images=image, return_tensors="pt").to(device)
        candidates = []
        k = int(config.get("candidate_count", 1))
        with torch.no_grad():
            out = model.generate(
                **inputs,
                num_beams=max(4, k),
                num_return_sequences=k,
                max_new_tokens=int(config.get("max_caption_tokens", 64)),
            )
        for seq in out:
            text = processor.decode(seq, skip_special_tokens=True).strip()
            if text:
                candidates.append(text)
        return {"captions": candidates or ["(no caption)"]}

    _serve(handle)


def image_adapter_main() -> None:
    try:
        import torch
        from diffusers import DDIMScheduler, StableDiffusionPipeline
    except ImportError as exc:
        sys.stderr.write(f"image adapter needs the 'real' extra: {exc}\n")
        raise SystemExit(2)

    model_name = "CompVis/stable-diffusion-v1-4"
    pipe = StableDiffusionPipeline.from_pretrained(model_name)
    pipe.scheduler = DDIMScheduler.from_config(pipe.scheduler.config)
    device = "cuda" if torch.cuda.is_available() else "cpu"
    pipe = pipe.to(device)

    def handle(payload: dict, config: dict) -> dict:
        generator = torch.Generator(device=device).manual_seed(
            int(config.get("seed", 0)))
        result = pipe(
            payload["prompt"],
            num_inference_steps=int(config.get("ddim_steps", 500)),
            guidance_scale=float(config.get("guidance_scale", 7.5)),
            height=int(config.get("resolution", 512)),
            width=int(config.get("resolution", 512)),
            generator=generator,
        )
        buffer = io.BytesIO()
        result.images[0].save(buffer, format="PNG")
        return {"image_base64": base64.b64encode(buffer.getvalue()).decode("ascii")}

    _serve(handle)
