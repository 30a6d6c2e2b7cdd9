"""Model backends that turn captions into features, images, and tags.

Two implementations share one interface.  The offline backend is pure
numpy, fully deterministic, and needs no model weights or network; it
exists so exports, formats, and downstream loading can be exercised
anywhere.  The pretrained backend wires up a contrastive text encoder,
a diffusion text-to-image model, and an object detector, and is only
importable when the heavyweight extras are installed.
"""

from __future__ import annotations

import hashlib
import json
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import BackendError

_WORD = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class DetectedObject:
    """One detector hit: a label and its confidence in [0, 1]."""

    label: str
    confidence: float


class Backend(ABC):
    """Everything an export job asks of its models."""

    feature_dim: int

    @abstractmethod
    def encode_texts(self, texts: list[str]) -> np.ndarray:
        """Embed captions; returns float32 rows aligned with the input."""

    @abstractmethod
    def generate_image(self, text: str, row_seed: int) -> object:
        """Render one caption to an opaque image object."""

    @abstractmethod
    def encode_image(self, image: object) -> np.ndarray:
        """Embed a generated image as one float32 vector."""

    @abstractmethod
    def detect_objects(self, image: object) -> list[DetectedObject]:
        """Run detection over a generated image; unthresholded hits."""

    @abstractmethod
    def save_image(self, image: object, path: str) -> None:
        """Persist one generated image for inspection."""

    @abstractmethod
    def image_filename(self, item_id: str) -> str:
        """File name used when keeping this backend's images."""


@dataclass(frozen=True)
class _OfflineImage:
    vector: np.ndarray
    words: tuple[str, ...]
    row_seed: int


class OfflineBackend(Backend):
    """Deterministic stand-in models built from hashes.

    Text features come from per-token hash vectors so captions sharing
    words land near each other.  The "image" for a caption is its text
    vector plus seeded noise, which keeps each image closest to its own
    caption.  Detection replays caption words with hash-derived
    confidences so threshold filtering has real effect.

    `fail_marker` is a testing hook: generation raises for any caption
    containing the marker, exercising the failed-item path.
    """

    def __init__(
        self,
        feature_dim: int = 64,
        seed: int = 0,
        fail_marker: str | None = None,
    ) -> None:
        if feature_dim <= 0:
            raise BackendError("feature_dim must be positive")
        self.feature_dim = feature_dim
        self.seed = seed
        self.fail_marker = fail_marker
        self._salt = f"offline:{seed}".encode("utf-8")

    def _hash_rng(self, *parts: str) -> np.random.Generator:
        digest = hashlib.blake2b(
            "\x1f".join(parts).encode("utf-8"), digest_size=8, key=self._salt
        ).digest()
        return np.random.default_rng(int.from_bytes(digest, "little"))

    def _hash01(self, *parts: str) -> float:
        digest = hashlib.blake2b(
            "\x1f".join(parts).encode("utf-8"), digest_size=8, key=self._salt
        ).digest()
        return int.from_bytes(digest, "little") / 2.0**64

    def _text_vector(self, text: str) -> np.ndarray:
        words = _WORD.findall(text.lower())
        if not words:
            vec = self._hash_rng("raw", text).standard_normal(self.feature_dim)
        else:
            vec = np.zeros(self.feature_dim)
            for word in words:
                vec += self._hash_rng("token", word).standard_normal(self.feature_dim)
        norm = np.linalg.norm(vec)
        if norm < 1e-8:
            vec = self._hash_rng("fallback", text).standard_normal(self.feature_dim)
            norm = np.linalg.norm(vec)
        return (vec / norm).astype(np.float32)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        return np.stack([self._text_vector(t) for t in texts])

    def generate_image(self, text: str, row_seed: int) -> _OfflineImage:
        if self.fail_marker is not None and self.fail_marker in text:
            raise BackendError(f"generation failed for marked caption: {text!r}")
        base = self._text_vector(text).astype(np.float64)
        noise = np.random.default_rng(row_seed).standard_normal(self.feature_dim)
        noise /= np.linalg.norm(noise)
        vec = base + 0.35 * noise
        vec /= np.linalg.norm(vec)
        words = tuple(dict.fromkeys(_WORD.findall(text.lower())))
        return _OfflineImage(vector=vec.astype(np.float32), words=words, row_seed=row_seed)

    def encode_image(self, image: object) -> np.ndarray:
        assert isinstance(image, _OfflineImage)
        return image.vector

    def detect_objects(self, image: object) -> list[DetectedObject]:
        assert isinstance(image, _OfflineImage)
        return [
            DetectedObject(label=word, confidence=self._hash01("detect", word))
            for word in image.words
        ]

    def save_image(self, image: object, path: str) -> None:
        # No pixels exist offline; a descriptor keeps the bookkeeping honest.
        assert isinstance(image, _OfflineImage)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"row_seed": image.row_seed, "words": list(image.words)},
                fh,
            )
            fh.write("\n")

    def image_filename(self, item_id: str) -> str:
        return f"{item_id}.json"


class PretrainedBackend(Backend):
    """Real models: contrastive text/image encoder, text-to-image
    diffusion, and an object detector.

    Constructing this class downloads or loads the named checkpoints,
    so the imports happen lazily and failures surface as BackendError.
    """

    def __init__(
        self,
        text_model: str,
        image_model: str,
        detector_model: str,
        device: str = "cpu",
        sampling_steps: int = 20,
        image_size: int = 512,
    ) -> None:
        try:
            import torch
            from diffusers import StableDiffusionPipeline
            from transformers import (
                CLIPModel,
                CLIPProcessor,
                DetrForObjectDetection,
                DetrImageProcessor,
            )
        except ImportError as exc:
            raise BackendError(
                "pretrained backend requires the optional model stack; "
                "install synthcap-exporter[real]"
            ) from exc
        self._torch = torch
        self.device = device
        self.sampling_steps = sampling_steps
        self.image_size = image_size
        try:
            self._clip = CLIPModel.from_pretrained(text_model).to(device).eval()
            self._clip_proc = CLIPProcessor.from_pretrained(text_model)
            self._pipe = StableDiffusionPipeline.from_pretrained(image_model).to(device)
            self._pipe.set_progress_bar_config(disable=True)
            self._detector = (
                DetrForObjectDetection.from_pretrained(detector_model).to(device).eval()
            )
            self._detector_proc = DetrImageProcessor.from_pretrained(detector_model)
        except Exception as exc:
            raise BackendError(f"failed to load a pretrained model: {exc}") from exc
        self.feature_dim = int(self._clip.config.projection_dim)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            inputs = self._clip_proc(
                text=texts, return_tensors="pt", padding=True, truncation=True
            ).to(self.device)
            feats = self._clip.get_text_features(**inputs)
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)

    def generate_image(self, text: str, row_seed: int) -> object:
        generator = self._torch.Generator(device=self.device).manual_seed(row_seed)
        result = self._pipe(
            text,
            num_inference_steps=self.sampling_steps,
            height=self.image_size,
            width=self.image_size,
            generator=generator,
        )
        return result.images[0]

    def encode_image(self, image: object) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            inputs = self._clip_proc(images=image, return_tensors="pt").to(self.device)
            feats = self._clip.get_image_features(**inputs)
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)[0]

    def detect_objects(self, image: object) -> list[DetectedObject]:
        torch = self._torch
        with torch.no_grad():
            inputs = self._detector_proc(images=image, return_tensors="pt").to(self.device)
            outputs = self._detector(**inputs)
            target_size = torch.tensor([[self.image_size, self.image_size]])
            hits = self._detector_proc.post_process_object_detection(
                outputs, threshold=0.0, target_sizes=target_size
            )[0]
        labels = self._detector.config.id2label
        return [
            DetectedObject(label=labels[int(idx)], confidence=float(score))
            for score, idx in zip(hits["scores"], hits["labels"])
        ]

    def save_image(self, image: object, path: str) -> None:
        image.save(path)

    def image_filename(self, item_id: str) -> str:
        return f"{item_id}.png"


def build_backend(manifest) -> Backend:
    """Construct the backend a manifest names."""
    if manifest.backend == "offline":
        return OfflineBackend(feature_dim=manifest.feature_dim, seed=manifest.seed)
    return PretrainedBackend(
        text_model=manifest.text_model,
        image_model=manifest.image_model,
        detector_model=manifest.detector_model,
        device=manifest.device,
        sampling_steps=manifest.sampling_steps,
        image_size=manifest.image_size,
    )
