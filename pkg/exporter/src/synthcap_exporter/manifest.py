"""Export manifest: one JSON file describing a full export job.

The manifest names the input corpus, the three output files, the models
to run, and the knobs that control generation.  Everything an export
needs lives here so a job can be rerun byte for byte from the same file.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

from .errors import ManifestError

BACKENDS = ("offline", "pretrained")


@dataclass(frozen=True)
class ExportManifest:
    """Validated description of an export job.

    Paths are kept as written; relative paths resolve against the
    process working directory, not the manifest location.
    """

    corpus: str
    out_text: str
    out_image: str
    out_corpus: str
    errors_out: str | None = None
    backend: str = "offline"
    text_model: str = "openai/clip-vit-base-patch32"
    image_model: str = "runwayml/stable-diffusion-v1-5"
    detector_model: str = "facebook/detr-resnet-50"
    sampling_steps: int = 20
    image_size: int = 512
    device: str = "cpu"
    batch_size: int = 8
    seed: int = 0
    feature_dim: int = 64
    confidence_threshold: float = 0.7
    keep_images: str | None = None

    def __post_init__(self) -> None:
        for field in ("corpus", "out_text", "out_image", "out_corpus"):
            value = getattr(self, field)
            if not isinstance(value, str) or not value:
                raise ManifestError(f"{field} must be a non-empty path")
        if self.backend not in BACKENDS:
            raise ManifestError(
                f"unknown backend {self.backend!r}, expected one of {BACKENDS}"
            )
        for field in ("sampling_steps", "image_size", "batch_size", "feature_dim"):
            value = getattr(self, field)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ManifestError(f"{field} must be a positive integer")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ManifestError("seed must be an integer")
        if not isinstance(self.confidence_threshold, (int, float)) or not (
            0.0 <= float(self.confidence_threshold) <= 1.0
        ):
            raise ManifestError("confidence_threshold must lie in [0, 1]")
        outs = [self.out_text, self.out_image, self.out_corpus]
        if len(set(outs)) != len(outs):
            raise ManifestError("output paths must be distinct")

    @property
    def sidecar_path(self) -> str:
        """Where the per-item error list is written."""
        if self.errors_out is not None:
            return self.errors_out
        return self.out_image + ".errors.json"


def from_dict(raw: dict) -> ExportManifest:
    """Build a manifest from parsed JSON, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExportManifest)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ManifestError(f"unknown manifest keys: {', '.join(unknown)}")
    missing = sorted(
        f.name
        for f in dataclasses.fields(ExportManifest)
        if f.default is dataclasses.MISSING and f.name not in raw
    )
    if missing:
        raise ManifestError(f"missing manifest keys: {', '.join(missing)}")
    return ExportManifest(**raw)


def load_manifest(path: str) -> ExportManifest:
    """Read and validate a manifest JSON file."""
    if not os.path.exists(path):
        raise ManifestError(f"manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    return from_dict(raw)
