"""The export job: corpus in, aligned feature files and tagged corpus out.

Row order in every output matches the input corpus, so row i of the
text features, row i of the image features, and line i of the tagged
corpus all describe the same caption.  A caption whose generation fails
does not abort the job: its image-feature row is all zeros, its tag
list is empty, and the failure is recorded in a JSON sidecar next to
the image features.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .backends import Backend, build_backend
from .formats import CorpusRecord, read_input_corpus, write_corpus, write_embeddings
from .manifest import ExportManifest


def row_seed(seed: int, index: int) -> int:
    """Generation seed for one corpus row.

    Derived by hashing so nearby job seeds do not produce overlapping
    per-row streams.  Stable across runs and platforms.
    """
    digest = hashlib.blake2b(
        f"{seed}:{index}".encode("ascii"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") >> 1


@dataclass(frozen=True)
class ItemError:
    """One failed caption: where it was and what went wrong."""

    index: int
    id: str
    error: str


@dataclass(frozen=True)
class ExportReport:
    """What an export produced."""

    total: int
    failed: int
    out_text: str
    out_image: str
    out_corpus: str
    sidecar: str
    errors: list[ItemError] = field(default_factory=list)


def _select_tags(detections, threshold: float) -> list[str]:
    """Lowercase labels at or above the confidence cut, first seen first,
    no repeats."""
    kept: list[str] = []
    seen: set[str] = set()
    for det in detections:
        if det.confidence < threshold:
            continue
        label = det.label.lower().strip()
        if not label or label in seen:
            continue
        seen.add(label)
        kept.append(label)
    return kept


def run_export(manifest: ExportManifest, backend: Backend | None = None) -> ExportReport:
    """Run one export job end to end.

    A caller may pass a prebuilt backend (tests do); otherwise the
    manifest decides.  Returns a report; all output paths in it have
    been written, including the sidecar, which holds an empty list when
    every caption succeeded.
    """
    records = read_input_corpus(manifest.corpus)
    if backend is None:
        backend = build_backend(manifest)

    texts = [r.text for r in records]
    text_rows = []
    for start in range(0, len(texts), manifest.batch_size):
        text_rows.append(backend.encode_texts(texts[start : start + manifest.batch_size]))
    text_features = np.concatenate(text_rows, axis=0)

    if manifest.keep_images is not None:
        os.makedirs(manifest.keep_images, exist_ok=True)

    image_features = np.zeros((len(records), backend.feature_dim), dtype=np.float32)
    tagged: list[CorpusRecord] = []
    errors: list[ItemError] = []
    for i, record in enumerate(records):
        seed_i = row_seed(manifest.seed, i)
        try:
            image = backend.generate_image(record.text, seed_i)
            vector = backend.encode_image(image)
            detections = backend.detect_objects(image)
            if manifest.keep_images is not None:
                backend.save_image(
                    image,
                    os.path.join(manifest.keep_images, backend.image_filename(record.id)),
                )
        except Exception as exc:
            errors.append(ItemError(index=i, id=record.id, error=str(exc)))
            tagged.append(CorpusRecord(id=record.id, text=record.text, objects=[]))
            continue
        image_features[i] = vector
        tags = _select_tags(detections, manifest.confidence_threshold)
        tagged.append(CorpusRecord(id=record.id, text=record.text, objects=tags))

    write_embeddings(manifest.out_text, text_features)
    write_embeddings(manifest.out_image, image_features)
    write_corpus(manifest.out_corpus, tagged)
    with open(manifest.sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(
            [{"index": e.index, "id": e.id, "error": e.error} for e in errors],
            fh,
            indent=2,
        )
        fh.write("\n")

    return ExportReport(
        total=len(records),
        failed=len(errors),
        out_text=manifest.out_text,
        out_image=manifest.out_image,
        out_corpus=manifest.out_corpus,
        sidecar=manifest.sidecar_path,
        errors=errors,
    )
