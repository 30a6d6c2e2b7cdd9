"""Readers and writers for the interchange files the exporter emits.

Two formats cross the boundary to the captioning library: a binary
embedding matrix and a caption corpus in JSON Lines.  Both are written
here from scratch against their documented layouts so this package
stands alone.

Embedding file layout, little endian:

    magic   4 bytes  b"SYNE"
    version u32      1
    rows    u32
    dim     u32
    dtype   u8       0 (float32)
    payload rows*dim float32 values, row major

Corpus lines are JSON objects with string "id", string "text", and an
"objects" array of strings.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ExportError

_HEADER = struct.Struct("<4sIIIB")
_MAGIC = b"SYNE"
_VERSION = 1
_DTYPE_F32 = 0


def write_embeddings(path: str, rows: np.ndarray) -> None:
    """Write a 2-D float array as an embedding file.

    Values must be finite; zero rows are allowed (they mark items whose
    generation failed).
    """
    arr = np.asarray(rows, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ExportError(f"embeddings must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ExportError("embeddings contain non-finite values")
    header = _HEADER.pack(_MAGIC, _VERSION, arr.shape[0], arr.shape[1], _DTYPE_F32)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes(order="C"))


@dataclass(frozen=True)
class CorpusRecord:
    """One caption with its identifier and object tags."""

    id: str
    text: str
    objects: list[str] = field(default_factory=list)


def read_input_corpus(path: str) -> list[CorpusRecord]:
    """Load the captions an export job will process.

    Requires unique non-empty ids and non-empty text.  Any "objects"
    already present are carried along but the export overwrites them
    with detector output.
    """
    records: list[CorpusRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ExportError(f"{path}:{lineno}: expected a JSON object")
            rid = obj.get("id")
            text = obj.get("text")
            if not isinstance(rid, str) or not rid:
                raise ExportError(f"{path}:{lineno}: id must be a non-empty string")
            if not isinstance(text, str) or not text.strip():
                raise ExportError(f"{path}:{lineno}: text must be a non-empty string")
            if rid in seen:
                raise ExportError(f"{path}:{lineno}: duplicate id {rid!r}")
            seen.add(rid)
            objects = obj.get("objects", [])
            if not isinstance(objects, list) or any(
                not isinstance(tag, str) for tag in objects
            ):
                raise ExportError(f"{path}:{lineno}: objects must be an array of strings")
            records.append(CorpusRecord(id=rid, text=text, objects=list(objects)))
    if not records:
        raise ExportError(f"{path}: corpus is empty")
    return records


def write_corpus(path: str, records: list[CorpusRecord]) -> None:
    """Write records as JSON Lines in the given order."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(
                json.dumps(
                    {"id": record.id, "text": record.text, "objects": record.objects},
                    ensure_ascii=False,
                )
            )
            fh.write("\n")
