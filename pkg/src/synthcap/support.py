"""Softmax projection of image-side features onto a text-feature support set.

Any query vector is re-expressed as a convex combination of the support
rows, weighted by a temperature-scaled softmax over cosine similarities.
Similarities use normalized vectors; the combination uses the raw
(stored) support rows.  The same operation serves training (projecting
refined pseudo features) and inference (projecting real image features).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError


@dataclass
class SupportSet:
    """Frozen text-feature matrix plus projection temperature.

    ``top_k=None`` keeps the full softmax; an integer keeps only the k
    largest weights (ties toward the lowest row index) renormalized to 1.
    """

    features: np.ndarray
    temperature: float
    top_k: Optional[int] = None
    unit_rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValidationError("support set needs a non-empty 2-D feature matrix")
        if self.temperature <= 0:
            raise ValidationError("projection temperature must be > 0")
        if self.top_k is not None and not (1 <= self.top_k <= self.features.shape[0]):
            raise ValidationError(
                f"top_k must be in [1, {self.features.shape[0]}], got {self.top_k}"
            )
        norms = np.linalg.norm(self.features, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValidationError("support set contains a zero row")
        self.unit_rows = self.features / norms

    @property
    def size(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


def build_support_set(
    features: np.ndarray, temperature: float, top_k: Optional[int] = None
) -> SupportSet:
    """Store ``features`` verbatim with precomputed row norms."""
    return SupportSet(features=np.array(features, dtype=np.float64), temperature=temperature, top_k=top_k)


def _query_weights(queries: np.ndarray, support: SupportSet) -> np.ndarray:
    queries = np.asarray(queries, dtype=np.float64)
    if queries.shape[-1] != support.dim:
        raise ValidationError(
            f"query dim {queries.shape[-1]} does not match support dim {support.dim}"
        )
    norms = np.linalg.norm(queries, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValidationError("cannot project a zero query")
    sims = (queries / norms) @ support.unit_rows.T
    logits = sims / support.temperature
    shifted = logits - logits.max(axis=-1, keepdims=True)
    expv = np.exp(shifted)
    weights = expv / expv.sum(axis=-1, keepdims=True)
    k = support.top_k
    if k is not None and k < support.size:
        # keep the k largest weights per row, ties toward the lowest index
        order = np.argsort(-weights, axis=-1, kind="stable")
        kept = np.zeros_like(weights)
        idx = order[..., :k]
        np.put_along_axis(kept, idx, np.take_along_axis(weights, idx, axis=-1), axis=-1)
        weights = kept / kept.sum(axis=-1, keepdims=True)
    return weights


def projection_weights(query: np.ndarray, support: SupportSet) -> np.ndarray:
    """Softmax weights (summing to 1) of ``query`` over the support rows."""
    return _query_weights(np.asarray(query, dtype=np.float64)[None, :], support)[0]


def project(query: np.ndarray, support: SupportSet) -> np.ndarray:
    """Weighted combination of the raw support rows for one query vector."""
    return projection_weights(query, support) @ support.features


def project_matrix(queries: np.ndarray, support: SupportSet) -> np.ndarray:
    """Row-wise :func:`project` for a whole query matrix."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise ValidationError("project_matrix expects a 2-D query matrix")
    return _query_weights(queries, support) @ support.features
