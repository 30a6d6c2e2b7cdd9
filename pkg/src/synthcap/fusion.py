"""Attention pooling of object-tag text features into one auxiliary vector.

A single query (the image-side feature) attends over the text encodings
of the detected object tags.  A learned null key/value pair is always
prepended in projected key/value space, so the empty tag list is
well-defined: with no objects the output depends only on the parameters.
The parameters train jointly with the caption decoder.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .errors import ValidationError


class FusionParams:
    """Projection matrices, output matrix, null pair, and head count."""

    def __init__(self, dim: int, heads: int = 4, seed: int = 0):
        if dim % heads != 0:
            raise ValidationError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        rng = np.random.Generator(np.random.PCG64(seed))
        scale = 1.0 / np.sqrt(dim)
        self.w_query = Tensor(rng.normal(0.0, scale, (dim, dim)), requires_grad=True)
        self.w_key = Tensor(rng.normal(0.0, scale, (dim, dim)), requires_grad=True)
        self.w_value = Tensor(rng.normal(0.0, scale, (dim, dim)), requires_grad=True)
        self.w_out = Tensor(rng.normal(0.0, scale, (dim, dim)), requires_grad=True)
        self.null_key = Tensor(rng.normal(0.0, 0.02, (dim,)), requires_grad=True)
        self.null_value = Tensor(rng.normal(0.0, 0.02, (dim,)), requires_grad=True)

    def named_tensors(self, prefix: str = "fusion") -> dict[str, Tensor]:
        return {
            f"{prefix}.w_query": self.w_query,
            f"{prefix}.w_key": self.w_key,
            f"{prefix}.w_value": self.w_value,
            f"{prefix}.w_out": self.w_out,
            f"{prefix}.null_key": self.null_key,
            f"{prefix}.null_value": self.null_value,
        }


class ObjectFeatureSet:
    """Text encodings of object tags, one row per tag."""

    def __init__(self, features: np.ndarray, tags: list[str]):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValidationError("object features must be 2-D (m x dim)")
        if features.shape[0] != len(tags):
            raise ValidationError("one feature row per tag required")
        self.features = features
        self.tags = list(tags)

    @property
    def count(self) -> int:
        return int(self.features.shape[0])


def encode_objects(
    objects: list[str], encoder: Callable[[str], np.ndarray], dim: int
) -> ObjectFeatureSet:
    """Encode each tag with ``encoder``; an empty list yields a 0 x dim set."""
    if not objects:
        return ObjectFeatureSet(np.zeros((0, dim)), [])
    rows = []
    for tag in objects:
        vec = np.asarray(encoder(tag), dtype=np.float64)
        if vec.shape != (dim,):
            raise ValidationError(f"encoder returned shape {vec.shape} for tag {tag!r}")
        rows.append(vec)
    return ObjectFeatureSet(np.stack(rows), objects)


def fuse_batch(
    queries: Tensor,
    objects: Tensor,
    key_mask: Optional[np.ndarray],
    params: FusionParams,
) -> Tensor:
    """Batched attention pooling inside the autograd graph.

    ``queries`` is (B, d); ``objects`` is (B, M, d) with padded rows
    masked out by ``key_mask`` (B, M boolean, True = real row); the null
    pair occupies key slot 0 and is never masked.  Returns (B, d).
    """
    b = queries.data.shape[0]
    m = objects.data.shape[1]
    d, h = params.dim, params.heads
    dh = d // h

    q = ag.matmul(queries, params.w_query)                        # (B, d)
    flat = ag.reshape(objects, (b * m, d)) if m else None
    if m:
        keys_obj = ag.reshape(ag.matmul(flat, params.w_key), (b, m, d))
        vals_obj = ag.reshape(ag.matmul(flat, params.w_value), (b, m, d))
        null_k = ag.reshape(params.null_key, (1, 1, d))
        null_v = ag.reshape(params.null_value, (1, 1, d))
        ones = Tensor(np.ones((b, 1, 1)))
        keys = ag.concat([ag.mul(ones, null_k), keys_obj], axis=1)  # (B, M+1, d)
        vals = ag.concat([ag.mul(ones, null_v), vals_obj], axis=1)
    else:
        ones = Tensor(np.ones((b, 1, 1)))
        keys = ag.mul(ones, ag.reshape(params.null_key, (1, 1, d)))
        vals = ag.mul(ones, ag.reshape(params.null_value, (1, 1, d)))

    # split heads: (B, h, 1, dh) x (B, h, dh, M+1)
    q_heads = ag.reshape(q, (b, 1, h, dh))
    q_heads = ag.swapaxes(q_heads, 1, 2)                          # (B, h, 1, dh)
    k_heads = ag.swapaxes(ag.reshape(keys, (b, m + 1, h, dh)), 1, 2)
    v_heads = ag.swapaxes(ag.reshape(vals, (b, m + 1, h, dh)), 1, 2)
    logits = ag.mul(ag.matmul(q_heads, ag.swapaxes(k_heads, 2, 3)), 1.0 / np.sqrt(dh))
    mask = None
    if key_mask is not None and m:
        full = np.concatenate([np.ones((b, 1), dtype=bool), key_mask.astype(bool)], axis=1)
        mask = np.where(full, 0.0, -1e30)[:, None, None, :]       # (B, 1, 1, M+1)
    attn = ag.softmax(logits, mask=mask)                          # (B, h, 1, M+1)
    pooled = ag.matmul(attn, v_heads)                             # (B, h, 1, dh)
    pooled = ag.reshape(ag.swapaxes(pooled, 1, 2), (b, d))
    return ag.matmul(pooled, params.w_out)


def fuse(query: np.ndarray, objects: ObjectFeatureSet, params: FusionParams) -> np.ndarray:
    """Pool one object set with one query; pure function of its inputs."""
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (params.dim,):
        raise ValidationError(f"query shape {query.shape} does not match dim {params.dim}")
    if objects.count and objects.features.shape[1] != params.dim:
        raise ValidationError("object feature dim does not match fusion dim")
    out = fuse_batch(
        Tensor(query[None, :]),
        Tensor(objects.features[None, :, :]),
        None,
        params,
    )
    return out.data[0]


def attention_weights(
    query: np.ndarray, objects: ObjectFeatureSet, params: FusionParams
) -> np.ndarray:
    """Per-head softmax weights over [null] + object rows; shape (h, m+1)."""
    q = np.asarray(query, dtype=np.float64) @ params.w_query.data
    if objects.count:
        keys = np.concatenate(
            [params.null_key.data[None, :], objects.features @ params.w_key.data]
        )
    else:
        keys = params.null_key.data[None, :]
    h, dh = params.heads, params.dim // params.heads
    q_heads = q.reshape(h, dh)
    k_heads = keys.reshape(-1, h, dh)
    logits = np.einsum("hd,khd->hk", q_heads, k_heads) / np.sqrt(dh)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    return expv / expv.sum(axis=1, keepdims=True)
