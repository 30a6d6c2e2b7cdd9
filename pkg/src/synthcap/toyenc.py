"""Deterministic toy text/image encoders.

These stand in for a real contrastive encoder pair at desk scale.  The
text encoder hashes each token into a reproducible pseudo-random vector
and L2-normalizes the token sum.  The image encoder starts from the text
vector and adds a fixed "gap" direction (scaled by ``gap_scale``) plus
per-item Gaussian noise (scaled by ``noise_scale``), so paired rows stay
correlated while the two modalities occupy measurably different regions
of the sphere.  Both encoders are pure functions of their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .rng import fnv1a64, standard_normals, uniform_signed

GAP_SEED_XOR = 0x6761705F  # ASCII "gap_"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ToyEncoderSpec:
    """Shape and randomness parameters for the toy encoders."""

    dim: int = 64
    seed: int = 0
    gap_scale: float = 0.5
    noise_scale: float = 0.1

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValidationError(f"encoder dim must be >= 2, got {self.dim}")
        if self.gap_scale < 0 or self.noise_scale < 0:
            raise ValidationError("gap_scale and noise_scale must be >= 0")


def _token_vector(token: str, spec: ToyEncoderSpec) -> np.ndarray:
    h = fnv1a64(token.encode("utf-8")) ^ (spec.seed & _MASK64)
    return uniform_signed(h, spec.dim)


def toy_text_encode(tokens: list[str], spec: ToyEncoderSpec) -> np.ndarray:
    """Unit vector for a token sequence: hash-expand each token, sum, normalize."""
    if not tokens:
        raise ValidationError("cannot encode an empty token list")
    total = np.zeros(spec.dim, dtype=np.float64)
    for token in tokens:
        total += _token_vector(token, spec)
    norm = float(np.linalg.norm(total))
    if norm == 0.0:
        raise NumericalError("token vectors summed to zero (degenerate hash collision)")
    return total / norm


def gap_direction(spec: ToyEncoderSpec) -> np.ndarray:
    """The fixed unit vector along which image features are displaced."""
    vec = uniform_signed((spec.seed & _MASK64) ^ GAP_SEED_XOR, spec.dim)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise NumericalError("gap direction collapsed to zero")
    return vec / norm


def toy_image_encode(tokens: list[str], item_index: int, spec: ToyEncoderSpec) -> np.ndarray:
    """Unit vector simulating the image-side feature paired with ``tokens``.

    normalize(text + gap_scale * g + noise_scale * eta), where g is the
    fixed gap direction and eta is a per-item standard-normal vector.
    """
    vec = toy_text_encode(tokens, spec)
    if spec.gap_scale == 0.0 and spec.noise_scale == 0.0:
        return vec
    if spec.gap_scale > 0.0:
        vec = vec + spec.gap_scale * gap_direction(spec)
    if spec.noise_scale > 0.0:
        eta = standard_normals((spec.seed & _MASK64) ^ (item_index & _MASK64), spec.dim)
        vec = vec + spec.noise_scale * eta
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise NumericalError("image feature collapsed to zero")
    return vec / norm


def encode_texts(token_lists: list[list[str]], spec: ToyEncoderSpec) -> np.ndarray:
    """Stack text encodings for many token lists, caching per-token vectors."""
    cache: dict[str, np.ndarray] = {}
    out = np.empty((len(token_lists), spec.dim), dtype=np.float64)
    for i, tokens in enumerate(token_lists):
        if not tokens:
            raise ValidationError(f"item {i}: cannot encode an empty token list")
        total = np.zeros(spec.dim, dtype=np.float64)
        for token in tokens:
            vec = cache.get(token)
            if vec is None:
                vec = _token_vector(token, spec)
                cache[token] = vec
            total += vec
        norm = float(np.linalg.norm(total))
        if norm == 0.0:
            raise NumericalError(f"item {i}: token vectors summed to zero")
        out[i] = total / norm
    return out


def encode_images(
    token_lists: list[list[str]], spec: ToyEncoderSpec, index_offset: int = 0
) -> np.ndarray:
    """Stack image encodings; row i uses item index ``index_offset + i``."""
    text = encode_texts(token_lists, spec)
    if spec.gap_scale == 0.0 and spec.noise_scale == 0.0:
        return text
    out = text
    if spec.gap_scale > 0.0:
        out = out + spec.gap_scale * gap_direction(spec)
    if spec.noise_scale > 0.0:
        noise = np.stack(
            [
                standard_normals((spec.seed & _MASK64) ^ ((index_offset + i) & _MASK64), spec.dim)
                for i in range(len(token_lists))
            ]
        )
        out = out + spec.noise_scale * noise
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise NumericalError("an image feature collapsed to zero")
    return out / norms
