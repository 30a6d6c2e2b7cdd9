"""Contrastive refinement of pseudo image features toward paired text features.

The image-side matrix S is optimized so each row gains cosine similarity
with its aligned text row and loses similarity with the other text rows
in the mini-batch; the text matrix is frozen throughout.  Gradients are
taken with respect to S only and applied with Adam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError


def cosine_sim(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two nonzero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine similarity of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def _normalize_rows(m: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValidationError(f"{what} contains a zero row")
    return m / norms, norms[:, 0]


def _check_pair(image: np.ndarray, text: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    image = np.asarray(image, dtype=np.float64)
    text = np.asarray(text, dtype=np.float64)
    if image.shape != text.shape or image.ndim != 2:
        raise ValidationError(
            f"feature matrices must share one 2-D shape, got {image.shape} vs {text.shape}"
        )
    return image, text


def similarity_matrix(image: np.ndarray, text: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities between image rows and text rows."""
    image, text = _check_pair(image, text)
    im, _ = _normalize_rows(image, "image matrix")
    tx, _ = _normalize_rows(text, "text matrix")
    return im @ tx.T


def contrastive_loss(image: np.ndarray, text: np.ndarray, temperature: float) -> float:
    """Mean InfoNCE over rows: -log softmax of the aligned similarity.

    Uniform similarities give exactly ln(batch); a single row gives 0.
    """
    if temperature <= 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    sims = similarity_matrix(image, text)
    logits = sims / temperature
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1))
    diag = np.diag(shifted)
    return float(np.mean(logsumexp - diag))


def contrastive_grad(image: np.ndarray, text: np.ndarray, temperature: float) -> np.ndarray:
    """Analytic gradient of :func:`contrastive_loss` w.r.t. the image rows.

    The text matrix is a constant.  Derivation: with normalized rows
    s_i, t_j and P the row softmax of sims/temperature, dL/dsim_ij =
    (P_ij - delta_ij) / (b * temperature); the cosine chain rule adds a
    projection off each row's own direction and a 1/||row|| factor.
    """
    if temperature <= 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    image, text = _check_pair(image, text)
    im, im_norms = _normalize_rows(image, "image matrix")
    tx, _ = _normalize_rows(text, "text matrix")
    sims = im @ tx.T
    b = image.shape[0]
    logits = sims / temperature
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=1, keepdims=True)
    coeff = (probs - np.eye(b)) / (b * temperature)
    grad_dir = coeff @ tx                       # d loss / d s_i, pre-projection
    radial = (coeff * sims).sum(axis=1)         # component along s_i to remove
    grad = (grad_dir - radial[:, None] * im) / im_norms[:, None]
    return grad


@dataclass
class RefineConfig:
    """Optimization settings for feature refinement."""

    temperature: float = 0.01
    learning_rate: float = 1e-5
    epochs: int = 5
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.temperature <= 0 or self.learning_rate < 0:
            raise ValidationError("temperature must be > 0 and learning_rate >= 0")
        if self.batch_size < 2:
            raise ValidationError("batch_size must be >= 2 (loss is degenerate at 1)")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")


@dataclass
class RefineResult:
    features: np.ndarray
    epoch_losses: list[float] = field(default_factory=list)


def refine_features(image: np.ndarray, text: np.ndarray, cfg: RefineConfig) -> RefineResult:
    """Adam-optimize a copy of the image rows against the frozen text rows.

    Rows are shuffled each epoch; batches smaller than 2 are skipped.
    Adam moments are kept per row with per-row step counts, so each row's
    bias correction tracks how many times that row has actually moved.
    """
    image, text = _check_pair(image, text)
    n = image.shape[0]
    refined = image.copy()
    m = np.zeros_like(refined)
    v = np.zeros_like(refined)
    steps = np.zeros(n, dtype=np.int64)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    epoch_losses: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        batch_losses: list[float] = []
        for start in range(0, n, cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            if rows.size < 2:
                continue
            s_batch = refined[rows]
            t_batch = text[rows]
            loss = contrastive_loss(s_batch, t_batch, cfg.temperature)
            if not np.isfinite(loss):
                raise NumericalError("contrastive loss diverged to a non-finite value")
            batch_losses.append(loss)
            grad = contrastive_grad(s_batch, t_batch, cfg.temperature)
            steps[rows] += 1
            m[rows] = cfg.beta1 * m[rows] + (1 - cfg.beta1) * grad
            v[rows] = cfg.beta2 * v[rows] + (1 - cfg.beta2) * grad * grad
            t_count = steps[rows][:, None].astype(np.float64)
            m_hat = m[rows] / (1 - cfg.beta1 ** t_count)
            v_hat = v[rows] / (1 - cfg.beta2 ** t_count)
            refined[rows] = s_batch - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
        if batch_losses:
            epoch_losses.append(float(np.mean(batch_losses)))
    return RefineResult(features=refined, epoch_losses=epoch_losses)
