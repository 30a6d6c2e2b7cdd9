"""Prefix-conditioned autoregressive transformer decoder, trained from scratch.

The caption is generated conditioned on one or two prefix slots: the
projected image feature, and (optionally) the pooled object feature from
:mod:`synthcap.fusion`.  Blocks are pre-norm (self-attention with a
causal mask, then a feed-forward), with learned positional embeddings and
a final layer norm before the vocabulary head.  Training minimizes mean
token cross-entropy over the caption tokens plus the end marker; the
prefix slots and the begin marker itself are never prediction targets.

During training the object pool is recomputed inside the graph each step
so the fusion parameters receive gradients.  At decode time the pool is a
fixed vector per image (it does not depend on generated tokens), so
callers compute it once with the same fusion code and pass it in.

Checkpoints are a ``SYNC`` container: a JSON header (config echo plus
caller-supplied metadata) followed by named float64 tensor blocks, byte
stable under read-then-write.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict
from typing import BinaryIO, Optional, Union

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .corpus import BOS, EOS, PAD, UNK
from .errors import FormatError, NumericalError, ValidationError
from .fusion import FusionParams, fuse_batch
from .optim import Adam

CKPT_MAGIC = b"SYNC"
CKPT_VERSION = 1
_DTYPE_F64 = 1
_BANNED_AT_DECODE = (PAD, BOS, UNK)


@dataclass
class DecoderConfig:
    """Architecture and training hyperparameters."""

    vocab_size: int
    feature_dim: int
    layers: int = 4
    heads: int = 4
    model_dim: int = 256
    ff_dim: int = 0  # 0 means 4 * model_dim
    max_len: int = 32
    dropout: float = 0.1
    use_aux: bool = True
    learning_rate: float = 2e-4
    epochs: int = 20
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.ff_dim == 0:
            self.ff_dim = 4 * self.model_dim
        if self.model_dim % self.heads != 0:
            raise ValidationError(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )
        if self.vocab_size <= UNK:
            raise ValidationError("vocab_size must cover the special tokens")
        if self.max_len < 4:
            raise ValidationError("max_len must leave room for prefix plus markers")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout must be in [0, 1)")
        if self.layers < 1 or self.heads < 1:
            raise ValidationError("layers and heads must be positive")


@dataclass
class PrefixInput:
    """Conditioning for one item: image feature and, when the model has an
    auxiliary slot, the already-pooled object feature."""

    v: np.ndarray
    u: Optional[np.ndarray] = None


@dataclass
class TrainItem:
    """One training example.

    ``fuse_query`` and ``object_features`` feed the fusion block; its
    parameters are trainable, so the pooled feature cannot be precomputed.
    ``token_ids`` is BOS .. EOS without padding.
    """

    v: np.ndarray
    token_ids: list[int]
    fuse_query: Optional[np.ndarray] = None
    object_features: Optional[np.ndarray] = None


class DecoderModel:
    """Parameter container; all learnable state lives in ``named``."""

    def __init__(self, config: DecoderConfig):
        self.config = config
        rng = np.random.Generator(np.random.PCG64(config.seed))
        d_model, d_feat = config.model_dim, config.feature_dim

        def normal(*shape: int, scale: float = 0.02) -> Tensor:
            return Tensor(rng.normal(0.0, scale, shape), requires_grad=True)

        def zeros(*shape: int) -> Tensor:
            return Tensor(np.zeros(shape), requires_grad=True)

        def ones(*shape: int) -> Tensor:
            return Tensor(np.ones(shape), requires_grad=True)

        self.named: dict[str, Tensor] = {}
        p = self.named
        p["tok_emb"] = normal(config.vocab_size, d_model)
        p["pos_emb"] = normal(config.max_len, d_model)
        p["prefix_v.w"] = normal(d_feat, d_model, scale=1.0 / np.sqrt(d_feat))
        p["prefix_v.b"] = zeros(d_model)
        if config.use_aux:
            p["prefix_u.w"] = normal(d_feat, d_model, scale=1.0 / np.sqrt(d_feat))
            p["prefix_u.b"] = zeros(d_model)
            self.fusion: Optional[FusionParams] = FusionParams(
                d_feat, heads=config.heads, seed=config.seed + 1
            )
            p.update(self.fusion.named_tensors())
        else:
            self.fusion = None
        for i in range(config.layers):
            pre = f"block{i}"
            p[f"{pre}.ln1.g"] = ones(d_model)
            p[f"{pre}.ln1.b"] = zeros(d_model)
            for name in ("q", "k", "v", "o"):
                p[f"{pre}.attn.w{name}"] = normal(
                    d_model, d_model, scale=1.0 / np.sqrt(d_model)
                )
                p[f"{pre}.attn.b{name}"] = zeros(d_model)
            p[f"{pre}.ln2.g"] = ones(d_model)
            p[f"{pre}.ln2.b"] = zeros(d_model)
            p[f"{pre}.ff.w1"] = normal(d_model, config.ff_dim, scale=1.0 / np.sqrt(d_model))
            p[f"{pre}.ff.b1"] = zeros(config.ff_dim)
            p[f"{pre}.ff.w2"] = normal(config.ff_dim, d_model, scale=1.0 / np.sqrt(config.ff_dim))
            p[f"{pre}.ff.b2"] = zeros(d_model)
        p["ln_f.g"] = ones(d_model)
        p["ln_f.b"] = zeros(d_model)
        p["head.w"] = normal(d_model, config.vocab_size, scale=1.0 / np.sqrt(d_model))
        p["head.b"] = zeros(config.vocab_size)

    @property
    def prefix_len(self) -> int:
        return 2 if self.config.use_aux else 1

    def parameters(self) -> dict[str, Tensor]:
        return self.named


def _causal_mask(length: int) -> np.ndarray:
    mask = np.where(np.tril(np.ones((length, length), dtype=bool)), 0.0, -1e30)
    return mask[None, None, :, :]


def _dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    if rng is None or rate <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate).astype(np.float64) / (1.0 - rate)
    return ag.mul(x, keep)


def _check_tokens(model: DecoderModel, tokens: np.ndarray) -> None:
    total = model.prefix_len + tokens.shape[1]
    if total > model.config.max_len:
        raise ValidationError(
            f"sequence length {total} exceeds max_len {model.config.max_len}"
        )
    if tokens.size and (tokens.min() < 0 or tokens.max() >= model.config.vocab_size):
        raise ValidationError("token id out of vocabulary range")


def _run_stack(
    model: DecoderModel,
    prefix_slots: list[Tensor],
    tokens: np.ndarray,
    dropout: Optional[tuple[float, np.random.Generator]] = None,
) -> Tensor:
    """Shared trunk: embed, add positions, run blocks, project to logits."""
    cfg = model.config
    p = model.named
    batch = tokens.shape[0]
    total = model.prefix_len + tokens.shape[1]
    slots = list(prefix_slots)
    slots.append(ag.gather_rows(p["tok_emb"], tokens))
    x = ag.concat(slots, axis=1)
    x = ag.add(x, ag.gather_rows(p["pos_emb"], np.arange(total)))

    rate, dropout_rng = dropout if dropout is not None else (0.0, None)
    mask = _causal_mask(total)
    nh, dh = cfg.heads, cfg.model_dim // cfg.heads
    for i in range(cfg.layers):
        pre = f"block{i}"
        h = ag.layer_norm(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
        flat = ag.reshape(h, (batch * total, cfg.model_dim))
        q = ag.add(ag.matmul(flat, p[f"{pre}.attn.wq"]), p[f"{pre}.attn.bq"])
        k = ag.add(ag.matmul(flat, p[f"{pre}.attn.wk"]), p[f"{pre}.attn.bk"])
        vv = ag.add(ag.matmul(flat, p[f"{pre}.attn.wv"]), p[f"{pre}.attn.bv"])
        q = ag.swapaxes(ag.reshape(q, (batch, total, nh, dh)), 1, 2)
        k = ag.swapaxes(ag.reshape(k, (batch, total, nh, dh)), 1, 2)
        vv = ag.swapaxes(ag.reshape(vv, (batch, total, nh, dh)), 1, 2)
        scores = ag.mul(ag.matmul(q, ag.swapaxes(k, 2, 3)), 1.0 / np.sqrt(dh))
        attn = ag.softmax(scores, mask=mask)
        ctx = ag.matmul(attn, vv)
        ctx = ag.reshape(ag.swapaxes(ctx, 1, 2), (batch * total, cfg.model_dim))
        proj = ag.add(ag.matmul(ctx, p[f"{pre}.attn.wo"]), p[f"{pre}.attn.bo"])
        proj = ag.reshape(proj, (batch, total, cfg.model_dim))
        x = ag.add(x, _dropout(proj, rate, dropout_rng))

        h2 = ag.layer_norm(x, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        flat2 = ag.reshape(h2, (batch * total, cfg.model_dim))
        inner = ag.gelu(ag.add(ag.matmul(flat2, p[f"{pre}.ff.w1"]), p[f"{pre}.ff.b1"]))
        ff = ag.add(ag.matmul(inner, p[f"{pre}.ff.w2"]), p[f"{pre}.ff.b2"])
        ff = ag.reshape(ff, (batch, total, cfg.model_dim))
        x = ag.add(x, _dropout(ff, rate, dropout_rng))

    x = ag.layer_norm(x, p["ln_f.g"], p["ln_f.b"])
    flat = ag.reshape(x, (batch * total, cfg.model_dim))
    out = ag.add(ag.matmul(flat, p["head.w"]), p["head.b"])
    return ag.reshape(out, (batch, total, cfg.vocab_size))


def _prefix_from_feature(model: DecoderModel, v: np.ndarray) -> Tensor:
    if v.ndim != 2 or v.shape[1] != model.config.feature_dim:
        raise ValidationError(
            f"feature shape {v.shape} does not match dim {model.config.feature_dim}"
        )
    p = model.named
    pv = ag.add(ag.matmul(Tensor(v), p["prefix_v.w"]), p["prefix_v.b"])
    return ag.reshape(pv, (v.shape[0], 1, model.config.model_dim))


def _prefix_from_pool(model: DecoderModel, pooled: Tensor) -> Tensor:
    p = model.named
    pu = ag.add(ag.matmul(pooled, p["prefix_u.w"]), p["prefix_u.b"])
    return ag.reshape(pu, (pooled.data.shape[0], 1, model.config.model_dim))


def _forward_fused(
    model: DecoderModel,
    v: np.ndarray,
    aux: Optional[tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]],
    tokens: np.ndarray,
    dropout: Optional[tuple[float, np.random.Generator]] = None,
) -> Tensor:
    """Training-path logits (B, prefix+L, vocab); fusion runs in-graph."""
    _check_tokens(model, tokens)
    slots = [_prefix_from_feature(model, v)]
    if model.config.use_aux:
        if aux is None:
            raise ValidationError("model uses the auxiliary slot but no aux inputs given")
        queries, objects, key_mask = aux
        pooled = fuse_batch(Tensor(queries), Tensor(objects), key_mask, model.fusion)
        slots.append(_prefix_from_pool(model, pooled))
    return _run_stack(model, slots, tokens, dropout)


def _forward_pooled(
    model: DecoderModel,
    v: np.ndarray,
    u: Optional[np.ndarray],
    tokens: np.ndarray,
) -> Tensor:
    """Decode-path logits; the pooled object feature is a fixed input."""
    _check_tokens(model, tokens)
    slots = [_prefix_from_feature(model, v)]
    if model.config.use_aux:
        if u is None:
            raise ValidationError("model uses the auxiliary slot; prefix.u is required")
        u2 = np.asarray(u, dtype=np.float64)
        if u2.ndim == 1:
            u2 = np.repeat(u2[None, :], tokens.shape[0], axis=0)
        slots.append(_prefix_from_pool(model, Tensor(u2)))
    return _run_stack(model, slots, tokens)


def forward(model: DecoderModel, prefix: PrefixInput, token_ids: list[int]) -> np.ndarray:
    """Logits for one item over every position, prefix slots included.

    Deterministic (no dropout).  ``token_ids`` must begin with BOS.
    """
    if not token_ids or token_ids[0] != BOS:
        raise ValidationError("token ids must begin with BOS")
    tokens = np.asarray([token_ids], dtype=np.int64)
    v = np.asarray(prefix.v, dtype=np.float64)[None, :]
    return _forward_pooled(model, v, prefix.u, tokens).data[0]


def _loss_from_logits(
    model: DecoderModel, logits: Tensor, tokens: np.ndarray
) -> tuple[Tensor, int]:
    """Mean cross-entropy over caption-token and end-marker predictions.

    Position prefix+k-1 predicts tokens[:, k]; padding is excluded.
    Returns the scalar loss tensor and the number of scored predictions.
    """
    cfg = model.config
    batch, length = tokens.shape
    total = model.prefix_len + length
    targets = np.zeros((batch, total), dtype=np.int64)
    weights = np.zeros((batch, total), dtype=np.float64)
    for k in range(1, length):
        pos = model.prefix_len + k - 1
        real = tokens[:, k] != PAD
        targets[real, pos] = tokens[real, k]
        weights[real, pos] = 1.0
    count = int(weights.sum())
    if count == 0:
        raise ValidationError("no prediction targets: captions need at least two ids")
    weights /= count
    flat = ag.reshape(logits, (batch * total, cfg.vocab_size))
    return ag.cross_entropy_logits(flat, targets.ravel(), weights.ravel()), count


def reconstruction_loss(
    model: DecoderModel, prefix: PrefixInput, token_ids: list[int]
) -> float:
    """Mean next-token cross-entropy for one caption (BOS .. EOS)."""
    if len(token_ids) < 2 or token_ids[0] != BOS:
        raise ValidationError("token ids must begin with BOS and contain a target")
    tokens = np.asarray([token_ids], dtype=np.int64)
    v = np.asarray(prefix.v, dtype=np.float64)[None, :]
    logits = _forward_pooled(model, v, prefix.u, tokens)
    loss, _ = _loss_from_logits(model, logits, tokens)
    return float(loss.data)


def _batch_arrays(
    model: DecoderModel, items: list[TrainItem]
) -> tuple[np.ndarray, Optional[tuple], np.ndarray]:
    cfg = model.config
    d = cfg.feature_dim
    batch = len(items)
    length = max(len(it.token_ids) for it in items)
    tokens = np.full((batch, length), PAD, dtype=np.int64)
    v = np.zeros((batch, d), dtype=np.float64)
    for i, it in enumerate(items):
        ids = it.token_ids
        if len(ids) < 2 or ids[0] != BOS or ids[-1] != EOS:
            raise ValidationError("training captions must be BOS .. EOS")
        tokens[i, : len(ids)] = ids
        vi = np.asarray(it.v, dtype=np.float64)
        if vi.shape != (d,):
            raise ValidationError(f"feature shape {vi.shape} != ({d},)")
        v[i] = vi
    if not cfg.use_aux:
        return v, None, tokens
    counts = []
    for it in items:
        if it.fuse_query is None:
            raise ValidationError("auxiliary slot enabled: fuse_query is required")
        obj = it.object_features
        counts.append(0 if obj is None else int(np.asarray(obj).shape[0]))
    m = max(counts)
    queries = np.zeros((batch, d), dtype=np.float64)
    objects = np.zeros((batch, m, d), dtype=np.float64)
    key_mask = np.zeros((batch, m), dtype=bool)
    for i, it in enumerate(items):
        queries[i] = np.asarray(it.fuse_query, dtype=np.float64)
        if counts[i]:
            objects[i, : counts[i]] = np.asarray(it.object_features, dtype=np.float64)
            key_mask[i, : counts[i]] = True
    return v, (queries, objects, key_mask if m else None), tokens


def train(
    model: DecoderModel,
    items: list[TrainItem],
    cfg: Optional[DecoderConfig] = None,
) -> list[float]:
    """Optimize in place; returns the mean batch loss per epoch.

    ``cfg`` overrides the training-loop fields (learning rate, epochs,
    batch size, dropout, seed); architecture fields still come from the
    model.  Deterministic for a fixed seed: epoch shuffling and dropout
    draw from generators seeded independently of each other.
    """
    cfg = cfg or model.config
    if not items:
        raise ValidationError("empty training set")
    opt = Adam(model.parameters(), learning_rate=cfg.learning_rate)
    shuffle_rng = np.random.Generator(np.random.PCG64((cfg.seed, 1)))
    dropout = (
        (cfg.dropout, np.random.Generator(np.random.PCG64((cfg.seed, 2))))
        if cfg.dropout > 0
        else None
    )
    history: list[float] = []
    order = np.arange(len(items))
    for epoch in range(cfg.epochs):
        shuffle_rng.shuffle(order)
        batch_losses: list[float] = []
        for start in range(0, len(items), cfg.batch_size):
            chunk = [items[j] for j in order[start : start + cfg.batch_size]]
            v, aux, tokens = _batch_arrays(model, chunk)
            logits = _forward_fused(model, v, aux, tokens, dropout)
            loss, _ = _loss_from_logits(model, logits, tokens)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch start {start}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            batch_losses.append(value)
        history.append(float(np.mean(batch_losses)))
    return history


def generate(
    model: DecoderModel,
    prefix: PrefixInput,
    beam_size: int = 1,
) -> list[int]:
    """Decode token ids (begin/end markers stripped).

    Greedy when ``beam_size`` is 1; otherwise a deterministic beam search
    scored by mean log-probability per generated step.  Padding, begin,
    and unknown markers are never emitted; ties pick the lowest id.
    """
    if beam_size < 1:
        raise ValidationError("beam_size must be >= 1")
    cfg = model.config
    v = np.asarray(prefix.v, dtype=np.float64)[None, :]
    # ids lists below always start with BOS; the sequence may grow until
    # prefix + len(ids) reaches max_len.
    budget = cfg.max_len - model.prefix_len

    def step_logprobs(ids: list[int]) -> np.ndarray:
        tokens = np.asarray([ids], dtype=np.int64)
        logits = _forward_pooled(model, v, prefix.u, tokens).data[0, -1]
        shifted = logits - logits.max()
        logp = shifted - np.log(np.exp(shifted).sum())
        logp[list(_BANNED_AT_DECODE)] = -np.inf
        return logp

    if beam_size == 1:
        ids = [BOS]
        while len(ids) < budget:
            nxt = int(np.argmax(step_logprobs(ids)))
            if nxt == EOS:
                break
            ids.append(nxt)
        return ids[1:]

    beams: list[tuple[list[int], float]] = [([BOS], 0.0)]
    finished: list[tuple[float, list[int]]] = []
    while beams:
        candidates: list[tuple[float, int, int, list[int]]] = []
        for b_idx, (ids, total) in enumerate(beams):
            logp = step_logprobs(ids)
            for tok in np.argsort(-logp, kind="stable")[:beam_size]:
                tok = int(tok)
                if not np.isfinite(logp[tok]):
                    continue
                candidates.append((total + logp[tok], b_idx, tok, ids))
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_beams: list[tuple[list[int], float]] = []
        for total, _, tok, ids in candidates[:beam_size]:
            generated = len(ids)  # prior tokens minus BOS, plus this step
            if tok == EOS:
                finished.append((total / generated, ids))
            elif len(ids) + 1 >= budget:
                finished.append((total / generated, ids + [tok]))
            else:
                next_beams.append((ids + [tok], total))
        beams = next_beams
        if len(finished) >= beam_size:
            break
    if not finished:
        return []
    finished.sort(key=lambda f: (-f[0], f[1]))
    return finished[0][1][1:]


# --- checkpoint container -------------------------------------------------

PathOrStream = Union[str, BinaryIO]


def _canonical_json(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(
    sink: PathOrStream,
    model: DecoderModel,
    metadata: Optional[dict] = None,
    extra_tensors: Optional[dict[str, np.ndarray]] = None,
) -> None:
    """Write model weights plus caller metadata and named float64 extras."""
    tensors: dict[str, np.ndarray] = {
        f"param.{name}": t.data for name, t in model.named.items()
    }
    for name, arr in (extra_tensors or {}).items():
        tensors[f"extra.{name}"] = np.asarray(arr, dtype=np.float64)
    header = {"config": asdict(model.config), "metadata": metadata or {}}
    blob = bytearray()
    blob += CKPT_MAGIC
    blob += struct.pack("<I", CKPT_VERSION)
    payload = _canonical_json(header)
    blob += struct.pack("<Q", len(payload))
    blob += payload
    blob += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", arr.ndim)
        for dim in arr.shape:
            blob += struct.pack("<I", dim)
        blob += struct.pack("<B", _DTYPE_F64)
        blob += arr.tobytes()
    if isinstance(sink, str):
        with open(sink, "wb") as fh:
            fh.write(blob)
    else:
        sink.write(bytes(blob))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated checkpoint while reading {what}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size, what))


def load_checkpoint(
    source: PathOrStream,
) -> tuple[DecoderModel, dict, dict[str, np.ndarray]]:
    """Read a checkpoint; returns (model, metadata, extra tensors)."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    r = _Reader(data)
    magic = r.take(4, "magic")
    if magic != CKPT_MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}")
    (version,) = r.unpack("<I", "version")
    if version != CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    (header_len,) = r.unpack("<Q", "header length")
    try:
        header = json.loads(r.take(header_len, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed checkpoint header: {exc}") from exc
    (count,) = r.unpack("<I", "tensor count")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H", "tensor name length")
        name = r.take(name_len, "tensor name").decode("utf-8")
        (ndim,) = r.unpack("<B", "tensor rank")
        shape = tuple(r.unpack(f"<{ndim}I", "tensor shape")) if ndim else ()
        (dtype,) = r.unpack("<B", "tensor dtype")
        if dtype != _DTYPE_F64:
            raise FormatError(f"unsupported tensor dtype code {dtype}")
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        raw = r.take(size * 8, f"tensor {name!r} payload")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    if r.pos != len(data):
        raise FormatError(f"trailing bytes after checkpoint payload: {len(data) - r.pos}")

    try:
        config = DecoderConfig(**header["config"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"invalid checkpoint config: {exc}") from exc
    model = DecoderModel(config)
    extras: dict[str, np.ndarray] = {}
    seen = set()
    for name, arr in tensors.items():
        if name.startswith("param."):
            key = name[len("param.") :]
            if key not in model.named:
                raise FormatError(f"unknown parameter tensor {key!r}")
            if model.named[key].data.shape != arr.shape:
                raise FormatError(
                    f"parameter {key!r} shape {arr.shape} does not match config"
                )
            model.named[key].data = arr
            seen.add(key)
        elif name.startswith("extra."):
            extras[name[len("extra.") :]] = arr
        else:
            raise FormatError(f"unrecognized tensor namespace for {name!r}")
    missing = set(model.named) - seen
    if missing:
        raise FormatError(f"checkpoint missing parameters: {sorted(missing)[:3]}")
    return model, header.get("metadata", {}), extras
