"""End-to-end orchestration: training, inference, and the ablation grid.

Training composes the stages in order: load (or synthesize) the corpus
and its text/pseudo-image features, optionally refine the image features
against the text features, build the projection support set, map each
feature to its decoder prefix input, and fit the decoder.  Inference
applies the identical feature-to-prefix mapping to real image features
(never the refinement stage, which exists only to clean up synthetic
training features) and decodes captions.

Three independent toggles select the pipeline variant:

==========  ==============================================
``fo``      refine pseudo image features before use
``fp``      project features onto the support set
``af``      attend over detected-object features, extra prefix slot
==========  ==============================================

All eight combinations form the ablation grid.  Every random choice
derives from the single config seed via fixed sub-seeds, so a rerun with
the same config file reproduces checkpoints and captions byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict, replace as dc_replace
from typing import Callable, Optional

import numpy as np

from .corpus import (
    BOS,
    EOS,
    CaptionRecord,
    Vocabulary,
    ToyGrammar,
    build_vocab,
    generate_toy_corpus,
    read_corpus,
    tokenize,
)
from .decoder import (
    DecoderConfig,
    DecoderModel,
    PrefixInput,
    TrainItem,
    generate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .embeddings import read_embeddings
from .errors import ValidationError
from .fusion import ObjectFeatureSet, fuse
from .metrics import EvalPair, score_all
from .refine import RefineConfig, refine_features
from .support import SupportSet, build_support_set, project_matrix
from .toyenc import ToyEncoderSpec, encode_images, encode_texts, toy_text_encode

# sub-seed offsets off the config seed, one per consumer of randomness
_REFINE_SEED = 1
_DECODER_SEED = 2


@dataclass
class Toggles:
    """Stage switches; all off reproduces the plain prefix-decoder run."""

    fo: bool = False
    fp: bool = False
    af: bool = False

    @property
    def name(self) -> str:
        parts = [flag for flag, on in (("fo", self.fo), ("fp", self.fp), ("af", self.af)) if on]
        if not parts:
            return "baseline"
        if len(parts) == 3:
            return "full"
        return "_".join(parts)

    @staticmethod
    def grid() -> list["Toggles"]:
        """The eight variants, fixed report order."""
        return [
            Toggles(),
            Toggles(fo=True),
            Toggles(fp=True),
            Toggles(af=True),
            Toggles(fo=True, af=True),
            Toggles(fo=True, fp=True),
            Toggles(fp=True, af=True),
            Toggles(fo=True, fp=True, af=True),
        ]


@dataclass
class ToySettings:
    """Self-contained data source: grammar-generated captions encoded by
    the deterministic toy encoders."""

    enabled: bool = False
    dim: int = 64
    gap_scale: float = 0.5
    noise_scale: float = 0.1
    # Held-out images carry detail variance that the sanitized training
    # renders lack, so their encoder runs with a larger noise scale.
    eval_noise_scale: float = 0.25
    encoder_seed: Optional[int] = None
    grammar_seed: Optional[int] = None
    train_items: int = 0
    eval_items: int = 0

    def __post_init__(self) -> None:
        if self.eval_noise_scale < 0:
            raise ValidationError("eval_noise_scale must be >= 0")

    def encoder_spec(self, default_seed: int) -> ToyEncoderSpec:
        seed = self.encoder_seed if self.encoder_seed is not None else default_seed
        return ToyEncoderSpec(
            dim=self.dim, seed=seed, gap_scale=self.gap_scale, noise_scale=self.noise_scale
        )

    def eval_encoder_spec(self, default_seed: int) -> ToyEncoderSpec:
        return dc_replace(
            self.encoder_spec(default_seed), noise_scale=self.eval_noise_scale
        )

    def grammar(self, default_seed: int) -> ToyGrammar:
        seed = self.grammar_seed if self.grammar_seed is not None else default_seed
        return ToyGrammar(seed=seed)


_PATH_KEYS = {
    "corpus",
    "eval_corpus",
    "text_embeddings",
    "image_embeddings",
    "eval_image_embeddings",
    "tag_list",
    "tag_embeddings",
    "checkpoint",
    "loss_report",
}


@dataclass
class PipelineConfig:
    """Parsed run configuration; see README for the JSON schema."""

    seed: int = 0
    toggles: Toggles = field(default_factory=Toggles)
    projection_temperature: float = 0.08
    paths: dict = field(default_factory=dict)
    toy: ToySettings = field(default_factory=ToySettings)
    refine_options: dict = field(default_factory=dict)
    decoder_options: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.projection_temperature <= 0:
            raise ValidationError("projection_temperature must be > 0")
        unknown = set(self.paths) - _PATH_KEYS
        if unknown:
            raise ValidationError(f"unknown path keys: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {
            "seed",
            "toggles",
            "projection_temperature",
            "paths",
            "toy",
            "refine",
            "decoder",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        toggles_raw = raw.get("toggles", {})
        bad = set(toggles_raw) - {"fo", "fp", "af"}
        if bad:
            raise ValidationError(f"unknown toggle keys: {sorted(bad)}")
        try:
            toy = ToySettings(**raw.get("toy", {}))
        except TypeError as exc:
            raise ValidationError(f"bad toy settings: {exc}") from exc
        return cls(
            seed=int(raw.get("seed", 0)),
            toggles=Toggles(**toggles_raw),
            projection_temperature=float(raw.get("projection_temperature", 0.08)),
            paths=dict(raw.get("paths", {})),
            toy=toy,
            refine_options=dict(raw.get("refine", {})),
            decoder_options=dict(raw.get("decoder", {})),
        )

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError("config root must be a JSON object")
        return cls.from_dict(raw)

    def refine_config(self) -> RefineConfig:
        opts = dict(self.refine_options)
        opts.setdefault("seed", self.seed + _REFINE_SEED)
        try:
            return RefineConfig(**opts)
        except TypeError as exc:
            raise ValidationError(f"bad refine options: {exc}") from exc

    def decoder_config(
        self, vocab_size: int, feature_dim: int, use_aux: bool
    ) -> DecoderConfig:
        opts = dict(self.decoder_options)
        opts.setdefault("seed", self.seed + _DECODER_SEED)
        opts["vocab_size"] = vocab_size
        opts["feature_dim"] = feature_dim
        opts["use_aux"] = use_aux
        try:
            return DecoderConfig(**opts)
        except TypeError as exc:
            raise ValidationError(f"bad decoder options: {exc}") from exc


def mean_paired_cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Mean cosine similarity between matching rows."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ValidationError("zero row in cosine comparison")
    return float(np.mean(np.sum(a * b, axis=1) / (na * nb)))


def prefix_image_features(
    features: np.ndarray, support: Optional[SupportSet], project: bool
) -> np.ndarray:
    """The one feature-to-prefix mapping, shared by training and inference.

    With projection off this is the identity; otherwise every row is
    replaced by its softmax-weighted combination of support rows.
    """
    features = np.asarray(features, dtype=np.float64)
    if not project:
        return features.copy()
    if support is None:
        raise ValidationError("projection enabled but no support set available")
    return project_matrix(features, support)


@dataclass
class TrainingData:
    """Corpus plus aligned feature matrices, however they were sourced."""

    records: list[CaptionRecord]
    text_features: np.ndarray
    image_features: np.ndarray
    tag_encoder: Optional[Callable[[str], np.ndarray]]
    tag_words: list[str]
    tag_features: Optional[np.ndarray]
    encoder_spec: Optional[ToyEncoderSpec] = None


def _check_alignment(records: list, text: np.ndarray, image: np.ndarray) -> None:
    if text.shape[0] != len(records):
        raise ValidationError(
            f"text feature rows {text.shape[0]} != corpus records {len(records)}"
        )
    if image.shape != text.shape:
        raise ValidationError(
            f"image feature shape {image.shape} != text feature shape {text.shape}"
        )


def _load_tag_bank(cfg: PipelineConfig) -> tuple[list[str], np.ndarray]:
    words_path = cfg.paths.get("tag_list")
    feats_path = cfg.paths.get("tag_embeddings")
    if not words_path or not feats_path:
        raise ValidationError(
            "object attention without toy mode needs paths.tag_list and paths.tag_embeddings"
        )
    try:
        with open(words_path, "r", encoding="utf-8") as fh:
            words = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read tag list {words_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"tag list {words_path} is not valid JSON: {exc}") from exc
    if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
        raise ValidationError("tag list must be a JSON array of strings")
    feats = read_embeddings(feats_path).astype(np.float64)
    if feats.shape[0] != len(words):
        raise ValidationError(
            f"tag embedding rows {feats.shape[0]} != tag list entries {len(words)}"
        )
    return words, feats


def load_training_data(cfg: PipelineConfig) -> TrainingData:
    """Resolve the corpus and feature matrices for training."""
    corpus_path = cfg.paths.get("corpus")
    if cfg.toy.enabled:
        spec = cfg.toy.encoder_spec(cfg.seed)
        if corpus_path:
            records = read_corpus(corpus_path)
        elif cfg.toy.train_items > 0:
            records = generate_toy_corpus(cfg.toy.grammar(cfg.seed), cfg.toy.train_items)
        else:
            raise ValidationError("toy mode needs paths.corpus or toy.train_items")
        token_lists = [r.tokens for r in records]
        text = encode_texts(token_lists, spec)
        image = encode_images(token_lists, spec)
        _check_alignment(records, text, image)

        def tag_encoder(tag: str) -> np.ndarray:
            return toy_text_encode(tokenize(tag), spec)

        grammar = cfg.toy.grammar(cfg.seed)
        tag_words = list(grammar.objects)
        tag_features = np.stack([tag_encoder(w) for w in tag_words]) if tag_words else None
        return TrainingData(
            records, text, image, tag_encoder, tag_words, tag_features, encoder_spec=spec
        )

    if not corpus_path:
        raise ValidationError("paths.corpus is required")
    records = read_corpus(corpus_path)
    text_path = cfg.paths.get("text_embeddings")
    image_path = cfg.paths.get("image_embeddings")
    if not text_path or not image_path:
        raise ValidationError(
            "file mode needs paths.text_embeddings and paths.image_embeddings"
        )
    text = read_embeddings(text_path).astype(np.float64)
    image = read_embeddings(image_path).astype(np.float64)
    _check_alignment(records, text, image)
    tag_words: list[str] = []
    tag_features = None
    tag_encoder = None
    if cfg.toggles.af:
        tag_words, tag_features = _load_tag_bank(cfg)
    return TrainingData(records, text, image, tag_encoder, tag_words, tag_features)


class TagLookup:
    """Maps tag words to feature rows, with an optional fallback encoder
    for words outside the stored bank (toy mode only)."""

    def __init__(
        self,
        words: list[str],
        features: Optional[np.ndarray],
        encoder: Optional[Callable[[str], np.ndarray]],
        dim: int,
    ):
        self.by_word = {}
        if features is not None:
            for word, row in zip(words, features):
                self.by_word[word] = np.asarray(row, dtype=np.float64)
        self.encoder = encoder
        self.dim = dim
        self.missing: set[str] = set()

    def object_set(self, tags: list[str]) -> ObjectFeatureSet:
        rows = []
        kept = []
        for tag in tags:
            if tag in self.by_word:
                rows.append(self.by_word[tag])
                kept.append(tag)
            elif self.encoder is not None:
                row = self.encoder(tag)
                self.by_word[tag] = row
                rows.append(row)
                kept.append(tag)
            else:
                self.missing.add(tag)
        feats = np.stack(rows) if rows else np.zeros((0, self.dim))
        return ObjectFeatureSet(feats, kept)


@dataclass
class TrainingResult:
    checkpoint_path: Optional[str]
    model: DecoderModel
    vocab: Vocabulary
    support: SupportSet
    tag_lookup: Optional[TagLookup]
    refine_losses: list[float]
    decoder_losses: list[float]
    cosine_before: Optional[float]
    cosine_after: Optional[float]


def _encode_caption(vocab: Vocabulary, record: CaptionRecord) -> list[int]:
    return [BOS] + vocab.encode(record.tokens) + [EOS]


def _fit_decoder(
    cfg: PipelineConfig,
    toggles: Toggles,
    data: TrainingData,
    features: np.ndarray,
    support: SupportSet,
    vocab: Vocabulary,
    tag_lookup: Optional[TagLookup],
) -> tuple[DecoderModel, list[float]]:
    """Assemble prefix inputs for one toggle set and train a fresh decoder."""
    v_rows = prefix_image_features(features, support, toggles.fp)
    items = []
    for i, record in enumerate(data.records):
        ids = _encode_caption(vocab, record)
        if toggles.af:
            objset = tag_lookup.object_set(record.objects)
            items.append(
                TrainItem(
                    v=v_rows[i],
                    token_ids=ids,
                    fuse_query=features[i],
                    object_features=objset.features if objset.count else None,
                )
            )
        else:
            items.append(TrainItem(v=v_rows[i], token_ids=ids))
    dcfg = cfg.decoder_config(
        vocab_size=len(vocab),
        feature_dim=features.shape[1],
        use_aux=toggles.af,
    )
    model = DecoderModel(dcfg)
    losses = train(model, items)
    return model, losses


def run_training(cfg: PipelineConfig) -> TrainingResult:
    """Full training pass for the configured toggle set.

    Writes the checkpoint (when ``paths.checkpoint`` is set) and a loss
    report (when ``paths.loss_report`` is set, one JSON line per epoch and
    stage).
    """
    data = load_training_data(cfg)
    vocab = build_vocab(data.records)
    features = data.image_features
    refine_losses: list[float] = []
    cosine_before = cosine_after = None
    if cfg.toggles.fo:
        result = refine_features(features, data.text_features, cfg.refine_config())
        cosine_before = mean_paired_cosine(features, data.text_features)
        cosine_after = mean_paired_cosine(result.features, data.text_features)
        refine_losses = result.epoch_losses
        features = result.features
    support = build_support_set(data.text_features, cfg.projection_temperature)
    tag_lookup = None
    if cfg.toggles.af:
        tag_lookup = TagLookup(
            data.tag_words, data.tag_features, data.tag_encoder, features.shape[1]
        )
    model, decoder_losses = _fit_decoder(
        cfg, cfg.toggles, data, features, support, vocab, tag_lookup
    )

    checkpoint_path = cfg.paths.get("checkpoint")
    if checkpoint_path:
        metadata = {
            "toggles": asdict(cfg.toggles),
            "projection_temperature": cfg.projection_temperature,
            "vocab": vocab.tokens_by_id,
            "toy_encoder": asdict(data.encoder_spec) if data.encoder_spec else None,
            "tag_words": [],
        }
        extras = {"support.features": support.features}
        if tag_lookup and tag_lookup.by_word:
            words = sorted(tag_lookup.by_word)
            extras["tags.features"] = np.stack([tag_lookup.by_word[w] for w in words])
            metadata["tag_words"] = words
        save_checkpoint(checkpoint_path, model, metadata, extras)

    report_path = cfg.paths.get("loss_report")
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            for epoch, value in enumerate(refine_losses):
                fh.write(json.dumps({"stage": "refine", "epoch": epoch, "mean_loss": value}) + "\n")
            for epoch, value in enumerate(decoder_losses):
                fh.write(json.dumps({"stage": "decoder", "epoch": epoch, "mean_loss": value}) + "\n")

    return TrainingResult(
        checkpoint_path=checkpoint_path,
        model=model,
        vocab=vocab,
        support=support,
        tag_lookup=tag_lookup,
        refine_losses=refine_losses,
        decoder_losses=decoder_losses,
        cosine_before=cosine_before,
        cosine_after=cosine_after,
    )


def caption_one(
    model: DecoderModel,
    toggles: Toggles,
    support: Optional[SupportSet],
    tag_lookup: Optional[TagLookup],
    vocab: Vocabulary,
    feature: np.ndarray,
    tags: list[str],
    beam_size: int = 1,
) -> str:
    """Caption a single image feature; the exact inference data path."""
    feature = np.asarray(feature, dtype=np.float64)
    v = prefix_image_features(feature[None, :], support, toggles.fp)[0]
    u = None
    if toggles.af:
        if tag_lookup is None:
            raise ValidationError("object attention enabled but no tag features available")
        objset = tag_lookup.object_set(tags)
        u = fuse(feature, objset, model.fusion)
    ids = generate(model, PrefixInput(v=v, u=u), beam_size=beam_size)
    return " ".join(vocab.decode(ids))


def run_inference(
    checkpoint_path: str,
    image_features: np.ndarray,
    ids: list[str],
    object_lists: list[list[str]],
    beam_size: int = 1,
) -> list[dict]:
    """Caption every image feature row; returns {"id","text","objects"} dicts."""
    model, metadata, extras = load_checkpoint(checkpoint_path)
    toggles = Toggles(**metadata.get("toggles", {}))
    vocab = Vocabulary(metadata["vocab"])
    image_features = np.asarray(image_features, dtype=np.float64)
    if image_features.ndim != 2 or image_features.shape[1] != model.config.feature_dim:
        raise ValidationError(
            f"image features {image_features.shape} do not match checkpoint dim "
            f"{model.config.feature_dim}"
        )
    n = image_features.shape[0]
    if len(ids) != n or len(object_lists) != n:
        raise ValidationError("ids, object lists, and feature rows must align")

    support = None
    if toggles.fp:
        if "support.features" not in extras:
            raise ValidationError("checkpoint lacks support features but projection is on")
        support = build_support_set(
            extras["support.features"], float(metadata["projection_temperature"])
        )
    tag_lookup = None
    if toggles.af:
        encoder = None
        toy_meta = metadata.get("toy_encoder")
        if toy_meta:
            spec = ToyEncoderSpec(**toy_meta)

            def encoder(tag: str, _spec=spec) -> np.ndarray:
                return toy_text_encode(tokenize(tag), _spec)

        tag_lookup = TagLookup(
            metadata.get("tag_words", []),
            extras.get("tags.features"),
            encoder,
            model.config.feature_dim,
        )

    out = []
    for i in range(n):
        text = caption_one(
            model, toggles, support, tag_lookup, vocab,
            image_features[i], object_lists[i], beam_size,
        )
        out.append({"id": ids[i], "text": text, "objects": list(object_lists[i])})
    return out


def _load_eval_data(
    cfg: PipelineConfig, train_count: int
) -> tuple[list[CaptionRecord], np.ndarray]:
    if cfg.toy.enabled:
        spec = cfg.toy.eval_encoder_spec(cfg.seed)
        eval_path = cfg.paths.get("eval_corpus")
        if eval_path:
            records = read_corpus(eval_path)
        elif cfg.toy.eval_items > 0:
            both = generate_toy_corpus(
                cfg.toy.grammar(cfg.seed), train_count + cfg.toy.eval_items
            )
            records = both[train_count:]
        else:
            raise ValidationError("toy mode needs paths.eval_corpus or toy.eval_items")
        feats = encode_images(
            [r.tokens for r in records], spec, index_offset=train_count
        )
        return records, feats
    eval_path = cfg.paths.get("eval_corpus")
    feats_path = cfg.paths.get("eval_image_embeddings")
    if not eval_path or not feats_path:
        raise ValidationError(
            "ablation in file mode needs paths.eval_corpus and paths.eval_image_embeddings"
        )
    records = read_corpus(eval_path)
    feats = read_embeddings(feats_path).astype(np.float64)
    if feats.shape[0] != len(records):
        raise ValidationError(
            f"eval feature rows {feats.shape[0]} != eval records {len(records)}"
        )
    return records, feats


def _object_recall(records: list[CaptionRecord], captions: list[str]) -> float:
    hits = 0
    judged = 0
    for record, caption in zip(records, captions):
        if not record.objects:
            continue
        judged += 1
        caption_tokens = set(tokenize(caption))
        if any(tag in caption_tokens for tag in record.objects):
            hits += 1
    return hits / judged if judged else 0.0


def run_ablation(cfg: PipelineConfig) -> dict:
    """Train and evaluate every toggle combination on shared data.

    The data, the refined features, and the support set are computed once
    and reused across variants; each variant trains a fresh decoder from
    the same seed.  Returns the comparison report as a dict.
    """
    if cfg.toy.enabled and not cfg.paths.get("corpus") and cfg.toy.train_items <= 0:
        raise ValidationError("ablation toy mode needs toy.train_items")
    data = load_training_data(cfg)
    vocab = build_vocab(data.records)
    eval_records, eval_features = _load_eval_data(cfg, len(data.records))
    if eval_features.shape[1] != data.text_features.shape[1]:
        raise ValidationError("eval feature dim does not match training features")

    refined = refine_features(
        data.image_features, data.text_features, cfg.refine_config()
    )
    cosine_before = mean_paired_cosine(data.image_features, data.text_features)
    cosine_after = mean_paired_cosine(refined.features, data.text_features)
    support = build_support_set(data.text_features, cfg.projection_temperature)
    tag_lookup = TagLookup(
        data.tag_words, data.tag_features, data.tag_encoder, data.text_features.shape[1]
    )

    reference_pairs = [[r.tokens] for r in eval_records]
    variants = []
    for toggles in Toggles.grid():
        features = refined.features if toggles.fo else data.image_features
        model, losses = _fit_decoder(
            cfg, toggles, data, features, support, vocab,
            tag_lookup if toggles.af else None,
        )
        captions = [
            caption_one(
                model, toggles, support, tag_lookup if toggles.af else None,
                vocab, eval_features[i], eval_records[i].objects,
            )
            for i in range(len(eval_records))
        ]
        pairs = [
            EvalPair(candidate=tokenize(captions[i]), references=reference_pairs[i])
            for i in range(len(eval_records))
        ]
        scores = score_all(pairs)
        variants.append(
            {
                "name": toggles.name,
                "toggles": asdict(toggles),
                "bleu4": scores["bleu4"],
                "rouge_l": scores["rouge_l"],
                "cider_d": scores["cider_d"],
                "object_recall": _object_recall(eval_records, captions),
                "final_train_loss": losses[-1] if losses else None,
                "sample_captions": [
                    {
                        "id": eval_records[i].id,
                        "text": captions[i],
                        "reference": eval_records[i].text,
                    }
                    for i in range(min(5, len(captions)))
                ],
            }
        )

    return {
        "n_train": len(data.records),
        "n_eval": len(eval_records),
        "refinement": {
            "mean_cosine_before": cosine_before,
            "mean_cosine_after": cosine_after,
            "epoch_losses": refined.epoch_losses,
        },
        "variants": variants,
    }
