"""Text-only image captioning over embedding files.

The pipeline trains a caption decoder purely from text: each caption's
embedding stands in for the image it describes, optionally refined
against the text features, projected onto a support set of text
embeddings, and enriched with attention-pooled object features.  At
inference the same projection/fusion path runs on real image embeddings.
"""

from .corpus import (
    BOS,
    EOS,
    PAD,
    SPECIAL_TOKENS,
    UNK,
    CaptionRecord,
    ToyGrammar,
    Vocabulary,
    build_vocab,
    generate_toy_corpus,
    read_corpus,
    tokenize,
    write_corpus,
)
from .decoder import (
    DecoderConfig,
    DecoderModel,
    PrefixInput,
    TrainItem,
    forward,
    generate,
    load_checkpoint,
    reconstruction_loss,
    save_checkpoint,
    train,
)
from .embeddings import read_embeddings, write_embeddings
from .errors import FormatError, NumericalError, SynthcapError, ValidationError
from .fusion import FusionParams, ObjectFeatureSet, attention_weights, encode_objects, fuse
from .metrics import EvalPair, bleu4, cider_d, cider_d_scores, rouge_l, score_all
from .pipeline import (
    PipelineConfig,
    Toggles,
    ToySettings,
    mean_paired_cosine,
    prefix_image_features,
    run_ablation,
    run_inference,
    run_training,
)
from .refine import (
    RefineConfig,
    RefineResult,
    contrastive_grad,
    contrastive_loss,
    cosine_sim,
    refine_features,
    similarity_matrix,
)
from .support import SupportSet, build_support_set, project, project_matrix, projection_weights
from .toyenc import (
    ToyEncoderSpec,
    encode_images,
    encode_texts,
    gap_direction,
    toy_image_encode,
    toy_text_encode,
)

__version__ = "0.1.0"

__all__ = [
    "BOS",
    "EOS",
    "PAD",
    "UNK",
    "SPECIAL_TOKENS",
    "CaptionRecord",
    "DecoderConfig",
    "DecoderModel",
    "EvalPair",
    "FormatError",
    "FusionParams",
    "NumericalError",
    "ObjectFeatureSet",
    "PipelineConfig",
    "PrefixInput",
    "RefineConfig",
    "RefineResult",
    "SupportSet",
    "SynthcapError",
    "Toggles",
    "ToyEncoderSpec",
    "ToyGrammar",
    "ToySettings",
    "TrainItem",
    "ValidationError",
    "Vocabulary",
    "attention_weights",
    "bleu4",
    "build_support_set",
    "build_vocab",
    "cider_d",
    "cider_d_scores",
    "contrastive_grad",
    "contrastive_loss",
    "cosine_sim",
    "encode_images",
    "encode_objects",
    "encode_texts",
    "forward",
    "fuse",
    "gap_direction",
    "generate",
    "generate_toy_corpus",
    "load_checkpoint",
    "mean_paired_cosine",
    "prefix_image_features",
    "project",
    "project_matrix",
    "projection_weights",
    "read_corpus",
    "read_embeddings",
    "reconstruction_loss",
    "refine_features",
    "rouge_l",
    "run_ablation",
    "run_inference",
    "run_training",
    "save_checkpoint",
    "score_all",
    "similarity_matrix",
    "tokenize",
    "toy_image_encode",
    "toy_text_encode",
    "train",
    "write_corpus",
    "write_embeddings",
]
