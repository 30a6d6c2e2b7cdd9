"""Command-line interface.

Subcommands cover the full pipeline plus its individual stages so that
any intermediate artifact (corpus JSONL, embedding files, refined
features, projections, checkpoints, caption files, score reports) can be
produced or consumed standalone.

Exit codes: 0 success, 2 validation or format error (bad inputs, bad
files, bad flags), 3 numerical failure (non-finite values during
optimization).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from .corpus import ToyGrammar, generate_toy_corpus, read_corpus, write_corpus
from .embeddings import read_embeddings, write_embeddings
from .errors import NumericalError, SynthcapError, ValidationError
from .metrics import EvalPair, score_all
from .pipeline import PipelineConfig, run_ablation, run_inference, run_training
from .refine import RefineConfig, refine_features
from .support import build_support_set, project_matrix
from .toyenc import ToyEncoderSpec, encode_images, encode_texts


def _cmd_gen_toy(args: argparse.Namespace) -> int:
    grammar = ToyGrammar(seed=args.seed)
    records = generate_toy_corpus(grammar, args.n, id_prefix=args.id_prefix)
    write_corpus(records, args.out)
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    return 0


def _cmd_encode_toy(args: argparse.Namespace) -> int:
    if not args.out_text and not args.out_image:
        raise ValidationError("need --out-text and/or --out-image")
    records = read_corpus(args.corpus)
    spec = ToyEncoderSpec(
        dim=args.dim, seed=args.seed, gap_scale=args.gap, noise_scale=args.noise
    )
    token_lists = [r.tokens for r in records]
    if args.out_text:
        write_embeddings(encode_texts(token_lists, spec), args.out_text)
        print(f"wrote text features to {args.out_text}", file=sys.stderr)
    if args.out_image:
        write_embeddings(
            encode_images(token_lists, spec, index_offset=args.index_offset),
            args.out_image,
        )
        print(f"wrote image features to {args.out_image}", file=sys.stderr)
    return 0


def _cmd_refine(args: argparse.Namespace) -> int:
    images = read_embeddings(args.images).astype(np.float64)
    text = read_embeddings(args.text).astype(np.float64)
    cfg = RefineConfig(
        temperature=args.temperature,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    result = refine_features(images, text, cfg)
    write_embeddings(result.features, args.out)
    if args.losses:
        with open(args.losses, "w", encoding="utf-8") as fh:
            for epoch, value in enumerate(result.epoch_losses):
                fh.write(json.dumps({"epoch": epoch, "mean_loss": value}) + "\n")
    print(f"wrote refined features to {args.out}", file=sys.stderr)
    return 0


def _cmd_build_support(args: argparse.Namespace) -> int:
    features = read_embeddings(args.text).astype(np.float64)
    build_support_set(features, temperature=1.0)  # validates rows
    write_embeddings(features, args.out)
    print(f"wrote support features to {args.out}", file=sys.stderr)
    return 0


def _cmd_project(args: argparse.Namespace) -> int:
    queries = read_embeddings(args.input).astype(np.float64)
    features = read_embeddings(args.support).astype(np.float64)
    support = build_support_set(features, temperature=args.temperature, top_k=args.top_k)
    write_embeddings(project_matrix(queries, support), args.output)
    print(f"wrote projections to {args.output}", file=sys.stderr)
    return 0


def _apply_overrides(raw: dict, pairs: list[str]) -> dict:
    for pair in pairs:
        if "=" not in pair:
            raise ValidationError(f"--set expects key=value, got {pair!r}")
        key, text = pair.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"--set path {key!r} crosses a non-object value")
        node[parts[-1]] = value
    return raw


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {args.config} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a JSON object")
    _apply_overrides(raw, args.set or [])
    return PipelineConfig.from_dict(raw)


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    result = run_training(cfg)
    summary = {
        "checkpoint": result.checkpoint_path,
        "decoder_epochs": len(result.decoder_losses),
        "final_train_loss": result.decoder_losses[-1] if result.decoder_losses else None,
        "refine_epochs": len(result.refine_losses),
        "mean_cosine_before": result.cosine_before,
        "mean_cosine_after": result.cosine_after,
    }
    json.dump(summary, sys.stdout, indent=2)
    print()
    return 0


def _cmd_infer(args: argparse.Namespace) -> int:
    features = read_embeddings(args.images).astype(np.float64)
    n = features.shape[0]
    if args.objects:
        records = read_corpus(args.objects)
        if len(records) != n:
            raise ValidationError(
                f"objects file has {len(records)} records but images have {n} rows"
            )
        ids = [r.id for r in records]
        object_lists = [r.objects for r in records]
    else:
        ids = [f"img-{i:04d}" for i in range(n)]
        object_lists = [[] for _ in range(n)]
    captions = run_inference(args.checkpoint, features, ids, object_lists, args.beam)
    with open(args.out, "w", encoding="utf-8") as fh:
        for row in captions:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(captions)} captions to {args.out}", file=sys.stderr)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    candidates = read_corpus(args.candidates)
    references = read_corpus(args.references)
    by_id = {r.id: r for r in references}
    pairs = []
    for cand in candidates:
        ref = by_id.get(cand.id)
        if ref is None:
            raise ValidationError(f"candidate id {cand.id!r} missing from references")
        pairs.append(EvalPair(candidate=cand.tokens, references=[ref.tokens]))
    report = score_all(pairs)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(report, sys.stdout, indent=2)
        print()
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    report = run_ablation(cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        print(f"wrote ablation report to {args.out}", file=sys.stderr)
    else:
        json.dump(report, sys.stdout, indent=2)
        print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthcap",
        description="Text-only captioning pipeline over embedding files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-toy", help="generate a deterministic toy caption corpus")
    p.add_argument("--n", type=int, required=True, help="number of distinct captions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output corpus JSONL")
    p.add_argument("--id-prefix", default="toy")
    p.set_defaults(func=_cmd_gen_toy)

    p = sub.add_parser("encode-toy", help="encode a corpus with the toy encoders")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-text", help="output text-feature file")
    p.add_argument("--out-image", help="output image-feature file")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--gap", type=float, default=0.5, help="modality gap strength")
    p.add_argument("--noise", type=float, default=0.1, help="per-item noise strength")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--index-offset", type=int, default=0,
        help="noise stream offset; use the training row count for held-out files",
    )
    p.set_defaults(func=_cmd_encode_toy)

    p = sub.add_parser("refine", help="contrastively refine image features against text")
    p.add_argument("--images", required=True, help="pseudo image features (input)")
    p.add_argument("--text", required=True, help="frozen text features")
    p.add_argument("--out", required=True, help="refined features (output)")
    p.add_argument("--temperature", type=float, default=0.01)
    p.add_argument("--learning-rate", type=float, default=1e-5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--losses", help="optional loss history JSONL")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("build-support", help="validate text features as a support file")
    p.add_argument("--text", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_support)

    p = sub.add_parser("project", help="project features onto a support set")
    p.add_argument("--input", required=True)
    p.add_argument("--support", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--temperature", type=float, default=0.01)
    p.add_argument("--top-k", type=int, default=None)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("train", help="run the training pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config entry (dotted path, JSON value)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="caption image features with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--objects", help="corpus JSONL supplying ids and object tags")
    p.add_argument("--out", required=True, help="output caption JSONL")
    p.add_argument("--beam", type=int, default=1, help="beam size; 1 = greedy")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("eval", help="score candidate captions against references")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="train and score every toggle combination")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SynthcapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
