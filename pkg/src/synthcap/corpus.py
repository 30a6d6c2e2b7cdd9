"""Caption corpus model: tokenizer, vocabulary, JSONL interchange, toy grammar.

The corpus file is JSONL, one record per line with fields ``id``, ``text``
and ``objects`` (a possibly-empty list of object tags).  Token sequences
are always recomputed from ``text`` on read, and record order is
significant: row k of a corpus aligns with row k of its embedding files.
"""

from __future__ import annotations

import itertools
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, TextIO, Union

from .errors import FormatError, ValidationError
from .rng import splitmix64_stream

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")

_KEEP = re.compile(r"[^a-z0-9']+")


def tokenize(text: str) -> list[str]:
    """Lowercase, map characters outside [a-z0-9'] to spaces, split."""
    return [t for t in _KEEP.sub(" ", text.lower()).split() if t]


@dataclass
class CaptionRecord:
    """One caption: id, raw text, derived tokens, detected object tags."""

    id: str
    text: str
    tokens: list[str] = field(default_factory=list)
    objects: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.tokens = tokenize(self.text)
        seen: set[str] = set()
        deduped = []
        for tag in self.objects:
            if tag not in seen:
                seen.add(tag)
                deduped.append(tag)
        self.objects = deduped


class Vocabulary:
    """Dense token-id mapping with fixed specials PAD=0 BOS=1 EOS=2 UNK=3.

    Non-special ids are assigned by descending corpus frequency, ties
    broken lexicographically, so identical corpora yield identical
    vocabularies.
    """

    def __init__(self, tokens_by_id: list[str]):
        if tokens_by_id[: len(SPECIAL_TOKENS)] != list(SPECIAL_TOKENS):
            raise ValidationError("vocabulary must start with the special tokens")
        self.tokens_by_id = list(tokens_by_id)
        self.id_by_token = {t: i for i, t in enumerate(self.tokens_by_id)}
        if len(self.id_by_token) != len(self.tokens_by_id):
            raise ValidationError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens_by_id)

    @property
    def size(self) -> int:
        return len(self.tokens_by_id)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        """Token ids, with out-of-vocabulary tokens mapped to UNK."""
        return [self.id_by_token.get(t, UNK) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens_by_id[i] for i in ids]


def build_vocab(records: list[CaptionRecord], min_freq: int = 1) -> Vocabulary:
    """Vocabulary over all record tokens occurring at least ``min_freq`` times."""
    if not records:
        raise ValidationError("cannot build a vocabulary from an empty corpus")
    counts = Counter(t for rec in records for t in rec.tokens)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary(list(SPECIAL_TOKENS) + kept)


PathOrText = Union[str, TextIO]


def read_corpus(source: PathOrText) -> list[CaptionRecord]:
    """Read JSONL caption records; tokens are recomputed from text."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            return read_corpus(fh)
    records: list[CaptionRecord] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
            raise FormatError(f"line {lineno}: record must have 'id' and 'text'")
        rec_id = str(obj["id"])
        if rec_id in seen_ids:
            raise FormatError(f"line {lineno}: duplicate id {rec_id!r}")
        seen_ids.add(rec_id)
        objects = obj.get("objects") or []
        if not isinstance(objects, list):
            raise FormatError(f"line {lineno}: 'objects' must be a list")
        records.append(CaptionRecord(id=rec_id, text=str(obj["text"]), objects=[str(o) for o in objects]))
    return records


def write_corpus(records: list[CaptionRecord], sink: PathOrText) -> None:
    """Write caption records as JSONL, preserving order."""
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8") as fh:
            write_corpus(records, fh)
        return
    for rec in records:
        sink.write(
            json.dumps({"id": rec.id, "text": rec.text, "objects": rec.objects}, ensure_ascii=False)
        )
        sink.write("\n")


@dataclass(frozen=True)
class ToyGrammar:
    """Template word lists for generated captions.

    Captions follow "a/the {color} {object} {verb-phrase} {place}"; the
    record's object tag list is exactly [{object}].  Distinctness is keyed
    on (color, object, verb-phrase, place); the article is drawn
    deterministically from the seed stream and does not count toward the
    combination budget.
    """

    articles: tuple[str, ...] = ("a", "the")
    colors: tuple[str, ...] = (
        "red", "blue", "green", "yellow", "black", "white",
    )
    objects: tuple[str, ...] = (
        "cat", "dog", "bird", "horse", "boat",
        "car", "chair", "table", "ball", "kite",
    )
    verb_phrases: tuple[str, ...] = (
        "sits quietly", "runs fast", "jumps high", "sleeps calmly",
    )
    places: tuple[str, ...] = (
        "in the park", "near the river", "on the beach", "under a tree",
    )
    seed: int = 0

    @property
    def combination_count(self) -> int:
        return len(self.colors) * len(self.objects) * len(self.verb_phrases) * len(self.places)


def generate_toy_corpus(grammar: ToyGrammar, n: int, id_prefix: str = "toy") -> list[CaptionRecord]:
    """``n`` distinct caption records, deterministic in the grammar seed."""
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    total = grammar.combination_count
    if n > total:
        raise ValidationError(
            f"requested {n} captions but the grammar only has {total} distinct combinations"
        )
    combos = list(
        itertools.product(grammar.colors, grammar.objects, grammar.verb_phrases, grammar.places)
    )
    stream = splitmix64_stream(grammar.seed)
    # Fisher-Yates shuffle driven by the splitmix64 stream.
    for i in range(len(combos) - 1, 0, -1):
        j = next(stream) % (i + 1)
        combos[i], combos[j] = combos[j], combos[i]
    records = []
    for k in range(n):
        color, obj, verb, place = combos[k]
        article = grammar.articles[next(stream) % len(grammar.articles)]
        text = f"{article} {color} {obj} {verb} {place}"
        records.append(CaptionRecord(id=f"{id_prefix}-{k:04d}", text=text, objects=[obj]))
    return records
