"""Corpus-level caption metrics: BLEU-4, ROUGE-L, CIDEr-D.

All three consume pre-tokenized pairs (one candidate, one or more
references per item) and are pure functions of the pair list.  Scores are
invariant to pair order.  Duplicating every pair leaves BLEU-4 and
ROUGE-L unchanged exactly, and CIDEr-D too unless a candidate contains
n-grams absent from every reference set (those fall back to an idf that
tracks corpus size).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

ROUGE_BETA = 1.2
CIDER_SIGMA = 6.0
MAX_ORDER = 4


@dataclass
class EvalPair:
    """One scored item: candidate tokens plus at least one reference."""

    candidate: list[str]
    references: list[list[str]]

    def __post_init__(self) -> None:
        if not self.references:
            raise ValidationError("each pair needs at least one reference")


def _require_pairs(pairs: list[EvalPair]) -> None:
    if not pairs:
        raise ValidationError("empty candidate set")


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(pairs: list[EvalPair]) -> float:
    """Pooled clipped n-gram precision (n=1..4), geometric mean, brevity
    penalty from summed closest-reference lengths.  No smoothing: a zero
    count at any order gives 0.
    """
    _require_pairs(pairs)
    clipped = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    cand_len = 0
    ref_len = 0
    for pair in pairs:
        cand = pair.candidate
        cand_len += len(cand)
        # closest reference length; ties prefer the shorter one
        ref_len += min(
            (len(r) for r in pair.references),
            key=lambda L: (abs(L - len(cand)), L),
        )
        for n in range(1, MAX_ORDER + 1):
            counts = _ngrams(cand, n)
            if not counts:
                continue
            best = Counter()
            for ref in pair.references:
                for gram, c in _ngrams(ref, n).items():
                    if c > best[gram]:
                        best[gram] = c
            totals[n - 1] += max(0, len(cand) - n + 1)
            clipped[n - 1] += sum(min(c, best[gram]) for gram, c in counts.items())
    log_sum = 0.0
    for num, den in zip(clipped, totals):
        if num == 0 or den == 0:
            return 0.0
        log_sum += 0.25 * math.log(num / den)
    penalty = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return penalty * math.exp(log_sum)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(pairs: list[EvalPair]) -> float:
    """Mean over pairs of the best per-reference LCS F-measure."""
    _require_pairs(pairs)
    beta_sq = ROUGE_BETA * ROUGE_BETA
    scores = []
    for pair in pairs:
        best = 0.0
        for ref in pair.references:
            lcs = _lcs_length(pair.candidate, ref)
            if lcs == 0:
                continue
            precision = lcs / len(pair.candidate)
            recall = lcs / len(ref)
            f = (1 + beta_sq) * precision * recall / (recall + beta_sq * precision)
            best = max(best, f)
        scores.append(best)
    return float(np.mean(scores))


def _tfidf_vector(
    tokens: list[str], idf: list[dict], n: int
) -> tuple[dict, float]:
    vec = {}
    for gram, count in _ngrams(tokens, n).items():
        vec[gram] = count * idf[n - 1].get(gram, idf[n - 1]["__default__"])
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return vec, norm


def cider_d_scores(pairs: list[EvalPair]) -> list[float]:
    """Per-pair CIDEr-D values in pair order; see :func:`cider_d`."""
    _require_pairs(pairs)
    if len(pairs) < 2:
        raise ValidationError(
            "document frequency needs at least two reference sets"
        )
    corpus = len(pairs)
    # document frequency: in how many items' reference sets each gram occurs
    idf: list[dict] = []
    for n in range(1, MAX_ORDER + 1):
        df: Counter = Counter()
        for pair in pairs:
            present = set()
            for ref in pair.references:
                present.update(_ngrams(ref, n))
            df.update(present)
        table = {
            gram: math.log(corpus / max(1, count)) for gram, count in df.items()
        }
        table["__default__"] = math.log(corpus)
        idf.append(table)

    scores = []
    for pair in pairs:
        per_n = np.zeros(MAX_ORDER)
        cand_vecs = [
            _tfidf_vector(pair.candidate, idf, n) for n in range(1, MAX_ORDER + 1)
        ]
        for ref in pair.references:
            delta = float(len(pair.candidate) - len(ref))
            length_penalty = math.exp(-(delta * delta) / (2.0 * CIDER_SIGMA**2))
            for n in range(1, MAX_ORDER + 1):
                cand_vec, cand_norm = cand_vecs[n - 1]
                ref_vec, ref_norm = _tfidf_vector(ref, idf, n)
                if cand_norm == 0.0 or ref_norm == 0.0:
                    continue
                overlap = sum(
                    min(v, ref_vec[g]) * ref_vec[g]
                    for g, v in cand_vec.items()
                    if g in ref_vec
                )
                per_n[n - 1] += length_penalty * overlap / (cand_norm * ref_norm)
        scores.append(float(per_n.mean() / len(pair.references) * 10.0))
    return scores


def cider_d(pairs: list[EvalPair]) -> float:
    """Consensus-weighted n-gram cosine (n=1..4) with candidate counts
    clipped by reference counts, TF-IDF weighting over the reference
    corpus, and a Gaussian length penalty (sigma 6); averaged over n, then
    references, times 10; corpus score is the mean over pairs.
    """
    return float(np.mean(cider_d_scores(pairs)))


def score_all(pairs: list[EvalPair]) -> dict[str, float]:
    """All three metrics in one report."""
    return {
        "bleu4": bleu4(pairs),
        "rouge_l": rouge_l(pairs),
        "cider_d": cider_d(pairs),
        "n_pairs": len(pairs),
    }
