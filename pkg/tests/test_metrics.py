"""Metric checks against independent counting oracles.

The oracles below recount everything from scratch: plain dicts, a full
LCS table, explicit per-order loops.  They share no helpers with the
library, so agreement on the hand-built corpus is evidence rather than
tautology.
"""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthcap.errors import ValidationError
from synthcap.corpus import tokenize
from synthcap.metrics import (
    EvalPair,
    bleu4,
    cider_d,
    cider_d_scores,
    rouge_l,
    score_all,
)


# ---------------------------------------------------------------------------
# oracles


def _gram_counts(tokens, n):
    out = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        out[gram] = out.get(gram, 0) + 1
    return out


def oracle_bleu4(pairs):
    clipped = [0, 0, 0, 0]
    totals = [0, 0, 0, 0]
    cand_len = 0
    ref_len = 0
    for pair in pairs:
        cand = pair.candidate
        cand_len += len(cand)
        best_len = None
        for ref in pair.references:
            key = (abs(len(ref) - len(cand)), len(ref))
            if best_len is None or key < best_len:
                best_len = key
        ref_len += best_len[1]
        for n in (1, 2, 3, 4):
            if len(cand) < n:
                continue
            totals[n - 1] += len(cand) - n + 1
            cand_counts = _gram_counts(cand, n)
            for gram, count in cand_counts.items():
                allowed = 0
                for ref in pair.references:
                    allowed = max(allowed, _gram_counts(ref, n).get(gram, 0))
                clipped[n - 1] += min(count, allowed)
    product = 1.0
    for num, den in zip(clipped, totals):
        if num == 0 or den == 0:
            return 0.0
        product *= num / den
    if cand_len >= ref_len:
        penalty = 1.0
    else:
        penalty = math.exp(1.0 - ref_len / cand_len)
    return penalty * product**0.25


def _lcs_table(a, b):
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(1, rows):
        for j in range(1, cols):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def oracle_rouge_l(pairs, beta=1.2):
    scores = []
    for pair in pairs:
        best = 0.0
        for ref in pair.references:
            lcs = _lcs_table(pair.candidate, ref)
            if lcs == 0:
                continue
            p = lcs / len(pair.candidate)
            r = lcs / len(ref)
            f = (1 + beta * beta) * p * r / (r + beta * beta * p)
            best = max(best, f)
        scores.append(best)
    return sum(scores) / len(scores)


def oracle_cider_d(pairs, sigma=6.0):
    corpus = len(pairs)
    # document frequency over each pair's reference-set union; gram tuples
    # of different lengths never collide, so one dict covers all orders
    df = {}
    for pair in pairs:
        present = set()
        for ref in pair.references:
            for n in (1, 2, 3, 4):
                present.update(_gram_counts(ref, n))
        for gram in present:
            df[gram] = df.get(gram, 0) + 1

    def idf(gram):
        return math.log(corpus / df[gram]) if gram in df else math.log(corpus)

    per_pair = []
    for pair in pairs:
        total = 0.0
        for ref in pair.references:
            delta = len(pair.candidate) - len(ref)
            penalty = math.exp(-(delta * delta) / (2.0 * sigma * sigma))
            acc = 0.0
            for n in (1, 2, 3, 4):
                cand_vec = {
                    g: c * idf(g)
                    for g, c in _gram_counts(pair.candidate, n).items()
                }
                ref_vec = {
                    g: c * idf(g) for g, c in _gram_counts(ref, n).items()
                }
                cand_norm = math.sqrt(sum(v * v for v in cand_vec.values()))
                ref_norm = math.sqrt(sum(v * v for v in ref_vec.values()))
                if cand_norm == 0.0 or ref_norm == 0.0:
                    continue
                overlap = sum(
                    min(v, ref_vec[g]) * ref_vec[g]
                    for g, v in cand_vec.items()
                    if g in ref_vec
                )
                acc += penalty * overlap / (cand_norm * ref_norm)
            total += acc / 4.0
        per_pair.append(total / len(pair.references) * 10.0)
    return sum(per_pair) / len(per_pair), per_pair


# ---------------------------------------------------------------------------
# hand-built corpus: varied lengths, multi-reference items, repeated
# tokens for clipping, a disjoint item, a single-token candidate


def hand_pairs():
    return [
        EvalPair(
            "the cat sat on the mat".split(),
            ["the cat sat on a mat".split()],
        ),
        EvalPair(
            "a dog runs fast".split(),
            ["a dog runs fast".split(), "the dog is quick".split()],
        ),
        EvalPair(
            "blue bird in the sky".split(),
            ["a blue bird flies in the sky".split()],
        ),
        EvalPair("the the the the".split(), ["the cat the hat".split()]),
        EvalPair(
            "wholly disjoint words here".split(),
            ["nothing shared at all".split()],
        ),
        EvalPair(
            "a b c d e f g h".split(),
            ["a b c d x y z w".split(), "q r s t".split()],
        ),
        EvalPair(
            "one two three".split(), ["one two three four five".split()]
        ),
        EvalPair(
            "green boat near the river bank".split(),
            ["green boat near the river".split()],
        ),
        EvalPair(["x"], [["x"], ["x", "y"]]),
        EvalPair(
            "repeat repeat again again".split(),
            ["repeat again repeat again".split()],
        ),
    ]


def test_bleu_matches_oracle_on_hand_pairs():
    pairs = hand_pairs()
    assert bleu4(pairs) == pytest.approx(oracle_bleu4(pairs), abs=1e-9)
    # prefixes exercise different pooling mixes
    for k in range(1, len(pairs) + 1):
        subset = pairs[:k]
        assert bleu4(subset) == pytest.approx(
            oracle_bleu4(subset), abs=1e-9
        )


def test_rouge_matches_oracle_on_hand_pairs():
    pairs = hand_pairs()
    assert rouge_l(pairs) == pytest.approx(oracle_rouge_l(pairs), abs=1e-9)
    for k in range(1, len(pairs) + 1):
        subset = pairs[:k]
        assert rouge_l(subset) == pytest.approx(
            oracle_rouge_l(subset), abs=1e-9
        )


def test_cider_matches_oracle_on_hand_pairs():
    pairs = hand_pairs()
    mean, per_pair = oracle_cider_d(pairs)
    assert cider_d(pairs) == pytest.approx(mean, abs=1e-9)
    got = cider_d_scores(pairs)
    assert len(got) == len(per_pair)
    for have, want in zip(got, per_pair):
        assert have == pytest.approx(want, abs=1e-9)


def test_score_all_reports_components():
    pairs = hand_pairs()
    report = score_all(pairs)
    assert report["bleu4"] == pytest.approx(bleu4(pairs), abs=1e-12)
    assert report["rouge_l"] == pytest.approx(rouge_l(pairs), abs=1e-12)
    assert report["cider_d"] == pytest.approx(cider_d(pairs), abs=1e-12)
    assert report["n_pairs"] == len(pairs)


# ---------------------------------------------------------------------------
# closed-form spot values


def test_bleu_perfect_match_is_one():
    pairs = [
        EvalPair("a red boat on the lake".split(), ["a red boat on the lake".split()]),
        EvalPair("the dog sleeps calmly".split(), ["the dog sleeps calmly".split()]),
    ]
    assert bleu4(pairs) == pytest.approx(1.0, abs=1e-12)


def test_bleu_hand_counted_value():
    # clipped precisions 5/6, 3/5, 2/4, 1/3; equal lengths so no penalty
    pair = EvalPair(
        "the cat sat on the mat".split(), ["the cat sat on a mat".split()]
    )
    assert bleu4([pair]) == pytest.approx((1.0 / 12.0) ** 0.25, abs=1e-12)


def test_bleu_zero_when_no_four_gram_overlap():
    pair = EvalPair(
        "a b c d e".split(), ["a b c x d e".split()]
    )
    assert bleu4([pair]) == 0.0


def test_bleu_zero_when_every_candidate_is_short():
    # no candidate reaches order 4, so that denominator stays empty
    pairs = [
        EvalPair("a b c".split(), ["a b c".split()]),
        EvalPair("d e".split(), ["d e".split()]),
    ]
    assert bleu4(pairs) == 0.0


def test_bleu_brevity_penalty_closed_form():
    # perfect precisions at every order; candidate 4 tokens vs reference 6
    pair = EvalPair("a b c d".split(), ["a b c d e f".split()])
    assert bleu4([pair]) == pytest.approx(math.exp(1.0 - 6.0 / 4.0), abs=1e-12)


def test_bleu_closest_reference_tie_prefers_shorter():
    # lengths 3 and 5 are both one step from 4; picking 3 means no penalty
    pair = EvalPair(
        "a b c d".split(), ["a b c".split(), "a b c d e".split()]
    )
    assert bleu4([pair]) == pytest.approx(1.0, abs=1e-12)


def test_rouge_identity_is_one():
    pair = EvalPair("a b c d".split(), ["a b c d".split()])
    assert rouge_l([pair]) == pytest.approx(1.0, abs=1e-12)


def test_rouge_disjoint_is_zero():
    pair = EvalPair("a b c".split(), ["x y z".split()])
    assert rouge_l([pair]) == 0.0


def test_rouge_hand_formula_value():
    # LCS("a b c d", "a c b d") = 3, so P = R = 3/4 and F collapses to 3/4
    pair = EvalPair("a b c d".split(), ["a c b d".split()])
    assert rouge_l([pair]) == pytest.approx(0.75, abs=1e-12)


def test_rouge_takes_best_reference():
    pair = EvalPair(
        "a b c d".split(), ["x y z".split(), "a b c d".split()]
    )
    assert rouge_l([pair]) == pytest.approx(1.0, abs=1e-12)


def test_rouge_beta_weights_recall():
    # same LCS but swapped roles; the recall-heavy pair must score higher
    covers_ref = rouge_l([EvalPair("a b c d".split(), ["a b".split()])])
    covered_by_ref = rouge_l([EvalPair("a b".split(), ["a b c d".split()])])
    assert covers_ref > covered_by_ref


def test_cider_identity_pairs_score_ten():
    # disjoint vocabularies keep every idf positive, and 5 tokens cover
    # all four orders, so each identity pair earns the full 10
    pairs = [
        EvalPair(
            "red boat near the river".split(),
            ["red boat near the river".split()],
        ),
        EvalPair(
            "a yellow kite flies high".split(),
            ["a yellow kite flies high".split()],
        ),
    ]
    for value in cider_d_scores(pairs):
        assert value == pytest.approx(10.0, abs=1e-9)
    assert cider_d(pairs) == pytest.approx(10.0, abs=1e-9)


def test_cider_disjoint_candidate_scores_zero():
    pairs = [
        EvalPair("p q r s".split(), ["a b c d".split()]),
        EvalPair("w x y z".split(), ["w x y z".split()]),
    ]
    assert cider_d_scores(pairs)[0] == 0.0


def test_cider_requires_two_pairs():
    lone = EvalPair("a b".split(), ["a b".split()])
    with pytest.raises(ValidationError):
        cider_d([lone])
    with pytest.raises(ValidationError):
        cider_d_scores([lone])


# ---------------------------------------------------------------------------
# invariances


def test_pair_order_invariance():
    pairs = hand_pairs()
    shuffled = pairs[:]
    random.Random(11).shuffle(shuffled)
    assert bleu4(shuffled) == pytest.approx(bleu4(pairs), abs=1e-12)
    assert rouge_l(shuffled) == pytest.approx(rouge_l(pairs), abs=1e-12)
    assert cider_d(shuffled) == pytest.approx(cider_d(pairs), abs=1e-12)
    # per-pair values follow their pairs
    via_order = dict(zip(map(id, pairs), cider_d_scores(pairs)))
    for pair, value in zip(shuffled, cider_d_scores(shuffled)):
        assert value == pytest.approx(via_order[id(pair)], abs=1e-12)


def test_duplication_leaves_scores_unchanged():
    pairs = hand_pairs()
    assert bleu4(pairs * 2) == pytest.approx(bleu4(pairs), abs=1e-12)
    assert rouge_l(pairs * 2) == pytest.approx(rouge_l(pairs), abs=1e-12)


def test_duplication_stable_for_cider_on_covered_grams():
    # every candidate is a contiguous window of one of its references, so
    # no gram needs the corpus-sized fallback idf and doubling is exact
    pairs = [
        EvalPair("a b c d e".split(), ["a b c d e".split()]),
        EvalPair("c d e f".split(), ["b c d e f g".split()]),
        EvalPair(
            "p q r s".split(), ["p q r s t".split(), "m m m".split()]
        ),
    ]
    assert cider_d(pairs * 2) == pytest.approx(cider_d(pairs), abs=1e-12)


# ---------------------------------------------------------------------------
# randomized oracle agreement and bounds

_token = st.sampled_from(["a", "b", "c", "d", "e"])
_tokens = st.lists(_token, min_size=0, max_size=7)
_references = st.lists(
    st.lists(_token, min_size=0, max_size=7), min_size=1, max_size=3
)
_pair = st.builds(EvalPair, candidate=_tokens, references=_references)
_pairs = st.lists(_pair, min_size=2, max_size=6)


@settings(max_examples=60, deadline=None)
@given(_pairs)
def test_random_pairs_agree_with_oracles(pairs):
    assert bleu4(pairs) == pytest.approx(oracle_bleu4(pairs), abs=1e-9)
    assert rouge_l(pairs) == pytest.approx(oracle_rouge_l(pairs), abs=1e-9)
    mean, per_pair = oracle_cider_d(pairs)
    assert cider_d(pairs) == pytest.approx(mean, abs=1e-9)
    for have, want in zip(cider_d_scores(pairs), per_pair):
        assert have == pytest.approx(want, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(_pairs)
def test_scores_stay_in_bounds(pairs):
    assert 0.0 <= bleu4(pairs) <= 1.0
    assert 0.0 <= rouge_l(pairs) <= 1.0
    assert 0.0 <= cider_d(pairs) <= 10.0 + 1e-12


# ---------------------------------------------------------------------------
# validation and tokenizer fit


def test_empty_pair_list_rejected():
    for fn in (bleu4, rouge_l, cider_d):
        with pytest.raises(ValidationError):
            fn([])


def test_pair_requires_a_reference():
    with pytest.raises(ValidationError):
        EvalPair(["a"], [])


def test_empty_candidate_contributes_zero():
    pairs = [
        EvalPair([], ["a b c d".split()]),
        EvalPair("a b c d".split(), ["a b c d".split()]),
    ]
    assert cider_d_scores(pairs)[0] == 0.0
    assert rouge_l(pairs) == pytest.approx(0.5, abs=1e-12)
    assert bleu4(pairs) == pytest.approx(oracle_bleu4(pairs), abs=1e-9)


def test_pairs_built_from_tokenizer_output():
    text = "The red Cat sat, on the mat!"
    pair = EvalPair(tokenize(text), [tokenize("the red cat sat on the mat")])
    assert rouge_l([pair]) == pytest.approx(1.0, abs=1e-12)
    assert bleu4([pair]) == pytest.approx(1.0, abs=1e-12)
