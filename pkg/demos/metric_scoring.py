"""Scoring candidate captions against references.

All three metrics consume the same tokenized pairs.  The examples show
the usual shapes of disagreement: a near miss, a clipped repetition, a
short candidate paying the brevity penalty, and a total mismatch.
"""

from synthcap import EvalPair, cider_d_scores, score_all, tokenize


def main() -> None:
    cases = [
        ("identical", "a red boat on the lake", ["a red boat on the lake"]),
        ("near miss", "a red boat on the lake", ["a red boat in the lake"]),
        ("repetition", "the the the lake", ["the boat on the lake"]),
        ("too short", "a red boat", ["a red boat on the lake"]),
        ("unrelated", "green kite in the park", ["a red boat on the lake"]),
    ]
    pairs = [
        EvalPair(candidate=tokenize(cand), references=[tokenize(ref) for ref in refs])
        for _, cand, refs in cases
    ]

    report = score_all(pairs)
    print("corpus-level scores over all five pairs:")
    for key in ("bleu4", "rouge_l", "cider_d"):
        print(f"  {key:>8}: {report[key]:.4f}")

    print("\nper-pair consensus scores:")
    for (name, cand, _), value in zip(cases, cider_d_scores(pairs)):
        print(f"  {name:>10}  cider-d {value:6.3f}  '{cand}'")


if __name__ == "__main__":
    main()
