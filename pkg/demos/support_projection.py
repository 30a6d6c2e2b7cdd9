"""Projecting arbitrary features onto the training text manifold.

Any query becomes a softmax-weighted mixture of stored support rows, so
decoder inputs always live inside the hull the decoder saw during
training.  Temperature controls how many neighbors participate: small
values snap to the nearest row, large ones blur toward the mean.
"""

import numpy as np

from synthcap import (
    ToyEncoderSpec,
    ToyGrammar,
    build_support_set,
    encode_images,
    encode_texts,
    generate_toy_corpus,
    mean_paired_cosine,
    project_matrix,
    projection_weights,
)


def main() -> None:
    records = generate_toy_corpus(ToyGrammar(seed=0), 300)
    spec = ToyEncoderSpec(dim=64, seed=0, gap_scale=0.5, noise_scale=0.1)
    tokens = [r.tokens for r in records]
    text = encode_texts(tokens, spec)

    # noisy "held-out" views of the first 50 captions
    noisy_spec = ToyEncoderSpec(dim=64, seed=0, gap_scale=0.5, noise_scale=0.3)
    queries = encode_images(tokens[:50], noisy_spec, index_offset=1000)

    print("cosine of noisy queries to their clean text rows, by temperature:")
    print(f"  {'raw':>10}: {mean_paired_cosine(queries, text[:50]):.5f}")
    for tau in (1e-3, 0.05, 0.08, 0.5, 5.0):
        support = build_support_set(text, temperature=tau)
        projected = project_matrix(queries, support)
        cos = mean_paired_cosine(projected, text[:50])
        print(f"  tau {tau:>6}: {cos:.5f}")

    support = build_support_set(text, temperature=0.08)
    weights = projection_weights(queries[0], support)
    top = np.argsort(weights)[::-1][:3]
    print("\nheaviest support rows for the first query:")
    for idx in top:
        print(f"  weight {weights[idx]:.3f}  '{records[idx].text}'")
    print(f"  (weights sum to {weights.sum():.6f})")
    print(f"  true caption: '{records[0].text}'")


if __name__ == "__main__":
    main()
