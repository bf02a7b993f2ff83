"""Zero-shot safe/unsafe classification on a synthetic embedding space.

Builds a mock dual-encoder geometry: pornographic content lives along one
axis, artistic content along another, and every image is a noisy mixture.
Evaluates all equal-size term-subset combinations and prints the accuracy
profile as the voting neighborhood grows.

Run: python3 demos/zero_shot_evaluation.py
"""

import numpy as np

from artmod import TermSet, enumerate_combinations, evaluate, knn_classify
from artmod.dataset import SAFE, UNSAFE

SEED = 7
DIM = 24
N_PER_CLASS = 15
NOISE = 0.75  # high enough that small term subsets make mistakes


def build_space(rng):
    term_set = TermSet.default()
    porn_axis = np.zeros(DIM)
    porn_axis[0] = 1.0
    art_axis = np.zeros(DIM)
    art_axis[1] = 1.0
    text = {}
    for term in term_set.porn_terms:
        text[term] = porn_axis + 0.08 * rng.normal(size=DIM)
    for term in term_set.art_terms:
        text[term] = art_axis + 0.08 * rng.normal(size=DIM)
    images, truth = {}, {}
    for i in range(N_PER_CLASS):
        images[f"porn{i:02d}"] = porn_axis + NOISE * rng.normal(size=DIM)
        truth[f"porn{i:02d}"] = UNSAFE
        images[f"art{i:02d}"] = art_axis + NOISE * rng.normal(size=DIM)
        truth[f"art{i:02d}"] = SAFE
    return term_set, text, images, truth


def main():
    rng = np.random.default_rng(SEED)
    term_set, text, images, truth = build_space(rng)
    combos = enumerate_combinations(term_set)
    print(f"term set: {term_set.n} porn terms vs {term_set.n} art terms")
    print(f"equal-size subset combinations: {len(combos)}")
    report = evaluate(images, truth, term_set, text)

    print("\naccuracy by voting-neighborhood size k (mean over combinations):")
    print(f"{'k':>4} {'combos':>7} {'mean':>7} {'std':>7}")
    for k in sorted(report.per_k):
        mean, std = report.per_k[k]
        count = sum(1 for c in report.per_combination if c.k == k)
        print(f"{k:>4} {count:>7} {mean:>7.3f} {std:>7.3f}")

    full = [c for c in combos if c.k == 2 * term_set.n][0]
    porn_vectors = [text[t] for t in full.porn_subset]
    art_vectors = [text[t] for t in full.art_subset]
    print("\nsample verdicts at the full combination (k=10):")
    for name in ["porn00", "porn01", "art00", "art01"]:
        label = knn_classify(images[name], porn_vectors, art_vectors)
        mark = "ok " if label == truth[name] else "MISS"
        print(f"  {name}: predicted {label:<6} truth {truth[name]:<6} [{mark}]")

    correct = sum(1 for i, p in report.predictions.items() if p == truth[i])
    print(f"\nfull-combination accuracy: {correct}/{len(truth)}")


if __name__ == "__main__":
    main()
