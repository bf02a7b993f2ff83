"""Zero-shot safe/unsafe image classification from description terms.

Two equal-length term lists describe the unsafe ("porn") and safe ("art")
classes. Every pair of equal-size subsets, one from each list, forms a
combination; an image is labeled by summing its cosine similarity to each
side's term embeddings and comparing the sums. Because every text
embedding votes (k equals the number of reference points), the
similarity-weighted k-nearest-neighbor vote reduces exactly to that sum
comparison, and the reduction is what is implemented. An exact tie labels
the image safe.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import LABELS, SAFE, UNSAFE
from .numkit import as_embedding

__all__ = [
    "DEFAULT_ART_TERMS",
    "DEFAULT_PORN_TERMS",
    "TermCombination",
    "TermSet",
    "ZeroShotReport",
    "enumerate_combinations",
    "evaluate",
    "knn_classify",
    "load_term_set",
]

DEFAULT_PORN_TERMS = (
    "Porn",
    "Sexually Explicit Nudity",
    "Obscene Nudity",
    "Adult Material",
    "NSFW",
)
DEFAULT_ART_TERMS = (
    "Artistic Nudity",
    "Nude Art",
    "Fine Art Nudity",
    "Nude Portraiture",
    "Human Form in Art",
)


@dataclass(frozen=True)
class TermSet:
    """The two class-description term lists, equal length, no overlap."""

    porn_terms: tuple[str, ...]
    art_terms: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "porn_terms", tuple(self.porn_terms))
        object.__setattr__(self, "art_terms", tuple(self.art_terms))
        if not self.porn_terms or not self.art_terms:
            raise ValueError("term lists must be nonempty")
        if len(self.porn_terms) != len(self.art_terms):
            raise ValueError(
                f"term lists must have equal length, got {len(self.porn_terms)} and {len(self.art_terms)}"
            )
        for side, terms in (("porn_terms", self.porn_terms), ("art_terms", self.art_terms)):
            if len(set(terms)) != len(terms):
                raise ValueError(f"{side} contains duplicates")
            if any(not isinstance(t, str) or not t for t in terms):
                raise ValueError(f"{side} must contain nonempty strings")
        overlap = sorted(set(self.porn_terms) & set(self.art_terms))
        if overlap:
            raise ValueError(f"terms appear in both lists: {overlap}")

    @property
    def n(self) -> int:
        return len(self.porn_terms)

    def all_terms(self) -> tuple[str, ...]:
        return self.porn_terms + self.art_terms

    @classmethod
    def default(cls) -> "TermSet":
        return cls(DEFAULT_PORN_TERMS, DEFAULT_ART_TERMS)


def load_term_set(path) -> TermSet:
    """Read a TermSet from JSON with keys ``porn_terms`` and ``art_terms``."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object")
    unknown = sorted(set(raw) - {"porn_terms", "art_terms"})
    if unknown:
        raise ValueError(f"{path}: unknown keys {unknown}")
    for key in ("porn_terms", "art_terms"):
        if not isinstance(raw.get(key), list):
            raise ValueError(f"{path}: {key} must be a list of strings")
    return TermSet(porn_terms=tuple(raw["porn_terms"]), art_terms=tuple(raw["art_terms"]))


@dataclass(frozen=True)
class TermCombination:
    """One equal-size subset pair: reference points for a single vote."""

    porn_subset: tuple[str, ...]
    art_subset: tuple[str, ...]

    @property
    def subset_size(self) -> int:
        return len(self.porn_subset)

    @property
    def k(self) -> int:
        """Total number of voting text embeddings."""
        return len(self.porn_subset) + len(self.art_subset)


def enumerate_combinations(term_set: TermSet) -> list[TermCombination]:
    """Every (P, A) pair with |P| = |A| = i for i = 1..n, exactly once.

    Ordered by subset size, then lexicographically by term index within
    each list, so reports diff cleanly across runs.
    """
    combos: list[TermCombination] = []
    for i in range(1, term_set.n + 1):
        for porn in itertools.combinations(term_set.porn_terms, i):
            for art in itertools.combinations(term_set.art_terms, i):
                combos.append(TermCombination(porn_subset=porn, art_subset=art))
    return combos


def _cosine_rows(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Cosine of each matrix row against ``vector``; zero norms are an error."""
    norms = np.linalg.norm(matrix, axis=1)
    vnorm = float(np.linalg.norm(vector))
    if vnorm == 0.0 or np.any(norms == 0.0):
        raise ValueError("zero-norm vector has no direction")
    return (matrix @ vector) / (norms * vnorm)


def _stack(embeddings, dim: int, side: str) -> np.ndarray:
    vectors = [as_embedding(e, dim) for e in embeddings]
    if not vectors:
        raise ValueError(f"no {side} embeddings supplied")
    return np.vstack(vectors)


def knn_classify(image_embedding, porn_embeddings, art_embeddings) -> str:
    """Label one image by the similarity-weighted vote of the two classes.

    Each class's weight is the sum of cosine similarities between the image
    and that class's term embeddings; the image is unsafe only when the
    porn-class weight strictly exceeds the art-class weight.
    """
    image = as_embedding(image_embedding)
    porn = _stack(porn_embeddings, image.size, "porn")
    art = _stack(art_embeddings, image.size, "art")
    porn_weight = float(_cosine_rows(porn, image).sum())
    art_weight = float(_cosine_rows(art, image).sum())
    return UNSAFE if porn_weight > art_weight else SAFE


@dataclass(frozen=True)
class ZeroShotReport:
    """Per-combination accuracies plus per-k aggregates and the k=2n labels."""

    term_set: TermSet
    per_combination: dict[TermCombination, float]
    per_k: dict[int, tuple[float, float]]
    predictions: dict[str, str]

    def to_dict(self) -> dict:
        """JSON-ready payload (schema documented in the README)."""
        counts: dict[int, int] = {}
        for combo in self.per_combination:
            counts[combo.k] = counts.get(combo.k, 0) + 1
        return {
            "term_set": {
                "porn_terms": list(self.term_set.porn_terms),
                "art_terms": list(self.term_set.art_terms),
            },
            "combinations": [
                {
                    "porn_terms": list(combo.porn_subset),
                    "art_terms": list(combo.art_subset),
                    "k": combo.k,
                    "accuracy": accuracy,
                }
                for combo, accuracy in self.per_combination.items()
            ],
            "per_k": {
                str(k): {"mean": mean, "std": std, "combinations": counts.get(k, 0)}
                for k, (mean, std) in self.per_k.items()
            },
            "predictions": dict(self.predictions),
        }


def evaluate(embeddings, ground_truth, term_set: TermSet, text_embeddings) -> ZeroShotReport:
    """Classify every image under every combination and aggregate accuracy.

    Parameters
    ----------
    embeddings : mapping id -> vector
        Image embeddings; must cover every ground-truth id.
    ground_truth : mapping id -> {"safe", "unsafe"}
    term_set : TermSet
    text_embeddings : mapping term -> vector
        Must cover every term in the set.

    Returns a report with one accuracy per combination, mean/std (population)
    per k, and the per-image labels of the full k = 2n combination.
    """
    if not ground_truth:
        raise ValueError("ground truth is empty")
    ids = sorted(ground_truth)
    bad = sorted(i for i in ids if ground_truth[i] not in LABELS)
    if bad:
        raise ValueError(f"ground-truth labels must be safe/unsafe; bad ids: {bad}")
    missing = sorted(i for i in ids if i not in embeddings)
    if missing:
        raise ValueError(f"missing image embeddings for ids: {missing}")
    terms = term_set.all_terms()
    missing_terms = sorted(t for t in terms if t not in text_embeddings)
    if missing_terms:
        raise ValueError(f"missing text embeddings for terms: {missing_terms}")

    first = as_embedding(embeddings[ids[0]])
    dim = first.size
    images = np.vstack([as_embedding(embeddings[i], dim) for i in ids])
    texts = np.vstack([as_embedding(text_embeddings[t], dim) for t in terms])
    image_norms = np.linalg.norm(images, axis=1)
    text_norms = np.linalg.norm(texts, axis=1)
    if np.any(image_norms == 0.0) or np.any(text_norms == 0.0):
        raise ValueError("zero-norm vector has no direction")
    cosines = (images @ texts.T) / np.outer(image_norms, text_norms)
    term_column = {term: column for column, term in enumerate(terms)}
    truth_unsafe = np.array([ground_truth[i] == UNSAFE for i in ids])

    per_combination: dict[TermCombination, float] = {}
    by_k: dict[int, list[float]] = {}
    predictions: dict[str, str] = {}
    for combo in enumerate_combinations(term_set):
        porn_cols = [term_column[t] for t in combo.porn_subset]
        art_cols = [term_column[t] for t in combo.art_subset]
        porn_weight = cosines[:, porn_cols].sum(axis=1)
        art_weight = cosines[:, art_cols].sum(axis=1)
        predicted_unsafe = porn_weight > art_weight
        accuracy = float(np.mean(predicted_unsafe == truth_unsafe))
        per_combination[combo] = accuracy
        by_k.setdefault(combo.k, []).append(accuracy)
        if combo.subset_size == term_set.n:
            predictions = {
                ids[row]: (UNSAFE if predicted_unsafe[row] else SAFE)
                for row in range(len(ids))
            }
    per_k = {
        k: (float(np.mean(values)), float(np.std(values)))
        for k, values in sorted(by_k.items())
    }
    return ZeroShotReport(
        term_set=term_set,
        per_combination=per_combination,
        per_k=per_k,
        predictions=predictions,
    )
