"""Shared builders for manifests, mock-backend fixtures, and separable
geometries used across the test modules."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from artmod.dataset import MANIFEST_HEADER, SAFE, UNSAFE
from artmod.zeroshot import TermSet


def art_row(
    i: int,
    *,
    genders: str = "female",
    period: str = "1850-1900",
    artist: str = "artist a",
    platform: str = "",
    year: str = "1870",
) -> list[str]:
    return [f"art{i:03d}", f"images/art{i:03d}.png", SAFE, genders, period, artist, platform, year]


def nsfw_row(
    i: int,
    *,
    genders: str = "female",
    period: str = "",
    platform: str = "siteA",
    year: str = "2021",
) -> list[str]:
    return [f"nsfw{i:03d}", f"images/nsfw{i:03d}.png", UNSAFE, genders, period, "", platform, year]


def write_manifest(path, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    return path


def write_fixture_csv(path, entries) -> Path:
    """Mock-backend fixture CSV: key, then the vector entries."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        for key, vector in entries.items():
            writer.writerow([key] + [repr(float(x)) for x in np.asarray(vector).ravel()])
    return path


def write_backend_spec(path, fixture_path=None, *, kind: str = "mock", **extra) -> Path:
    path = Path(path)
    payload = {"kind": kind, **extra}
    if fixture_path is not None:
        payload["fixture_path"] = str(fixture_path)
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def write_terms_json(path, term_set: TermSet | None = None) -> Path:
    term_set = term_set or TermSet.default()
    path = Path(path)
    payload = {"porn_terms": list(term_set.porn_terms), "art_terms": list(term_set.art_terms)}
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def separable_embeddings(
    term_set: TermSet | None = None,
    *,
    n_unsafe: int = 6,
    n_safe: int = 6,
    dim: int = 8,
    seed: int = 0,
    image_noise: float = 0.05,
    term_noise: float = 0.01,
):
    """Geometry where every term combination classifies perfectly.

    Porn terms and unsafe images sit near one axis, art terms and safe
    images near an orthogonal one, with noise small enough that every
    class-similarity comparison keeps its sign.

    Returns (image_embeddings, ground_truth, text_embeddings).
    """
    term_set = term_set or TermSet.default()
    rng = np.random.default_rng(seed)
    porn_axis = np.zeros(dim)
    porn_axis[0] = 1.0
    art_axis = np.zeros(dim)
    art_axis[1] = 1.0
    text = {}
    for term in term_set.porn_terms:
        text[term] = porn_axis + term_noise * rng.normal(size=dim)
    for term in term_set.art_terms:
        text[term] = art_axis + term_noise * rng.normal(size=dim)
    images: dict[str, np.ndarray] = {}
    truth: dict[str, str] = {}
    for i in range(n_unsafe):
        images[f"u{i:03d}"] = porn_axis + image_noise * rng.normal(size=dim)
        truth[f"u{i:03d}"] = UNSAFE
    for i in range(n_safe):
        images[f"s{i:03d}"] = art_axis + image_noise * rng.normal(size=dim)
        truth[f"s{i:03d}"] = SAFE
    return images, truth, text


def separable_features(
    n_per_class: int = 20,
    dim: int = 6,
    seed: int = 3,
    margin: float = 2.0,
    noise: float = 0.3,
):
    """Linearly separable probe data: classes split on the first axis.

    Returns (features, labels), id-keyed.
    """
    rng = np.random.default_rng(seed)
    features: dict[str, np.ndarray] = {}
    labels: dict[str, str] = {}
    for i in range(n_per_class):
        features[f"u{i:03d}"] = np.concatenate(
            [[margin + noise * rng.normal()], noise * rng.normal(size=dim - 1)]
        )
        labels[f"u{i:03d}"] = UNSAFE
        features[f"s{i:03d}"] = np.concatenate(
            [[-margin + noise * rng.normal()], noise * rng.normal(size=dim - 1)]
        )
        labels[f"s{i:03d}"] = SAFE
    return features, labels


def write_floats(path, values) -> Path:
    path = Path(path)
    path.write_text("".join(f"{v}\n" for v in values), encoding="utf-8")
    return path
