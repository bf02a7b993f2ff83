"""Manifest ingestion and deterministic splitting for audit datasets.

A manifest is a UTF-8 CSV with header
``id,path,label,genders,period,artist,platform,year``. ``genders`` joins
tokens with ``+`` (``female+male``), empty cells mean unknown, and period
cells use the tokens in :data:`PERIODS`. Splitting and sampling shuffle
with an explicit Fisher-Yates pass over numpy's PCG64 stream so results
reproduce anywhere the seed does.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ManifestError

__all__ = [
    "ART_ROLES",
    "FoldSplit",
    "GENDERS",
    "ImageRecord",
    "LABELS",
    "Manifest",
    "PERIODS",
    "ROLES",
    "ROLE_LABELS",
    "SAFE",
    "UNSAFE",
    "kfold_split",
    "load_manifest",
    "load_records",
    "sample_test_set",
]

SAFE = "safe"
UNSAFE = "unsafe"
LABELS = (SAFE, UNSAFE)

ROLE_ART_CENSORED = "art_censored"
ROLE_ART_WIKISTYLE = "art_wikistyle"
ROLE_NSFW = "nsfw"
ROLES = (ROLE_ART_CENSORED, ROLE_ART_WIKISTYLE, ROLE_NSFW)
ART_ROLES = frozenset({ROLE_ART_CENSORED, ROLE_ART_WIKISTYLE})

# ground-truth label implied by each dataset role
ROLE_LABELS = {
    ROLE_ART_CENSORED: SAFE,
    ROLE_ART_WIKISTYLE: SAFE,
    ROLE_NSFW: UNSAFE,
}

GENDERS = ("female", "male")
UNKNOWN = "unknown"
PERIODS = (
    "pre1800",
    "1800-1850",
    "1850-1900",
    "1900-1950",
    "1950-2000",
    "2000-2023",
    UNKNOWN,
)

MANIFEST_HEADER = ("id", "path", "label", "genders", "period", "artist", "platform", "year")


@dataclass(frozen=True)
class ImageRecord:
    """One labeled image with the metadata used by the bias audits."""

    id: str
    path: str
    label: str
    genders: frozenset[str] = frozenset()
    period: str = UNKNOWN
    artist: str | None = None
    platform: str | None = None
    year: int | None = None


@dataclass(frozen=True)
class Manifest:
    """An ordered, role-typed collection of records.

    The role pins the ground truth: art roles contain only safe records,
    the nsfw role only unsafe ones. Mixed-label data should stay a plain
    record sequence (see :func:`load_records`).
    """

    records: tuple[ImageRecord, ...]
    role: str
    name: str | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; choose from {ROLES}")
        expected = ROLE_LABELS[self.role]
        seen: set[str] = set()
        for record in self.records:
            if record.id in seen:
                raise ValueError(f"duplicate id {record.id!r} in manifest")
            seen.add(record.id)
            if record.label != expected:
                raise ValueError(
                    f"record {record.id!r} has label {record.label!r}, "
                    f"but role {self.role!r} requires {expected!r}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> tuple[str, ...]:
        return tuple(record.id for record in self.records)

    def labels(self) -> dict[str, str]:
        return {record.id: record.label for record in self.records}


def _parse_row(row: list[str], line: int) -> ImageRecord:
    if len(row) != len(MANIFEST_HEADER):
        raise ManifestError(
            f"line {line}: expected {len(MANIFEST_HEADER)} columns, got {len(row)}"
        )
    id_, path, label, genders, period, artist, platform, year = (c.strip() for c in row)
    if not id_:
        raise ManifestError(f"line {line}: empty id")
    if not path:
        raise ManifestError(f"line {line}: empty path")
    label_token = label.casefold()
    if label_token not in LABELS:
        raise ManifestError(f"line {line}: unknown label {label!r}")
    gender_set = frozenset()
    if genders:
        tokens = [t.strip().casefold() for t in genders.split("+")]
        for token in tokens:
            if token not in GENDERS:
                raise ManifestError(f"line {line}: unknown gender token {token!r}")
        gender_set = frozenset(tokens)
    period_token = period.casefold() if period else UNKNOWN
    if period_token not in PERIODS:
        raise ManifestError(f"line {line}: unknown period token {period!r}")
    year_value: int | None = None
    if year:
        try:
            year_value = int(year)
        except ValueError:
            raise ManifestError(f"line {line}: year must be an integer, got {year!r}") from None
    return ImageRecord(
        id=id_,
        path=path,
        label=label_token,
        genders=gender_set,
        period=period_token,
        artist=artist or None,
        platform=platform or None,
        year=year_value,
    )


def _parse_file(path) -> list[tuple[int, ImageRecord]]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest") from None
        if tuple(cell.strip().casefold() for cell in header) != MANIFEST_HEADER:
            raise ManifestError(f"{path}: header must be {','.join(MANIFEST_HEADER)}")
        rows: list[tuple[int, ImageRecord]] = []
        seen: dict[str, int] = {}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            record = _parse_row(row, line)
            if record.id in seen:
                raise ManifestError(
                    f"line {line}: duplicate id {record.id!r} (first seen at line {seen[record.id]})"
                )
            seen[record.id] = line
            rows.append((line, record))
    return rows


def load_records(path) -> tuple[ImageRecord, ...]:
    """Parse manifest rows with per-line validation but no role check.

    Use this for mixed safe/unsafe ground-truth files (e.g. a zero-shot
    evaluation set); :func:`load_manifest` adds the role consistency check.
    """
    return tuple(record for _, record in _parse_file(path))


def load_manifest(path, role: str, name: str | None = None) -> Manifest:
    """Load a manifest and enforce that every label matches the role."""
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}; choose from {ROLES}")
    expected = ROLE_LABELS[role]
    rows = _parse_file(path)
    for line, record in rows:
        if record.label != expected:
            raise ManifestError(
                f"line {line}: record {record.id!r} has label {record.label!r}, "
                f"but role {role!r} requires {expected!r}"
            )
    return Manifest(records=tuple(r for _, r in rows), role=role, name=name)


def _fisher_yates(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates permutation of ``range(n)`` driven by numpy's PCG64."""
    rng = np.random.default_rng(seed)
    order = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def sample_test_set(manifest: Manifest, count: int, *, seed: int) -> tuple[Manifest, Manifest]:
    """Uniform sample without replacement, plus the complement.

    Both returned manifests preserve the original record order. The same
    (manifest, count, seed) always selects the same ids.
    """
    n = len(manifest)
    if not 0 <= count <= n:
        raise ValueError(f"count must be in [0, {n}], got {count}")
    chosen = set(_fisher_yates(n, seed)[:count].tolist())
    test = tuple(r for i, r in enumerate(manifest.records) if i in chosen)
    rest = tuple(r for i, r in enumerate(manifest.records) if i not in chosen)

    def _named(tag: str) -> str | None:
        return f"{manifest.name}:{tag}" if manifest.name else None

    return (
        Manifest(records=test, role=manifest.role, name=_named("sample")),
        Manifest(records=rest, role=manifest.role, name=_named("remainder")),
    )


@dataclass(frozen=True)
class FoldSplit:
    """A balanced partition of record ids into ``folds`` folds."""

    fold_assignments: dict[str, int]
    folds: int
    seed: int

    def fold_ids(self, fold: int) -> tuple[str, ...]:
        """Ids assigned to one fold, in manifest order."""
        if not 0 <= fold < self.folds:
            raise ValueError(f"fold must be in [0, {self.folds}), got {fold}")
        return tuple(i for i, f in self.fold_assignments.items() if f == fold)

    def iter_folds(self):
        """Yield (train_ids, validation_ids) once per held-out fold."""
        for fold in range(self.folds):
            train = tuple(i for i, f in self.fold_assignments.items() if f != fold)
            yield train, self.fold_ids(fold)


def kfold_split(manifest: Manifest, folds: int = 5, *, seed: int) -> FoldSplit:
    """Shuffle then partition into folds whose sizes differ by at most 1.

    The first ``n mod folds`` folds (in fold-index order) receive the extra
    record, e.g. 143 records over 5 folds give sizes 29,29,29,28,28.
    """
    n = len(manifest)
    if folds < 1:
        raise ValueError(f"folds must be positive, got {folds}")
    if folds > n:
        raise ValueError(f"cannot split {n} records into {folds} folds")
    order = _fisher_yates(n, seed)
    base, extra = divmod(n, folds)
    fold_of_position = np.empty(n, dtype=np.intp)
    start = 0
    for fold in range(folds):
        size = base + (1 if fold < extra else 0)
        fold_of_position[start : start + size] = fold
        start += size
    fold_of_index = np.empty(n, dtype=np.intp)
    fold_of_index[order] = fold_of_position
    assignments = {
        record.id: int(fold_of_index[i]) for i, record in enumerate(manifest.records)
    }
    return FoldSplit(fold_assignments=assignments, folds=folds, seed=seed)
