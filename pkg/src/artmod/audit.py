"""Classifier evaluation: rate tables, grouped bias breakdowns,
cross-classifier agreement, and the Mann-Whitney U significance test.

Rates keep their integer numerators and denominators so identities such as
recall + false-positive rate = 1 on all-safe datasets hold by construction.
All functions are pure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dataset import LABELS, ROLES, ROLE_LABELS, Manifest, PERIODS, UNKNOWN, UNSAFE

__all__ = [
    "AgreementResult",
    "GroupBreakdown",
    "MetricRow",
    "UTestResult",
    "agreement",
    "build_audit_report",
    "breakdown_csv",
    "compute_metrics",
    "group_breakdown",
    "mann_whitney_u",
    "metrics_csv",
]

GROUP_KEYS = ("gender", "period", "artist", "platform", "year")

METHOD_EXACT = "exact"
METHOD_NORMAL = "normal_approx_tie_corrected"


@dataclass(frozen=True)
class MetricRow:
    """One rate row with its counts retained for exactness.

    ``unsafe_rate`` is the false-positive rate on art-role data; ``recall``
    is the fraction of verdicts matching the role's ground truth (safe on
    art roles, unsafe on the nsfw role). ``unsafe_share`` is only set in
    group breakdowns: this group's unsafe count over the total unsafe count.
    """

    n: int
    unsafe_count: int
    unsafe_rate: float
    recall: float
    unsafe_share: float | None = None

    def to_dict(self) -> dict:
        payload = {
            "n": self.n,
            "unsafe_count": self.unsafe_count,
            "unsafe_rate": self.unsafe_rate,
            "recall": self.recall,
        }
        if self.unsafe_share is not None:
            payload["unsafe_share"] = self.unsafe_share
        return payload


def _check_verdicts(verdicts, ids) -> None:
    missing = sorted(i for i in ids if i not in verdicts)
    if missing:
        raise ValueError(f"missing verdicts for ids: {missing}")
    bad = sorted(i for i in ids if verdicts[i] not in LABELS)
    if bad:
        raise ValueError(f"verdict labels must be safe/unsafe; bad ids: {bad}")


def compute_metrics(verdicts, ground_truth, role: str) -> MetricRow:
    """Rate row for one classifier on one role-typed dataset.

    For art roles, recall is the fraction labeled safe and the unsafe rate
    is the false-positive rate; the two sum to one by the count identity.
    For the nsfw role, recall equals the unsafe rate.
    """
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}; choose from {ROLES}")
    if not ground_truth:
        raise ValueError("ground truth is empty")
    expected = ROLE_LABELS[role]
    inconsistent = sorted(i for i, label in ground_truth.items() if label != expected)
    if inconsistent:
        raise ValueError(
            f"role {role!r} requires ground-truth label {expected!r}; violated by: {inconsistent}"
        )
    _check_verdicts(verdicts, ground_truth)
    n = len(ground_truth)
    unsafe_count = sum(1 for i in ground_truth if verdicts[i] == UNSAFE)
    correct = sum(1 for i in ground_truth if verdicts[i] == expected)
    return MetricRow(n=n, unsafe_count=unsafe_count, unsafe_rate=unsafe_count / n, recall=correct / n)


@dataclass(frozen=True)
class GroupBreakdown:
    """Metric rows per metadata group value for one classifier."""

    key: str
    groups: dict[str, MetricRow]
    total: int
    total_unsafe: int

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "total": self.total,
            "total_unsafe": self.total_unsafe,
            "groups": {name: row.to_dict() for name, row in self.groups.items()},
        }


def _group_values(record, key: str) -> tuple[str, ...]:
    if key == "gender":
        return tuple(sorted(record.genders)) or (UNKNOWN,)
    if key == "period":
        return (record.period,)
    if key == "artist":
        return (record.artist or UNKNOWN,)
    if key == "platform":
        return (record.platform or UNKNOWN,)
    return (str(record.year) if record.year is not None else UNKNOWN,)


def _ordered_groups(names, key: str) -> list[str]:
    present = set(names)
    if key == "period":
        return [p for p in PERIODS if p in present]
    if key == "gender":
        return [g for g in ("female", "male", UNKNOWN) if g in present]
    if key == "year":
        years = sorted(int(n) for n in present if n != UNKNOWN)
        ordered = [str(y) for y in years]
        if UNKNOWN in present:
            ordered.append(UNKNOWN)
        return ordered
    return sorted(present)


def group_breakdown(verdicts, manifest: Manifest, key: str) -> GroupBreakdown:
    """Metric rows per group value of one metadata key.

    Gender is a set per record, so an image tagged female+male counts in
    both groups and gender group sizes may sum past the total; all other
    keys partition the records (absent values fall under "unknown").
    """
    if key not in GROUP_KEYS:
        raise ValueError(f"unknown grouping key {key!r}; choose from {GROUP_KEYS}")
    ids = [record.id for record in manifest.records]
    _check_verdicts(verdicts, ids)
    expected = ROLE_LABELS[manifest.role]
    members: dict[str, list] = {}
    for record in manifest.records:
        for value in _group_values(record, key):
            members.setdefault(value, []).append(record)
    total_unsafe = sum(1 for i in ids if verdicts[i] == UNSAFE)
    groups: dict[str, MetricRow] = {}
    for value in _ordered_groups(members, key):
        rows = members[value]
        n = len(rows)
        unsafe = sum(1 for r in rows if verdicts[r.id] == UNSAFE)
        correct = sum(1 for r in rows if verdicts[r.id] == expected)
        groups[value] = MetricRow(
            n=n,
            unsafe_count=unsafe,
            unsafe_rate=unsafe / n,
            recall=correct / n,
            unsafe_share=(unsafe / total_unsafe) if total_unsafe else None,
        )
    return GroupBreakdown(key=key, groups=groups, total=len(ids), total_unsafe=total_unsafe)


@dataclass(frozen=True)
class AgreementResult:
    """Unanimity sets and the full per-id verdict matrix."""

    classifiers: tuple[str, ...]
    ids: tuple[str, ...]
    unanimous_unsafe: tuple[str, ...]
    unanimous_safe: tuple[str, ...]
    matrix: dict[str, dict[str, str]]

    def to_dict(self) -> dict:
        return {
            "classifiers": list(self.classifiers),
            "unanimous_unsafe": list(self.unanimous_unsafe),
            "unanimous_safe": list(self.unanimous_safe),
            "matrix": {i: dict(row) for i, row in self.matrix.items()},
        }


def agreement(verdict_sets, ids) -> AgreementResult:
    """Unanimous-safe/unsafe id sets across two or more classifiers."""
    names = list(verdict_sets)
    if len(names) < 2:
        raise ValueError("need verdicts from at least two classifiers")
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids")
    for name in names:
        _check_verdicts(verdict_sets[name], ids)
    matrix = {i: {name: verdict_sets[name][i] for name in names} for i in ids}
    unanimous_unsafe = tuple(
        i for i in ids if all(matrix[i][name] == UNSAFE for name in names)
    )
    unanimous_safe = tuple(
        i for i in ids if all(matrix[i][name] != UNSAFE for name in names)
    )
    return AgreementResult(
        classifiers=tuple(names),
        ids=tuple(ids),
        unanimous_unsafe=unanimous_unsafe,
        unanimous_safe=unanimous_safe,
        matrix=matrix,
    )


@dataclass(frozen=True)
class UTestResult:
    """Mann-Whitney U statistic (for the first sample) and two-sided p."""

    u_statistic: float
    p_value: float
    method: str
    n1: int
    n2: int

    def to_dict(self) -> dict:
        return {
            "u_statistic": self.u_statistic,
            "p_value": self.p_value,
            "method": self.method,
            "n1": self.n1,
            "n2": self.n2,
        }


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_values = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _norm_sf(z: float) -> float:
    """Standard normal survival function via the complementary error function."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _exact_two_sided_p(u1: float, n1: int, n2: int) -> float:
    """Enumerate every rank assignment; valid only for tie-free samples."""
    n = n1 + n2
    offset = n1 * (n1 + 1) // 2
    observed = max(u1, n1 * n2 - u1)
    as_extreme = 0
    total = 0
    for ranks in itertools.combinations(range(1, n + 1), n1):
        ua = sum(ranks) - offset
        if max(ua, n1 * n2 - ua) >= observed - 1e-9:
            as_extreme += 1
        total += 1
    return as_extreme / total


def _normal_two_sided_p(u1: float, pooled: np.ndarray, n1: int, n2: int) -> float:
    """Tie-corrected normal approximation with 0.5 continuity correction."""
    n = n1 + n2
    mu = n1 * n2 / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(((counts.astype(np.float64)) ** 3 - counts).sum())
    variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    if variance <= 0.0:
        return 1.0
    z = (max(u1, n1 * n2 - u1) - mu - 0.5) / math.sqrt(variance)
    return min(1.0, max(0.0, 2.0 * _norm_sf(z)))


def mann_whitney_u(sample_a, sample_b) -> UTestResult:
    """Two-sided Mann-Whitney U test; the statistic reported is U of sample_a.

    With at most 20 pooled observations and no ties the p-value is exact
    (full enumeration of rank assignments, counting arrangements at least
    as extreme as observed on either side); otherwise it comes from the
    normal approximation with midrank tie correction and a 0.5 continuity
    correction. The method used is recorded on the result.
    """
    a = np.asarray(list(sample_a), dtype=np.float64)
    b = np.asarray(list(sample_b), dtype=np.float64)
    if a.size == 0:
        raise ValueError("sample_a is empty")
    if b.size == 0:
        raise ValueError("sample_b is empty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    n1, n2 = int(a.size), int(b.size)
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u1 = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    tie_free = np.unique(pooled).size == pooled.size
    if n1 + n2 <= 20 and tie_free:
        p = _exact_two_sided_p(u1, n1, n2)
        method = METHOD_EXACT
    else:
        p = _normal_two_sided_p(u1, pooled, n1, n2)
        method = METHOD_NORMAL
    return UTestResult(u_statistic=u1, p_value=p, method=method, n1=n1, n2=n2)


def build_audit_report(manifest: Manifest, verdict_sets, keys=("gender", "period")) -> dict:
    """Assemble the JSON-ready audit payload for one dataset.

    ``verdict_sets`` maps classifier name to its id → label map. Agreement
    is included once two or more classifiers are present.
    """
    names = list(verdict_sets)
    if not names:
        raise ValueError("no verdict sets supplied")
    ground_truth = manifest.labels()
    metrics = {
        name: compute_metrics(verdict_sets[name], ground_truth, manifest.role)
        for name in names
    }
    breakdowns = {
        name: {key: group_breakdown(verdict_sets[name], manifest, key) for key in keys}
        for name in names
    }
    payload = {
        "role": manifest.role,
        "n": len(manifest.records),
        "metrics": {name: row.to_dict() for name, row in metrics.items()},
        "breakdowns": {
            name: {key: bd.to_dict() for key, bd in per_key.items()}
            for name, per_key in breakdowns.items()
        },
        "agreement": None,
    }
    if manifest.name is not None:
        payload["dataset"] = manifest.name
    if len(names) >= 2:
        payload["agreement"] = agreement(verdict_sets, [r.id for r in manifest.records]).to_dict()
    return payload


def _csv_text(header: list[str], rows: list[list]) -> str:
    import csv
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def metrics_csv(metrics) -> str:
    """CSV of per-classifier rate rows (mapping name -> MetricRow)."""
    rows = [
        [name, row.n, row.unsafe_count, repr(row.unsafe_rate), repr(row.recall)]
        for name, row in metrics.items()
    ]
    return _csv_text(["classifier", "n", "unsafe_count", "unsafe_rate", "recall"], rows)


def breakdown_csv(key: str, breakdowns) -> str:
    """CSV of grouped rate rows for one key (mapping classifier -> GroupBreakdown)."""
    rows = []
    for name, bd in breakdowns.items():
        if bd.key != key:
            raise ValueError(f"breakdown for {name!r} is keyed {bd.key!r}, not {key!r}")
        for value, row in bd.groups.items():
            rows.append(
                [
                    name,
                    value,
                    row.n,
                    row.unsafe_count,
                    repr(row.unsafe_rate),
                    repr(row.recall),
                    "" if row.unsafe_share is None else repr(row.unsafe_share),
                ]
            )
    return _csv_text(
        ["classifier", "group", "n", "unsafe_count", "unsafe_rate", "recall", "unsafe_share"],
        rows,
    )
