"""Bias audit of two mock classifiers on an all-safe art collection.

Fabricates a wiki-style art manifest (every record is ground-truth safe),
plus two verdict sets: a "keyword_filter" that disproportionately flags
images tagged female, and a better-calibrated "embedding_knn". Prints the
headline rates, the per-gender breakdown, cross-classifier agreement, a
Mann-Whitney U test on the two per-image flag vectors, and the CSV exports.

Run: python3 demos/classifier_audit.py
"""

import numpy as np

from artmod import agreement, compute_metrics, group_breakdown, mann_whitney_u
from artmod.audit import breakdown_csv, metrics_csv
from artmod.dataset import SAFE, UNSAFE, ImageRecord, Manifest

SEED = 6
N = 40


def build_manifest():
    records = []
    for i in range(N):
        if i % 4 == 0:
            genders = frozenset({"female"})
        elif i % 4 == 1:
            genders = frozenset({"male"})
        elif i % 4 == 2:
            genders = frozenset({"female", "male"})
        else:
            genders = frozenset()
        records.append(
            ImageRecord(
                id=f"img{i:03d}",
                path=f"images/img{i:03d}.png",
                label=SAFE,
                genders=genders,
                period=("1850-1900" if i % 2 == 0 else "pre1800"),
            )
        )
    return Manifest(records=tuple(records), role="art_wikistyle", name="mock_collection")


def mock_verdicts(manifest, rng, female_flag_rate, base_flag_rate):
    verdicts = {}
    for record in manifest.records:
        rate = female_flag_rate if "female" in record.genders else base_flag_rate
        verdicts[record.id] = UNSAFE if rng.random() < rate else SAFE
    return verdicts


def main():
    rng = np.random.default_rng(SEED)
    manifest = build_manifest()
    truth = {r.id: r.label for r in manifest.records}
    verdict_sets = {
        "keyword_filter": mock_verdicts(manifest, rng, 0.60, 0.10),
        "embedding_knn": mock_verdicts(manifest, rng, 0.10, 0.10),
    }

    print(f"dataset: {manifest.name} ({len(manifest.records)} safe art images)\n")
    print("headline rates (unsafe_rate is the false-positive rate here):")
    metrics = {
        name: compute_metrics(v, truth, manifest.role) for name, v in verdict_sets.items()
    }
    for name, row in metrics.items():
        print(
            f"  {name:<15} flagged {row.unsafe_count:>2}/{row.n}"
            f"  fpr={row.unsafe_rate:.3f}  recall={row.recall:.3f}"
        )

    print("\nper-gender breakdown of keyword_filter:")
    bd = group_breakdown(verdict_sets["keyword_filter"], manifest, "gender")
    for group, row in bd.groups.items():
        share = "-" if row.unsafe_share is None else f"{row.unsafe_share:.3f}"
        print(
            f"  {group:<8} n={row.n:>2}  flagged={row.unsafe_count:>2}"
            f"  fpr={row.unsafe_rate:.3f}  share_of_flags={share}"
        )

    flags = {
        name: {i: 1.0 if v[i] == UNSAFE else 0.0 for i in truth}
        for name, v in verdict_sets.items()
    }
    kf = flags["keyword_filter"]
    female_flags = [kf[r.id] for r in manifest.records if "female" in r.genders]
    other_flags = [kf[r.id] for r in manifest.records if "female" not in r.genders]
    test = mann_whitney_u(female_flags, other_flags)
    print(
        f"\nMann-Whitney U, keyword_filter flags female vs rest:"
        f" U={test.u_statistic:.1f} p={test.p_value:.5f} ({test.method})"
    )

    agree = agreement(verdict_sets, list(truth))
    print(
        f"\nagreement across both classifiers:"
        f" unanimous_unsafe={len(agree.unanimous_unsafe)}"
        f" unanimous_safe={len(agree.unanimous_safe)}"
        f" split={len(agree.ids) - len(agree.unanimous_unsafe) - len(agree.unanimous_safe)}"
    )

    print("\nmetrics.csv:")
    print(metrics_csv(metrics), end="")
    print("\nbreakdown_gender.csv (keyword_filter only):")
    print(breakdown_csv("gender", {"keyword_filter": bd}), end="")


if __name__ == "__main__":
    main()
