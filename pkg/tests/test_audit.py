"""Audit metrics and the Mann-Whitney U test.

The U statistic is checked against the definitional pairwise-counting
oracle, the exact p-value against an independent enumeration over value
subsets, and the tie-corrected normal approximation against scipy (which
the package itself never imports).
"""

import itertools
import json
import math

import numpy as np
import pytest
import scipy.stats

from artmod.audit import (
    GROUP_KEYS,
    METHOD_EXACT,
    METHOD_NORMAL,
    MetricRow,
    UTestResult,
    _midranks,
    _norm_sf,
    _normal_two_sided_p,
    agreement,
    breakdown_csv,
    build_audit_report,
    compute_metrics,
    group_breakdown,
    mann_whitney_u,
    metrics_csv,
)
from artmod.dataset import (
    ROLE_ART_CENSORED,
    ROLE_ART_WIKISTYLE,
    ROLE_NSFW,
    SAFE,
    UNSAFE,
    ImageRecord,
    Manifest,
)


def oracle_u(sample_a, sample_b):
    """U of sample_a by definition: count pairs where a beats b, ties half."""
    u = 0.0
    for x in sample_a:
        for y in sample_b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def oracle_exact_p(sample_a, sample_b):
    """Two-sided exact p by enumerating every way to pick which pooled
    values belong to the first sample, scoring each with the pairwise oracle."""
    pooled = list(sample_a) + list(sample_b)
    n1, n2 = len(sample_a), len(sample_b)
    observed_u = oracle_u(sample_a, sample_b)
    observed = max(observed_u, n1 * n2 - observed_u)
    as_extreme = 0
    total = 0
    for chosen in itertools.combinations(range(len(pooled)), n1):
        chosen_set = set(chosen)
        first = [pooled[i] for i in chosen]
        second = [pooled[i] for i in range(len(pooled)) if i not in chosen_set]
        u = oracle_u(first, second)
        if max(u, n1 * n2 - u) >= observed - 1e-12:
            as_extreme += 1
        total += 1
    assert total == math.comb(n1 + n2, n1)
    return as_extreme / total


def test_u_statistic_matches_pairwise_oracle():
    rng = np.random.default_rng(2)
    for trial in range(60):
        n1 = int(rng.integers(1, 12))
        n2 = int(rng.integers(1, 12))
        if trial % 2 == 0:
            a = rng.integers(0, 4, size=n1).astype(float)
            b = rng.integers(0, 4, size=n2).astype(float)
        else:
            a = rng.normal(size=n1)
            b = rng.normal(size=n2)
        result = mann_whitney_u(a, b)
        assert result.u_statistic == oracle_u(a, b)
        assert result.n1 == n1
        assert result.n2 == n2


def test_hand_case_exact_p():
    result = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert result.u_statistic == 0.0
    assert result.p_value == 0.1
    assert result.method == METHOD_EXACT
    flipped = mann_whitney_u([4, 5, 6], [1, 2, 3])
    assert flipped.u_statistic == 9.0
    assert flipped.p_value == 0.1


@pytest.mark.parametrize(
    "a, b",
    [
        ([1, 2, 3], [4, 5, 6]),
        ([1.5, 2.5], [0.5, 3.5, 7.0]),
        ([10, 3], [5, 8, 1, 9]),
        ([0.1, 0.9, 0.4, 0.7], [0.2, 0.3, 0.8]),
        ([2.0], [1.0, 3.0]),
    ],
)
def test_exact_p_matches_value_enumeration_oracle(a, b):
    result = mann_whitney_u(a, b)
    assert result.method == METHOD_EXACT
    assert result.p_value == pytest.approx(oracle_exact_p(a, b), abs=1e-12)


def test_antisymmetry_on_100_random_pairs():
    rng = np.random.default_rng(3)
    for trial in range(100):
        n1 = int(rng.integers(1, 15))
        n2 = int(rng.integers(1, 15))
        if trial % 3 == 0:
            a = rng.integers(0, 3, size=n1).astype(float)
            b = rng.integers(0, 3, size=n2).astype(float)
        else:
            a = rng.normal(size=n1)
            b = rng.normal(size=n2)
        assert mann_whitney_u(a, b).u_statistic + mann_whitney_u(b, a).u_statistic == n1 * n2


def test_normal_approximation_matches_scipy_on_binary_pairs():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n1 = int(rng.integers(30, 200))
        n2 = int(rng.integers(30, 200))
        a = (rng.random(n1) < rng.uniform(0.1, 0.6)).astype(float)
        b = (rng.random(n2) < rng.uniform(0.1, 0.6)).astype(float)
        ours = mann_whitney_u(a, b)
        assert ours.method == METHOD_NORMAL
        ref = scipy.stats.mannwhitneyu(
            a, b, alternative="two-sided", method="asymptotic", use_continuity=True
        )
        assert ours.u_statistic == pytest.approx(float(ref.statistic), abs=1e-6)
        assert ours.p_value == pytest.approx(float(ref.pvalue), abs=1e-4)


def test_two_binary_rate_vectors_are_significant():
    flags_high = [1.0] * 70 + [0.0] * 130  # unsafe rate 0.35
    flags_low = [1.0] * 16 + [0.0] * 184  # unsafe rate 0.08
    result = mann_whitney_u(flags_high, flags_low)
    assert result.method == METHOD_NORMAL
    assert result.p_value < 0.01
    ref = scipy.stats.mannwhitneyu(
        flags_high, flags_low, alternative="two-sided", method="asymptotic", use_continuity=True
    )
    assert result.u_statistic == pytest.approx(float(ref.statistic), abs=1e-6)
    assert result.p_value == pytest.approx(float(ref.pvalue), abs=1e-4)


def test_tie_free_normal_path_matches_scipy():
    rng = np.random.default_rng(6)
    a = rng.normal(size=15)
    b = rng.normal(size=15)
    result = mann_whitney_u(a, b)
    assert result.method == METHOD_NORMAL  # pooled size exceeds the exact cutoff
    ref = scipy.stats.mannwhitneyu(
        a, b, alternative="two-sided", method="asymptotic", use_continuity=True
    )
    assert result.u_statistic == float(ref.statistic)
    assert result.p_value == pytest.approx(float(ref.pvalue), rel=1e-10)


def test_method_selection_boundary():
    a = [float(i) for i in range(10)]
    b = [float(i) + 0.5 for i in range(10)]  # pooled size 20, tie-free
    assert mann_whitney_u(a, b).method == METHOD_EXACT
    assert mann_whitney_u(a, b + [99.0]).method == METHOD_NORMAL  # 21 pooled
    assert mann_whitney_u([1.0, 2.0], [2.0, 3.0]).method == METHOD_NORMAL  # tie


def test_degenerate_variance_gives_p_one():
    result = mann_whitney_u([5.0, 5.0], [5.0, 5.0, 5.0])
    assert result.method == METHOD_NORMAL
    assert result.u_statistic == 3.0  # every midrank equal, so U sits at its mean
    assert result.p_value == 1.0


def test_mwu_validation():
    with pytest.raises(ValueError, match="sample_a is empty"):
        mann_whitney_u([], [1.0])
    with pytest.raises(ValueError, match="sample_b is empty"):
        mann_whitney_u([1.0], [])
    with pytest.raises(ValueError, match="finite"):
        mann_whitney_u([1.0, math.nan], [2.0])
    with pytest.raises(ValueError, match="finite"):
        mann_whitney_u([1.0], [math.inf])


def test_midranks_hand_values_and_scipy():
    np.testing.assert_array_equal(
        _midranks(np.array([10.0, 20.0, 20.0, 30.0])), [1.0, 2.5, 2.5, 4.0]
    )
    np.testing.assert_array_equal(_midranks(np.array([7.0, 7.0, 7.0])), [2.0, 2.0, 2.0])
    rng = np.random.default_rng(8)
    values = rng.integers(0, 5, size=40).astype(float)
    np.testing.assert_array_equal(_midranks(values), scipy.stats.rankdata(values))


def test_norm_sf_matches_scipy():
    for z in np.linspace(-6.0, 6.0, 25):
        assert _norm_sf(float(z)) == pytest.approx(float(scipy.stats.norm.sf(z)), rel=1e-12)


def test_exact_and_normal_p_roughly_agree_when_tie_free():
    rng = np.random.default_rng(9)
    for _ in range(10):
        n1 = int(rng.integers(4, 7))
        n2 = int(rng.integers(4, 7))
        a = rng.normal(size=n1)
        b = rng.normal(size=n2)
        result = mann_whitney_u(a, b)
        assert result.method == METHOD_EXACT
        pooled = np.concatenate([a, b])
        approximated = _normal_two_sided_p(result.u_statistic, pooled, n1, n2)
        assert abs(result.p_value - approximated) < 0.06


def test_utest_result_to_dict():
    payload = mann_whitney_u([1, 2, 3], [4, 5, 6]).to_dict()
    assert payload == {
        "u_statistic": 0.0,
        "p_value": 0.1,
        "method": METHOD_EXACT,
        "n1": 3,
        "n2": 3,
    }


def test_metrics_hand_fixture():
    ground_truth = {f"art{i:03d}": SAFE for i in range(10)}
    ordered = sorted(ground_truth)
    verdicts = {i: (UNSAFE if idx < 3 else SAFE) for idx, i in enumerate(ordered)}
    row = compute_metrics(verdicts, ground_truth, ROLE_ART_WIKISTYLE)
    assert row.n == 10
    assert row.unsafe_count == 3
    assert row.unsafe_rate == 0.3
    assert row.recall == 0.7
    assert row.recall + row.unsafe_rate == 1.0
    assert row.unsafe_share is None
    assert row.to_dict() == {"n": 10, "unsafe_count": 3, "unsafe_rate": 0.3, "recall": 0.7}


def test_recall_plus_fpr_identity_property():
    rng = np.random.default_rng(10)
    for _ in range(50):
        n = int(rng.integers(1, 400))
        ground_truth = {f"a{i}": SAFE for i in range(n)}
        cutoff = rng.random()
        verdicts = {i: (UNSAFE if rng.random() < cutoff else SAFE) for i in ground_truth}
        row = compute_metrics(verdicts, ground_truth, ROLE_ART_CENSORED)
        safe_count = sum(1 for i in ground_truth if verdicts[i] == SAFE)
        assert row.unsafe_count + safe_count == n
        assert row.recall == safe_count / n
        assert row.recall + row.unsafe_rate == 1.0


def test_nsfw_role_recall_equals_unsafe_rate():
    ground_truth = {f"n{i}": UNSAFE for i in range(8)}
    ordered = sorted(ground_truth)
    verdicts = {i: (UNSAFE if idx % 3 else SAFE) for idx, i in enumerate(ordered)}
    row = compute_metrics(verdicts, ground_truth, ROLE_NSFW)
    assert row.recall == row.unsafe_rate == row.unsafe_count / 8


def test_compute_metrics_validation():
    ground_truth = {"a1": SAFE}
    with pytest.raises(ValueError, match="unknown role"):
        compute_metrics({"a1": SAFE}, ground_truth, "mixed")
    with pytest.raises(ValueError, match="ground truth is empty"):
        compute_metrics({}, {}, ROLE_NSFW)
    with pytest.raises(ValueError, match="violated by"):
        compute_metrics({"a1": SAFE}, ground_truth, ROLE_NSFW)
    with pytest.raises(ValueError, match=r"missing verdicts for ids: \['a1'\]"):
        compute_metrics({}, ground_truth, ROLE_ART_WIKISTYLE)
    with pytest.raises(ValueError, match="bad ids"):
        compute_metrics({"a1": "meh"}, ground_truth, ROLE_ART_WIKISTYLE)


def audit_manifest():
    records = (
        ImageRecord(
            id="a1", path="a1.png", label=SAFE, genders=frozenset({"female"}),
            period="1850-1900", artist="monet", platform=None, year=1870,
        ),
        ImageRecord(
            id="a2", path="a2.png", label=SAFE, genders=frozenset({"female", "male"}),
            period="pre1800", artist=None, platform="museum", year=None,
        ),
        ImageRecord(
            id="a3", path="a3.png", label=SAFE, genders=frozenset(),
            period="1850-1900", artist="degas", platform=None, year=1885,
        ),
        ImageRecord(
            id="a4", path="a4.png", label=SAFE, genders=frozenset({"male"}),
            period="unknown", artist="monet", platform=None, year=1900,
        ),
    )
    return Manifest(records=records, role=ROLE_ART_WIKISTYLE, name="fixture")


FIXTURE_VERDICTS = {"a1": UNSAFE, "a2": SAFE, "a3": UNSAFE, "a4": SAFE}


def test_gender_breakdown_multi_membership():
    breakdown = group_breakdown(FIXTURE_VERDICTS, audit_manifest(), "gender")
    assert breakdown.key == "gender"
    assert breakdown.total == 4
    assert breakdown.total_unsafe == 2
    assert list(breakdown.groups) == ["female", "male", "unknown"]
    # a2 is tagged female+male, so group sizes sum past the record count
    assert sum(row.n for row in breakdown.groups.values()) == 5
    female = breakdown.groups["female"]
    assert (female.n, female.unsafe_count, female.unsafe_rate, female.recall) == (2, 1, 0.5, 0.5)
    assert female.unsafe_share == 0.5
    male = breakdown.groups["male"]
    assert (male.n, male.unsafe_count, male.recall, male.unsafe_share) == (2, 0, 1.0, 0.0)
    unknown = breakdown.groups["unknown"]
    assert (unknown.n, unknown.unsafe_count, unknown.recall, unknown.unsafe_share) == (1, 1, 0.0, 0.5)


def test_period_breakdown_follows_canonical_order():
    breakdown = group_breakdown(FIXTURE_VERDICTS, audit_manifest(), "period")
    assert list(breakdown.groups) == ["pre1800", "1850-1900", "unknown"]
    assert breakdown.groups["1850-1900"].n == 2
    assert breakdown.groups["1850-1900"].unsafe_count == 2
    assert breakdown.groups["1850-1900"].unsafe_share == 1.0


def test_artist_platform_year_breakdowns():
    manifest = audit_manifest()
    artist = group_breakdown(FIXTURE_VERDICTS, manifest, "artist")
    assert list(artist.groups) == ["degas", "monet", "unknown"]
    assert artist.groups["monet"].n == 2
    platform = group_breakdown(FIXTURE_VERDICTS, manifest, "platform")
    assert list(platform.groups) == ["museum", "unknown"]
    assert platform.groups["unknown"].n == 3
    year = group_breakdown(FIXTURE_VERDICTS, manifest, "year")
    assert list(year.groups) == ["1870", "1885", "1900", "unknown"]
    assert year.groups["unknown"].n == 1


def test_breakdown_share_is_none_when_nothing_flagged():
    verdicts = {i: SAFE for i in FIXTURE_VERDICTS}
    breakdown = group_breakdown(verdicts, audit_manifest(), "gender")
    assert breakdown.total_unsafe == 0
    assert all(row.unsafe_share is None for row in breakdown.groups.values())
    assert all("unsafe_share" not in row.to_dict() for row in breakdown.groups.values())


def test_group_breakdown_validation():
    manifest = audit_manifest()
    with pytest.raises(ValueError, match="unknown grouping key"):
        group_breakdown(FIXTURE_VERDICTS, manifest, "century")
    partial = dict(FIXTURE_VERDICTS)
    partial.pop("a2")
    with pytest.raises(ValueError, match=r"missing verdicts for ids: \['a2'\]"):
        group_breakdown(partial, manifest, "gender")
    assert set(GROUP_KEYS) == {"gender", "period", "artist", "platform", "year"}


def test_agreement_unanimity_sets():
    ids = ["x1", "x2", "x3"]
    verdict_sets = {
        "alpha": {"x1": UNSAFE, "x2": SAFE, "x3": UNSAFE},
        "beta": {"x1": UNSAFE, "x2": SAFE, "x3": SAFE},
    }
    result = agreement(verdict_sets, ids)
    assert result.classifiers == ("alpha", "beta")
    assert result.ids == ("x1", "x2", "x3")
    assert result.unanimous_unsafe == ("x1",)
    assert result.unanimous_safe == ("x2",)
    assert result.matrix["x3"] == {"alpha": UNSAFE, "beta": SAFE}
    payload = result.to_dict()
    assert payload["unanimous_unsafe"] == ["x1"]
    assert payload["matrix"]["x1"] == {"alpha": UNSAFE, "beta": UNSAFE}


def test_agreement_validation():
    ids = ["x1"]
    with pytest.raises(ValueError, match="at least two"):
        agreement({"only": {"x1": SAFE}}, ids)
    two = {"alpha": {"x1": SAFE}, "beta": {"x1": SAFE}}
    with pytest.raises(ValueError, match="duplicate ids"):
        agreement(two, ["x1", "x1"])
    with pytest.raises(ValueError, match="missing verdicts"):
        agreement({"alpha": {"x1": SAFE}, "beta": {}}, ids)


def test_build_audit_report_payload():
    manifest = audit_manifest()
    single = build_audit_report(manifest, {"zero_shot": FIXTURE_VERDICTS})
    assert single["role"] == ROLE_ART_WIKISTYLE
    assert single["n"] == 4
    assert single["dataset"] == "fixture"
    assert single["agreement"] is None
    assert set(single["metrics"]) == {"zero_shot"}
    assert set(single["breakdowns"]["zero_shot"]) == {"gender", "period"}
    json.dumps(single)

    both = build_audit_report(
        manifest,
        {"zero_shot": FIXTURE_VERDICTS, "scorer": {i: SAFE for i in FIXTURE_VERDICTS}},
        keys=("gender",),
    )
    assert set(both["breakdowns"]["scorer"]) == {"gender"}
    assert both["agreement"]["unanimous_unsafe"] == []
    assert both["agreement"]["unanimous_safe"] == ["a2", "a4"]
    json.dumps(both)
    with pytest.raises(ValueError, match="no verdict sets"):
        build_audit_report(manifest, {})


def test_metrics_csv_golden():
    metrics = {"zero_shot": MetricRow(n=10, unsafe_count=3, unsafe_rate=0.3, recall=0.7)}
    assert metrics_csv(metrics) == (
        "classifier,n,unsafe_count,unsafe_rate,recall\n"
        "zero_shot,10,3,0.3,0.7\n"
    )


def test_breakdown_csv_golden_and_key_check():
    breakdown = group_breakdown(FIXTURE_VERDICTS, audit_manifest(), "gender")
    text = breakdown_csv("gender", {"m": breakdown})
    assert text == (
        "classifier,group,n,unsafe_count,unsafe_rate,recall,unsafe_share\n"
        "m,female,2,1,0.5,0.5,0.5\n"
        "m,male,2,0,0.0,1.0,0.0\n"
        "m,unknown,1,1,1.0,0.0,0.5\n"
    )
    with pytest.raises(ValueError, match="keyed"):
        breakdown_csv("period", {"m": breakdown})


def test_breakdown_csv_blank_share_when_none():
    verdicts = {i: SAFE for i in FIXTURE_VERDICTS}
    breakdown = group_breakdown(verdicts, audit_manifest(), "platform")
    text = breakdown_csv("platform", {"m": breakdown})
    assert text.splitlines()[1] == "m,museum,1,0,0.0,1.0,"
