"""The ``artmod`` command line: embed datasets, run zero-shot evaluation,
score images, run the fine-tuning protocol, audit verdicts, and run
significance tests.

Determinism contract: every command writes its outputs atomically and
byte-identically for identical inputs and seed. Anything time-dependent
(timestamps) goes to a ``<out>.log`` sidecar, never into an output body.
Plot-ready data is emitted as CSV for external plotting.

Exit codes: 0 success, 1 pipeline error (bad data, backend failures),
2 usage error (unknown flags, missing required flags, unreadable paths,
out-of-range values).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .audit import (
    GROUP_KEYS,
    breakdown_csv,
    build_audit_report,
    compute_metrics,
    group_breakdown,
    mann_whitney_u,
    metrics_csv,
)
from .backend import (
    EmbeddingCache,
    cache_read,
    cache_write,
    embed_images,
    embed_texts,
    load_backend_spec,
    nsfw_score,
    open_backend,
)
from .dataset import (
    ROLE_ART_CENSORED,
    ROLE_ART_WIKISTYLE,
    ROLE_NSFW,
    ROLES,
    Manifest,
    load_manifest,
    load_records,
    sample_test_set,
)
from .errors import ArtmodError
from .probe import FineTuneOutcome, ProbeConfig, finetune_protocol
from .zeroshot import ZeroShotReport, evaluate, load_term_set

__all__ = ["RunConfig", "build_parser", "execute", "main", "parse_args"]

BACKEND_ENV = "ARTMOD_BACKEND"
COMMANDS = ("embed", "zeroshot", "classify", "finetune", "audit", "stats")

DEFAULT_SEED = 42
DEFAULT_THRESHOLD = 0.5
DEFAULT_SAMPLE_COUNT = 145
DEFAULT_GROUP_KEYS = ("gender", "period")


@dataclass(frozen=True)
class RunConfig:
    """A validated command invocation: the subcommand plus its namespace."""

    command: str
    args: argparse.Namespace

    @property
    def seed(self) -> int:
        return self.args.seed

    @property
    def threshold(self) -> float:
        return getattr(self.args, "threshold", DEFAULT_THRESHOLD)

    @property
    def out(self) -> str:
        return self.args.out


def _nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = _nonnegative_int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value <= 0.0:
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return value


def _nonnegative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value < 0.0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative number, got {text}")
    return value


def _threshold_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(
            f"threshold must be strictly between 0 and 1, got {text}"
        )
    return value


def _name_value(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=RECALL, got {text!r}")
    try:
        recall = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"baseline for {name!r} is not a number: {value!r}") from None
    if not (math.isfinite(recall) and 0.0 <= recall <= 1.0):
        raise argparse.ArgumentTypeError(f"baseline for {name!r} must be in [0, 1], got {value}")
    return name, recall


def _name_path(text: str) -> tuple[str, str]:
    name, sep, path = text.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    return name, path


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=_nonnegative_int,
        default=DEFAULT_SEED,
        help=f"seed for every random choice (default {DEFAULT_SEED})",
    )
    parser.add_argument(
        "--out",
        required=True,
        help="output file, written atomically; a <out>.log sidecar records the run",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artmod",
        description=(
            "Embedding-space toolkit for separating artistic from pornographic "
            "nudity: zero-shot evaluation, classifier audits, linear-probe "
            "fine-tuning, and supporting statistics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    embed = sub.add_parser(
        "embed",
        help="embed a manifest's images or a term set's texts into a cache",
        description="Embed a manifest's images or a term set's texts into a binary cache.",
    )
    embed.add_argument("--backend", help=f"backend spec JSON (default: ${BACKEND_ENV})")
    source = embed.add_mutually_exclusive_group(required=True)
    source.add_argument("--manifest", help="dataset manifest CSV to embed")
    source.add_argument("--terms", help="term-set JSON; embeds every term text")
    embed.add_argument("--role", choices=ROLES, help="dataset role (required with --manifest)")
    _add_common(embed)

    zeroshot = sub.add_parser(
        "zeroshot",
        help="evaluate the zero-shot classifier over every term combination",
        description=(
            "Run the weighted-kNN zero-shot classifier over every equal-size "
            "term-subset combination and report per-combination and per-k accuracy."
        ),
    )
    zeroshot.add_argument("--embeddings", required=True, help="image embedding cache")
    zeroshot.add_argument("--terms", required=True, help="term-set JSON")
    zeroshot.add_argument("--labels", required=True, help="ground-truth manifest CSV")
    zeroshot.add_argument(
        "--text-embeddings",
        dest="text_embeddings",
        help="term embedding cache; when omitted, terms are embedded via --backend",
    )
    zeroshot.add_argument("--backend", help=f"backend spec JSON (default: ${BACKEND_ENV})")
    zeroshot.add_argument(
        "--plot-csv",
        dest="plot_csv",
        help="also write the per-k accuracy table as CSV for plotting",
    )
    _add_common(zeroshot)

    classify = sub.add_parser(
        "classify",
        help="score each manifest image with an unsafeness scorer",
        description="Score each manifest image and binarize at the threshold.",
    )
    classify.add_argument("--backend", help=f"backend spec JSON (default: ${BACKEND_ENV})")
    classify.add_argument("--manifest", required=True, help="manifest CSV of images to score")
    classify.add_argument(
        "--threshold",
        type=_threshold_arg,
        default=DEFAULT_THRESHOLD,
        help=f"unsafe iff score >= threshold, in (0, 1) (default {DEFAULT_THRESHOLD})",
    )
    _add_common(classify)

    finetune = sub.add_parser(
        "finetune",
        help="train the linear probe with k-fold cross-validation and report recall gains",
        description=(
            "Train the linear probe on frozen features with k-fold cross-validation, "
            "score the held-out test sets, and report recall gain over each baseline."
        ),
    )
    finetune.add_argument("--features", required=True, help="embedding cache covering all ids")
    finetune.add_argument(
        "--train-art", dest="train_art", required=True, help="safe art training manifest CSV"
    )
    finetune.add_argument(
        "--train-nsfw", dest="train_nsfw", required=True, help="unsafe training manifest CSV"
    )
    finetune.add_argument(
        "--test-censored",
        dest="test_censored",
        help='held-out censored-art manifest CSV (test set "censored_art")',
    )
    finetune.add_argument(
        "--sample-count",
        dest="sample_count",
        type=_nonnegative_int,
        default=DEFAULT_SAMPLE_COUNT,
        help=(
            "records carved out of each training manifest as held-out test sets "
            f'"art_sample" and "nsfw_sample"; 0 disables (default {DEFAULT_SAMPLE_COUNT})'
        ),
    )
    finetune.add_argument(
        "--baseline",
        action="append",
        type=_name_value,
        metavar="NAME=RECALL",
        help="baseline recall per test set, repeatable; required for every test set",
    )
    finetune.add_argument("--folds", type=_positive_int, default=5, help="fold count (default 5)")
    finetune.add_argument(
        "--learning-rate",
        dest="learning_rate",
        type=_positive_float,
        default=0.1,
        help="gradient-descent step size (default 0.1)",
    )
    finetune.add_argument("--epochs", type=_positive_int, default=500, help="epochs (default 500)")
    finetune.add_argument(
        "--l2", type=_nonnegative_float, default=1e-4, help="L2 penalty on weights (default 1e-4)"
    )
    finetune.add_argument(
        "--plot-csv",
        dest="plot_csv",
        help="also write per-fold recall/gain rows as CSV (boxplot input)",
    )
    _add_common(finetune)

    audit = sub.add_parser(
        "audit",
        help="audit one or more verdict sets against a role-typed dataset",
        description=(
            "Compute rate tables, grouped breakdowns, and (with two or more "
            "classifiers) agreement sets for verdicts on one dataset."
        ),
    )
    audit.add_argument("--manifest", required=True, help="dataset manifest CSV")
    audit.add_argument("--role", choices=ROLES, required=True, help="dataset role")
    audit.add_argument(
        "--verdicts",
        action="append",
        type=_name_path,
        metavar="NAME=PATH",
        help="classifier verdict JSON, repeatable (at least one)",
    )
    audit.add_argument(
        "--group-by",
        dest="group_by",
        action="append",
        choices=GROUP_KEYS,
        help=f"metadata key to break down by, repeatable (default: {' '.join(DEFAULT_GROUP_KEYS)})",
    )
    audit.add_argument(
        "--csv-dir",
        dest="csv_dir",
        help="directory for CSV exports (metrics.csv and breakdown_<key>.csv)",
    )
    _add_common(audit)

    stats = sub.add_parser(
        "stats",
        help="statistical tests",
        description="Statistical tests over plain numeric samples.",
    )
    stats_sub = stats.add_subparsers(dest="stats_command", required=True, metavar="test")
    mwu = stats_sub.add_parser(
        "mwu",
        help="two-sided Mann-Whitney U test over two samples",
        description=(
            "Two-sided Mann-Whitney U test; exact p for small tie-free samples, "
            "tie-corrected normal approximation otherwise."
        ),
    )
    mwu.add_argument("--sample-a", dest="sample_a", required=True, help="text file, one number per line")
    mwu.add_argument("--sample-b", dest="sample_b", required=True, help="text file, one number per line")
    _add_common(mwu)

    return parser


def _finetune_test_names(args: argparse.Namespace) -> list[str]:
    names = []
    if args.test_censored:
        names.append("censored_art")
    if args.sample_count > 0:
        names.extend(["art_sample", "nsfw_sample"])
    return names


def _resolve_backend(parser, args, *, required: bool, hint: str) -> None:
    if not args.backend:
        args.backend = os.environ.get(BACKEND_ENV) or None
    if required and not args.backend:
        parser.error(hint)


def _validate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Cross-flag validation; failures are usage errors (exit 2)."""
    inputs: list[tuple[str, str | None]] = []
    if args.command == "embed":
        if args.manifest and not args.role:
            parser.error("--role is required with --manifest")
        if args.terms and args.role:
            parser.error("--role only applies to --manifest")
        _resolve_backend(
            parser, args, required=True, hint=f"--backend is required (or set {BACKEND_ENV})"
        )
        inputs += [
            ("--backend", args.backend),
            ("--manifest", args.manifest),
            ("--terms", args.terms),
        ]
    elif args.command == "zeroshot":
        _resolve_backend(
            parser,
            args,
            required=not args.text_embeddings,
            hint=f"--text-embeddings or --backend (or {BACKEND_ENV}) is required",
        )
        inputs += [
            ("--embeddings", args.embeddings),
            ("--terms", args.terms),
            ("--labels", args.labels),
            ("--text-embeddings", args.text_embeddings),
        ]
        if not args.text_embeddings:
            inputs.append(("--backend", args.backend))
    elif args.command == "classify":
        _resolve_backend(
            parser, args, required=True, hint=f"--backend is required (or set {BACKEND_ENV})"
        )
        inputs += [("--backend", args.backend), ("--manifest", args.manifest)]
    elif args.command == "finetune":
        names = _finetune_test_names(args)
        if not names:
            parser.error("no test sets: provide --test-censored or a positive --sample-count")
        baselines: dict[str, float] = {}
        for name, value in args.baseline or []:
            if name in baselines:
                parser.error(f"duplicate --baseline name {name!r}")
            baselines[name] = value
        missing = sorted(set(names) - set(baselines))
        if missing:
            parser.error(f"missing --baseline for test sets: {', '.join(missing)}")
        extra = sorted(set(baselines) - set(names))
        if extra:
            parser.error(f"--baseline names not among test sets: {', '.join(extra)}")
        args.baselines = baselines
        inputs += [
            ("--features", args.features),
            ("--train-art", args.train_art),
            ("--train-nsfw", args.train_nsfw),
            ("--test-censored", args.test_censored),
        ]
    elif args.command == "audit":
        entries = args.verdicts or []
        if not entries:
            parser.error("at least one --verdicts NAME=PATH is required")
        seen: set[str] = set()
        for name, path in entries:
            if name in seen:
                parser.error(f"duplicate --verdicts name {name!r}")
            seen.add(name)
            inputs.append((f"--verdicts {name}", path))
        args.group_by = list(
            dict.fromkeys(args.group_by if args.group_by else DEFAULT_GROUP_KEYS)
        )
        inputs.append(("--manifest", args.manifest))
    elif args.command == "stats":
        inputs += [("--sample-a", args.sample_a), ("--sample-b", args.sample_b)]
    for flag, path in inputs:
        if path and not Path(path).is_file():
            parser.error(f"cannot read {flag} path: {path}")


def parse_args(argv=None) -> RunConfig:
    """Parse and validate; usage errors print to stderr and exit with code 2."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    return RunConfig(command=args.command, args=args)


def _write_bytes_atomic(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _write_json(path, payload) -> None:
    body = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _write_bytes_atomic(path, body.encode("utf-8"))


def _write_text(path, text: str) -> None:
    _write_bytes_atomic(path, text.encode("utf-8"))


def _write_log(out_path, lines) -> None:
    """Sidecar run log; the only place a timestamp is ever written."""
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    body = "".join(f"{stamp} {line}\n" for line in lines)
    _write_text(f"{out_path}.log", body)


def _open_backend(args: argparse.Namespace):
    return open_backend(load_backend_spec(args.backend))


def _cmd_embed(args: argparse.Namespace) -> int:
    backend = _open_backend(args)
    if args.manifest:
        manifest = load_manifest(args.manifest, args.role)
        result = embed_images(backend, manifest.records)
        source = f"manifest {args.manifest} ({len(manifest)} records, role {args.role})"
    else:
        term_set = load_term_set(args.terms)
        result = embed_texts(backend, term_set.all_terms())
        source = f"terms {args.terms} ({len(term_set.all_terms())} terms)"
    cache = EmbeddingCache(dim=backend.dim, entries=result.vectors)
    cache_write(args.out, cache)
    _write_log(
        args.out,
        [f"embed {source}", f"wrote {args.out} ({len(result.vectors)} vectors, dim {backend.dim})"]
        + [f"failed {key}: {message}" for key, message in sorted(result.failures.items())],
    )
    print(f"wrote {args.out} ({len(result.vectors)} vectors)")
    if result.failures:
        for key in sorted(result.failures):
            print(f"error: could not embed {key!r}: {result.failures[key]}", file=sys.stderr)
        return 1
    return 0


def _per_k_csv(report: ZeroShotReport) -> str:
    counts: dict[int, int] = {}
    for combo in report.per_combination:
        counts[combo.k] = counts.get(combo.k, 0) + 1
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["k", "combinations", "mean_accuracy", "std_accuracy"])
    for k in sorted(report.per_k):
        mean, std = report.per_k[k]
        writer.writerow([k, counts.get(k, 0), repr(mean), repr(std)])
    return buffer.getvalue()


def _cmd_zeroshot(args: argparse.Namespace) -> int:
    cache = cache_read(args.embeddings)
    term_set = load_term_set(args.terms)
    ground_truth = {record.id: record.label for record in load_records(args.labels)}
    terms = term_set.all_terms()
    if args.text_embeddings:
        text_cache = cache_read(args.text_embeddings)
        missing = sorted(t for t in terms if t not in text_cache.entries)
        if missing:
            raise ValueError(f"term embeddings missing from {args.text_embeddings}: {missing}")
        text_embeddings = {t: text_cache.entries[t] for t in terms}
    else:
        result = embed_texts(_open_backend(args), terms)
        if result.failures:
            details = "; ".join(f"{k}: {v}" for k, v in sorted(result.failures.items()))
            raise ValueError(f"could not embed terms: {details}")
        text_embeddings = result.vectors
    report = evaluate(cache.entries, ground_truth, term_set, text_embeddings)
    _write_json(args.out, report.to_dict())
    written = [args.out]
    if args.plot_csv:
        _write_text(args.plot_csv, _per_k_csv(report))
        written.append(args.plot_csv)
    _write_log(
        args.out,
        [f"zeroshot over {len(ground_truth)} images, {len(report.per_combination)} combinations"]
        + [f"wrote {p}" for p in written],
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    backend = _open_backend(args)
    records = load_records(args.manifest)
    verdicts: dict[str, dict] = {}
    failures: dict[str, str] = {}
    for record in records:
        try:
            verdict = nsfw_score(backend, record, args.threshold)
        except ArtmodError as exc:
            failures[record.id] = str(exc)
            continue
        verdicts[record.id] = {"score": verdict.score, "label": verdict.label}
    _write_json(args.out, {"threshold": args.threshold, "verdicts": verdicts})
    _write_log(
        args.out,
        [
            f"classify {len(records)} records at threshold {args.threshold}",
            f"wrote {args.out} ({len(verdicts)} verdicts, {len(failures)} failures)",
        ],
    )
    print(f"wrote {args.out} ({len(verdicts)} verdicts)")
    if failures:
        for key in sorted(failures):
            print(f"error: could not score {key!r}: {failures[key]}", file=sys.stderr)
        return 1
    return 0


def _gain_csv(outcome: FineTuneOutcome) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["test_set", "fold", "recall", "gain_pp"])
    for name in sorted(outcome.gain_pp):
        baseline = outcome.baselines[name]
        for fold, recalls in enumerate(outcome.per_fold):
            recall = recalls[name]
            writer.writerow([name, fold, repr(recall), repr((recall - baseline) * 100.0)])
    return buffer.getvalue()


def _cmd_finetune(args: argparse.Namespace) -> int:
    features = cache_read(args.features).entries
    train_art = load_manifest(args.train_art, ROLE_ART_WIKISTYLE, name="train_art")
    train_nsfw = load_manifest(args.train_nsfw, ROLE_NSFW, name="train_nsfw")
    test_sets: dict[str, Manifest] = {}
    if args.test_censored:
        test_sets["censored_art"] = load_manifest(
            args.test_censored, ROLE_ART_CENSORED, name="censored_art"
        )
    if args.sample_count > 0:
        art_sample, train_art = sample_test_set(train_art, args.sample_count, seed=args.seed)
        nsfw_sample, train_nsfw = sample_test_set(train_nsfw, args.sample_count, seed=args.seed)
        test_sets["art_sample"] = dataclasses.replace(art_sample, name="art_sample")
        test_sets["nsfw_sample"] = dataclasses.replace(nsfw_sample, name="nsfw_sample")
    config = ProbeConfig(
        learning_rate=args.learning_rate, epochs=args.epochs, l2=args.l2, seed=args.seed
    )
    outcome = finetune_protocol(
        [train_art, train_nsfw],
        test_sets,
        features,
        args.baselines,
        folds=args.folds,
        config=config,
    )
    _write_json(args.out, outcome.to_dict())
    written = [args.out]
    if args.plot_csv:
        _write_text(args.plot_csv, _gain_csv(outcome))
        written.append(args.plot_csv)
    _write_log(
        args.out,
        [
            f"finetune folds={args.folds} train={len(train_art) + len(train_nsfw)} "
            f"tests={','.join(sorted(test_sets))}"
        ]
        + [f"wrote {p}" for p in written],
    )
    print(f"wrote {args.out}")
    return 0


def _load_verdict_file(path) -> dict[str, str]:
    """Accept either classify output or a bare id -> label (or {label: ...}) map."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if isinstance(raw, dict) and isinstance(raw.get("verdicts"), dict):
        raw = raw["verdicts"]
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object mapping id to verdict")
    verdicts: dict[str, str] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            value = value.get("label")
        if not isinstance(value, str):
            raise ValueError(f"{path}: verdict for {key!r} must be a label string")
        verdicts[key] = value
    return verdicts


def _cmd_audit(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest, args.role)
    verdict_sets = {name: _load_verdict_file(path) for name, path in args.verdicts}
    keys = tuple(args.group_by)
    payload = build_audit_report(manifest, verdict_sets, keys=keys)
    _write_json(args.out, payload)
    written = [args.out]
    if args.csv_dir:
        csv_dir = Path(args.csv_dir)
        csv_dir.mkdir(parents=True, exist_ok=True)
        ground_truth = manifest.labels()
        metrics = {
            name: compute_metrics(verdicts, ground_truth, manifest.role)
            for name, verdicts in verdict_sets.items()
        }
        metrics_path = csv_dir / "metrics.csv"
        _write_text(metrics_path, metrics_csv(metrics))
        written.append(str(metrics_path))
        for key in keys:
            breakdowns = {
                name: group_breakdown(verdicts, manifest, key)
                for name, verdicts in verdict_sets.items()
            }
            breakdown_path = csv_dir / f"breakdown_{key}.csv"
            _write_text(breakdown_path, breakdown_csv(key, breakdowns))
            written.append(str(breakdown_path))
    _write_log(
        args.out,
        [
            f"audit role={args.role} n={len(manifest)} "
            f"classifiers={','.join(sorted(verdict_sets))} keys={','.join(keys)}"
        ]
        + [f"wrote {p}" for p in written],
    )
    print(f"wrote {args.out}")
    return 0


def _read_floats(path) -> list[float]:
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {text!r}") from None
    return values


def _cmd_stats(args: argparse.Namespace) -> int:
    result = mann_whitney_u(_read_floats(args.sample_a), _read_floats(args.sample_b))
    _write_json(args.out, result.to_dict())
    _write_log(
        args.out,
        [
            f"stats mwu n1={result.n1} n2={result.n2} method={result.method}",
            f"wrote {args.out}",
        ],
    )
    print(f"wrote {args.out} (method {result.method}, p={result.p_value:.6g})")
    return 0


_HANDLERS = {
    "embed": _cmd_embed,
    "zeroshot": _cmd_zeroshot,
    "classify": _cmd_classify,
    "finetune": _cmd_finetune,
    "audit": _cmd_audit,
    "stats": _cmd_stats,
}


def execute(config: RunConfig) -> int:
    """Run the configured command; pipeline failures return 1 with a message."""
    handler = _HANDLERS[config.command]
    try:
        return handler(config.args)
    except (ArtmodError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return execute(parse_args(argv))
