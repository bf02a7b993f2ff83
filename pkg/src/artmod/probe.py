"""Linear probe on frozen embeddings: an L2-regularized logistic regression
trained by full-batch gradient descent, plus the k-fold fine-tuning protocol
that measures recall gain over a fixed baseline in percentage points.

The probe never touches the embedding backend; it consumes precomputed
feature vectors keyed by record id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audit import compute_metrics
from .dataset import LABELS, SAFE, UNSAFE, Manifest, kfold_split
from .numkit import as_embedding

__all__ = [
    "FineTuneOutcome",
    "ProbeConfig",
    "ProbeModel",
    "finetune_protocol",
    "recall_gain_pp",
    "train_probe",
]


@dataclass(frozen=True)
class ProbeConfig:
    """Gradient-descent hyperparameters for the probe."""

    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.learning_rate, (int, float)) and math.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be a finite number")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not isinstance(self.epochs, int) or isinstance(self.epochs, bool) or self.epochs < 1:
            raise ValueError("epochs must be a positive integer")
        if not (isinstance(self.l2, (int, float)) and math.isfinite(self.l2)) or self.l2 < 0:
            raise ValueError("l2 must be a nonnegative finite number")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _loss_and_grad(weights, bias, features, targets, l2):
    """Mean cross-entropy plus 0.5*l2*||w||^2 (bias unregularized), with its
    gradient in (weights, bias)."""
    z = features @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - targets * z))
    loss += 0.5 * l2 * float(weights @ weights)
    residual = (_sigmoid(z) - targets) / targets.size
    grad_w = features.T @ residual + l2 * weights
    grad_b = float(residual.sum())
    return loss, grad_w, grad_b


def _fit(features: np.ndarray, targets: np.ndarray, config: ProbeConfig):
    """Run gradient descent; returns (weights, bias, loss_history).

    The history has one entry per epoch evaluated before that epoch's
    update, plus a final post-training entry, so it holds epochs+1 values.
    """
    rng = np.random.default_rng(config.seed)
    weights = rng.uniform(-0.01, 0.01, size=features.shape[1])
    bias = 0.0
    history: list[float] = []
    for _ in range(config.epochs):
        loss, grad_w, grad_b = _loss_and_grad(weights, bias, features, targets, config.l2)
        if not math.isfinite(loss):
            raise ValueError("training diverged: loss is not finite")
        history.append(loss)
        weights = weights - config.learning_rate * grad_w
        bias = bias - config.learning_rate * grad_b
    final_loss, _, _ = _loss_and_grad(weights, bias, features, targets, config.l2)
    if not math.isfinite(final_loss):
        raise ValueError("training diverged: loss is not finite")
    history.append(final_loss)
    return weights, bias, history


@dataclass(frozen=True)
class ProbeModel:
    """Trained linear probe; unsafe iff the decision value is >= 0."""

    weights: np.ndarray
    bias: float

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    def decision_function(self, vector) -> float:
        x = as_embedding(vector, dim=self.dim)
        return float(x @ self.weights + self.bias)

    def predict_proba(self, vector) -> float:
        """Probability that the input is unsafe."""
        return float(_sigmoid(np.asarray(self.decision_function(vector))))

    def classify(self, features) -> dict[str, str]:
        """Map each id in the feature mapping to a safe/unsafe label."""
        return {
            i: UNSAFE if self.decision_function(features[i]) >= 0.0 else SAFE
            for i in features
        }


def _feature_matrix(features, ids) -> np.ndarray:
    vectors = [as_embedding(features[i]) for i in ids]
    dims = sorted({v.size for v in vectors})
    if len(dims) > 1:
        raise ValueError(f"inconsistent feature dimensions: {dims}")
    return np.stack(vectors)


def train_probe(features, labels, config: ProbeConfig | None = None) -> ProbeModel:
    """Fit the probe on id-keyed feature vectors and safe/unsafe labels.

    Both mappings must cover exactly the same ids and both classes must be
    present. Weights start from a small seeded uniform draw and the bias
    from zero, so training is deterministic for a given config.
    """
    config = config if config is not None else ProbeConfig()
    feature_ids = set(features)
    label_ids = set(labels)
    if feature_ids != label_ids:
        only_features = sorted(feature_ids - label_ids)
        only_labels = sorted(label_ids - feature_ids)
        raise ValueError(
            "features and labels must cover the same ids; "
            f"features only: {only_features}, labels only: {only_labels}"
        )
    if not features:
        raise ValueError("no training examples")
    bad = sorted(i for i in labels if labels[i] not in LABELS)
    if bad:
        raise ValueError(f"labels must be safe/unsafe; bad ids: {bad}")
    ids = sorted(features)
    targets = np.array([1.0 if labels[i] == UNSAFE else 0.0 for i in ids])
    if targets.min() == targets.max():
        raise ValueError("training data contains a single class; need both safe and unsafe")
    matrix = _feature_matrix(features, ids)
    weights, bias, _ = _fit(matrix, targets, config)
    return ProbeModel(weights=weights, bias=float(bias))


def recall_gain_pp(fold_recalls, baseline: float) -> tuple[float, float]:
    """Mean and population std of (fold recall - baseline), in percentage points."""
    recalls = [float(r) for r in fold_recalls]
    if not recalls:
        raise ValueError("no fold recalls")
    for r in recalls:
        if not (math.isfinite(r) and 0.0 <= r <= 1.0):
            raise ValueError(f"recall {r!r} outside [0, 1]")
    baseline = float(baseline)
    if not (math.isfinite(baseline) and 0.0 <= baseline <= 1.0):
        raise ValueError(f"baseline recall {baseline!r} outside [0, 1]")
    gains = np.array([(r - baseline) * 100.0 for r in recalls])
    return float(gains.mean()), float(gains.std())


@dataclass(frozen=True)
class FineTuneOutcome:
    """Per-fold recalls and the aggregate gain over each test set's baseline."""

    folds: int
    baselines: dict[str, float]
    per_fold: tuple[dict[str, float], ...]
    validation_recall: tuple[float | None, ...]
    gain_pp: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "folds": self.folds,
            "baselines": dict(self.baselines),
            "per_fold": [dict(fold) for fold in self.per_fold],
            "validation_recall": list(self.validation_recall),
            "gain_pp": {
                name: {"mean_pp": mean, "std_pp": std}
                for name, (mean, std) in self.gain_pp.items()
            },
        }


def finetune_protocol(
    train_manifests,
    test_sets,
    features,
    baselines,
    *,
    folds: int = 5,
    config: ProbeConfig | None = None,
) -> FineTuneOutcome:
    """Cross-validated probe training with fixed held-out test sets.

    Each training manifest is split into the same number of folds
    independently (seeded by the probe config), and fold f's training data
    is the union of every manifest's other folds — so the train/validation
    class mix tracks each manifest's own balance. The probe trained on each
    fold is scored on every named test set, and the recall gain over that
    test set's supplied baseline is aggregated across folds in percentage
    points. Validation recall is the unsafe-class recall on the held-out
    fold, or None when that fold holds no unsafe records.
    """
    config = config if config is not None else ProbeConfig()
    manifests: list[Manifest] = list(train_manifests)
    if not manifests:
        raise ValueError("need at least one training manifest")
    if not test_sets:
        raise ValueError("need at least one named test set")
    for name in test_sets:
        if not isinstance(name, str) or not name:
            raise ValueError("test set names must be nonempty strings")
    missing_baselines = sorted(set(test_sets) - set(baselines))
    if missing_baselines:
        raise ValueError(f"missing baseline recall for test sets: {missing_baselines}")
    kept_baselines: dict[str, float] = {}
    for name in sorted(test_sets):
        value = float(baselines[name])
        if not (math.isfinite(value) and 0.0 <= value <= 1.0):
            raise ValueError(f"baseline recall for {name!r} must be in [0, 1]")
        kept_baselines[name] = value

    id_counts: dict[str, int] = {}
    for manifest in manifests:
        for record in manifest.records:
            id_counts[record.id] = id_counts.get(record.id, 0) + 1
    duplicates = sorted(i for i, c in id_counts.items() if c > 1)
    if duplicates:
        raise ValueError(f"duplicate ids across training manifests: {duplicates}")
    test_ids: set[str] = set()
    for manifest in test_sets.values():
        test_ids.update(record.id for record in manifest.records)
    overlap = sorted(set(id_counts) & test_ids)
    if overlap:
        raise ValueError(f"ids shared between training and test sets: {overlap}")
    needed = set(id_counts) | test_ids
    missing = sorted(i for i in needed if i not in features)
    if missing:
        raise ValueError(f"missing features for ids: {missing}")

    splits = [kfold_split(manifest, folds, seed=config.seed) for manifest in manifests]
    per_fold: list[dict[str, float]] = []
    validation_recalls: list[float | None] = []
    for fold in range(folds):
        train_records = []
        held_out = []
        for manifest, split in zip(manifests, splits):
            for record in manifest.records:
                if split.fold_assignments[record.id] == fold:
                    held_out.append(record)
                else:
                    train_records.append(record)
        model = train_probe(
            {r.id: features[r.id] for r in train_records},
            {r.id: r.label for r in train_records},
            config,
        )
        unsafe_held_out = [r for r in held_out if r.label == UNSAFE]
        if unsafe_held_out:
            verdicts = model.classify({r.id: features[r.id] for r in unsafe_held_out})
            hits = sum(1 for r in unsafe_held_out if verdicts[r.id] == UNSAFE)
            validation_recalls.append(hits / len(unsafe_held_out))
        else:
            validation_recalls.append(None)
        fold_recalls: dict[str, float] = {}
        for name, manifest in test_sets.items():
            verdicts = model.classify({r.id: features[r.id] for r in manifest.records})
            row = compute_metrics(verdicts, manifest.labels(), manifest.role)
            fold_recalls[name] = row.recall
        per_fold.append(fold_recalls)

    gain_pp = {
        name: recall_gain_pp([fold[name] for fold in per_fold], kept_baselines[name])
        for name in sorted(test_sets)
    }
    return FineTuneOutcome(
        folds=folds,
        baselines=kept_baselines,
        per_fold=tuple(per_fold),
        validation_recall=tuple(validation_recalls),
        gain_pp=gain_pp,
    )
