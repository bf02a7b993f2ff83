"""Cross-validated linear-probe fine-tuning on frozen mock features.

Simulates the downstream-adaptation loop: frozen image features for a safe
art collection and an unsafe set, overlapping enough that nothing scores
perfectly, a k-fold probe training run, and recall gains in percentage
points over supplied baseline recalls for two fixed test sets.

Run: python3 demos/linear_probe_finetuning.py
"""

import numpy as np

from artmod import ProbeConfig, finetune_protocol
from artmod.dataset import SAFE, UNSAFE, ImageRecord, Manifest

SEED = 3
DIM = 8
NOISE = 1.0


def make_manifest(prefix, count, role, label, name=None):
    records = tuple(
        ImageRecord(id=f"{prefix}{i:03d}", path=f"images/{prefix}{i:03d}.png", label=label)
        for i in range(count)
    )
    return Manifest(records=records, role=role, name=name)


def make_features(rng, manifests):
    features = {}
    for manifest in manifests:
        for record in manifest.records:
            center = 1.2 if record.label == UNSAFE else -1.2
            vector = NOISE * rng.normal(size=DIM)
            vector[0] += center
            features[record.id] = vector
    return features


def main():
    rng = np.random.default_rng(SEED)
    train_art = make_manifest("art", 60, "art_censored", SAFE)
    train_nsfw = make_manifest("nsfw", 60, "nsfw", UNSAFE)
    test_sets = {
        "censored_art": make_manifest("artheld", 30, "art_censored", SAFE, "censored_art"),
        "nsfw_sample": make_manifest("nsfwheld", 30, "nsfw", UNSAFE, "nsfw_sample"),
    }
    features = make_features(rng, [train_art, train_nsfw, *test_sets.values()])
    baselines = {"censored_art": 0.75, "nsfw_sample": 0.60}

    config = ProbeConfig(learning_rate=0.5, epochs=300, seed=SEED)
    outcome = finetune_protocol(
        [train_art, train_nsfw], test_sets, features, baselines, folds=5, config=config
    )

    print(f"training pool: {len(train_art.records)} safe art + {len(train_nsfw.records)} unsafe")
    print(f"probe: lr={config.learning_rate} epochs={config.epochs} l2={config.l2}\n")
    names = sorted(test_sets)
    header = "  ".join(f"{name:>13}" for name in names)
    print(f"{'fold':>4}  {header}  {'val_recall':>10}")
    for fold, recalls in enumerate(outcome.per_fold):
        cells = "  ".join(f"{recalls[name]:>13.3f}" for name in names)
        val = outcome.validation_recall[fold]
        val_text = "-" if val is None else f"{val:.3f}"
        print(f"{fold:>4}  {cells}  {val_text:>10}")

    print("\nrecall gain over baseline (percentage points, mean ± std across folds):")
    for name in names:
        mean_pp, std_pp = outcome.gain_pp[name]
        print(
            f"  {name:<13} baseline={outcome.baselines[name]:.2f}"
            f"  gain={mean_pp:+.1f}pp ± {std_pp:.1f}pp"
        )


if __name__ == "__main__":
    main()
