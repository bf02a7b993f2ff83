"""Embedding-space toolkit for telling artistic nudity apart from
pornography, and for auditing the classifiers that try.

Module map
----------
- ``errors``   — the exception hierarchy (``ArtmodError`` and friends)
- ``numkit``   — embedding vector checks, cosine similarity, PCA, k-means
- ``dataset``  — manifest CSV parsing, role-typed datasets, sampling, k-fold splits
- ``backend``  — embedding/scoring backends (mock + ONNX adapter) and the binary
  embedding cache format
- ``zeroshot`` — term-combination enumeration and the weighted-kNN zero-shot
  classifier built from two lists of class-description texts
- ``probe``    — logistic-regression linear probe on frozen features and the
  cross-validated fine-tuning protocol with recall gains in percentage points
- ``audit``    — rate tables with exact counts, grouped bias breakdowns,
  cross-classifier agreement, and the Mann-Whitney U test
- ``cli``      — the ``artmod`` command line (embed / zeroshot / classify /
  finetune / audit / stats)

The commonly used names are re-exported here.
"""

from .audit import (
    AgreementResult,
    GroupBreakdown,
    MetricRow,
    UTestResult,
    agreement,
    build_audit_report,
    compute_metrics,
    group_breakdown,
    mann_whitney_u,
)
from .backend import (
    BackendSpec,
    EmbeddingCache,
    Verdict,
    cache_read,
    cache_write,
    embed_images,
    embed_texts,
    load_backend_spec,
    nsfw_score,
    open_backend,
)
from .dataset import (
    FoldSplit,
    ImageRecord,
    Manifest,
    kfold_split,
    load_manifest,
    load_records,
    sample_test_set,
)
from .errors import (
    ArtmodError,
    BackendError,
    CacheFormatError,
    CacheMagicError,
    CacheTruncatedError,
    CacheVersionError,
    ManifestError,
    ShapeMismatchError,
)
from .numkit import PcaModel, as_embedding, cosine_similarity, kmeans, pca_fit_project
from .probe import (
    FineTuneOutcome,
    ProbeConfig,
    ProbeModel,
    finetune_protocol,
    recall_gain_pp,
    train_probe,
)
from .zeroshot import (
    TermCombination,
    TermSet,
    ZeroShotReport,
    enumerate_combinations,
    evaluate,
    knn_classify,
    load_term_set,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementResult",
    "ArtmodError",
    "BackendError",
    "BackendSpec",
    "CacheFormatError",
    "CacheMagicError",
    "CacheTruncatedError",
    "CacheVersionError",
    "EmbeddingCache",
    "FineTuneOutcome",
    "FoldSplit",
    "GroupBreakdown",
    "ImageRecord",
    "Manifest",
    "ManifestError",
    "MetricRow",
    "PcaModel",
    "ProbeConfig",
    "ProbeModel",
    "ShapeMismatchError",
    "TermCombination",
    "TermSet",
    "UTestResult",
    "Verdict",
    "ZeroShotReport",
    "__version__",
    "agreement",
    "as_embedding",
    "build_audit_report",
    "cache_read",
    "cache_write",
    "compute_metrics",
    "cosine_similarity",
    "embed_images",
    "embed_texts",
    "enumerate_combinations",
    "evaluate",
    "finetune_protocol",
    "group_breakdown",
    "kfold_split",
    "kmeans",
    "knn_classify",
    "load_backend_spec",
    "load_manifest",
    "load_records",
    "load_term_set",
    "mann_whitney_u",
    "nsfw_score",
    "open_backend",
    "pca_fit_project",
    "recall_gain_pp",
    "sample_test_set",
    "train_probe",
]
