"""Embedding and scoring backends plus the on-disk embedding cache.

Three backend kinds share one calling surface: ``dual_encoder`` (paired
image/text encoders into one latent space), ``nsfw_scorer`` (image to an
unsafeness probability), and ``mock`` (a CSV fixture keyed by record id or
term, which makes every downstream module testable without model weights).
Real models run through a pluggable adapter object; nothing outside the
adapter touches model execution.

Cache file layout (little-endian): magic ``AEMB``, version u16 = 1, dim
u32, count u64, then per record: id_len u16, id bytes (UTF-8), dim × f32.
"""

from __future__ import annotations

import csv
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import SAFE, UNSAFE
from .errors import (
    BackendError,
    CacheFormatError,
    CacheMagicError,
    CacheTruncatedError,
    CacheVersionError,
    ShapeMismatchError,
)

__all__ = [
    "BackendSpec",
    "EmbedResult",
    "EmbeddingCache",
    "OnnxAdapter",
    "PreprocessConfig",
    "Verdict",
    "cache_read",
    "cache_write",
    "embed_images",
    "embed_texts",
    "load_backend_spec",
    "nsfw_score",
    "open_backend",
]

KIND_DUAL_ENCODER = "dual_encoder"
KIND_NSFW_SCORER = "nsfw_scorer"
KIND_MOCK = "mock"
KINDS = (KIND_DUAL_ENCODER, KIND_NSFW_SCORER, KIND_MOCK)

# fallback latent width for dual encoders that do not declare one
DEFAULT_DIM = 640

# published normalization of the default backbone's pipeline
CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_STD = (0.26862954, 0.26130258, 0.27577711)

CACHE_MAGIC = b"AEMB"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")
_IDLEN = struct.Struct("<H")


@dataclass(frozen=True)
class PreprocessConfig:
    """Image pipeline ahead of a real model: shorter-edge resize, center crop, per-channel normalization."""

    resize_edge: int = 256
    crop_size: int = 256
    mean: tuple[float, float, float] = CLIP_MEAN
    std: tuple[float, float, float] = CLIP_STD


@dataclass(frozen=True)
class BackendSpec:
    """Everything needed to open a backend.

    ``model_id`` is free-form provenance (checkpoint name, revision); it is
    recorded but never verified. Relative paths in a spec file resolve
    against the file's directory (see :func:`load_backend_spec`).
    """

    kind: str
    model_path: str | None = None
    fixture_path: str | None = None
    dim: int | None = None
    model_id: str | None = None
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)


@dataclass(frozen=True)
class Verdict:
    """A scorer output: unsafeness score plus its thresholded label."""

    score: float
    label: str
    threshold: float

    @classmethod
    def from_score(cls, score: float, threshold: float) -> "Verdict":
        score = float(score)
        threshold = float(threshold)
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {score}")
        if not 0.0 < threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {threshold}")
        label = UNSAFE if score >= threshold else SAFE
        return cls(score=score, label=label, threshold=threshold)


@dataclass(frozen=True)
class EmbedResult:
    """Batch embedding output: vectors keyed by id/term, failures alongside.

    Keys of the two maps are disjoint and together cover the request.
    """

    vectors: dict[str, np.ndarray]
    failures: dict[str, str]


class MockBackend:
    """Serves fixture vectors by key; the deterministic stand-in for models."""

    kind = KIND_MOCK

    def __init__(self, spec: BackendSpec, table: dict[str, np.ndarray], dim: int):
        self.spec = spec
        self.dim = dim
        self._table = table

    def lookup(self, key: str) -> np.ndarray:
        return self._table[key]


class AdapterBackend:
    """Real-model backend; all execution is delegated to the adapter."""

    def __init__(self, spec: BackendSpec, adapter, dim: int):
        self.spec = spec
        self.kind = spec.kind
        self.dim = dim
        self._adapter = adapter

    def image_vectors(self, batch: np.ndarray) -> np.ndarray:
        out = np.asarray(self._adapter.image_vectors(batch))
        if out.shape != (len(batch), self.dim):
            raise ShapeMismatchError(
                f"model returned shape {out.shape}, expected ({len(batch)}, {self.dim})"
            )
        return out

    def text_vectors(self, texts: list[str]) -> np.ndarray:
        out = np.asarray(self._adapter.text_vectors(texts))
        if out.shape != (len(texts), self.dim):
            raise ShapeMismatchError(
                f"model returned shape {out.shape}, expected ({len(texts)}, {self.dim})"
            )
        return out


class OnnxAdapter:
    """Runs an exported graph through onnxruntime on CPU.

    Text encoding is only available when the graph takes raw strings; for
    the usual tensor-input text towers, supply a custom adapter or reuse a
    text-embedding cache instead.
    """

    def __init__(self, model_path):
        try:
            import onnxruntime
        except ImportError as exc:
            raise BackendError(
                "onnxruntime is not installed; install the 'onnx' extra or pass a custom adapter"
            ) from exc
        self._session = onnxruntime.InferenceSession(
            str(model_path), providers=["CPUExecutionProvider"]
        )
        self._input = self._session.get_inputs()[0]

    def image_vectors(self, batch: np.ndarray) -> np.ndarray:
        out = self._session.run(None, {self._input.name: np.asarray(batch, dtype=np.float32)})
        return np.asarray(out[0])

    def text_vectors(self, texts: list[str]) -> np.ndarray:
        if "string" not in self._input.type:
            raise BackendError(
                "this graph does not take raw strings; pass a custom adapter or use a text-embedding cache"
            )
        out = self._session.run(None, {self._input.name: np.asarray(list(texts), dtype=object)})
        return np.asarray(out[0])


def load_backend_spec(path) -> BackendSpec:
    """Read a :class:`BackendSpec` from JSON (keys mirror the dataclass)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BackendError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise BackendError(f"{path}: expected a JSON object")
    known = {"kind", "model_path", "fixture_path", "dim", "model_id", "preprocess"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise BackendError(f"{path}: unknown keys {unknown}")
    pre_raw = raw.get("preprocess") or {}
    if not isinstance(pre_raw, dict):
        raise BackendError(f"{path}: preprocess must be an object")
    pre_known = {"resize_edge", "crop_size", "mean", "std"}
    pre_unknown = sorted(set(pre_raw) - pre_known)
    if pre_unknown:
        raise BackendError(f"{path}: unknown preprocess keys {pre_unknown}")
    defaults = PreprocessConfig()
    preprocess = PreprocessConfig(
        resize_edge=int(pre_raw.get("resize_edge", defaults.resize_edge)),
        crop_size=int(pre_raw.get("crop_size", defaults.crop_size)),
        mean=tuple(pre_raw.get("mean", defaults.mean)),
        std=tuple(pre_raw.get("std", defaults.std)),
    )

    def _resolve(key: str) -> str | None:
        value = raw.get(key)
        if value is None:
            return None
        return str((path.parent / str(value)).resolve()) if not os.path.isabs(str(value)) else str(value)

    dim = raw.get("dim")
    return BackendSpec(
        kind=str(raw.get("kind", "")),
        model_path=_resolve("model_path"),
        fixture_path=_resolve("fixture_path"),
        dim=None if dim is None else int(dim),
        model_id=raw.get("model_id"),
        preprocess=preprocess,
    )


def _load_fixture(path) -> tuple[dict[str, np.ndarray], int]:
    table: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, newline="", encoding="utf-8") as handle:
        for line, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            if line == 1 and row[0].strip().casefold() == "key":
                continue
            key = row[0].strip()
            if not key:
                raise BackendError(f"{path}:{line}: empty key")
            if len(row) < 2:
                raise BackendError(f"{path}:{line}: no vector components")
            try:
                values = np.array([float(cell) for cell in row[1:]], dtype=np.float32)
            except ValueError:
                raise BackendError(f"{path}:{line}: non-numeric component") from None
            if not np.all(np.isfinite(values)):
                raise BackendError(f"{path}:{line}: non-finite component")
            if dim is None:
                dim = int(values.size)
            elif values.size != dim:
                raise BackendError(
                    f"{path}:{line}: vector has {values.size} components, expected {dim}"
                )
            if key in table:
                raise BackendError(f"{path}:{line}: duplicate key {key!r}")
            table[key] = values
    if dim is None:
        raise BackendError(f"{path}: fixture has no rows")
    return table, dim


def open_backend(spec: BackendSpec, adapter=None):
    """Open a backend handle, verifying the declared dimension up front.

    For real kinds the model file must exist before any inference; the
    declared dim is then checked by pushing one zero image through the
    adapter. ``adapter`` defaults to :class:`OnnxAdapter` on
    ``spec.model_path`` and exists as a parameter so other runtimes (or
    test stubs) can slot in.
    """
    if spec.kind not in KINDS:
        raise BackendError(f"unsupported backend kind {spec.kind!r}; choose from {KINDS}")
    if spec.kind == KIND_MOCK:
        if not spec.fixture_path:
            raise BackendError("mock backend requires fixture_path")
        if not Path(spec.fixture_path).is_file():
            raise BackendError(f"fixture file not found: {spec.fixture_path}")
        table, dim = _load_fixture(spec.fixture_path)
        if spec.dim is not None and spec.dim != dim:
            raise ShapeMismatchError(
                f"fixture vectors are {dim}-d, spec declares {spec.dim}"
            )
        return MockBackend(spec, table, dim)

    if not spec.model_path:
        raise BackendError(f"{spec.kind} backend requires model_path")
    if not Path(spec.model_path).is_file():
        raise BackendError(f"model file not found: {spec.model_path}")
    if spec.kind == KIND_DUAL_ENCODER:
        if spec.dim is not None and spec.dim <= 0:
            raise ValueError(f"dual_encoder dim must be positive, got {spec.dim}")
        expected = spec.dim if spec.dim is not None else DEFAULT_DIM
    else:
        if spec.dim is not None and spec.dim != 1:
            raise ValueError(f"nsfw_scorer output is 1-d by definition, got dim {spec.dim}")
        expected = 1
    if adapter is None:
        adapter = OnnxAdapter(spec.model_path)
    crop = spec.preprocess.crop_size
    probe = np.asarray(adapter.image_vectors(np.zeros((1, 3, crop, crop), dtype=np.float32)))
    if probe.ndim != 2 or probe.shape != (1, expected):
        found = probe.shape[1] if probe.ndim == 2 else probe.shape
        raise ShapeMismatchError(f"model emits {found}-d outputs, spec declares {expected}-d")
    return AdapterBackend(spec, adapter, expected)


def _decode_image(path, pre: PreprocessConfig) -> np.ndarray:
    """Decode, resize, center-crop, and normalize one image to CHW float32."""
    from PIL import Image

    with Image.open(path) as img:
        rgb = img.convert("RGB")
    width, height = rgb.size
    scale = pre.resize_edge / min(width, height)
    rgb = rgb.resize(
        (max(1, round(width * scale)), max(1, round(height * scale))),
        Image.Resampling.BICUBIC,
    )
    width, height = rgb.size
    left = (width - pre.crop_size) // 2
    top = (height - pre.crop_size) // 2
    rgb = rgb.crop((left, top, left + pre.crop_size, top + pre.crop_size))
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.asarray(pre.mean, dtype=np.float32)) / np.asarray(pre.std, dtype=np.float32)
    return arr.transpose(2, 0, 1)


def embed_images(backend, records) -> EmbedResult:
    """Embed each record's image; failures are per-record, not fatal.

    Returns vectors keyed by record id, in input order, each of length
    ``backend.dim``. An undecodable image (or, for mocks, an id missing
    from the fixture) lands in ``failures`` and the batch continues.
    """
    records = list(records)
    ids = [record.id for record in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate record ids in embedding batch")
    vectors: dict[str, np.ndarray] = {}
    failures: dict[str, str] = {}
    if backend.kind == KIND_MOCK:
        for record in records:
            try:
                vectors[record.id] = backend.lookup(record.id)
            except KeyError:
                failures[record.id] = "id not present in mock fixture"
        return EmbedResult(vectors=vectors, failures=failures)
    if backend.kind != KIND_DUAL_ENCODER:
        raise BackendError(f"{backend.kind} backend cannot embed images")
    decoded: list[tuple[str, np.ndarray]] = []
    for record in records:
        try:
            decoded.append((record.id, _decode_image(record.path, backend.spec.preprocess)))
        except Exception as exc:  # undecodable image: record and continue
            failures[record.id] = f"{type(exc).__name__}: {exc}"
    if decoded:
        batch = np.stack([arr for _, arr in decoded])
        out = backend.image_vectors(batch).astype(np.float32, copy=False)
        for row, (record_id, _) in enumerate(decoded):
            vectors[record_id] = out[row]
    return EmbedResult(vectors=vectors, failures=failures)


def embed_texts(backend, terms) -> EmbedResult:
    """Embed each distinct term; duplicates collapse to one entry."""
    unique = list(dict.fromkeys(terms))
    vectors: dict[str, np.ndarray] = {}
    failures: dict[str, str] = {}
    if backend.kind == KIND_MOCK:
        for term in unique:
            try:
                vectors[term] = backend.lookup(term)
            except KeyError:
                failures[term] = "term not present in mock fixture"
        return EmbedResult(vectors=vectors, failures=failures)
    if backend.kind != KIND_DUAL_ENCODER:
        raise BackendError(f"{backend.kind} backend cannot embed texts")
    if unique:
        out = backend.text_vectors(unique).astype(np.float32, copy=False)
        for row, term in enumerate(unique):
            vectors[term] = out[row]
    return EmbedResult(vectors=vectors, failures=failures)


def nsfw_score(backend, record, threshold: float = 0.5) -> Verdict:
    """Score one image's unsafeness and binarize at ``threshold`` (>= is unsafe)."""
    if backend.kind == KIND_MOCK:
        try:
            vec = backend.lookup(record.id)
        except KeyError:
            raise BackendError(f"id {record.id!r} not present in mock fixture") from None
        if vec.size != 1:
            raise BackendError(
                f"mock score for {record.id!r} must be a single value, got {vec.size}"
            )
        return Verdict.from_score(float(vec[0]), threshold)
    if backend.kind != KIND_NSFW_SCORER:
        raise BackendError(f"{backend.kind} backend does not produce unsafeness scores")
    try:
        arr = _decode_image(record.path, backend.spec.preprocess)
    except Exception as exc:
        raise BackendError(f"cannot decode {record.path}: {exc}") from exc
    out = backend.image_vectors(arr[None])
    score = float(out[0, 0])
    if not 0.0 <= score <= 1.0:
        raise BackendError(f"model produced out-of-range score {score}")
    return Verdict.from_score(score, threshold)


@dataclass
class EmbeddingCache:
    """In-memory id → float32 vector map with a fixed dimension."""

    dim: int
    entries: dict[str, np.ndarray]


def cache_write(path, cache: EmbeddingCache) -> None:
    """Serialize a cache; the write is atomic (temp file + rename).

    Vectors are stored as little-endian float32, so the write/read round
    trip is bit-exact for float32 input.
    """
    if cache.dim <= 0:
        raise ValueError(f"cache dim must be positive, got {cache.dim}")
    blob = bytearray(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, cache.dim, len(cache.entries)))
    for key, vec in cache.entries.items():
        arr = np.ascontiguousarray(vec, dtype="<f4")
        if arr.ndim != 1 or arr.size != cache.dim:
            raise ValueError(f"vector for {key!r} has shape {arr.shape}, expected ({cache.dim},)")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"vector for {key!r} contains non-finite entries")
        encoded = key.encode("utf-8")
        if not encoded:
            raise ValueError("empty id")
        if len(encoded) > 0xFFFF:
            raise ValueError(f"id longer than 65535 bytes: {key[:40]!r}...")
        blob += _IDLEN.pack(len(encoded))
        blob += encoded
        blob += arr.tobytes()
    target = Path(path)
    tmp = target.with_name(f".{target.name}.tmp")
    tmp.write_bytes(bytes(blob))
    os.replace(tmp, target)


def cache_read(path) -> EmbeddingCache:
    """Parse a cache file, validating magic, version, dim, and count.

    Raises :class:`CacheMagicError`, :class:`CacheVersionError`, or
    :class:`CacheTruncatedError` for the respective corruptions; other
    structural damage raises :class:`CacheFormatError`.
    """
    data = Path(path).read_bytes()
    if data[:4] != CACHE_MAGIC:
        raise CacheMagicError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < _HEADER.size:
        raise CacheTruncatedError(f"{path}: header cut short")
    _, version, dim, count = _HEADER.unpack_from(data, 0)
    if version != CACHE_VERSION:
        raise CacheVersionError(f"{path}: unsupported version {version}")
    if dim <= 0:
        raise CacheFormatError(f"{path}: non-positive dim {dim}")
    entries: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    vec_bytes = dim * 4
    for index in range(count):
        if offset + _IDLEN.size > len(data):
            raise CacheTruncatedError(
                f"{path}: {count} records declared but file ends inside record {index}"
            )
        (id_len,) = _IDLEN.unpack_from(data, offset)
        offset += _IDLEN.size
        if offset + id_len + vec_bytes > len(data):
            raise CacheTruncatedError(
                f"{path}: {count} records declared but file ends inside record {index}"
            )
        try:
            key = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CacheFormatError(f"{path}: record {index} id is not UTF-8") from exc
        offset += id_len
        if key in entries:
            raise CacheFormatError(f"{path}: duplicate id {key!r}")
        entries[key] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
    if offset != len(data):
        raise CacheFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return EmbeddingCache(dim=dim, entries=entries)
