"""Binary embedding cache round trip plus PCA and k-means structure checks.

Generates three Gaussian blobs in 6-D, persists them through the binary
cache format (bit-exact for float32, atomic write), reads them back, then
projects to 2-D with PCA and clusters with seeded k-means to show the blob
structure survives the round trip.

Run: python3 demos/embedding_cache_and_clusters.py
"""

import hashlib
import tempfile
from collections import Counter
from pathlib import Path

import numpy as np

from artmod import EmbeddingCache, cache_read, cache_write, kmeans, pca_fit_project

SEED = 5
DIM = 6
PER_BLOB = 50
CENTERS = np.array(
    [
        [4.0, 0.0, 0.0, 0.5, 0.0, 0.0],
        [0.0, 4.0, 0.0, 0.0, 0.5, 0.0],
        [0.0, 0.0, 4.0, 0.0, 0.0, 0.5],
    ]
)


def main():
    rng = np.random.default_rng(SEED)
    vectors, blob_of = {}, {}
    for blob, center in enumerate(CENTERS):
        for i in range(PER_BLOB):
            name = f"vec{blob}{i:02d}"
            vectors[name] = (center + 0.6 * rng.normal(size=DIM)).astype(np.float32)
            blob_of[name] = blob

    cache = EmbeddingCache(dim=DIM, entries=vectors)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "blobs.bin"
        cache_write(path, cache)
        size = path.stat().st_size
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        loaded = cache_read(path)
        cache_write(path, loaded)
        digest_again = hashlib.sha256(path.read_bytes()).hexdigest()

    exact = all(np.array_equal(vectors[k], loaded.entries[k]) for k in vectors)
    print(f"cache: {len(vectors)} vectors, dim {DIM}, {size} bytes on disk")
    print(f"read-back bit-exact: {exact}")
    print(f"rewrite reproduces identical bytes: {digest == digest_again}")
    print(f"sha256: {digest[:16]}…")

    ids = sorted(loaded.entries)
    data = np.array([loaded.entries[i] for i in ids], dtype=np.float64)
    model, projection = pca_fit_project(data, 2)
    total = float(model.explained_variance.sum())
    print("\nPCA to 2-D:")
    for axis, var in enumerate(model.explained_variance[:2]):
        print(f"  component {axis}: explains {var / total:.1%} of retained variance")

    assignments, centroids, inertia = kmeans(projection, 3, seed=SEED)
    print(f"\nk-means on the projection: k=3, inertia={inertia:.2f}")
    purity_hits = 0
    for cluster in range(3):
        members = [ids[j] for j in range(len(ids)) if assignments[j] == cluster]
        majority, hits = Counter(blob_of[m] for m in members).most_common(1)[0]
        purity_hits += hits
        print(
            f"  cluster {cluster}: {len(members):>3} vectors,"
            f" majority from blob {majority} ({hits}/{len(members)})"
        )
    print(f"overall purity vs generating blobs: {purity_hits / len(ids):.3f}")


if __name__ == "__main__":
    main()
