"""Cluster codes for diverse paraphrasing.

Sentence embeddings are clustered with k-means, each sentence is tagged
with its cluster's pseudotoken (``<cl_N>``), and the codes are stripped from
decoder output afterwards.
"""

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .io import atomic_write
from .validation import DataError, check_embeddings, check_positive_int, check_seed

logger = logging.getLogger(__name__)

# fixed row-block size: blocks, not thread count, decide the floating-point grouping
_BLOCK = 2048

_HEADER = np.dtype("<i8")
_VALUES = np.dtype("<f4")


@dataclass
class ClusterModel:
    centroids: np.ndarray
    k: int
    seed: int
    iterations_run: int
    sse_history: List[float] = field(default_factory=list)

    @property
    def inertia(self):
        return self.sse_history[-1] if self.sse_history else float("nan")


def _sq_distances(X, centroids, threads=1):
    """Squared Euclidean distances, shape (N, k), computed in fixed row blocks."""
    c_norm = np.einsum("ij,ij->i", centroids, centroids)

    def block(start):
        xb = X[start:start + _BLOCK]
        d = np.einsum("ij,ij->i", xb, xb)[:, None] - 2.0 * (xb @ centroids.T) + c_norm[None, :]
        np.maximum(d, 0.0, out=d)
        return d

    starts = range(0, X.shape[0], _BLOCK)
    if threads and threads > 1 and X.shape[0] > _BLOCK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(s) for s in starts]
    return np.vstack(parts) if parts else np.empty((0, centroids.shape[0]))


def _sse(X, centroids, labels):
    # direct residuals: exact zero when every point sits on its centroid
    return float(((X - centroids[labels]) ** 2).sum())


def _kmeans_plusplus(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # fewer distinct points than clusters: take any point not yet chosen
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1), out=closest)
    return X[chosen].copy()


def _update_centroids(X, labels, centroids):
    """Member means; accumulation runs in sorted index order for reproducibility."""
    k = centroids.shape[0]
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    present, starts, counts = np.unique(sorted_labels, return_index=True, return_counts=True)
    new = centroids.copy()
    if len(present):
        sums = np.add.reduceat(X[order], starts, axis=0)
        new[present] = sums / counts[:, None]
    empty = np.setdiff1d(np.arange(k), present)
    return new, empty


def kmeans(X, k=256, max_iters=300, seed=0, threads=1) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Stops after ``max_iters`` updates or once no assignment changes. A
    cluster that loses all its members is re-seeded at the point farthest
    from its current centroid.
    """
    X = check_embeddings(X)
    k = check_positive_int(k, "k")
    seed = check_seed(seed)
    n = X.shape[0]
    if n < k:
        raise DataError(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_plusplus(X, k, rng)

    labels = None
    sse_history = []
    iterations = 0
    for it in range(max_iters + 1):
        d = _sq_distances(X, centroids, threads)
        new_labels = d.argmin(axis=1)
        sse_history.append(_sse(X, centroids, new_labels))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        if it == max_iters:
            break
        centroids, empty = _update_centroids(X, labels, centroids)
        iterations += 1
        if len(empty):
            point_cost = _sq_distances(X, centroids, threads)[np.arange(n), labels]
            far = np.argsort(-point_cost, kind="stable")
            for c, idx in zip(empty, far):
                logger.debug("re-seeding empty cluster %d at point %d", c, idx)
                centroids[c] = X[idx]
    return ClusterModel(centroids, k, seed, iterations, sse_history)


def assign_codes(X, model_or_centroids, threads=1) -> np.ndarray:
    """Nearest centroid per row; ties go to the lower index."""
    centroids = getattr(model_or_centroids, "centroids", model_or_centroids)
    centroids = np.asarray(centroids, dtype=np.float64)
    X = check_embeddings(X)
    if X.shape[1] != centroids.shape[1]:
        raise DataError(f"embedding dimension {X.shape[1]} does not match centroid dimension {centroids.shape[1]}")
    return _sq_distances(X, centroids, threads).argmin(axis=1)


_CODE_RE = re.compile(r"^<cl_(\d+)> ?")


def code_token(code: int) -> str:
    return f"<cl_{code}>"


def prefix_codes(sentences: Sequence[str], codes: Sequence[int], k: Optional[int] = None) -> List[str]:
    if len(sentences) != len(codes):
        raise DataError(f"{len(sentences)} sentences but {len(codes)} codes")
    out = []
    for i, (sent, code) in enumerate(zip(sentences, codes)):
        code = int(code)
        if code < 0 or (k is not None and code >= k):
            raise DataError(f"line {i}: code {code} out of range [0, {k})")
        if not sent:
            logger.warning("line %d: empty sentence tagged with code %d", i, code)
        out.append(f"{code_token(code)} {sent}")
    return out


def strip_codes(outputs: Sequence[str]):
    """Remove one leading ``<cl_N>`` token per line; returns (lines, codes or None)."""
    lines, codes = [], []
    for line in outputs:
        m = _CODE_RE.match(line)
        if m:
            lines.append(line[m.end():])
            codes.append(int(m.group(1)))
        else:
            lines.append(line)
            codes.append(None)
    return lines, codes


def read_matrix(path) -> np.ndarray:
    """Binary matrix: little-endian int64 N and D, then N*D float32 values, row-major."""
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise DataError(f"{path}: truncated header")
    n, d = (int(v) for v in np.frombuffer(raw[:16], dtype=_HEADER))
    if n < 0 or d < 0 or len(raw) != 16 + 4 * n * d:
        raise DataError(f"{path}: header says {n}x{d} but payload has {len(raw) - 16} bytes")
    return np.frombuffer(raw[16:], dtype=_VALUES).reshape(n, d).astype(np.float64)


def matrix_bytes(X) -> bytes:
    X = np.asarray(X)
    return np.asarray(X.shape, dtype=_HEADER).tobytes() + np.ascontiguousarray(X, dtype=_VALUES).tobytes()


def write_matrix(path, X):
    atomic_write(path, matrix_bytes(X), mode="wb")


def save_model(model: ClusterModel, path):
    """Centroids in the matrix format plus a ``<path>.json`` sidecar."""
    write_matrix(path, model.centroids)
    meta = {"k": model.k, "seed": model.seed, "iterations": model.iterations_run,
            "sse_history": model.sse_history}
    atomic_write(f"{path}.json", json.dumps(meta, indent=1) + "\n")


def load_model(path) -> ClusterModel:
    centroids = read_matrix(path)
    try:
        meta = json.loads(Path(f"{path}.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"missing model sidecar {path}.json") from None
    if meta["k"] != centroids.shape[0]:
        raise DataError(f"{path}: sidecar k={meta['k']} but {centroids.shape[0]} centroids")
    return ClusterModel(centroids, meta["k"], meta["seed"], meta["iterations"], meta.get("sse_history", []))


class KMeansCoder(ClusterMixin, TransformerMixin, BaseEstimator):
    """k-means over sentence embeddings, exposing cluster ids as codes.

    Parameters
    ----------
    n_clusters : int, default=256
    max_iter : int, default=300
    random_state : int, default=0
        Must be an explicit integer; there is no wall-clock seeding.
    n_jobs : int, default=1
        Worker threads for distance computations. Results do not depend on it.
    """

    def __init__(self, n_clusters=256, max_iter=300, random_state=0, n_jobs=1):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        model = kmeans(X, self.n_clusters, self.max_iter, self.random_state, self.n_jobs)
        self.model_ = model
        self.cluster_centers_ = model.centroids
        self.n_iter_ = model.iterations_run
        self.inertia_ = model.inertia
        self.labels_ = assign_codes(X, model, self.n_jobs)
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        return assign_codes(X, self.cluster_centers_, self.n_jobs)

    def transform(self, X):
        """Euclidean distance to every centroid."""
        check_is_fitted(self, "cluster_centers_")
        X = check_embeddings(X)
        return np.sqrt(_sq_distances(X, self.cluster_centers_, self.n_jobs))
