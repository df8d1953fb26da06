"""Partition proposals by normalized-cut spectral clustering, scored by the quadratic objective."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import TrackerConfig

ORACLE_MAX_TRACKS = 10


@dataclass
class ClusterAssignment:
    labels: np.ndarray  # cluster id per track, 1..k
    k: int
    objective: float
    seed: int | None = None

    def clusters(self) -> list[list[int]]:
        return [np.flatnonzero(self.labels == c).tolist() for c in range(1, self.k + 1)]


@dataclass
class SweepRecord:
    k: int
    run: int
    seed: int
    objective: float


def score(labels, Q) -> float:
    """f^T Q f for the cluster indicator flags: diagonal plus twice every same-cluster pair."""
    Q = np.asarray(Q, dtype=float)
    labels = np.asarray(labels)
    if labels.shape != (Q.shape[0],):
        raise ValueError("labels must cover every track")
    if labels.size and np.any(labels < 0):
        raise ValueError("partial labeling")
    same = labels[:, None] == labels[None, :]
    return float(np.sum(Q[same]))


def _normalize_labels(raw) -> np.ndarray:
    """Relabel to 1..k in order of first appearance."""
    out = np.zeros(len(raw), dtype=int)
    seen = {}
    for i, c in enumerate(raw):
        out[i] = seen.setdefault(int(c), len(seen) + 1)
    return out


def spectral_embedding(W, k_max: int) -> np.ndarray:
    """Eigenvectors of the k_max smallest eigenvalues of the normalized Laplacian."""
    W = np.asarray(W, dtype=float)
    deg = W.sum(axis=1)
    deg[deg <= 0] = 1.0  # isolated rows
    d = 1.0 / np.sqrt(deg)
    L = np.eye(len(W)) - d[:, None] * W * d[None, :]
    L = 0.5 * (L + L.T)
    try:
        _, vecs = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed on {W.shape} affinity: {exc}") from exc
    return vecs[:, :k_max]


def kmeans(X, k: int, seed: int, max_iter: int = 100, tol: float = 1e-8) -> np.ndarray:
    """Lloyd's k-means with k-means++ seeding."""
    rng = np.random.default_rng(seed)
    n = len(X)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        dist = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dist, axis=1)
        new = centers.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                new[c] = X[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the worst-fit point
                far = int(np.argmax(dist[np.arange(n), labels]))
                new[c] = X[far]
                labels[far] = c
        shift = float(np.sum((new - centers) ** 2))
        centers = new
        if shift <= tol:
            break
    dist = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return np.argmin(dist, axis=1)


def _partition_embedding(emb, k: int, seed: int) -> np.ndarray:
    n = emb.shape[0]
    if k == 1:
        return np.ones(n, dtype=int)
    X = emb[:, :k].copy()
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    X /= norms
    return _normalize_labels(kmeans(X, k, seed))


def spectral_partition(W, k: int, seed: int, embedding=None) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} outside [1, {n}]")
    emb = embedding if embedding is not None else spectral_embedding(W, k)
    return _partition_embedding(emb, k, seed)


def sweep_range(n_tracks: int, n_det: int, halfwidth: int, full_range: bool = False) -> range:
    if full_range:
        return range(1, n_tracks + 1)
    lo = max(1, n_det - halfwidth)
    hi = min(n_tracks, n_det + halfwidth)
    return range(lo, hi + 1)


def best_for_k(W, Q, k: int, config: TrackerConfig, embedding=None, records=None) -> ClusterAssignment:
    """Best of ``ncut_runs`` seeded partitions at a fixed k."""
    emb = embedding if embedding is not None else spectral_embedding(W, k)
    best = None
    for run in range(config.ncut_runs):
        seed = config.seed + run
        labels = _partition_embedding(emb, k, seed)
        obj = score(labels, Q)
        if records is not None:
            records.append(SweepRecord(k, run, seed, obj))
        if best is None or obj < best.objective:
            best = ClusterAssignment(labels, int(labels.max()), obj, seed)
    return best


def select_clustering(W, Q, config: TrackerConfig, n_det: int, full_range: bool = False,
                      records: list | None = None, embedding=None) -> ClusterAssignment:
    """Sweep k around the number of detection tracks and keep the lowest objective.

    Ties go to the smaller k, then the smaller seed (the sweep visits them first).
    """
    W = np.asarray(W, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = W.shape[0]
    if Q.shape != W.shape:
        raise ValueError("W and Q sizes differ")
    if n == 0:
        return ClusterAssignment(np.zeros(0, dtype=int), 0, 0.0)
    ks = sweep_range(n, n_det, config.k_sweep_halfwidth, full_range)
    emb = embedding if embedding is not None else spectral_embedding(W, ks[-1])
    best = None
    for k in ks:
        cand = best_for_k(W, Q, k, config, emb, records)
        if best is None or cand.objective < best.objective:
            best = cand
    return best


def _set_partitions(n):
    """Restricted growth strings: labels[i] <= max(labels[:i]) + 1."""
    labels = [0] * n

    def rec(i, m):
        if i == n:
            yield labels
            return
        for c in range(m + 1):
            labels[i] = c
            yield from rec(i + 1, max(m, c + 1))

    if n == 0:
        yield []
        return
    yield from rec(1, 1)


def oracle_best_partition(Q) -> tuple[np.ndarray, float]:
    """Exact minimizer of the clustering objective by enumerating set partitions."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if n > ORACLE_MAX_TRACKS:
        raise ValueError(f"oracle refuses more than {ORACLE_MAX_TRACKS} tracks")
    best, best_obj = None, np.inf
    for labels in _set_partitions(n):
        lab = np.array(labels) + 1
        obj = score(lab, Q)
        if obj < best_obj:
            best, best_obj = lab, obj
    return best, best_obj


@dataclass
class ConstraintReport:
    ok: bool
    unassigned: list[int] = field(default_factory=list)
    multiply_assigned: list[int] = field(default_factory=list)
    split_tracks: list[int] = field(default_factory=list)


def validate_constraints(assignment: ClusterAssignment | None, tracks, member_labels=None) -> ConstraintReport:
    """Each track in exactly one cluster; linked features never split across clusters.

    ``member_labels`` optionally maps track index -> per-member cluster labels,
    for checking assignments made at feature granularity.
    """
    n = len(tracks)
    labels = np.zeros(0, dtype=int) if assignment is None else np.asarray(assignment.labels)
    rep = ConstraintReport(ok=True)
    if len(labels) < n:
        rep.unassigned = list(range(len(labels), n))
    elif len(labels) > n:
        rep.multiply_assigned = list(range(n, len(labels)))
    rep.unassigned += [i for i in range(min(n, len(labels))) if labels[i] < 1]
    for i, per_member in (member_labels or {}).items():
        if len(set(per_member)) > 1:
            rep.split_tracks.append(i)
    rep.ok = not (rep.unassigned or rep.multiply_assigned or rep.split_tracks)
    return rep
