"""End-to-end tracking: batching, temporal linking, affinities, clustering, extraction, stitching."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .affinity import AffinityMatrix, assemble, to_cost
from .clustering import ClusterAssignment, best_for_k, select_clustering, spectral_embedding
from .flow import link_features
from .model import Category, SequenceBundle, TrackerConfig, Trajectory, TrajectoryBox
from .trajectory import BatchTrajectories, extract, stitch_batches

logger = logging.getLogger(__name__)


def batch_windows(first: int, last: int, config: TrackerConfig) -> list[tuple[int, int]]:
    """Windows of ``batch_len`` frames sharing one frame with their neighbour.

    A trailing remainder shorter than ``f_max`` frames is folded into the last
    window, since tracks that short cannot pay their entry and exit costs.
    """
    if last < first:
        return []
    out, start = [], first
    while True:
        end = min(start + config.batch_len - 1, last)
        if last - end < config.f_max:
            end = last
        out.append((start, end))
        if end >= last:
            return out
        start = end


def prefilter_dpts(dpts, detections, config: TrackerConfig):
    """Drop static tracklets and tracklets that never fall inside a detection box."""
    by_frame = {}
    for d in detections:
        by_frame.setdefault(d.frame, []).append(d)
    kept = []
    for t in dpts:
        a, b = t.points[0].position, t.points[-1].position
        if np.hypot(b[0] - a[0], b[1] - a[1]) < config.static_dpt_threshold:
            continue
        if any(d.contains(p.position) for p in t.points for d in by_frame.get(p.frame, ())):
            kept.append(t)
    return kept


@dataclass
class PreparedBatch:
    start: int
    end: int
    low_tracks: list
    mid_tracks: list
    affinity: AffinityMatrix
    Q: np.ndarray
    diag: dict = field(default_factory=dict)
    embedding: np.ndarray | None = None


def score_range(bundle: SequenceBundle):
    scores = [d.confidence for d in bundle.detections]
    return (min(scores), max(scores)) if scores else None


def prepare_batch(bundle: SequenceBundle, start: int, end: int, config: TrackerConfig) -> PreparedBatch:
    t0 = time.perf_counter()
    dets = [d for d in bundle.detections if start <= d.frame <= end]
    clipped = [c for t in bundle.dpts if (c := t.clipped(start, end)) is not None]
    kept = prefilter_dpts(clipped, dets, config)
    low = link_features(kept, Category.LOW, config)
    mid = link_features(dets, Category.MID, config, score_range=score_range(bundle))
    t1 = time.perf_counter()
    aff = assemble(low + mid, config)
    Q = to_cost(aff)
    t2 = time.perf_counter()
    diag = {
        "start": start, "end": end,
        "n_detections": len(dets), "n_dpts_raw": len(clipped), "n_dpts_kept": len(kept),
        "n_low_tracks": len(low), "n_mid_tracks": len(mid),
        "timings": {"lp": round(t1 - t0, 4), "affinity": round(t2 - t1, 4)},
    }
    return PreparedBatch(start, end, low, mid, aff, Q, diag)


def cluster_batch(pb: PreparedBatch, config: TrackerConfig, k_offset: int | None = None) -> ClusterAssignment:
    """Objective-selected clustering, optionally shifted to ``selected k + k_offset``."""
    W, Q = pb.affinity.W, pb.Q
    n = W.shape[0]
    if pb.embedding is None and n:
        pb.embedding = spectral_embedding(W, n)
    best = select_clustering(W, Q, config, pb.affinity.n_det, embedding=pb.embedding) if n else None
    if best is None or best.k == 0:
        return ClusterAssignment(np.zeros(0, dtype=int), 0, 0.0)
    if k_offset:
        k = min(max(best.k + k_offset, 1), n)
        best = best_for_k(W, Q, k, config, pb.embedding)
    return best


def finish_batch(pb: PreparedBatch, config: TrackerConfig, k_offset: int | None = None):
    t0 = time.perf_counter()
    assignment = cluster_batch(pb, config, k_offset)
    t1 = time.perf_counter()
    trajs = extract(assignment, pb.affinity.tracks, config, span=(pb.start, pb.end))
    t2 = time.perf_counter()
    diag = dict(pb.diag)
    diag["timings"] = dict(diag["timings"], clustering=round(t1 - t0, 4), extract=round(t2 - t1, 4))
    diag.update(k=int(assignment.k), objective=float(assignment.objective), n_trajectories=len(trajs))
    return BatchTrajectories(pb.start, pb.end, trajs), diag


def _frame_range(bundle: SequenceBundle):
    frames = [d.frame for d in bundle.detections] + [p.frame for t in bundle.dpts for p in t.points]
    if not frames:
        return None
    return min(frames), (bundle.frame_count or max(frames))


def prepare(bundle: SequenceBundle, config: TrackerConfig, threads: int = 1) -> list[PreparedBatch]:
    rng = _frame_range(bundle)
    if rng is None:
        return []
    windows = batch_windows(rng[0], rng[1], config)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        return list(ex.map(lambda w: prepare_batch(bundle, w[0], w[1], config), windows))


def run_prepared(batches, config: TrackerConfig, k_offset: int | None = None, threads: int = 1):
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        results = list(ex.map(lambda pb: finish_batch(pb, config, k_offset), batches))
    trajs = stitch_batches([r[0] for r in results], config)
    diagnostics = {"batches": [r[1] for r in results], "n_trajectories": len(trajs),
                   "k": sum(r[1]["k"] for r in results),
                   "objective": sum(r[1]["objective"] for r in results)}
    return trajs, diagnostics


def run(bundle: SequenceBundle, config: TrackerConfig | None = None, threads: int = 1,
        k_offset: int | None = None) -> tuple[list[Trajectory], dict]:
    config = config or TrackerConfig()
    batches = prepare(bundle, config, threads)
    if not batches:
        return [], {"batches": [], "n_trajectories": 0, "k": 0, "objective": 0.0}
    return run_prepared(batches, config, k_offset, threads)


def run_lp2d(bundle: SequenceBundle, config: TrackerConfig | None = None) -> list[Trajectory]:
    """Detections-only baseline: every linked detection track is a trajectory."""
    config = config or TrackerConfig()
    rng = _frame_range(bundle)
    if rng is None:
        return []
    per_batch = []
    for start, end in batch_windows(rng[0], rng[1], config):
        dets = [d for d in bundle.detections if start <= d.frame <= end]
        tracks = link_features(dets, Category.MID, config, score_range=score_range(bundle))
        tracks.sort(key=lambda t: (t.members[0].frame, t.members[0].center))
        trajs = [Trajectory(k + 1, tuple(TrajectoryBox(d.frame, tuple(d.center), d.width, d.height)
                                         for d in t.members), k)
                 for k, t in enumerate(tracks)]
        per_batch.append(BatchTrajectories(start, end, trajs))
    return stitch_batches(per_batch, config)


def ksweep(bundle: SequenceBundle, config: TrackerConfig, gt=None, threads: int = 1):
    """Rerun clustering at offsets -h..h from the selected k; rows of (offset, k, objective, TA)."""
    from .metrics import clear_mot

    batches = prepare(bundle, config, threads)
    rows = []
    h = config.k_sweep_halfwidth
    for off in range(-h, h + 1):
        trajs, diag = run_prepared(batches, config, off or None, threads)
        ta = clear_mot(gt, trajs, config.iou_match_threshold).TA if gt is not None else None
        rows.append((off, diag["k"], diag["objective"], ta))
    return rows
