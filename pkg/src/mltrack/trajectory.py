"""Turn clusters of feature tracks into per-person trajectories and stitch batches."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterAssignment
from .model import (
    Category,
    Detection,
    Provenance,
    TrackerConfig,
    Trajectory,
    TrajectoryBox,
    iou,
)


def dpt_steps(dpt_tracks, t: int) -> list[np.ndarray]:
    """Per-tracklet displacements from frame t-1 to t.

    Steps across a link between two tracklets are excluded: the linked
    tracklets follow different physical points.
    """
    out = []
    for track in dpt_tracks:
        for m in track.members:
            if m.first_frame < t <= m.last_frame:
                a = m.points[t - 1 - m.first_frame].position
                b = m.points[t - m.first_frame].position
                out.append(np.array([b[0] - a[0], b[1] - a[1]]))
    return out


def direction_variance(vectors) -> float | None:
    """Variance (deg^2) of displacement directions around their circular mean."""
    angles = [math.atan2(v[1], v[0]) for v in vectors if v[0] != 0 or v[1] != 0]
    if not angles:
        return None
    mean = math.atan2(sum(math.sin(a) for a in angles), sum(math.cos(a) for a in angles))
    dev = [math.degrees((a - mean + math.pi) % (2 * math.pi) - math.pi) for a in angles]
    return float(np.mean(np.square(dev)))


def _mean_steps(dpt_tracks, frames, config):
    """Mean displacement for each step frame, or None when coverage or reliability fails."""
    steps, all_vecs = [], []
    for t in frames:
        vecs = dpt_steps(dpt_tracks, t)
        if not vecs:
            return None
        steps.append(np.mean(vecs, axis=0))
        all_vecs.extend(vecs)
    var = direction_variance(all_vecs)
    if var is None or var > config.direction_variance_threshold:
        return None
    return steps


def interpolate_gap(prev_box, next_box, cluster_dpts, config: TrackerConfig) -> list[TrajectoryBox]:
    """Boxes for the frames strictly between two detections of one cluster.

    With reliable DPT coverage the center follows the mean DPT motion, with the
    accumulated drift distributed linearly so the path ends on ``next_box``.
    Otherwise the center is interpolated linearly. Size is always linear.
    """
    f0, f1 = prev_box.frame, next_box.frame
    n = f1 - f0
    if n < 2:
        return []
    c0 = np.asarray(prev_box.center, float)
    c1 = np.asarray(next_box.center, float)
    steps = _mean_steps(cluster_dpts, range(f0 + 1, f1 + 1), config)
    if steps is not None:
        cum = np.cumsum(steps, axis=0)
        drift = (c1 - c0) - cum[-1]
    out = []
    for s in range(1, n):
        alpha = s / n
        if steps is None:
            c = c0 + alpha * (c1 - c0)
        else:
            c = c0 + cum[s - 1] + alpha * drift
        w = prev_box.width + alpha * (next_box.width - prev_box.width)
        h = prev_box.height + alpha * (next_box.height - prev_box.height)
        out.append(TrajectoryBox(f0 + s, (float(c[0]), float(c[1])), float(w), float(h),
                                 Provenance.INTERPOLATED))
    return out


def extrapolate(box, cluster_dpts, config: TrackerConfig, direction: int, limit: int) -> list[TrajectoryBox]:
    """Carry ``box`` up to f_max // 3 frames forward (+1) or backward (-1) along reliable DPT motion."""
    cap = config.f_max // 3
    frames = []
    for s in range(1, cap + 1):
        t = box.frame + direction * s
        if (direction > 0 and t > limit) or (direction < 0 and t < limit):
            break
        step_frame = t if direction > 0 else t + 1
        if not dpt_steps(cluster_dpts, step_frame):
            break
        frames.append(step_frame)
    if not frames:
        return []
    steps = _mean_steps(cluster_dpts, frames, config)
    if steps is None:
        return []
    out, c = [], np.asarray(box.center, float)
    for s, step in enumerate(steps, start=1):
        c = c + direction * step
        out.append(TrajectoryBox(box.frame + direction * s, (float(c[0]), float(c[1])),
                                 box.width, box.height, Provenance.EXTRAPOLATED))
    return out if direction > 0 else out[::-1]


def _as_box(d: Detection) -> TrajectoryBox:
    return TrajectoryBox(d.frame, tuple(d.center), d.width, d.height, Provenance.DETECTED)


def extract(assignment: ClusterAssignment, tracks, config: TrackerConfig,
            span: tuple[int, int] | None = None, first_id: int = 1) -> list[Trajectory]:
    """One trajectory per cluster holding at least one detection track.

    Clusters of DPT tracks alone are background and dropped. ``span`` bounds
    extrapolation to the frames being processed.
    """
    out = []
    for cid, members in enumerate(assignment.clusters(), start=1):
        dets = [tracks[i] for i in members if tracks[i].category is Category.MID]
        dpts = [tracks[i] for i in members if tracks[i].category is Category.LOW]
        if not dets:
            continue
        by_frame: dict[int, Detection] = {}
        for t in dets:
            for d in t.members:
                cur = by_frame.get(d.frame)
                if cur is None or d.confidence > cur.confidence:
                    by_frame[d.frame] = d
        frames = sorted(by_frame)
        boxes = [_as_box(by_frame[frames[0]])]
        for fa, fb in zip(frames, frames[1:]):
            boxes.extend(interpolate_gap(by_frame[fa], by_frame[fb], dpts, config))
            boxes.append(_as_box(by_frame[fb]))
        lo, hi = span if span is not None else (frames[0] - config.f_max, frames[-1] + config.f_max)
        head = extrapolate(boxes[0], dpts, config, -1, lo)
        tail = extrapolate(boxes[-1], dpts, config, +1, hi)
        out.append((frames[0], cid, head + boxes + tail))
    out.sort(key=lambda x: (x[0], x[1]))
    return [Trajectory(first_id + k, tuple(b), cid) for k, (_, cid, b) in enumerate(out)]


@dataclass
class BatchTrajectories:
    start: int
    end: int
    trajectories: list[Trajectory]


def _merge_boxes(left: dict, right: dict) -> dict:
    """Union of two frame->box maps; the earlier batch wins unless only the later one detected."""
    out = dict(left)
    for f, b in right.items():
        cur = out.get(f)
        if cur is None or (cur.provenance is not Provenance.DETECTED and b.provenance is Provenance.DETECTED):
            out[f] = b
    return out


def stitch_batches(per_batch, config: TrackerConfig) -> list[Trajectory]:
    """Join trajectories across batches that share one boundary frame.

    Pairs are matched greedily by box IoU at the shared frame, highest first,
    ties broken by the smaller (left id, right id). Pairs below
    ``iou_match_threshold`` are not joined.
    """
    per_batch = list(per_batch)
    if not per_batch:
        return []
    merged: dict[int, dict] = {}
    clusters: dict[int, int] = {}
    next_id = 1
    active: dict[int, int] = {}  # batch-local id -> global id, for the previous batch
    for t in per_batch[0].trajectories:
        merged[next_id] = dict(t.by_frame)
        clusters[next_id] = t.source_cluster
        active[t.id] = next_id
        next_id += 1
    for prev, cur in zip(per_batch, per_batch[1:]):
        if cur.start != prev.end:
            raise ValueError(f"batch spans [{prev.start},{prev.end}] and [{cur.start},{cur.end}] do not share a frame")
        b = cur.start
        left = [(gid, merged[gid][b]) for gid in sorted(set(active.values())) if b in merged[gid]]
        right = [t for t in cur.trajectories if b in t.by_frame]
        cands = []
        for gid, lb in left:
            for t in right:
                v = iou(lb.bbox, t.by_frame[b].bbox)
                if v >= config.iou_match_threshold:
                    cands.append((-v, gid, t.id))
        cands.sort()
        used_l, used_r, match = set(), set(), {}
        for _, gid, rid in cands:
            if gid in used_l or rid in used_r:
                continue
            used_l.add(gid)
            used_r.add(rid)
            match[rid] = gid
        active = {}
        for t in cur.trajectories:
            if t.id in match:
                gid = match[t.id]
                merged[gid] = _merge_boxes(merged[gid], t.by_frame)
            else:
                gid = next_id
                next_id += 1
                merged[gid] = dict(t.by_frame)
                clusters[gid] = t.source_cluster
            active[t.id] = gid
    return [Trajectory(gid, tuple(boxes[f] for f in sorted(boxes)), clusters[gid])
            for gid, boxes in merged.items()]
