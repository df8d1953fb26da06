"""CLEAR MOT metrics and feature-track statistics."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import iou


@dataclass
class MotReport:
    TA: float  # MOTA
    TP: float  # MOTP, mean IoU of matches
    Recall: float
    Precision: float
    MT: float  # fraction of GT trajectories covered > 80%
    PT: float
    ML: float  # fraction covered < 20%
    IDsw: int
    Frag: int
    FP: int
    FN: int
    num_gt: int
    num_matches: int
    num_gt_traj: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=False)

    def table(self) -> str:
        cols = [
            ("TA", f"{self.TA:.3f}"), ("TP", f"{self.TP:.3f}"),
            ("Rcll", f"{self.Recall:.3f}"), ("Prcn", f"{self.Precision:.3f}"),
            ("MT", f"{100 * self.MT:.1f}%"), ("PT", f"{100 * self.PT:.1f}%"),
            ("ML", f"{100 * self.ML:.1f}%"), ("IDsw", str(self.IDsw)),
            ("Frag", str(self.Frag)), ("FP", str(self.FP)), ("FN", str(self.FN)),
        ]
        widths = [max(len(h), len(v)) for h, v in cols]
        head = "  ".join(h.rjust(w) for (h, _), w in zip(cols, widths))
        vals = "  ".join(v.rjust(w) for (_, v), w in zip(cols, widths))
        return head + "\n" + vals


def _check_unique(trajs, side):
    ids = [t.id for t in trajs]
    if len(ids) != len(set(ids)):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValueError(f"duplicate (frame, id) in {side}: id {dup} appears in several trajectories")


def clear_mot(gt, hyp, iou_threshold: float = 0.5) -> MotReport:
    """CLEAR MOT over the union of frames in ``gt`` and ``hyp``.

    Correspondences from the previous frame are kept while their IoU stays at
    or above the threshold; remaining objects are matched by an assignment
    maximizing total IoU.
    """
    _check_unique(gt, "ground truth")
    _check_unique(hyp, "hypotheses")
    frames = sorted({b.frame for t in itertools.chain(gt, hyp) for b in t.boxes})
    gt_at = {f: {} for f in frames}
    hyp_at = {f: {} for f in frames}
    for t in gt:
        for b in t.boxes:
            gt_at[b.frame][t.id] = b.bbox
    for t in hyp:
        for b in t.boxes:
            hyp_at[b.frame][t.id] = b.bbox

    current: dict = {}  # gt id -> hyp id matched in the previous frame
    last: dict = {}  # gt id -> hyp id of its most recent match
    matched_frames = {t.id: [] for t in gt}
    fp = fn = idsw = 0
    ious = []
    for f in frames:
        g_boxes, h_boxes = gt_at[f], hyp_at[f]
        pairs = {}
        for g, h in current.items():
            if g in g_boxes and h in h_boxes:
                v = iou(g_boxes[g], h_boxes[h])
                if v >= iou_threshold:
                    pairs[g] = (h, v)
        taken = {h for h, _ in pairs.values()}
        g_rest = [g for g in sorted(g_boxes) if g not in pairs]
        h_rest = [h for h in sorted(h_boxes) if h not in taken]
        if g_rest and h_rest:
            m = np.array([[iou(g_boxes[g], h_boxes[h]) for h in h_rest] for g in g_rest])
            rows, cols = linear_sum_assignment(np.where(m >= iou_threshold, m, 0.0), maximize=True)
            for r, c in zip(rows, cols):
                if m[r, c] >= iou_threshold:
                    g, h = g_rest[r], h_rest[c]
                    pairs[g] = (h, float(m[r, c]))
                    if g in last and last[g] != h:
                        idsw += 1
        current = {g: h for g, (h, _) in pairs.items()}
        for g, (h, v) in pairs.items():
            last[g] = h
            ious.append(v)
        for g in g_boxes:
            matched_frames[g].append(g in pairs)
        fn += len(g_boxes) - len(pairs)
        fp += len(h_boxes) - len(pairs)

    num_gt = sum(len(t.boxes) for t in gt)
    n_match = len(ious)
    mt = pt = ml = 0
    frag = 0
    for flags in matched_frames.values():
        if not flags:
            continue
        cov = sum(flags) / len(flags)
        if cov > 0.8:
            mt += 1
        elif cov < 0.2:
            ml += 1
        else:
            pt += 1
        runs = sum(1 for k, _ in itertools.groupby(flags) if k)
        frag += max(0, runs - 1)
    n_traj = len(gt)
    return MotReport(
        TA=1.0 - (fn + fp + idsw) / num_gt if num_gt else float("nan"),
        TP=math.fsum(ious) / n_match if ious else 0.0,  # fsum: independent of match order
        Recall=n_match / num_gt if num_gt else 0.0,
        Precision=n_match / (n_match + fp) if n_match + fp else 0.0,
        MT=mt / n_traj if n_traj else 0.0,
        PT=pt / n_traj if n_traj else 0.0,
        ML=ml / n_traj if n_traj else 0.0,
        IDsw=idsw, Frag=frag, FP=fp, FN=fn,
        num_gt=num_gt, num_matches=n_match, num_gt_traj=n_traj,
    )


@dataclass
class TrackStats:
    idsw_per_traj: float | None
    avg_length_pct: float
    mean_overlap_frames: float


def _gt_label(point, frame, gt_boxes) -> int:
    for gid, box in gt_boxes.get(frame, ()):
        x0, y0, x1, y1 = box
        if x0 <= point[0] <= x1 and y0 <= point[1] <= y1:
            return gid
    return 0  # background


def track_stats(tracks, sequence_length: int, gt=None) -> TrackStats:
    """Length, mutual overlap and identity purity of feature tracks.

    Length is the frame span as a percentage of ``sequence_length``. Overlap is
    averaged over the pairs that share at least one frame. Identity switches
    label each point by the ground-truth box containing it (0 outside all
    boxes) and count label changes along the track; unavailable without ``gt``.
    """
    if sequence_length <= 0:
        raise ValueError("sequence_length must be positive")
    tracks = list(tracks)
    if not tracks:
        return TrackStats(None if gt is None else 0.0, 0.0, 0.0)
    spans = [(int(t.frames[0]), int(t.frames[-1])) for t in tracks]
    avg_len = float(np.mean([(b - a + 1) / sequence_length * 100.0 for a, b in spans]))

    frame_sets = [set(t.points) for t in tracks]
    overlaps = []
    for i in range(len(tracks)):
        for j in range(i + 1, len(tracks)):
            if spans[i][1] < spans[j][0] or spans[j][1] < spans[i][0]:
                continue
            c = len(frame_sets[i] & frame_sets[j])
            if c:
                overlaps.append(c)
    mean_overlap = float(np.mean(overlaps)) if overlaps else 0.0

    idsw = None
    if gt is not None:
        gt_boxes = {}
        for t in sorted(gt, key=lambda t: t.id):
            for b in t.boxes:
                gt_boxes.setdefault(b.frame, []).append((t.id, b.bbox))
        switches = []
        for t in tracks:
            labels = [_gt_label(t.points[f], f, gt_boxes) for f in sorted(t.points)]
            switches.append(sum(1 for a, b in zip(labels, labels[1:]) if a != b))
        idsw = float(np.mean(switches))
    return TrackStats(idsw, avg_len, mean_overlap)
