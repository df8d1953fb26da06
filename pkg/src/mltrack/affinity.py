"""Pairwise affinities between feature tracks and the spatial cost matrix.

Tracks are ordered dense-point tracks first, then detection tracks. Every
affinity lies in [0, 1]; 0.5 marks "no information" and maps to a neutral
cost of 0 after ``to_cost``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Category, Detection, FeatureTrack, TrackerConfig, iou

NO_INFO = 0.5


def gaussian_ratio(x: float, mu: float, sigma: float) -> float:
    """N(x; mu, sigma) / N(mu; mu, sigma) with sigma a standard deviation."""
    return math.exp(-((x - mu) ** 2) / (2.0 * sigma**2))


class _Profile:
    """Per-track lookups: points, velocities and the detection boxes containing each point."""

    def __init__(self, track: FeatureTrack, ctx: AffinityContext):
        self.track = track
        self.points = track.points
        self.containing: dict[int, list[int]] = {}
        heights, widths = [], []
        for f, p in self.points.items():
            hits = [k for k in ctx.boxes_by_frame.get(f, ()) if ctx.detections[k].contains(p)]
            if hits:
                self.containing[f] = hits
                heights.extend(ctx.detections[k].height for k in hits)
                widths.extend(ctx.detections[k].width for k in hits)
        if track.category is Category.MID:
            # a detection track measures itself by its own boxes
            heights = [d.height for d in track.boxes.values()]
            widths = [d.width for d in track.boxes.values()]
        self.med_h = float(np.median(heights)) if heights else None
        self.med_w = float(np.median(widths)) if widths else None
        self.owners = {ctx.owner[k] for hits in self.containing.values() for k in hits}


class AffinityContext:
    """Shared state for affinity evaluation over one set of feature tracks.

    Only detections that survived temporal linking (members of detection
    tracks) are used as boxes.
    """

    def __init__(self, tracks, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.dpt_tracks = [t for t in tracks if t.category is Category.LOW]
        self.det_tracks = [t for t in tracks if t.category is Category.MID]
        self.tracks = self.dpt_tracks + self.det_tracks
        self.detections: list[Detection] = []
        self.owner: list[int] = []
        self.boxes_by_frame: dict[int, list[int]] = {}
        self._det_index = {}
        for ti, t in enumerate(self.det_tracks):
            for d in t.members:
                k = len(self.detections)
                self.detections.append(d)
                self.owner.append(ti)
                self.boxes_by_frame.setdefault(d.frame, []).append(k)
                self._det_index[id(d)] = k
        self._profiles = {}
        self._iou = {}

    def profile(self, track: FeatureTrack) -> _Profile:
        key = id(track)
        if key not in self._profiles:
            self._profiles[key] = _Profile(track, self)
        return self._profiles[key]

    def box_iou(self, a: int, b: int) -> float:
        key = (a, b) if a <= b else (b, a)
        if key not in self._iou:
            self._iou[key] = iou(self.detections[a].bbox, self.detections[b].bbox)
        return self._iou[key]

    def dpts_in(self, det: Detection) -> frozenset[int]:
        """Indices of dense point tracks whose point lies in ``det``."""
        return frozenset(
            i for i, t in enumerate(self.dpt_tracks)
            if det.frame in t.points and det.contains(t.points[det.frame])
        )


def _common(pa: _Profile, pb: _Profile) -> list[int]:
    return sorted(set(pa.points).intersection(pb.points))


def w_det(a: FeatureTrack, b: FeatureTrack, ctx: AffinityContext) -> float:
    pa, pb = ctx.profile(a), ctx.profile(b)
    frames = _common(pa, pb)
    if not frames:
        raise ValueError("w_det needs common frames")
    total = 0.0
    for f in frames:
        ha, hb = pa.containing.get(f), pb.containing.get(f)
        if not ha or not hb:
            total += NO_INFO
        else:
            total += max(ctx.box_iou(x, y) for x in ha for y in hb)
    return total / len(frames)


def _directed_dist(src: _Profile, other: _Profile, frames, axis: int, scale: float, config) -> float:
    ratio = float(np.median([abs(src.points[f][axis] - other.points[f][axis]) / scale for f in frames]))
    if ratio <= config.mu_dist:
        return 1.0
    return gaussian_ratio(ratio, config.mu_dist, config.sigma_dist)


def w_dist(a: FeatureTrack, b: FeatureTrack, ctx: AffinityContext) -> float:
    pa, pb = ctx.profile(a), ctx.profile(b)
    frames = _common(pa, pb)
    if not frames:
        raise ValueError("w_dist needs common frames")
    cfg = ctx.config
    d_h = [_directed_dist(s, o, frames, 1, s.med_h, cfg) for s, o in ((pa, pb), (pb, pa)) if s.med_h]
    d_w = [_directed_dist(s, o, frames, 0, s.med_w, cfg) for s, o in ((pa, pb), (pb, pa)) if s.med_w]
    if not d_h or not d_w:
        return NO_INFO
    # median of (at most) two values is their mean
    dh, dw = float(np.mean(d_h)), float(np.mean(d_w))
    if dh >= 0.5 and dw >= 0.5:
        return 0.5 * (dh + dw)
    return 0.0


def _velocity_frames(a: FeatureTrack, b: FeatureTrack):
    va, vb = a.velocities, b.velocities
    frames = sorted(set(va).intersection(vb))
    return [va[f] for f in frames], [vb[f] for f in frames]


def speed_ratio(va, vb) -> float:
    sa, sb = float(np.hypot(*va)), float(np.hypot(*vb))
    hi = max(sa, sb)
    return 1.0 if hi == 0 else min(sa, sb) / hi


def vector_angle(va, vb) -> float | None:
    """Unsigned angle in degrees, None if either vector is zero."""
    na, nb = float(np.hypot(*va)), float(np.hypot(*vb))
    if na == 0 or nb == 0:
        return None
    cross = float(va[0] * vb[1] - va[1] * vb[0])
    return math.degrees(math.atan2(abs(cross), float(np.dot(va, vb))))


def w_speed(a: FeatureTrack, b: FeatureTrack, ctx: AffinityContext | None = None) -> float:
    va, vb = _velocity_frames(a, b)
    if not va:
        return NO_INFO
    return float(np.median([speed_ratio(x, y) for x, y in zip(va, vb)]))


def angle_affinity(angle_deg: float, sigma_angle: float) -> float:
    return gaussian_ratio(angle_deg, 0.0, sigma_angle)


def w_angle(a: FeatureTrack, b: FeatureTrack, config: TrackerConfig, ctx: AffinityContext | None = None) -> float:
    va, vb = _velocity_frames(a, b)
    angles = [ang for x, y in zip(va, vb) if (ang := vector_angle(x, y)) is not None]
    if not angles:
        return NO_INFO
    return angle_affinity(float(np.median(angles)), config.sigma_angle)


def velocity_affinity(speed: float, angle: float) -> float:
    """Equal-weight mix of speed and angle, mapped linearly onto [0.5, 1]."""
    return 0.5 + 0.5 * (0.5 * (speed + angle))


def w_velocity(a: FeatureTrack, b: FeatureTrack, config: TrackerConfig, ctx: AffinityContext | None = None) -> float:
    return velocity_affinity(w_speed(a, b, ctx), w_angle(a, b, config, ctx))


def _link_terms(a: FeatureTrack, b: FeatureTrack, ctx: AffinityContext) -> float:
    return w_velocity(a, b, ctx.config, ctx) * 0.5 * (w_dist(a, b, ctx) + w_det(a, b, ctx))


def w_pp(a: FeatureTrack, b: FeatureTrack, ctx: AffinityContext) -> float:
    pa, pb = ctx.profile(a), ctx.profile(b)
    if _common(pa, pb):
        return _link_terms(a, b, ctx)
    # temporally disjoint: connected only through a shared detection track
    return 1.0 if pa.owners & pb.owners else 0.0


def w_pd(p: FeatureTrack, d: FeatureTrack, ctx: AffinityContext) -> float:
    frames = sorted(set(p.points).intersection(d.boxes))
    if not frames:
        return 0.5 * (NO_INFO + NO_INFO)
    inside = sum(1 for f in frames if d.boxes[f].contains(p.points[f]))
    return 0.5 * (inside / len(frames) + _link_terms(p, d, ctx))


def dd_overlap(dpts_i: frozenset, dpts_j: frozenset) -> float:
    """Shared-DPT term between two detections given the DPT sets inside each."""
    if not dpts_i or not dpts_j:
        return 0.5 * 1.0
    inter = len(dpts_i & dpts_j)
    return 0.5 * (inter / len(dpts_i) + inter / len(dpts_j))


def w_dd_detections(di: Detection, dj: Detection, same_track: bool, ctx: AffinityContext) -> float:
    link = 1.0 if same_track else 0.0
    return dd_overlap(ctx.dpts_in(di), ctx.dpts_in(dj)) * link


def closest_detections(a: FeatureTrack, b: FeatureTrack) -> tuple[Detection, Detection]:
    fa, fb = sorted(a.boxes), sorted(b.boxes)
    best = min(((abs(x - y), x, y) for x in fa for y in fb))
    return a.boxes[best[1]], b.boxes[best[2]]


def w_dd(a: FeatureTrack, b: FeatureTrack, ctx: AffinityContext) -> float:
    di, dj = closest_detections(a, b)
    return w_dd_detections(di, dj, a is b, ctx)


@dataclass
class AffinityMatrix:
    W: np.ndarray
    tracks: list[FeatureTrack]
    n_dpt: int

    @property
    def n_det(self) -> int:
        return len(self.tracks) - self.n_dpt


def pair_affinity(a: FeatureTrack, b: FeatureTrack, ctx: AffinityContext) -> float:
    if a.category is Category.LOW and b.category is Category.LOW:
        return w_pp(a, b, ctx)
    if a.category is Category.MID and b.category is Category.MID:
        return w_dd(a, b, ctx)
    if a.category is Category.MID:
        a, b = b, a
    return w_pd(a, b, ctx)


def assemble(tracks, config: TrackerConfig | None = None) -> AffinityMatrix:
    ctx = AffinityContext(tracks, config)
    order = ctx.tracks
    n = len(order)
    W = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            W[i, j] = W[j, i] = pair_affinity(order[i], order[j], ctx)
    low = (W < ctx.config.affinity_floor) & (W != NO_INFO)
    W[low] = 0.0
    np.fill_diagonal(W, 1.0)
    return AffinityMatrix(W, order, len(ctx.dpt_tracks))


def to_cost(W) -> np.ndarray:
    W = W.W if isinstance(W, AffinityMatrix) else np.asarray(W, dtype=float)
    return -2.0 * W + 1.0
