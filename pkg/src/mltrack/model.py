"""Domain types shared across the tracker.

Frames are integer indices as they appear in the input files (MOT files are
1-based). Positions are pixel coordinates with the origin at the top-left.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Union

import numpy as np


class Category(str, enum.Enum):
    LOW = "low"  # dense point tracklets
    MID = "mid"  # detections


class Provenance(str, enum.Enum):
    DETECTED = "detected"
    INTERPOLATED = "interpolated"
    EXTRAPOLATED = "extrapolated"


@dataclass(frozen=True)
class Detection:
    frame: int
    center: tuple[float, float]
    width: float
    height: float
    confidence: float = 1.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"detection at frame {self.frame} has nonpositive size")
        if self.frame < 0:
            raise ValueError("frame must be >= 0")

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        """Corner form (x0, y0, x1, y1)."""
        cx, cy = self.center
        hw, hh = 0.5 * self.width, 0.5 * self.height
        return (cx - hw, cy - hh, cx + hw, cy + hh)

    def contains(self, point) -> bool:
        x0, y0, x1, y1 = self.bbox
        return x0 <= point[0] <= x1 and y0 <= point[1] <= y1


@dataclass(frozen=True)
class DptPoint:
    frame: int
    position: tuple[float, float]
    appearance: tuple[float, float, float]

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError("frame must be >= 0")
        if any(c < 0 or c > 255 for c in self.appearance):
            raise ValueError("appearance channels must lie in [0, 255]")


@dataclass(frozen=True)
class DptTracklet:
    id: int
    points: tuple[DptPoint, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError(f"tracklet {self.id} needs at least 2 points")
        for a, b in zip(self.points, self.points[1:]):
            if b.frame != a.frame + 1:
                raise ValueError(f"gap in tracklet {self.id}")

    @property
    def first_frame(self) -> int:
        return self.points[0].frame

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame

    def clipped(self, start: int, end: int) -> DptTracklet | None:
        """Restrict to frames in [start, end]; None if fewer than 2 points remain."""
        pts = tuple(p for p in self.points if start <= p.frame <= end)
        if len(pts) < 2:
            return None
        return DptTracklet(self.id, pts)


Feature = Union[Detection, DptTracklet]


def feature_span(feature: Feature) -> tuple[int, int]:
    if isinstance(feature, Detection):
        return feature.frame, feature.frame
    return feature.first_frame, feature.last_frame


@dataclass(frozen=True)
class FeatureTrack:
    """Temporally linked features of one category.

    For the low category the members are tracklets; for the mid category they
    are single detections. Members never overlap in time.
    """

    category: Category
    members: tuple[Feature, ...]
    id: int = 0

    def __post_init__(self):
        if not self.members:
            raise ValueError("feature track must be nonempty")
        prev_end = None
        for m in self.members:
            first, last = feature_span(m)
            if prev_end is not None and first <= prev_end:
                raise ValueError(f"feature track {self.id} has temporally overlapping members")
            prev_end = last

    @cached_property
    def points(self) -> dict[int, np.ndarray]:
        """Frame -> 2D position (tracklet point or detection center)."""
        out = {}
        for m in self.members:
            if isinstance(m, Detection):
                out[m.frame] = np.asarray(m.center, dtype=float)
            else:
                for p in m.points:
                    out[p.frame] = np.asarray(p.position, dtype=float)
        return out

    @cached_property
    def frames(self) -> np.ndarray:
        return np.array(sorted(self.points), dtype=int)

    @cached_property
    def velocities(self) -> dict[int, np.ndarray]:
        """Frame f -> displacement from f-1 to f.

        For tracklets only steps inside one member count, never across a link.
        """
        out = {}
        if self.category is Category.MID:
            pts = self.points
            for f, p in pts.items():
                if f - 1 in pts:
                    out[f] = p - pts[f - 1]
            return out
        for m in self.members:
            for a, b in zip(m.points, m.points[1:]):
                out[b.frame] = np.subtract(b.position, a.position, dtype=float)
        return out

    @cached_property
    def boxes(self) -> dict[int, Detection]:
        return {m.frame: m for m in self.members if isinstance(m, Detection)}


def track_frame_span(track: FeatureTrack) -> tuple[int, int]:
    first = feature_span(track.members[0])[0]
    last = feature_span(track.members[-1])[1]
    return first, last


def common_frames(a: FeatureTrack, b: FeatureTrack) -> set[int]:
    return set(a.points).intersection(b.points)


@dataclass(frozen=True)
class TrajectoryBox:
    frame: int
    center: tuple[float, float]
    width: float
    height: float
    provenance: Provenance = Provenance.DETECTED

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return (cx - 0.5 * self.width, cy - 0.5 * self.height,
                cx + 0.5 * self.width, cy + 0.5 * self.height)


@dataclass(frozen=True)
class Trajectory:
    id: int
    boxes: tuple[TrajectoryBox, ...]
    source_cluster: int = -1

    def __post_init__(self):
        frames = [b.frame for b in self.boxes]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"trajectory {self.id} frames not strictly increasing")
        if not any(b.provenance is Provenance.DETECTED for b in self.boxes):
            raise ValueError(f"trajectory {self.id} has no detected box")

    @cached_property
    def by_frame(self) -> dict[int, TrajectoryBox]:
        return {b.frame: b for b in self.boxes}

    @property
    def first_frame(self) -> int:
        return self.boxes[0].frame

    @property
    def last_frame(self) -> int:
        return self.boxes[-1].frame


def iou(a, b) -> float:
    """IoU of two corner-form boxes."""
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


@dataclass(frozen=True)
class TrackerConfig:
    v_max: float = 25.0  # pixels per frame
    a_max: float = 20.0
    f_max: int = 15
    sigma_dist: float = 0.4
    mu_dist: float = 0.05
    sigma_angle: float = 50.0  # degrees
    batch_len: int = 50
    ncut_runs: int = 50
    k_sweep_halfwidth: int = 5
    affinity_floor: float = 0.05
    c_in: float = 10.0
    c_out: float = 10.0
    confidence_epsilon: float = 0.05
    static_dpt_threshold: float = 2.0
    direction_variance_threshold: float = 400.0  # squared degrees
    iou_match_threshold: float = 0.5
    seed: int = 42

    def __post_init__(self):
        for name in ("v_max", "a_max", "sigma_dist", "sigma_angle"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("f_max", "batch_len", "ncut_runs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.batch_len < 2:
            raise ValueError("batch_len must be >= 2")
        if self.k_sweep_halfwidth < 0:
            raise ValueError("k_sweep_halfwidth must be >= 0")
        if not 0 <= self.affinity_floor < 1:
            raise ValueError("affinity_floor must lie in [0, 1)")
        if not 0 < self.confidence_epsilon < 0.5:
            raise ValueError("confidence_epsilon must lie in (0, 0.5)")
        if not 0 < self.iou_match_threshold <= 1:
            raise ValueError("iou_match_threshold must lie in (0, 1]")
        if self.mu_dist < 0 or self.static_dpt_threshold < 0:
            raise ValueError("mu_dist and static_dpt_threshold must be >= 0")
        if self.direction_variance_threshold < 0:
            raise ValueError("direction_variance_threshold must be >= 0")
        if self.c_in < 0 or self.c_out < 0:
            raise ValueError("c_in and c_out must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: (int if f.type == "int" else float) for f in fields(cls)}


@dataclass
class SequenceBundle:
    detections: list[Detection] = field(default_factory=list)
    dpts: list[DptTracklet] = field(default_factory=list)
    frame_count: int | None = None
    image_width: float | None = None
    image_height: float | None = None

    def __post_init__(self):
        if self.frame_count is not None:
            last = self.last_frame()
            if last is not None and last > self.frame_count:
                raise ValueError("feature frame beyond frame_count")

    def last_frame(self) -> int | None:
        frames = [d.frame for d in self.detections] + [t.last_frame for t in self.dpts]
        return max(frames) if frames else None
