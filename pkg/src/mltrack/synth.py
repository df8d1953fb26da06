"""Deterministic synthetic scenes: detections, dense point tracklets and ground truth."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import Detection, DptPoint, DptTracklet, SequenceBundle, Trajectory, TrajectoryBox


@dataclass
class TargetSpec:
    entry_frame: int
    exit_frame: int
    waypoints: list[tuple[int, float, float]]  # (frame, x, y) of the box center
    size: tuple[float, float] = (40.0, 100.0)
    color: tuple[int, int, int] = (200, 60, 60)

    def __post_init__(self):
        if self.exit_frame <= self.entry_frame:
            raise ValueError("exit_frame must follow entry_frame")
        if not self.waypoints:
            raise ValueError("target needs at least one waypoint")
        self.waypoints = [tuple(w) for w in sorted(self.waypoints)]
        self.size = tuple(self.size)
        self.color = tuple(self.color)

    def center(self, frame: int) -> np.ndarray:
        wf = [w[0] for w in self.waypoints]
        return np.array([np.interp(frame, wf, [w[1] for w in self.waypoints]),
                         np.interp(frame, wf, [w[2] for w in self.waypoints])])


@dataclass
class ScenarioSpec:
    targets: list[TargetSpec]
    n_frames: int
    detection_dropout: float = 0.0
    detection_noise: float = 1.0
    false_positive_rate: float = 0.0
    dpts_per_target: int = 8
    dpt_lifetime: float = 12.0
    dpt_noise: float = 0.3
    occlusion_windows: list[tuple[int, int, int]] = field(default_factory=list)  # (target, first, last)
    seed: int = 0
    canvas: tuple[float, float] = (640.0, 480.0)
    background_dpts: int = 0

    def __post_init__(self):
        self.targets = [t if isinstance(t, TargetSpec) else TargetSpec(**t) for t in self.targets]
        self.occlusion_windows = [tuple(w) for w in self.occlusion_windows]
        self.canvas = tuple(self.canvas)
        for name in ("detection_dropout",):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.false_positive_rate < 0 or self.dpt_lifetime < 2:
            raise ValueError("false_positive_rate must be >= 0 and dpt_lifetime >= 2")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> ScenarioSpec:
        return cls(**json.loads(text))


def _r2(x) -> float:
    return round(float(x), 2)


def _lifetime(rng, mean: float) -> int:
    return 2 + int(rng.poisson(mean - 2.0))


def generate(spec: ScenarioSpec) -> tuple[SequenceBundle, list[Trajectory]]:
    """Render a scenario. Values are rounded to the precision of the file formats."""
    rng = np.random.default_rng(spec.seed)
    occluded = {(w[0], f) for w in spec.occlusion_windows for f in range(w[1], w[2] + 1)}
    detections, gt = [], []
    for ti, tgt in enumerate(spec.targets):
        w, h = tgt.size
        boxes = []
        for f in range(tgt.entry_frame, tgt.exit_frame + 1):
            c = tgt.center(f)
            boxes.append(TrajectoryBox(f, (_r2(c[0]), _r2(c[1])), _r2(w), _r2(h)))
            dropped = rng.random() < spec.detection_dropout
            noise = rng.normal(0.0, spec.detection_noise, 2) if spec.detection_noise > 0 else np.zeros(2)
            conf = rng.uniform(0.7, 1.0)
            if dropped or (ti, f) in occluded:
                continue
            detections.append(Detection(f, (_r2(c[0] + noise[0]), _r2(c[1] + noise[1])),
                                        _r2(w), _r2(h), round(float(conf), 4)))
        gt.append(Trajectory(ti + 1, tuple(boxes)))

    dpts = []
    next_id = 1
    for tgt in spec.targets:
        w, h = tgt.size
        for slot in range(spec.dpts_per_target):
            start = tgt.entry_frame
            first = True
            while start < tgt.exit_frame:
                life = _lifetime(rng, spec.dpt_lifetime)
                if first:  # stagger expiries across slots
                    life = int(rng.integers(2, life + 1))
                    first = False
                end = min(start + life - 1, tgt.exit_frame)
                offset = rng.uniform(-0.4, 0.4, 2) * (w, h)
                color = np.clip(np.round(np.asarray(tgt.color) + rng.normal(0, 4, 3)), 0, 255).astype(int)
                pts = []
                for f in range(start, end + 1):
                    p = tgt.center(f) + offset
                    if spec.dpt_noise > 0:
                        p = p + rng.normal(0.0, spec.dpt_noise, 2)
                    pts.append(DptPoint(f, (_r2(p[0]), _r2(p[1])), tuple(int(c) for c in color)))
                if len(pts) >= 2:
                    dpts.append(DptTracklet(next_id, tuple(pts)))
                    next_id += 1
                start = end + 1

    cw, ch = spec.canvas
    for f in range(1, spec.n_frames + 1):
        for _ in range(rng.poisson(spec.false_positive_rate)):
            w, h = spec.targets[int(rng.integers(len(spec.targets)))].size if spec.targets else (40.0, 100.0)
            x = rng.uniform(w / 2, cw - w / 2)
            y = rng.uniform(h / 2, ch - h / 2)
            detections.append(Detection(f, (_r2(x), _r2(y)), _r2(w), _r2(h),
                                        round(float(rng.uniform(0.05, 0.5)), 4)))

    for _ in range(spec.background_dpts):
        start = int(rng.integers(1, max(2, spec.n_frames)))
        end = min(start + _lifetime(rng, spec.dpt_lifetime) - 1, spec.n_frames)
        if end <= start:
            continue
        p = rng.uniform((0, 0), spec.canvas)
        color = tuple(int(c) for c in rng.integers(0, 256, 3))
        pts = tuple(DptPoint(f, (_r2(p[0]), _r2(p[1])), color) for f in range(start, end + 1))
        dpts.append(DptTracklet(next_id, pts))
        next_id += 1

    detections.sort(key=lambda d: d.frame)
    bundle = SequenceBundle(detections, dpts, spec.n_frames, cw, ch)
    return bundle, gt


def _two_colors():
    return (200, 60, 60), (60, 60, 200)


def preset(name: str, seed: int = 0) -> ScenarioSpec:
    """Named scenarios: ``crossing``, ``occlusion``, ``parallel``, ``crowd4``."""
    red, blue = _two_colors()
    common = dict(detection_noise=1.0, false_positive_rate=0.3, dpts_per_target=8,
                  dpt_lifetime=12.0, dpt_noise=0.3, seed=seed)
    if name == "occlusion":
        targets = [
            TargetSpec(1, 60, [(1, 80.0, 180.0), (60, 400.0, 180.0)], color=red),
            TargetSpec(1, 60, [(1, 560.0, 330.0), (60, 240.0, 330.0)], color=blue),
        ]
        return ScenarioSpec(targets, 60, occlusion_windows=[(0, 26, 33)], **common)
    if name == "crossing":
        # both centers pass (310, 240) at frame 31 and nowhere else coincide
        targets = [
            TargetSpec(1, 61, [(1, 100.0, 200.0), (61, 520.0, 280.0)], color=red),
            TargetSpec(1, 61, [(1, 520.0, 280.0), (61, 100.0, 200.0)], color=blue),
        ]
        return ScenarioSpec(targets, 61, occlusion_windows=[(1, 27, 34)], **common)
    if name == "parallel":
        targets = [
            TargetSpec(1, 60, [(1, 100.0, 220.0), (60, 400.0, 220.0)], color=red),
            TargetSpec(1, 60, [(1, 145.0, 220.0), (60, 445.0, 220.0)], color=red),
        ]
        return ScenarioSpec(targets, 60, **common)
    if name == "crowd4":
        targets = [
            TargetSpec(1, 60, [(1, 60.0, 110.0), (60, 420.0, 110.0)], color=red),
            TargetSpec(1, 60, [(1, 580.0, 250.0), (60, 260.0, 250.0)], color=blue),
            TargetSpec(1, 60, [(1, 150.0, 420.0), (60, 150.0, 180.0)], color=(60, 180, 60)),
            TargetSpec(1, 60, [(1, 380.0, 420.0), (30, 470.0, 360.0), (60, 560.0, 400.0)],
                       color=(200, 200, 60)),
        ]
        return ScenarioSpec(targets, 60, occlusion_windows=[(0, 30, 36)], **common)
    raise ValueError(f"unknown preset {name!r}")


PRESETS = ("crossing", "occlusion", "parallel", "crowd4")
