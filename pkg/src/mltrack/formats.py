"""Readers and writers for MOT-style CSV files, dense point tracklet CSV and JSON config.

MOT layout: ``frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`` with
1-based frames. DPT layout: header-free ``track_id,frame,x,y,r,g,b``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from collections import defaultdict
from pathlib import Path

from .model import (
    Detection,
    DptPoint,
    DptTracklet,
    Provenance,
    TrackerConfig,
    Trajectory,
    TrajectoryBox,
)

logger = logging.getLogger(__name__)


class FormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class Detections(list):
    """List of detections that also remembers how many rows were rejected."""

    rejected: int = 0


def fmt_num(value: float, places: int = 2) -> str:
    """Fixed-point with trailing zeros stripped: 10.00 -> '10', 0.50 -> '0.5'."""
    s = f"{value:.{places}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, [c.strip() for c in row]


def _parse_mot_row(lineno, row):
    if len(row) < 6:
        raise FormatError(f"line {lineno}: expected at least 6 fields, got {len(row)}")
    try:
        frame = int(float(row[0]))
        tid = int(float(row[1]))
        left, top, w, h = (float(v) for v in row[2:6])
        conf = float(row[6]) if len(row) > 6 else 1.0
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from None
    return frame, tid, left, top, w, h, conf


def read_detections(path) -> Detections:
    out = Detections()
    for lineno, row in _rows(path):
        frame, _, left, top, w, h, conf = _parse_mot_row(lineno, row)
        if w <= 0 or h <= 0:
            out.rejected += 1
            continue
        out.append(Detection(frame, (left + w / 2, top + h / 2), w, h, conf))
    if out.rejected:
        logger.warning("%s: rejected %d rows with nonpositive size", path, out.rejected)
    return out


def write_detections(path, detections) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for d in detections:
            x0, y0, _, _ = d.bbox
            fh.write(",".join([str(d.frame), "-1", fmt_num(x0), fmt_num(y0),
                               fmt_num(d.width), fmt_num(d.height),
                               fmt_num(d.confidence, 4), "-1", "-1", "-1"]) + "\n")


def read_dpts(path) -> list[DptTracklet]:
    groups = defaultdict(list)
    for lineno, row in _rows(path):
        if len(row) != 7:
            raise FormatError(f"line {lineno}: expected 7 fields, got {len(row)}")
        try:
            tid, frame = int(row[0]), int(row[1])
            x, y = float(row[2]), float(row[3])
            rgb = tuple(int(v) for v in row[4:7])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        if any(c < 0 or c > 255 for c in rgb):
            raise FormatError(f"line {lineno}: color channel outside [0, 255]")
        groups[tid].append(DptPoint(frame, (x, y), rgb))
    out = []
    for tid, pts in groups.items():
        pts.sort(key=lambda p: p.frame)
        for a, b in zip(pts, pts[1:]):
            if b.frame != a.frame + 1:
                raise FormatError(f"gap in tracklet {tid}")
        if len(pts) < 2:
            logger.warning("dropping tracklet %d of length 1", tid)
            continue
        out.append(DptTracklet(tid, tuple(pts)))
    return out


def write_dpts(path, tracklets) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for t in tracklets:
            for p in t.points:
                r, g, b = (int(round(c)) for c in p.appearance)
                fh.write(f"{t.id},{p.frame},{fmt_num(p.position[0])},{fmt_num(p.position[1])},{r},{g},{b}\n")


def read_trajectories(path) -> list[Trajectory]:
    """Read ground truth or results; every row becomes a detected box."""
    boxes = defaultdict(dict)
    for lineno, row in _rows(path):
        frame, tid, left, top, w, h, _ = _parse_mot_row(lineno, row)
        if frame in boxes[tid]:
            raise FormatError(f"line {lineno}: duplicate (frame, id) = ({frame}, {tid})")
        boxes[tid][frame] = TrajectoryBox(frame, (left + w / 2, top + h / 2), w, h)
    return [Trajectory(tid, tuple(b[f] for f in sorted(b))) for tid, b in sorted(boxes.items())]


def write_results(path, trajectories) -> None:
    ids = [t.id for t in trajectories]
    if len(set(ids)) != len(ids):
        raise ValueError("trajectory ids must be unique")
    rows = []
    for t in trajectories:
        for b in t.boxes:
            x0, y0, _, _ = b.bbox
            conf = "1" if b.provenance is Provenance.DETECTED else "0.5"
            rows.append((b.frame, t.id, x0, y0, b.width, b.height, conf))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for frame, tid, x0, y0, w, h, conf in rows:
            fh.write(f"{frame},{tid},{fmt_num(x0)},{fmt_num(y0)},{fmt_num(w)},{fmt_num(h)},{conf},-1,-1,-1\n")


def config_from_dict(data: dict) -> TrackerConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    types = TrackerConfig.field_types()
    kwargs = {}
    for key, value in data.items():
        if key not in types:
            raise ConfigError(f"unknown key {key!r}")
        want = types[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected {want.__name__}, got {type(value).__name__}")
        if want is int:
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(f"{key}: expected int, got {value!r}")
            value = int(value)
        else:
            value = float(value)
        kwargs[key] = value
    try:
        return TrackerConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def read_config(path) -> TrackerConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)


def config_to_dict(config: TrackerConfig) -> dict:
    return dataclasses.asdict(config)
