"""Multi-level multi-target tracking: detections and dense point tracklets linked by
min-cost flow, then grouped per target by spectral clustering."""

from .model import (
    Category,
    Detection,
    DptPoint,
    DptTracklet,
    FeatureTrack,
    Provenance,
    SequenceBundle,
    TrackerConfig,
    Trajectory,
    TrajectoryBox,
)
from .pipeline import run, run_lp2d

__all__ = [
    "Category", "Detection", "DptPoint", "DptTracklet", "FeatureTrack", "Provenance",
    "SequenceBundle", "TrackerConfig", "Trajectory", "TrajectoryBox", "run", "run_lp2d",
]
__version__ = "0.1.0"
