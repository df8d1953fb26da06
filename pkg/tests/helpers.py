"""Small builders for hand-made tracks used across the tests."""

from mltrack.model import Category, Detection, DptPoint, DptTracklet, FeatureTrack

GREY = (100, 100, 100)


def det(frame, x, y, w=10.0, h=10.0, conf=0.9):
    return Detection(frame, (float(x), float(y)), float(w), float(h), conf)


def tracklet(tid, start, positions, color=GREY):
    return DptTracklet(tid, tuple(DptPoint(start + k, (float(x), float(y)), color)
                                  for k, (x, y) in enumerate(positions)))


def dpt_track(*members, tid=0):
    return FeatureTrack(Category.LOW, tuple(members), tid)


def det_track(*dets, tid=0):
    return FeatureTrack(Category.MID, tuple(dets), tid)


def moving(tid, start, n, x0, y0, vx, vy, color=GREY):
    """Tracklet of n points with constant velocity."""
    return tracklet(tid, start, [(x0 + vx * k, y0 + vy * k) for k in range(n)], color)


def random_features(rng, category, n):
    """n random features of one category over a short frame range, linkable often enough."""
    from mltrack.model import Category as C
    out = []
    if C(category) is C.MID:
        for _ in range(n):
            out.append(det(int(rng.integers(1, 8)), rng.uniform(0, 60), rng.uniform(0, 60),
                           conf=round(float(rng.uniform(-1, 2)), 3)))
        return out
    for k in range(n):
        start = int(rng.integers(1, 20))
        length = int(rng.integers(2, 5))
        x, y = rng.uniform(0, 60, 2)
        v = rng.normal(0, 3, 2)
        color = tuple(int(c) for c in rng.integers(0, 256, 3))
        out.append(moving(k + 1, start, length, x, y, v[0], v[1], color))
    return out


def random_scene(rng, n_det=3, n_dpt=6, frames=12):
    """Random detection tracks plus DPT tracks, some riding inside the boxes."""
    from mltrack.model import Category as C, FeatureTrack as FT
    det_tracks = []
    for k in range(n_det):
        start = int(rng.integers(1, frames // 2))
        end = int(rng.integers(start, frames + 1))
        x, y = rng.uniform(20, 200, 2)
        v = rng.normal(0, 2, 2)
        w, h = rng.uniform(10, 40), rng.uniform(20, 80)
        dets = [det(f, x + v[0] * (f - start), y + v[1] * (f - start), w, h,
                    round(float(rng.uniform(0, 1)), 3))
                for f in range(start, end + 1) if rng.random() < 0.85]
        if dets:
            det_tracks.append(FT(C.MID, tuple(dets), k))
    dpt_tracks = []
    for k in range(n_dpt):
        members, t = [], int(rng.integers(1, frames))
        while t < frames and len(members) < 3:
            n = int(rng.integers(2, 6))
            if det_tracks and rng.random() < 0.7:
                host = det_tracks[int(rng.integers(len(det_tracks)))].members[0]
                x0, y0 = host.center[0] + rng.uniform(-5, 5), host.center[1] + rng.uniform(-10, 10)
            else:
                x0, y0 = rng.uniform(0, 220, 2)
            v = rng.normal(0, 2, 2) * (rng.random() < 0.9)
            color = tuple(int(c) for c in rng.integers(0, 256, 3))
            members.append(moving(100 * k + len(members), t, n, x0, y0, v[0], v[1], color))
            t += n + int(rng.integers(0, 3))
        if members:
            dpt_tracks.append(FT(C.LOW, tuple(members), k))
    return dpt_tracks + det_tracks


def block_affinity(rng, sizes, lo_in=0.8, hi_cross=0.2):
    """Symmetric W with within-block entries in [lo_in, 1] and cross-block entries in [0, hi_cross]."""
    import numpy as np
    labels = np.repeat(np.arange(len(sizes)), sizes)
    perm = rng.permutation(len(labels))
    labels = labels[perm]
    n = len(labels)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            same = labels[i] == labels[j]
            W[i, j] = W[j, i] = rng.uniform(lo_in, 1.0) if same else rng.uniform(0.0, hi_cross)
    np.fill_diagonal(W, 1.0)
    return W, labels


def random_mot_scene(rng):
    """Ground truth plus a noisy hypothesis set with continuous (tie-free) box positions."""
    from mltrack.model import Trajectory, TrajectoryBox

    def make(n, jitter):
        out = []
        for k in range(n):
            a = int(rng.integers(1, 10))
            b = int(rng.integers(a, 15))
            x, y = rng.uniform(0, 100, 2)
            frames = [f for f in range(a, b + 1) if rng.random() < 0.9] or [a]
            out.append(Trajectory(k + 1, tuple(
                TrajectoryBox(f, (x + rng.normal(0, jitter), y + rng.normal(0, jitter)), 20, 30)
                for f in frames)))
        return out

    gt = make(int(rng.integers(1, 5)), 0.0)
    hyp = [Trajectory(t.id, tuple(TrajectoryBox(b.frame, (b.center[0] + rng.normal(0, 3), b.center[1]),
                                                b.width, b.height) for b in t.boxes))
           for t in gt if rng.random() < 0.8] + make(int(rng.integers(0, 3)), 2.0)
    hyp = [Trajectory(k + 1, t.boxes) for k, t in enumerate(hyp)]
    return gt, hyp


def relabeled(trajs, ids):
    from mltrack.model import Trajectory
    return [Trajectory(int(i), t.boxes) for i, t in zip(ids, trajs)]
