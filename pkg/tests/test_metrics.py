import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import det, det_track, dpt_track, moving, random_mot_scene, relabeled
from mltrack.metrics import clear_mot, track_stats
from mltrack.model import Trajectory, TrajectoryBox


def traj(tid, frames, x=0.0, y=0.0, w=10.0, h=10.0):
    return Trajectory(tid, tuple(TrajectoryBox(f, (x, y), w, h) for f in frames))


def test_perfect():
    gt = [traj(1, range(1, 11)), traj(2, range(1, 11), 100)]
    r = clear_mot(gt, gt)
    assert (r.TA, r.TP, r.IDsw, r.MT, r.ML, r.FP, r.FN) == (1.0, 1.0, 0, 1.0, 0.0, 0, 0)


def test_empty_hypothesis():
    r = clear_mot([traj(1, range(1, 11))], [])
    assert (r.TA, r.Recall, r.ML, r.FP, r.IDsw) == (0.0, 0.0, 1.0, 0, 0)


def test_id_split_mid_sequence():
    r = clear_mot([traj(1, range(1, 11))], [traj(7, range(1, 6)), traj(8, range(6, 11))])
    assert (r.FN, r.FP, r.IDsw) == (0, 0, 1)
    assert r.TA == pytest.approx(1 - 1 / 10)


def test_switch_counted_after_gap():
    # matched by A, missed, then matched by B: one switch and one fragmentation
    r = clear_mot([traj(1, range(1, 11))], [traj(1, range(1, 4)), traj(2, range(6, 11))])
    assert (r.IDsw, r.Frag, r.FN) == (1, 1, 2)


def test_no_switch_when_same_id_resumes():
    r = clear_mot([traj(1, range(1, 11))], [traj(1, [1, 2, 3, 6, 7, 8, 9, 10])])
    assert (r.IDsw, r.Frag) == (0, 1)


def test_extra_hyp_frames_are_fp():
    r = clear_mot([traj(1, range(1, 6))], [traj(1, range(1, 9))])
    assert (r.FP, r.FN, r.num_gt) == (3, 0, 5)
    assert r.TA == pytest.approx(1 - 3 / 5)


def test_iou_threshold():
    gt = [traj(1, [1])]
    hyp = [traj(1, [1], x=4.0)]  # IoU = 60 / 140
    assert clear_mot(gt, hyp, 0.5).num_matches == 0
    assert clear_mot(gt, hyp, 0.4).num_matches == 1


def test_carry_over_beats_better_new_match():
    # hyp 1 keeps its track even when hyp 2 overlaps gt better in frame 2
    gt = [traj(1, [1, 2])]
    hyp = [Trajectory(1, (TrajectoryBox(1, (0, 0), 10, 10), TrajectoryBox(2, (2, 0), 10, 10))),
           traj(2, [2])]
    r = clear_mot(gt, hyp)
    assert (r.IDsw, r.FP) == (0, 1)


def test_mostly_tracked_thresholds():
    gt = [traj(1, range(1, 11)), traj(2, range(1, 11), 100), traj(3, range(1, 11), 200)]
    hyp = [traj(1, range(1, 10)), traj(2, range(1, 6), 100), traj(3, [1], 200)]
    r = clear_mot(gt, hyp)
    assert (r.MT, r.PT, r.ML) == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        clear_mot([traj(1, [1]), traj(1, [2])], [])


def test_report_rendering():
    r = clear_mot([traj(1, range(1, 4))], [traj(1, range(1, 4))])
    assert "TA" in r.table().splitlines()[0] and "1.000" in r.table()
    assert '"IDsw": 0' in r.to_json()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_relabeling_invariance(seed):
    rng = np.random.default_rng(seed)
    gt, hyp = random_mot_scene(rng)
    base = clear_mot(gt, hyp)
    again = clear_mot(relabeled(gt, rng.permutation(len(gt)) * 3 + 50),
                      relabeled(hyp, rng.permutation(len(hyp)) * 7 + 100))
    assert again == base


def test_stats_full_length():
    s = track_stats([det_track(*[det(f, 0, 0) for f in range(1, 11)])], 10)
    assert s.avg_length_pct == 100.0


def test_stats_identical_spans():
    a = dpt_track(moving(1, 1, 5, 0, 0, 1, 0))
    b = dpt_track(moving(2, 1, 5, 9, 0, 1, 0))
    assert track_stats([a, b], 20).mean_overlap_frames == 5


def test_stats_disjoint():
    a = dpt_track(moving(1, 1, 3, 0, 0, 1, 0))
    b = dpt_track(moving(2, 8, 3, 0, 0, 1, 0))
    s = track_stats([a, b], 20)
    assert s.mean_overlap_frames == 0 and s.avg_length_pct == 15.0


def test_stats_idsw_from_gt_labels():
    gt = [traj(1, range(1, 5), 0, 0, 20, 20), traj(2, range(1, 5), 100, 0, 20, 20)]
    hop = dpt_track(moving(1, 1, 2, 0, 0, 0, 0), moving(2, 3, 2, 100, 0, 0, 0))
    assert track_stats([hop], 4, gt).idsw_per_traj == 1.0
    assert track_stats([hop], 4).idsw_per_traj is None
