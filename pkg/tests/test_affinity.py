import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mltrack.affinity as aff
from helpers import det, det_track, dpt_track, moving, random_scene, tracklet
from mltrack.affinity import (
    AffinityContext,
    angle_affinity,
    assemble,
    dd_overlap,
    gaussian_ratio,
    pair_affinity,
    to_cost,
    velocity_affinity,
    w_angle,
    w_dd,
    w_dd_detections,
    w_det,
    w_dist,
    w_pd,
    w_pp,
    w_speed,
    w_velocity,
)
from mltrack.model import TrackerConfig

CFG = TrackerConfig()


def _box_track(frames, x, y, w, h, tid=0):
    return det_track(*[det(f, x, y, w, h) for f in frames], tid=tid)


# --- W_Det ---------------------------------------------------------------

def test_w_det_same_box():
    box = _box_track([1, 2, 3], 50, 50, 40, 40)
    a = dpt_track(tracklet(1, 1, [(45, 45)] * 3))
    b = dpt_track(tracklet(2, 1, [(55, 60)] * 3))
    ctx = AffinityContext([a, b, box], CFG)
    assert w_det(a, b, ctx) == 1.0


def test_w_det_no_box():
    box = _box_track([1, 2], 50, 50, 10, 10)
    a = dpt_track(tracklet(1, 1, [(200, 200)] * 2))
    b = dpt_track(tracklet(2, 1, [(300, 300)] * 2))
    assert w_det(a, b, AffinityContext([a, b, box], CFG)) == 0.5


def test_w_det_partial_overlap():
    # boxes [0,10]x[0,10] and [5,15]x[0,10]: 50 / (200 - 50)
    A = _box_track([1, 2], 5, 5, 10, 10, tid=0)
    B = _box_track([1, 2], 10, 5, 10, 10, tid=1)
    a = dpt_track(tracklet(1, 1, [(1, 5)] * 2))
    b = dpt_track(tracklet(2, 1, [(14, 5)] * 2))
    assert w_det(a, b, AffinityContext([a, b, A, B], CFG)) == pytest.approx(50 / 150, abs=1e-12)


def test_w_det_mixed_frames():
    # frame 1 inside the shared box (IoU 1), frame 2 outside everything (0.5)
    box = _box_track([1], 50, 50, 40, 40)
    a = dpt_track(tracklet(1, 1, [(45, 45), (500, 500)]))
    b = dpt_track(tracklet(2, 1, [(55, 55), (600, 600)]))
    assert w_det(a, b, AffinityContext([a, b, box], CFG)) == pytest.approx(0.75)


# --- W_Dist --------------------------------------------------------------

def test_w_dist_coincident():
    box = _box_track([1, 2], 50, 50, 100, 100)
    a = dpt_track(tracklet(1, 1, [(40, 40)] * 2))
    b = dpt_track(tracklet(2, 1, [(40, 40)] * 2))
    assert w_dist(a, b, AffinityContext([a, b, box], CFG)) == 1.0


def test_w_dist_gaussian_ratio():
    # vertical offset 45 px on a 100 px box: ratio 0.45, horizontal 0
    box = _box_track([1, 2], 50, 50, 100, 100)
    a = dpt_track(tracklet(1, 1, [(50, 20)] * 2))
    b = dpt_track(tracklet(2, 1, [(50, 65)] * 2))
    dh = math.exp(-(0.45 - 0.05) ** 2 / (2 * 0.4 ** 2))
    assert dh == pytest.approx(math.exp(-0.5))
    got = w_dist(a, b, AffinityContext([a, b, box], CFG))
    assert got == pytest.approx(0.5 * (dh + 1.0), abs=1e-6)
    assert got == pytest.approx(0.8033, abs=1e-4)


def test_w_dist_gate():
    box = _box_track([1, 2], 50, 50, 100, 100)
    a = dpt_track(tracklet(1, 1, [(50, 10)] * 2))
    b = dpt_track(tracklet(2, 1, [(50, 77.07)] * 2))
    assert gaussian_ratio(0.6707, 0.05, 0.4) == pytest.approx(0.3, abs=1e-3)
    assert w_dist(a, b, AffinityContext([a, b, box], CFG)) == 0.0


def test_w_dist_without_scale():
    a = dpt_track(tracklet(1, 1, [(0, 0)] * 2))
    b = dpt_track(tracklet(2, 1, [(5, 5)] * 2))
    assert w_dist(a, b, AffinityContext([a, b], CFG)) == 0.5


def test_w_dist_needs_common_frames():
    a = dpt_track(tracklet(1, 1, [(0, 0)] * 2))
    b = dpt_track(tracklet(2, 5, [(0, 0)] * 2))
    with pytest.raises(ValueError):
        w_dist(a, b, AffinityContext([a, b], CFG))


# --- velocities ----------------------------------------------------------

def test_w_speed_identical():
    assert w_speed(dpt_track(moving(1, 1, 5, 0, 0, 3, 1)), dpt_track(moving(2, 1, 5, 9, 9, 3, 1))) == 1.0


def test_w_speed_ratio():
    assert w_speed(dpt_track(moving(1, 1, 5, 0, 0, 2, 0)), dpt_track(moving(2, 1, 5, 0, 0, 0, 4))) == 0.5


def test_w_speed_static():
    assert w_speed(dpt_track(moving(1, 1, 4, 0, 0, 0, 0)), dpt_track(moving(2, 1, 4, 5, 5, 0, 0))) == 1.0


def test_w_angle_parallel():
    assert w_angle(dpt_track(moving(1, 1, 4, 0, 0, 1, 1)), dpt_track(moving(2, 1, 4, 0, 0, 2, 2)), CFG) == 1.0


def test_w_angle_fifty_degrees():
    r = math.radians(50)
    a = dpt_track(moving(1, 1, 4, 0, 0, 3, 0))
    b = dpt_track(moving(2, 1, 4, 0, 0, 3 * math.cos(r), 3 * math.sin(r)))
    assert w_angle(a, b, CFG) == pytest.approx(math.exp(-0.5), abs=1e-6)


def test_w_angle_antiparallel():
    a = dpt_track(moving(1, 1, 4, 0, 0, 1, 0))
    b = dpt_track(moving(2, 1, 4, 0, 0, -1, 0))
    want = math.exp(-180 ** 2 / (2 * 50 ** 2))
    assert want == pytest.approx(math.exp(-6.48))
    assert w_angle(a, b, CFG) == pytest.approx(want, abs=1e-6)
    assert want == pytest.approx(0.00153, abs=1e-5)


def test_angle_affinity_sigma():
    assert angle_affinity(50.0, 50.0) == pytest.approx(math.exp(-0.5), abs=1e-6)


@pytest.mark.parametrize("s, a, want", [(1, 1, 1.0), (0, 0, 0.5), (0.5, math.exp(-0.5), 0.5 + 0.5 * 0.5 * (0.5 + math.exp(-0.5)))])
def test_velocity_affinity(s, a, want):
    assert velocity_affinity(s, a) == pytest.approx(want, abs=1e-12)


def test_velocity_affinity_example_value():
    assert velocity_affinity(0.5, 0.6065) == pytest.approx(0.7766, abs=1e-4)


def test_w_velocity_from_tracks():
    r = math.radians(50)
    a = dpt_track(moving(1, 1, 4, 0, 0, 2, 0))
    b = dpt_track(moving(2, 1, 4, 0, 0, 4 * math.cos(r), 4 * math.sin(r)))
    want = 0.5 + 0.5 * 0.5 * (0.5 + math.exp(-0.5))
    assert w_velocity(a, b, CFG) == pytest.approx(want, abs=1e-6)


def test_velocity_terms_ignore_link_jumps():
    # the jump between the two members is not a velocity
    a = dpt_track(moving(1, 1, 3, 0, 0, 1, 0), moving(2, 4, 3, 90, 0, 1, 0))
    b = dpt_track(moving(3, 1, 6, 0, 9, 1, 0))
    assert w_speed(a, b) == 1.0 and w_angle(a, b, CFG) == 1.0


# --- W_PP / W_PD / W_DD --------------------------------------------------

def test_w_pp_all_one():
    box = det_track(*[det(f, 50 + 3 * f, 50, 40, 40) for f in range(1, 4)])
    a = dpt_track(moving(1, 1, 3, 53, 50, 3, 0))
    b = dpt_track(moving(2, 1, 3, 53, 50, 3, 0))
    assert w_pp(a, b, AffinityContext([a, b, box], CFG)) == 1.0


def test_w_pp_bridged():
    box = _box_track(range(1, 8), 50, 50, 40, 40)
    a = dpt_track(tracklet(1, 1, [(50, 50)] * 2))
    b = dpt_track(tracklet(2, 6, [(52, 50)] * 2))
    assert w_pp(a, b, AffinityContext([a, b, box], CFG)) == 1.0


def test_w_pp_unbridged():
    A = _box_track([1, 2], 50, 50, 40, 40, tid=0)
    B = _box_track([6, 7], 50, 50, 40, 40, tid=1)
    a = dpt_track(tracklet(1, 1, [(50, 50)] * 2))
    b = dpt_track(tracklet(2, 6, [(52, 50)] * 2))
    assert w_pp(a, b, AffinityContext([a, b, A, B], CFG)) == 0.0


def test_w_pd_concentric():
    d = det_track(*[det(f, 10 + 2 * f, 50, 20, 40) for f in range(1, 5)])
    p = dpt_track(moving(1, 1, 4, 12, 50, 2, 0))
    assert w_pd(p, d, AffinityContext([p, d], CFG)) == pytest.approx(1.0)


def test_w_pd_no_common_frames():
    d = _box_track([1, 2], 50, 50, 40, 40)
    p = dpt_track(tracklet(1, 5, [(50, 50)] * 2))
    assert w_pd(p, d, AffinityContext([p, d], CFG)) == 0.5


def test_w_pd_average(monkeypatch):
    d = _box_track([1, 2, 3, 4], 50, 50, 20, 20)
    p = dpt_track(tracklet(1, 1, [(50, 50), (52, 50), (200, 50), (202, 50)]))
    monkeypatch.setattr(aff, "_link_terms", lambda *a: 0.8)
    assert w_pd(p, d, AffinityContext([p, d], CFG)) == pytest.approx(0.5 * (0.5 + 0.8))


def test_w_dd_same_track_full_sharing():
    d = _box_track([1, 2], 50, 50, 40, 40)
    p = dpt_track(moving(1, 1, 2, 50, 50, 1, 0))
    assert w_dd(d, d, AffinityContext([p, d], CFG)) == 1.0


def test_w_dd_different_tracks():
    A = _box_track([1, 2], 50, 50, 40, 40, tid=0)
    B = _box_track([3, 4], 52, 50, 40, 40, tid=1)
    p = dpt_track(moving(1, 1, 4, 50, 50, 0.5, 0))
    assert w_dd(A, B, AffinityContext([p, A, B], CFG)) == 0.0


def test_w_dd_partial_sharing():
    d1, d2 = det(1, 50, 50, 40, 40), det(2, 50, 50, 40, 40)
    track = det_track(d1, d2)
    t1 = dpt_track(tracklet(1, 1, [(50, 50), (500, 500)]), tid=1)
    t2 = dpt_track(tracklet(2, 1, [(52, 50), (52, 50)]), tid=2)
    t3 = dpt_track(tracklet(3, 2, [(48, 50), (48, 50)]), tid=3)
    ctx = AffinityContext([t1, t2, t3, track], CFG)
    assert ctx.dpts_in(d1) == {0, 1} and ctx.dpts_in(d2) == {1, 2}
    assert w_dd_detections(d1, d2, True, ctx) == pytest.approx(0.5 * (1 / 2 + 1 / 2))


def test_dd_overlap_cases():
    assert dd_overlap(frozenset({1, 2}), frozenset({1, 2})) == 1.0
    assert dd_overlap(frozenset({1}), frozenset({2})) == 0.0
    assert dd_overlap(frozenset(), frozenset({2})) == 0.5


# --- assembly ------------------------------------------------------------

def test_assemble_pair_is_w_pd():
    d = det_track(*[det(f, 10 + 2 * f, 50, 20, 40) for f in range(1, 5)])
    p = dpt_track(moving(1, 1, 4, 12, 50, 2, 0))
    A = assemble([d, p], CFG)
    assert A.W.shape == (2, 2) and A.n_dpt == 1 and A.n_det == 1
    assert A.tracks[0] is p  # DPT tracks come first
    assert A.W[0, 1] == A.W[1, 0] == pytest.approx(w_pd(p, d, AffinityContext([p, d], CFG)))


def test_assemble_empty():
    A = assemble([], CFG)
    assert A.W.shape == (0, 0)


def test_assemble_floor_snaps_but_keeps_neutral():
    A = _box_track([1, 2], 50, 50, 40, 40, tid=0)
    B = _box_track([1, 2], 150, 50, 40, 40, tid=1)
    W = assemble([A, B], CFG).W
    assert W[0, 1] == 0.0 and np.all(np.diag(W) == 1.0)


@pytest.mark.parametrize("w, q", [(1.0, -1.0), (0.5, 0.0), (0.0, 1.0)])
def test_to_cost(w, q):
    assert to_cost(np.array([[w]]))[0, 0] == q


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_assembled_matrix_range_and_symmetry(seed):
    tracks = random_scene(np.random.default_rng(seed))
    W = assemble(tracks, CFG).W
    assert np.all(W >= 0) and np.all(W <= 1)
    assert np.array_equal(W, W.T)
    off = W[~np.eye(len(W), dtype=bool)]
    assert not np.any((off > 0) & (off < CFG.affinity_floor))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_pair_affinity_symmetric(seed):
    rng = np.random.default_rng(seed)
    tracks = random_scene(rng)
    ctx = AffinityContext(tracks, CFG)
    for a in tracks:
        for b in tracks:
            if a is not b:
                v = pair_affinity(a, b, ctx)
                assert 0.0 <= v <= 1.0
                assert v == pytest.approx(pair_affinity(b, a, ctx), abs=1e-12)
