"""Window indicator, payload delivery, and CCR metric tests."""
import itertools

import numpy as np
import pytest

from risv2x.connectivity import (
    CCRReport,
    EpisodeStats,
    MetricError,
    PayloadTracker,
    WindowTracker,
    ccr_v2i,
    ccr_v2v,
    objective_value,
    update_window,
)


def brute_force_window(series, window):
    """All-of-last-N scan, the independent oracle for the tracker."""
    out = []
    for t in range(len(series)):
        if t + 1 < window:
            out.append(False)
        else:
            out.append(all(series[t - window + 1:t + 1]))
    return out


def test_window_example_series():
    tracker = WindowTracker(2)
    got = [update_window(tracker, o) for o in [1, 1, 0, 1, 1]]
    assert got == [False, True, False, False, True]


def test_window_saturated_all_pass():
    tracker = WindowTracker(3)
    psi = [update_window(tracker, True) for _ in range(10)]
    assert psi == [False, False] + [True] * 8


def test_window_n1_is_instantaneous():
    tracker = WindowTracker(1)
    series = [True, False, True, True, False]
    assert [update_window(tracker, o) for o in series] == series


def test_window_matches_brute_force_scan():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        length = int(rng.integers(1, 65))
        series = rng.random(length) < 0.6
        tracker = WindowTracker(n)
        got = [update_window(tracker, o) for o in series]
        assert got == brute_force_window(list(series), n)


def test_window_preview_does_not_mutate():
    tracker = WindowTracker(2, n_entities=3)
    tracker.update([True, True, False])
    before = tracker._run.copy()
    psi = tracker.preview([True, False, True])
    assert np.array_equal(tracker._run, before)
    assert list(psi) == [True, False, False]


def test_payload_single_slot_delivery():
    tracker = PayloadTracker(1, 8 * 1060.0)
    remaining = tracker.update([1.0], [8.48e6], 1e-3)
    assert remaining[0] == 0.0
    assert tracker.delivered[0]


def test_payload_never_scheduled():
    tracker = PayloadTracker(2, 500.0)
    for _ in range(100):
        tracker.update([0.0, 0.0], [1e9, 1e9], 1e-3)
    assert np.all(tracker.remaining == 500.0)
    assert not tracker.delivered.any()


def test_payload_exact_boundary_delivery():
    # 100 slots at exactly 8 bits each drain 800 bits with exact arithmetic
    tracker = PayloadTracker(1, 800.0)
    for t in range(100):
        remaining = tracker.update([1.0], [8000.0], 1e-3)
        if t < 99:
            assert not tracker.delivered[0]
    assert remaining[0] == 0.0
    assert tracker.delivered[0]


def test_payload_conservation():
    rng = np.random.default_rng(9)
    tracker = PayloadTracker(3, 1000.0)
    sent_total = np.zeros(3)
    for _ in range(40):
        before = tracker.remaining.copy()
        after = tracker.update(rng.integers(0, 2, 3), rng.uniform(0, 5e4, 3), 1e-3)
        sent_total += before - after
    assert np.array_equal(sent_total, 1000.0 - tracker.remaining)


def test_ccr_v2i_extremes_and_fixture():
    assert ccr_v2i(np.ones((3, 10)), 4) == 1.0
    assert ccr_v2i(np.zeros((3, 10)), 4) == 0.0
    rng = np.random.default_rng(2)
    psi = rng.random((5, 12)) < 0.5
    n = 3
    got = ccr_v2i(psi, n)
    want = sum(psi[v, t] for v in range(5) for t in range(n - 1, 12)) / (5 * (12 - n + 1))
    assert got == want


def test_ccr_v2i_window_longer_than_episode():
    with pytest.raises(MetricError):
        ccr_v2i(np.ones((2, 3)), 4)


def test_ccr_v2v_counting():
    assert ccr_v2v([True, True, True, False]) == 0.75
    assert ccr_v2v([True] * 7) == 1.0
    with pytest.raises(MetricError):
        ccr_v2v([])


def test_objective_all_ones_trace():
    t, n = 5, 2
    psi = np.ones((2, t))
    psi[:, : n - 1] = 0.0          # warm-up slots cannot hold a full window
    value = objective_value(psi, np.ones((1, t)) * psi[:1], np.array([True, True, True]), n)
    assert value == 3 * (t - n + 1) / t


def test_objective_zero_trace():
    assert objective_value(np.zeros((2, 5)), np.zeros((1, 5)), np.array([False]), 2) == 0.0


def test_objective_single_entity_hand_computed():
    # one non-target, one target, one pair over T=4, N=2
    psi_v = np.array([[0, 1, 1, 0]], dtype=float)
    psi_j = np.array([[0, 0, 1, 1]], dtype=float)
    delivered = np.array([True])
    # valid slots t=2..4: terms (1 + 1+0), (1 + 1+1), (1 + 0+1) -> sum 7 over T=4
    got = objective_value(psi_v, psi_j, delivered, 2)
    assert abs(got - 7 / 4) < 1e-12


def test_ccr_total_is_exact_sum():
    stats = EpisodeStats(ccr_v2i=0.123456, ccr_v2v=0.654321, objective=0.0, mean_reward=0.0)
    assert stats.ccr_total == stats.ccr_v2i + stats.ccr_v2v


def test_ccr_monotone_in_window_length():
    rng = np.random.default_rng(6)
    for _ in range(30):
        series = rng.random((4, 20)) < 0.7
        values = []
        for n in range(1, 6):
            trackers = WindowTracker(n, 4)
            psi = np.stack([trackers.update(series[:, t]) for t in range(20)], axis=1)
            values.append(ccr_v2i(psi, n))
        assert all(values[i + 1] <= values[i] for i in range(len(values) - 1))


def test_report_statistics():
    report = CCRReport()
    for v in (0.2, 0.4, 0.6):
        report.add(EpisodeStats(ccr_v2i=v, ccr_v2v=v / 2, objective=v, mean_reward=v))
    assert report.n_runs == 3
    assert abs(report.mean("ccr_v2i") - 0.4) < 1e-15
    assert abs(report.std("ccr_v2i") - np.std([0.2, 0.4, 0.6])) < 1e-15
