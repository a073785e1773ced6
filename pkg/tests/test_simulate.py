import numpy as np
import pytest

from polyharm import (
    SimConfig,
    compare_to_analytic,
    green,
    simulate_hitting,
)


def test_single_trajectory_deterministic(p4):
    cfg = SimConfig(trials=1, seed=1234, max_steps=100, start="a")
    a = simulate_hitting(p4, cfg)
    b = simulate_hitting(p4, cfg)
    assert np.array_equal(a.counts, b.counts)
    assert np.array_equal(a.first_visit, b.first_visit)
    assert np.array_equal(a.occupancy, b.occupancy)
    assert a.counts.sum() + a.censored == 1


def test_deterministic_across_worker_counts(p4):
    cfg = SimConfig(trials=5000, seed=99, max_steps=1000, start="a")
    ref = simulate_hitting(p4, cfg, shards=1)
    for shards in (2, 3, 8):
        got = simulate_hitting(p4, cfg, shards=shards)
        assert np.array_equal(ref.counts, got.counts)
        assert np.array_equal(ref.first_visit, got.first_visit)
        assert np.array_equal(ref.occupancy, got.occupancy)
        assert ref.censored == got.censored


def test_counts_partition_trials(p4):
    cfg = SimConfig(trials=2000, seed=4, max_steps=50, start="b")
    est = simulate_hitting(p4, cfg)
    assert est.counts.sum() + est.censored == cfg.trials
    # empirical distribution sums to one including the censored part
    total = est.hit_fraction.sum() + est.censored / cfg.trials
    assert total == pytest.approx(1.0, abs=0)


def test_hitting_frequency_three_sigma(p4):
    cfg = SimConfig(trials=10**6, seed=2024, max_steps=10_000, start="a")
    est = simulate_hitting(p4, cfg)
    p_hat = est.count_of("w1") / cfg.trials
    sigma = np.sqrt((2 / 3) * (1 / 3) / cfg.trials)
    assert abs(p_hat - 2 / 3) <= 3 * sigma
    assert est.censored == 0


def test_first_visit_times_odd_from_a(p4):
    cfg = SimConfig(trials=200_000, seed=5, max_steps=1000, start="a")
    est = simulate_hitting(p4, cfg)
    j = p4.boundary_ids.index("w1")
    hist = est.first_visit[:, j]
    even = hist[2::2].sum()
    assert even == 0  # parity: a sits at odd distance from w1
    # one-step mass is about 1/2
    p1 = hist[1] / cfg.trials
    assert abs(p1 - 0.5) <= 3 * np.sqrt(0.25 / cfg.trials)


def test_occupancy_estimates_step_probabilities(p4):
    cfg = SimConfig(trials=100_000, seed=6, max_steps=1000, start="a")
    est = simulate_hitting(p4, cfg)
    # time 0: everything at a
    assert est.occupancy[0, p4.vertex_index("a")] == cfg.trials
    # time 1: P(a->w1) = 1/2, P(a->b) = 1/2
    occ1 = est.occupancy[1] / cfg.trials
    assert occ1[p4.vertex_index("w1")] == pytest.approx(0.5, abs=0.01)
    assert occ1[p4.vertex_index("b")] == pytest.approx(0.5, abs=0.01)
    # rows always sum to the number of trials
    assert np.all(est.occupancy.sum(axis=1) == cfg.trials)


def test_censoring_forced():
    from polyharm import build_chain

    # sticky interior: absorption is slow, so a tiny cap censors a lot
    trans = [
        [0.99, 0.01, 0.0],
        [0.0, 0.99, 0.01],
        [0.0, 0.0, 1.0],
    ]
    c = build_chain(["x", "y", "w"], ["x", "y"], ["w"], trans)
    cfg = SimConfig(trials=500, seed=7, max_steps=3, start="x")
    est = simulate_hitting(c, cfg)
    assert est.censored > 0
    assert est.censor_flagged


def test_censoring_rare_with_generous_cap(p4):
    # max_steps = 100/(1-rho) with rho = 1/2
    cfg = SimConfig(trials=100_000, seed=8, max_steps=200, start="a")
    est = simulate_hitting(p4, cfg)
    assert est.censored / cfg.trials <= 1e-3


# ------------------------------------------------------------ comparison

def test_z_scores_within_budget(p4):
    cfg = SimConfig(trials=10**6, seed=2024, max_steps=10_000, start="a")
    est = simulate_hitting(p4, cfg)
    rep = compare_to_analytic(est, green(p4, 1.0))
    assert rep.mode == "hitting"
    assert rep.max_abs_z <= 5.0
    assert not rep.underpowered


def test_series_check_lambda2(p4):
    cfg = SimConfig(trials=400_000, seed=11, max_steps=10_000, start="a")
    est = simulate_hitting(p4, cfg)
    rep = compare_to_analytic(est, green(p4, 2.0))
    assert rep.mode == "series"
    chk = rep.series["w1"]
    assert chk.analytic == pytest.approx(4 / 15, abs=1e-12)
    assert chk.within
    assert rep.series["w2"].within


def test_underpowered_flag(p4):
    cfg = SimConfig(trials=50, seed=12, max_steps=100, start="a")
    est = simulate_hitting(p4, cfg)
    rep = compare_to_analytic(est, green(p4, 1.0))
    assert rep.underpowered


def test_start_must_be_interior(p4):
    with pytest.raises(ValueError):
        simulate_hitting(p4, SimConfig(trials=10, seed=1, max_steps=10, start="w1"))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(trials=0, seed=1, max_steps=10, start="a")
    with pytest.raises(ValueError):
        SimConfig(trials=1, seed=1, max_steps=0, start="a")
    with pytest.raises(ValueError):
        SimConfig(trials=1, seed=-1, max_steps=10, start="a")


def test_compare_rejects_mismatched_chain(p4, path5):
    cfg = SimConfig(trials=100, seed=1, max_steps=50, start="a")
    est = simulate_hitting(p4, cfg)
    with pytest.raises(ValueError):
        compare_to_analytic(est, green(path5, 1.0))
