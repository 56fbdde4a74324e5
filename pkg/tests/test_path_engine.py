import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from bmlab.errors import DomainError
from bmlab.path_engine import (RefinementRequest, bridge_fill, exit_samples, refine,
                               refine_uniform, simulate_to_exit)
from bmlab.seeding import derive_seed, make_rng


def random_walk_exit_mean(R, h, n, seed):
    """Independent oracle: nearest-neighbour walk on hZ^2, one step per h^2/2 time units."""
    rng = np.random.default_rng(seed)
    pos = np.zeros((n, 2))
    alive = np.ones(n, dtype=bool)
    steps = np.zeros(n)
    moves = np.array([[h, 0], [-h, 0], [0, h], [0, -h]])
    while alive.any():
        idx = np.flatnonzero(alive)
        pos[idx] += moves[rng.integers(0, 4, idx.size)]
        steps[idx] += 1
        alive[idx] = np.hypot(pos[idx, 0], pos[idx, 1]) < R
    return float(np.mean(steps) * h * h / 2)


def test_random_walk_oracle_agrees_with_closed_form():
    # the walk overshoots by O(h); at h = 0.02 that is well under 3%
    m = random_walk_exit_mean(1.0, 0.02, 4000, 1)
    assert m == pytest.approx(0.5, rel=0.03)


def test_exit_invariants():
    p = simulate_to_exit((0.2, -0.1), 1.0, 1e-4, 11)
    assert p.exit is not None
    assert abs(math.hypot(*p.exit[1]) - 1.0) <= 1e-9
    assert np.all(np.hypot(p.points[:, 0], p.points[:, 1]) < 1.0)
    assert np.all(np.diff(p.times) > 0)
    assert tuple(p.points[0]) == (0.2, -0.1)
    assert p.exit[0] > p.times[-1]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), r=st.floats(0, 0.9), ang=st.floats(0, 2 * math.pi),
       R=st.floats(0.5, 3.0))
def test_exit_invariants_property(seed, r, ang, R):
    z = (r * R * math.cos(ang), r * R * math.sin(ang))
    p = simulate_to_exit(z, R, R * R / 400, seed)
    assert abs(math.hypot(*p.exit[1]) - R) <= 1e-9 * R
    assert np.all(np.hypot(p.points[:, 0], p.points[:, 1]) < R)
    assert np.all(np.diff(p.times) > 0)


def test_reproducible_bit_identical():
    a = simulate_to_exit((0.1, 0.1), 1.0, 1e-4, 99)
    b = simulate_to_exit((0.1, 0.1), 1.0, 1e-4, 99)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.times, b.times)
    assert a.exit == b.exit


def test_thread_count_does_not_change_results():
    t1, p1 = exit_samples((0, 0), 1.0, 1e-3 / 2, 40, 5, threads=1)
    t4, p4 = exit_samples((0, 0), 1.0, 1e-3 / 2, 40, 5, threads=4)
    assert np.array_equal(t1, t4) and np.array_equal(p1, p4)


def test_replica_independent_of_replica_count():
    t10, _ = exit_samples((0, 0), 1.0, 1e-3, 10, 5)
    t3, _ = exit_samples((0, 0), 1.0, 1e-3, 3, 5)
    assert np.array_equal(t10[:3], t3)


def test_truncated_at_zero_is_single_point():
    p = simulate_to_exit((0.3, 0.4), 1.0, 1e-4, 1, t_max=0.0)
    assert p.n_points == 1 and p.exit is None
    assert tuple(p.points[0]) == (0.3, 0.4)


def test_increment_variance():
    p = simulate_to_exit((0, 0), 1.0, 1e-6, 3)
    inc = np.diff(p.points, axis=0)
    assert len(inc) >= 10_000
    for c in range(2):
        assert np.var(inc[:, c]) == pytest.approx(1e-6, rel=0.05)


@pytest.mark.parametrize("start,R,dt", [((1.0, 0.0), 1.0, 1e-4), ((0, 0), 1.0, 0.0),
                                        ((0, 0), 1.0, -1e-3), ((0, 0), 1.0, 0.02)])
def test_domain_errors(start, R, dt):
    with pytest.raises(DomainError):
        simulate_to_exit(start, R, dt, 1)


def test_refine_same_step_is_identity():
    p = simulate_to_exit((0, 0), 1.0, 1e-3, 4)
    assert refine(p, RefinementRequest(3, 1e-3), 1) is p
    assert refine_uniform(p, 1e-3, 1) is p


def test_refine_bad_index():
    p = simulate_to_exit((0, 0), 1.0, 1e-3, 4)
    with pytest.raises(DomainError):
        refine(p, RefinementRequest(p.n_points - 1, 1e-4), 1)
    with pytest.raises(DomainError):
        refine(p, RefinementRequest(-1, 1e-4), 1)


def test_refine_keeps_original_grid():
    p = simulate_to_exit((0, 0), 1.0, 1e-3, 8)
    q = refine(p, RefinementRequest(5, 2.5e-4), 2)
    if q.n_points > p.n_points:  # no kill inside the refined interval
        keep = np.isin(q.times, p.times)
        assert np.array_equal(q.points[keep], p.points)
    u = refine_uniform(p, 2.5e-4, 3)
    n_orig = min(p.n_points, (u.n_points + 3) // 4)
    assert np.array_equal(u.points[::4][:n_orig], p.points[:n_orig])
    assert u.dt_nominal == pytest.approx(2.5e-4)


def test_refined_path_still_valid():
    for s in range(20):
        p = simulate_to_exit((0.5, 0.0), 1.0, 1e-3, s)
        u = refine_uniform(p, 1e-4, derive_seed(s, 1))
        assert np.all(np.hypot(u.points[:, 0], u.points[:, 1]) < 1.0)
        assert np.all(np.diff(u.times) > 0)
        assert u.exit is not None and abs(math.hypot(*u.exit[1]) - 1.0) < 1e-9
        assert u.exit[0] <= p.exit[0] + 1e-12


def test_bridge_midpoint_moments():
    # oracle: conditional law of W(h/2) given W(h) by regression on unconditioned draws
    rng = np.random.default_rng(0)
    h = 0.01
    w1 = rng.normal(0, math.sqrt(h / 2), 200_000)
    w2 = w1 + rng.normal(0, math.sqrt(h / 2), 200_000)
    beta = np.polyfit(w2, w1, 1)[0]
    resid_var = np.var(w1 - beta * w2)
    assert beta == pytest.approx(0.5, abs=0.01)
    assert resid_var == pytest.approx(h / 4, rel=0.02)

    n = 100_000
    p, q = np.array([0.1, -0.2]), np.array([0.3, 0.05])
    mids = bridge_fill(np.tile(p, (n, 1)), np.tile(q, (n, 1)), h, 2, make_rng(1))[:, 0, :]
    se_mean = math.sqrt(h / 4 / n)
    se_var = h / 4 * math.sqrt(2 / (n - 1))
    for c in range(2):
        assert abs(mids[:, c].mean() - (p[c] + q[c]) / 2) < 3 * se_mean
        assert abs(mids[:, c].var() - h / 4) < 3 * se_var


def test_exit_time_scaling():
    # paths on (R, dt) rescaled by 1/R have the law of paths on (1, dt/R^2)
    t2, _ = exit_samples((0, 0), 2.0, 4e-4, 5000, 21)
    t1, _ = exit_samples((0, 0), 1.0, 1e-4, 5000, 22)
    assert stats.ks_2samp(t2 / 4.0, t1).pvalue > 1e-3


@pytest.mark.slow
def test_mean_exit_time():
    tau, _ = exit_samples((0, 0), 1.0, 1e-4, 100_000, 31)
    se = tau.std(ddof=1) / math.sqrt(len(tau))
    assert abs(tau.mean() - 0.5) < 3 * se


@pytest.mark.slow
def test_exit_point_uniform():
    _, pts = exit_samples((0, 0), 1.0, 1e-4, 100_000, 32)
    counts = np.histogram(np.arctan2(pts[:, 1], pts[:, 0]), 16, (-math.pi, math.pi))[0]
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.mark.slow
def test_exit_point_poisson_kernel():
    r = 0.5
    _, pts = exit_samples((r, 0), 1.0, 1e-4, 100_000, 33)
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    cdf = lambda a: 0.5 + np.arctan((1 + r) / (1 - r) * np.tan(a / 2)) / math.pi
    assert stats.kstest(ang, cdf).statistic < 0.01
