import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmlab.crossing_stats import (CrossingQuery, INNER_RATIO, count_crossings, estimate_local_time,
                                  fit_local_time, grid_centres, refine_uniform, scan_thick_points)
from bmlab.errors import BudgetExceededError, DomainError
from bmlab.path_engine import simulate_to_exit
from bmlab.seeding import derive_seed
from conftest import make_path, radial_walk


def brute_force_count(path, x, inner, outer, substeps=200):
    """Oracle: run the automaton on a densely resampled polyline, testing sample points only."""
    ts, ps = path.polyline()
    s = np.linspace(0, 1, substeps, endpoint=False)
    dense = (ps[:-1, None, :] + s[None, :, None] * np.diff(ps, axis=0)[:, None, :]).reshape(-1, 2)
    dense = np.vstack([dense, ps[-1:]])
    d = np.hypot(dense[:, 0] - x[0], dense[:, 1] - x[1])
    armed, count = False, 0
    for r in d:
        if not armed and r <= inner:
            armed = True
        elif armed and r >= outer:
            armed = False
            count += 1
    return count


def test_query_validation():
    with pytest.raises(DomainError):
        CrossingQuery((0.5, 0.0), 0.6)
    with pytest.raises(DomainError):
        CrossingQuery((0.0, 0.0), 0.1, inner_ratio=1.0)
    assert CrossingQuery((0, 0), 0.1).inner == pytest.approx(0.1 / math.e)


def test_never_enters_gives_zero():
    pts = radial_walk([(0.0, 0.0), (0.0, 0.5)], 0.01)
    p = make_path(pts, 1e-6)
    assert count_crossings(p, CrossingQuery((0.4, -0.4), 0.1)).count == 0


def test_hand_traced_path_counts_two():
    x = np.array([0.2, 0.1])
    eps = 0.05
    u = np.array([1.0, 0.0])
    out_far = x + u * (0.99 - math.hypot(*x)) / 1.0
    pts = radial_walk([x, x + 2 * eps * u, x, out_far], 0.002)
    p = make_path(pts, 1e-8)
    assert count_crossings(p, CrossingQuery(tuple(x), eps)).count == 2


def test_segment_crossings_not_missed():
    # two samples straddling the whole annulus: polyline crossing still counted
    p = make_path([(0.0, 0.0), (0.5, 0.0)], 1e-6)
    assert count_crossings(p, CrossingQuery((0.1, 0.0), 0.05)).count == 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), x=st.tuples(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4)),
       eps=st.floats(0.02, 0.2))
def test_matches_dense_sampling_oracle(seed, x, eps):
    p = simulate_to_exit((0, 0), 1.0, 1e-4, seed, t_max=0.05)
    inner = eps * INNER_RATIO
    exact = count_crossings(p, CrossingQuery(x, eps)).count
    # dense sampling can only miss grazing crossings, never invent them
    dense = brute_force_count(p, x, inner, eps)
    assert dense <= exact <= dense + 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), x=st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3)),
       eps=st.floats(0.02, 0.2), lo=st.floats(0.0, 1.0), hi=st.floats(0.0, 1.0))
def test_nested_annulus_dominance(seed, x, eps, lo, hi):
    p = simulate_to_exit((0, 0), 1.0, 1e-4, seed, t_max=0.2)
    rho = eps * INNER_RATIO
    # narrower annulus [rho', eps'] inside [rho, eps]
    rho2 = rho + lo * (eps - rho) * 0.49
    eps2 = eps - hi * (eps - rho) * 0.49
    wide = count_crossings(p, CrossingQuery(x, eps)).count
    narrow = count_crossings(p, CrossingQuery(x, eps2, rho2 / eps2)).count
    assert narrow >= wide


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), x=st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3)))
def test_translation_covariance(seed, x):
    p = simulate_to_exit((0, 0), 1.0, 1e-4, seed, t_max=0.2)
    q = p.with_offset((-x[0], -x[1]))
    a = count_crossings(p, CrossingQuery(x, 0.05)).count
    b = count_crossings(q, CrossingQuery((0.0, 0.0), 0.05)).count
    assert a == b


def test_resolution_flag():
    p = simulate_to_exit((0, 0), 1.0, 1e-4, 3)
    q = CrossingQuery((0.1, 0.0), 0.02)
    assert not count_crossings(p, q).resolved
    q2 = CrossingQuery((0.1, 0.0), 0.2)
    assert count_crossings(p, q2).resolved


def test_kill_radius_mismatch():
    p = simulate_to_exit((0, 0), 2.0, 1e-4, 3)
    with pytest.raises(DomainError):
        count_crossings(p, CrossingQuery((0.1, 0.0), 0.1))


def test_fit_all_zero():
    slope, _ = fit_local_time([0.1, 0.05, 0.01], [0, 0, 0])
    assert slope == 0.0


@pytest.mark.parametrize("c", [0.3, 1.0, 2.5])
def test_fit_floor_of_proportional(c):
    eps = np.geomspace(0.1, 1e-4, 12)
    counts = np.floor(c * np.log(1 / eps))
    slope, _ = fit_local_time(eps, counts)
    assert abs(slope - c) <= 2 / math.log(1 / eps[-1])


def test_eps_grid_must_decrease():
    p = simulate_to_exit((0, 0), 1.0, 1e-5, 3)
    with pytest.raises(DomainError):
        estimate_local_time(p, (0.1, 0.0), [0.05, 0.1])


def test_estimate_refines_coarse_path():
    p = simulate_to_exit((0, 0), 1.0, 1e-4, 9)
    grid = [0.1, 0.05]
    est = estimate_local_time(p, (0.05, 0.0), grid)
    fine = refine_uniform(p, p.dt_nominal / math.ceil(p.dt_nominal / (0.05 * INNER_RATIO) ** 2 * 10 - 1e-9),
                          derive_seed(p.seed, 0x5EF1))
    direct = [count_crossings(fine, CrossingQuery((0.05, 0.0), e)).count for e in grid]
    assert list(est.counts) == direct


def test_budget_exceeded_carries_partial():
    p = simulate_to_exit((0, 0), 1.0, 1e-4, 9)
    with pytest.raises(BudgetExceededError) as info:
        estimate_local_time(p, (0.05, 0.0), [0.3, 0.2, 0.01], max_refine=4)
    part = info.value.partial
    assert part is not None
    assert list(part.eps_grid) == [0.3, 0.2]


def test_grid_scan_matches_pointwise():
    p = simulate_to_exit((0, 0), 1.0, 1e-5, 17)
    eps = 0.05
    lo, step, n = grid_centres(1.0, 0.1)
    top = scan_thick_points(p, 0.1, eps, n * n)
    for (pt, k) in top:
        assert count_crossings(p, CrossingQuery(pt, eps)).count == k
    counts = [k for _, k in top]
    assert counts == sorted(counts, reverse=True)
    for (a, ka), (b, kb) in zip(top, top[1:]):
        if ka == kb:
            assert a < b


def test_scan_on_empty_path():
    p = simulate_to_exit((0, 0), 1.0, 1e-5, 1, t_max=0.0)
    top = scan_thick_points(p, 0.5, 0.1, 3)
    assert [k for _, k in top] == [0, 0, 0]
    pts = [pt for pt, _ in top]
    assert pts == sorted(pts)
    assert pts[0] == (-0.75, -0.25)


def test_scan_degenerate_grid():
    p = simulate_to_exit((0, 0), 1.0, 1e-5, 1)
    top = scan_thick_points(p, 5.0, 0.1, 10)
    assert len(top) == 1 and top[0][0] == (0.0, 0.0)


@pytest.mark.slow
def test_grid_maximum_dominates_fixed_point():
    eps = 2.0 ** -6
    dt = (eps * INNER_RATIO) ** 2 / 10
    wins = 0
    for s in range(1000):
        p = simulate_to_exit((0, 0), 1.0, dt, derive_seed(1, s))
        top = scan_thick_points(p, 2 / 64, eps, 1)
        wins += top[0][1] > count_crossings(p, CrossingQuery((0.3, 0.2), eps)).count
    assert wins >= 990


@pytest.mark.slow
def test_typical_point_has_vanishing_rate():
    grid = [0.04, 0.02, 0.01]
    dt = (0.01 * INNER_RATIO) ** 2 / 10
    a = [estimate_local_time(simulate_to_exit((0, 0), 1.0, dt, derive_seed(2, s)), (0.3, 0.2), grid).a_hat
         for s in range(1000)]
    assert np.median(a) == 0.0


@pytest.mark.slow
def test_refinement_stability():
    grid = [0.04, 0.02, 0.01]
    dt = (0.01 * INNER_RATIO) ** 2 / 10
    diffs, ses = [], []
    for s in range(100):
        p = simulate_to_exit((0, 0), 1.0, dt, derive_seed(2, s))
        x = scan_thick_points(p, 0.05, 0.04, 1)[0][0]
        e1 = estimate_local_time(p, x, grid)
        e4 = estimate_local_time(refine_uniform(p, dt / 4, derive_seed(3, s)), x, grid)
        diffs.append(abs(e1.a_hat - e4.a_hat))
        ses.append(e1.stderr)
    assert np.mean(diffs) < np.nanmean(ses)
