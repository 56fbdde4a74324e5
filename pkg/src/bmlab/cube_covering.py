"""Delayed hitting times of cubes and dyadic coverings of visit-time sets.

For a cube ``Q`` of side ``r`` the hitting times are ``tau_1 = inf{t : B_t in Q}`` and
``tau_{k+1} = inf{t >= tau_k + r : B_t in Q}``; the number of them before the exit from
``B(0, R)`` decays geometrically in ``k``. Covering the visit set of every dyadic cube
of side ``2^-m`` by intervals of length ``2^-m`` then needs at most ``C m`` intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateFitError, DomainError, ResolutionError
from .gauge_measure import GaugeFunction, gauge_eval
from .path_engine import PlanarPath, _check_start, _simulate_disc
from .seeding import derive_seed, make_rng, map_ordered

UNIT_CUBE = (-0.5, -0.5, 1.0)  # lower-left corner and side of U


@dataclass(frozen=True)
class Cube:
    center: tuple
    side: float
    level: int | None = None

    @classmethod
    def dyadic(cls, m: int, i: int, j: int, U=UNIT_CUBE):
        r = U[2] * 2.0 ** -m
        return cls((U[0] + (i + 0.5) * r, U[1] + (j + 0.5) * r), r, m)

    @property
    def bounds(self):
        h = self.side / 2.0
        return (self.center[0] - h, self.center[1] - h, self.center[0] + h, self.center[1] + h)

    def check_inside(self, R: float):
        x0, y0, x1, y1 = self.bounds
        far = max(math.hypot(x, y) for x in (x0, x1) for y in (y0, y1))
        if far >= R:
            raise DomainError(f"cube {self} is not contained in B(0, {R})")


@dataclass(frozen=True)
class HittingSchedule:
    cube: Cube
    taus: np.ndarray
    truncated_at_exit: bool


@dataclass(frozen=True)
class GeometricFit:
    ks: np.ndarray
    probs: np.ndarray
    theta_hat: float
    stderr: float
    fit_ks: np.ndarray
    intercept: float
    n: int

    @property
    def prob_stderr(self):
        return np.sqrt(self.probs * (1 - self.probs) / self.n)


# --------------------------------------------------------------------------- kernels

@numba.njit(cache=True, inline="always")
def _clip(px, py, dx, dy, x0, y0, x1, y1):
    """Liang-Barsky: parameter range of the segment inside the box, or (1, 0) if none."""
    lo = 0.0
    hi = 1.0
    for k in range(4):
        if k == 0:
            p, q = -dx, px - x0
        elif k == 1:
            p, q = dx, x1 - px
        elif k == 2:
            p, q = -dy, py - y0
        else:
            p, q = dy, y1 - py
        if p == 0.0:
            if q < 0.0:
                return 1.0, 0.0
        else:
            r = q / p
            if p < 0.0:
                if r > lo:
                    lo = r
            else:
                if r < hi:
                    hi = r
        if lo > hi:
            return 1.0, 0.0
    return lo, hi


@numba.njit(nogil=True, cache=True)
def _delayed_hits(ts, xs, ys, x0, y0, x1, y1, delay, t_end, k_cap):
    """Delayed hitting times of the box along the polyline, strictly before t_end."""
    out = np.empty(k_cap)
    k = 0
    t_next = 0.0
    n = ts.shape[0]
    if n == 1:
        if x0 <= xs[0] <= x1 and y0 <= ys[0] <= y1 and ts[0] < t_end:
            out[0] = ts[0]
            k = 1
        return out[:k]
    for i in range(n - 1):
        if ts[i + 1] < t_next:
            continue
        lo, hi = _clip(xs[i], ys[i], xs[i + 1] - xs[i], ys[i + 1] - ys[i], x0, y0, x1, y1)
        if lo > hi:
            continue
        h = ts[i + 1] - ts[i]
        te = ts[i] + lo * h
        tl = ts[i] + hi * h
        while tl >= t_next:
            tau = te if te > t_next else t_next
            if tau >= t_end or k == k_cap:
                return out[:k]
            out[k] = tau
            k += 1
            t_next = tau + delay
    return out[:k]


@numba.njit(nogil=True, cache=True)
def _cell_visits(ts, xs, ys, ux, uy, side, n_cells):
    """Per-cell visit intervals (cell id, t_in, t_out) of the polyline in the tiled square."""
    n = ts.shape[0]
    cap = n + n // 2 + 16
    cid = np.empty(cap, dtype=np.int64)
    ta = np.empty(cap)
    tb = np.empty(cap)
    m = 0
    x_hi = ux + n_cells * side
    y_hi = uy + n_cells * side
    for i in range(n - 1):
        px = xs[i]
        py = ys[i]
        qx = xs[i + 1]
        qy = ys[i + 1]
        if max(px, qx) < ux or min(px, qx) > x_hi or max(py, qy) < uy or min(py, qy) > y_hi:
            continue
        a0 = int(math.floor((min(px, qx) - ux) / side))
        a1 = int(math.floor((max(px, qx) - ux) / side))
        b0 = int(math.floor((min(py, qy) - uy) / side))
        b1 = int(math.floor((max(py, qy) - uy) / side))
        # closed cells: a point on a shared edge belongs to both neighbours
        a0 = max(a0 - 1, 0)
        b0 = max(b0 - 1, 0)
        a1 = min(a1, n_cells - 1)
        b1 = min(b1, n_cells - 1)
        h = ts[i + 1] - ts[i]
        dx = qx - px
        dy = qy - py
        for a in range(a0, a1 + 1):
            cx0 = ux + a * side
            for b in range(b0, b1 + 1):
                cy0 = uy + b * side
                lo, hi = _clip(px, py, dx, dy, cx0, cy0, cx0 + side, cy0 + side)
                if lo > hi:
                    continue
                if m == cap:
                    cap *= 2
                    c2 = np.empty(cap, dtype=np.int64)
                    a2 = np.empty(cap)
                    b2 = np.empty(cap)
                    c2[:m] = cid[:m]
                    a2[:m] = ta[:m]
                    b2[:m] = tb[:m]
                    cid = c2
                    ta = a2
                    tb = b2
                cid[m] = a * n_cells + b
                ta[m] = ts[i] + lo * h
                tb[m] = ts[i] + hi * h
                m += 1
    return cid[:m], ta[:m], tb[:m]


@numba.njit(nogil=True, cache=True)
def _per_cell_cover(cid, ta, tb, length):
    """Greedy cover counts per cell; records must be time-ordered within each cell."""
    order = np.argsort(cid, kind="mergesort")
    cells = np.empty(cid.shape[0], dtype=np.int64)
    counts = np.empty(cid.shape[0], dtype=np.int64)
    occ = np.empty(cid.shape[0])
    nc = 0
    i = 0
    n = cid.shape[0]
    while i < n:
        c = cid[order[i]]
        count = 0
        cover_end = -np.inf
        occupied = 0.0
        last_end = -np.inf
        while i < n and cid[order[i]] == c:
            a = ta[order[i]]
            b = tb[order[i]]
            # occupation time, counting overlaps of consecutive records once
            lo = a if a > last_end else last_end
            if b > lo:
                occupied += b - lo
            if b > last_end:
                last_end = b
            if b > cover_end:
                s = a if a > cover_end else cover_end
                k = int(math.ceil((b - s) / length))
                if k == 0:
                    k = 1
                count += k
                cover_end = s + k * length
            i += 1
        cells[nc] = c
        counts[nc] = count
        occ[nc] = occupied
        nc += 1
    return cells[:nc], counts[:nc], occ[:nc]


# --------------------------------------------------------------------------- operations

def _require_resolution(path: PlanarPath, r: float):
    if path.dt_nominal > r * r / 10.0 * (1 + 1e-12):
        raise ResolutionError(f"path step {path.dt_nominal} exceeds r^2/10 = {r * r / 10.0}")


def hitting_schedule(path: PlanarPath, cube: Cube, k_cap: int = 1_000_000) -> HittingSchedule:
    """Delayed hitting times ``tau_k`` of ``cube`` before the path's exit."""
    _require_resolution(path, cube.side)
    ts, ps = path.polyline()
    x0, y0, x1, y1 = cube.bounds
    taus = _delayed_hits(np.ascontiguousarray(ts), np.ascontiguousarray(ps[:, 0]),
                         np.ascontiguousarray(ps[:, 1]), x0, y0, x1, y1, cube.side,
                         path.exit_time, k_cap)
    return HittingSchedule(cube, taus, path.exit is not None)


def hit_counts(z, cube: Cube, R: float, dt: float, n: int, master_seed: int, k_cap: int = 10_000,
               threads: int = 1, stream: int = 2):
    """Number of delayed hits of ``cube`` before exit, for ``n`` replicas from ``z``."""
    z = _check_start(z, R, dt)
    cube.check_inside(R)
    if dt > cube.side ** 2 / 10.0 * (1 + 1e-12):
        raise ResolutionError(f"dt={dt} exceeds r^2/10")
    x0, y0, x1, y1 = cube.bounds

    def one(i):
        gen = make_rng(derive_seed(master_seed, stream, i))
        xs, ys, m, has_exit, te, ex, ey = _simulate_disc(gen, z[0], z[1], float(R), float(dt),
                                                         np.iinfo(np.int64).max)
        ts = np.arange(m + 1, dtype=float) * dt
        ts[m] = te
        xs = np.append(xs, ex)
        ys = np.append(ys, ey)
        return len(_delayed_hits(ts, xs, ys, x0, y0, x1, y1, cube.side, te, k_cap))

    return np.array(map_ordered(one, range(n), threads), dtype=np.int64)


def fit_geometric(counts, k_max: int, min_successes: int = 30) -> GeometricFit:
    """Fit ``log P(N >= k)`` linearly in ``k`` where at least ``min_successes`` replicas reach ``k``."""
    counts = np.asarray(counts)
    n = len(counts)
    ks = np.arange(1, k_max + 1)
    probs = np.array([(counts >= k).mean() if n else 0.0 for k in ks])
    if n == 0 or probs[0] == 0:
        raise DegenerateFitError("no replica hit the cube")
    ok = probs >= min_successes / n
    if ok.sum() < 2:
        raise DegenerateFitError(f"only {ok.sum()} k values with >= {min_successes} successes")
    kf = ks[ok].astype(float)
    y = np.log(probs[ok])
    kc = kf - kf.mean()
    sxx = float(kc @ kc)
    slope = float(kc @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * kf.mean())
    if ok.sum() > 2:
        resid = y - intercept - slope * kf
        se_slope = math.sqrt(float(resid @ resid) / (ok.sum() - 2) / sxx)
    else:
        se_slope = math.nan
    theta = math.exp(slope)
    return GeometricFit(ks, probs, theta, theta * se_slope, ks[ok], intercept, n)


def estimate_theta(z, cube: Cube, R: float, k_max: int, n: int, seed: int, dt: float | None = None,
                   threads: int = 1) -> GeometricFit:
    """Empirical ``P(tau_k < tau)`` for ``k = 1..k_max`` and the fitted decay ratio theta."""
    if n < 1000:
        raise DomainError("estimate_theta needs at least 1000 replicas")
    dt = cube.side ** 2 / 10.0 if dt is None else dt
    counts = hit_counts(z, cube, R, dt, n, seed, threads=threads)
    return fit_geometric(counts, k_max)


def annulus_escape_prob(r_inner: float, r_outer: float, start_radius: float) -> float:
    """Probability that planar BM from ``start_radius`` reaches ``r_outer`` before ``r_inner``."""
    if not (0 < r_inner < r_outer) or not (r_inner <= start_radius <= r_outer):
        raise DomainError("need 0 < r_inner <= start_radius <= r_outer and r_inner < r_outer")
    return (math.log(start_radius) - math.log(r_inner)) / (math.log(r_outer) - math.log(r_inner))


def covering_count(path: PlanarPath, m: int, U=UNIT_CUBE) -> dict:
    """Greedy interval-cover counts for the visit set of every level-``m`` dyadic cube met by the path."""
    cells, counts, _ = _covering_arrays(path, m, U)
    n_cells = 2 ** m
    return {Cube.dyadic(m, int(c) // n_cells, int(c) % n_cells, U): int(k) for c, k in zip(cells, counts)}


def _covering_arrays(path: PlanarPath, m: int, U=UNIT_CUBE, check=True):
    side = U[2] * 2.0 ** -m
    if check and path.dt_nominal > 4.0 ** -m / 10.0 * (1 + 1e-12):
        raise ResolutionError(f"path step {path.dt_nominal} exceeds 4^-m/10 at m={m}")
    ts, ps = path.polyline()
    cid, ta, tb = _cell_visits(np.ascontiguousarray(ts), np.ascontiguousarray(ps[:, 0]),
                               np.ascontiguousarray(ps[:, 1]), U[0], U[1], side, 2 ** m)
    return _per_cell_cover(cid, ta, tb, side)


def max_covering_counts(path: PlanarPath, levels, U=UNIT_CUBE) -> np.ndarray:
    """``max_Q covering_count(Q)`` for each level (0 where the path misses U)."""
    out = []
    for m in levels:
        _, counts, _ = _covering_arrays(path, m, U)
        out.append(int(counts.max()) if counts.size else 0)
    return np.array(out, dtype=np.int64)


def premeasure_decay(max_counts, levels, gauge: GaugeFunction) -> np.ndarray:
    """``max_Q count(Q) * gauge(2^-m)`` along the levels."""
    levels = np.asarray(levels)
    return np.asarray(max_counts, dtype=float) * gauge_eval(gauge, 2.0 ** -levels.astype(float))


def time_in_square(path: PlanarPath, U=UNIT_CUBE) -> float:
    """Occupation time of the closed square ``U`` along the interpolated path."""
    ts, ps = path.polyline()
    cid, ta, tb = _cell_visits(np.ascontiguousarray(ts), np.ascontiguousarray(ps[:, 0]),
                               np.ascontiguousarray(ps[:, 1]), U[0], U[1], U[2], 1)
    _, _, occ = _per_cell_cover(cid, ta, tb, U[2])
    return float(occ.sum())
