"""Planar Brownian paths killed at the exit from a disc.

Paths are sampled on a regular grid with Gaussian increments. Between two interior
samples the boundary may still have been touched; we flag that with the half-plane
Brownian-bridge probability ``exp(-2 d1 d2 / dt)``, where ``d1, d2`` are the distances
of the two samples to the circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DomainError
from .seeding import derive_seed, make_rng, map_ordered

# 2 d1 d2 / dt above this makes the touch probability < 1e-17; skip the uniform draw.
_TOUCH_CUTOFF = 40.0


@dataclass(frozen=True, eq=False)
class PlanarPath:
    """Sampled planar Brownian path, possibly killed at ``|B| = R``.

    ``points`` holds interior samples only; the exit, when present, is the pair
    ``(exit_time, exit_point)`` and lies strictly after ``times[-1]``.
    """

    start: tuple
    R: float
    times: np.ndarray
    points: np.ndarray
    exit: tuple | None
    seed: int
    dt_nominal: float
    refinements: tuple = field(default=())

    def __post_init__(self):
        self.times.setflags(write=False)
        self.points.setflags(write=False)

    @property
    def n_points(self) -> int:
        return len(self.times)

    @property
    def exit_time(self) -> float:
        return self.exit[0] if self.exit is not None else math.inf

    @property
    def duration(self) -> float:
        return self.exit[0] if self.exit is not None else float(self.times[-1])

    def polyline(self):
        """Times and points including the exit point, as used by geometric queries."""
        if self.exit is None:
            return self.times, self.points
        t_e, p_e = self.exit
        ts = np.append(self.times, t_e)
        ps = np.vstack([self.points, np.asarray(p_e, dtype=float)[None, :]])
        return ts, ps

    def with_offset(self, offset) -> "PlanarPath":
        """Translated copy (same times); the kill radius is kept as metadata only."""
        off = np.asarray(offset, dtype=float)
        ex = None
        if self.exit is not None:
            ex = (self.exit[0], tuple(np.asarray(self.exit[1]) + off))
        return PlanarPath(tuple(np.asarray(self.start) + off), self.R, self.times.copy(),
                          self.points + off, ex, self.seed, self.dt_nominal, self.refinements)


@dataclass(frozen=True)
class RefinementRequest:
    interval: int
    new_step: float


# --------------------------------------------------------------------------- kernels

@numba.njit(nogil=True, cache=True)
def _segment_exit(px, py, qx, qy, R):
    # smallest s in (0, 1] with |p + s (q - p)| = R, given |p| < R <= |q|
    dx = qx - px
    dy = qy - py
    a = dx * dx + dy * dy
    b = 2.0 * (px * dx + py * dy)
    c = px * px + py * py - R * R
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        disc = 0.0
    s = (-b + math.sqrt(disc)) / (2.0 * a)
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    return s


@numba.njit(nogil=True, cache=True)
def _fill_disc(gen, xs, ys, n0, px, py, R, dt, n_max):
    """Write samples into xs[n0:], ys[n0:] until full, exit, or n_max steps.

    Returns (n, status, exit_t, exit_x, exit_y) with status 0 = buffer full,
    1 = exited, 2 = step budget reached.
    """
    sd = math.sqrt(dt)
    dp = R - math.sqrt(px * px + py * py)
    cap = xs.shape[0]
    n = n0
    while n < cap:
        if n - 1 >= n_max:
            return n, 2, 0.0, 0.0, 0.0
        qx = px + sd * gen.standard_normal()
        qy = py + sd * gen.standard_normal()
        rq = math.sqrt(qx * qx + qy * qy)
        t0 = (n - 1) * dt
        if rq >= R:
            s = _segment_exit(px, py, qx, qy, R)
            ex = px + s * (qx - px)
            ey = py + s * (qy - py)
            re = math.sqrt(ex * ex + ey * ey)
            return n, 1, t0 + s * dt, ex * R / re, ey * R / re
        dq = R - rq
        z = 2.0 * dp * dq / dt
        if z < _TOUCH_CUTOFF:
            if gen.random() < math.exp(-z):
                # radial projection of the segment point closest to the circle
                if dq < dp:
                    bx, by, rb = qx, qy, rq
                else:
                    bx, by, rb = px, py, R - dp
                if rb <= 0.0:
                    bx, by, rb = 1.0, 0.0, 1.0
                return n, 1, t0 + 0.5 * dt, bx * R / rb, by * R / rb
        xs[n] = qx
        ys[n] = qy
        n += 1
        px = qx
        py = qy
        dp = dq
    return n, 0, 0.0, 0.0, 0.0


@numba.njit(nogil=True, cache=True)
def _simulate_disc(gen, x0, y0, R, dt, n_max):
    """Walk from (x0, y0) until exit from B(0, R) or n_max steps.

    Returns (xs, ys, n, exit_flag, exit_t, exit_x, exit_y); sample k sits at time k*dt.
    """
    cap = 4096
    xs = np.empty(cap)
    ys = np.empty(cap)
    xs[0] = x0
    ys[0] = y0
    n = 1
    while True:
        n, status, te, ex, ey = _fill_disc(gen, xs, ys, n, xs[n - 1], ys[n - 1], R, dt, n_max)
        if status != 0:
            return xs[:n], ys[:n], n, status == 1, te, ex, ey
        cap *= 2
        nx = np.empty(cap)
        ny = np.empty(cap)
        nx[:n] = xs
        ny[:n] = ys
        xs = nx
        ys = ny


@numba.njit(nogil=True, cache=True)
def _annulus_escape(gen, r0, r_in, r_out, dt):
    """1 if a walk from radius r0 reaches r_out before r_in, else 0.

    Both circles get the bridge-touch correction.
    """
    sd = math.sqrt(dt)
    px = r0
    py = 0.0
    rp = r0
    while True:
        qx = px + sd * gen.standard_normal()
        qy = py + sd * gen.standard_normal()
        rq = math.sqrt(qx * qx + qy * qy)
        if rq >= r_out:
            return 1
        if rq <= r_in:
            return 0
        z_in = 2.0 * (rp - r_in) * (rq - r_in) / dt
        if z_in < _TOUCH_CUTOFF:
            if gen.random() < math.exp(-z_in):
                return 0
        z_out = 2.0 * (r_out - rp) * (r_out - rq) / dt
        if z_out < _TOUCH_CUTOFF:
            if gen.random() < math.exp(-z_out):
                return 1
        px = qx
        py = qy
        rp = rq


# --------------------------------------------------------------------------- public API

def _check_start(start, R, dt):
    start = np.asarray(start, dtype=float).reshape(2)
    if not (dt > 0) or not np.isfinite(dt):
        raise DomainError(f"dt must be positive, got {dt}")
    if not (R > 0):
        raise DomainError(f"R must be positive, got {R}")
    if np.hypot(*start) >= R:
        raise DomainError(f"start {tuple(start)} is not inside B(0, {R})")
    return start


def _max_steps(dt, t_max):
    if t_max is None:
        return np.iinfo(np.int64).max
    if t_max < 0:
        raise DomainError("t_max must be non-negative")
    return int(math.floor(t_max / dt + 1e-9))


def simulate_to_exit(start, R: float, dt: float, seed: int, t_max: float | None = None) -> PlanarPath:
    """Brownian path from ``start`` killed on leaving ``B(0, R)``.

    ``t_max`` truncates the path (no exit recorded if it survives that long).
    """
    start = _check_start(start, R, dt)
    if dt > R * R / 100.0:
        raise DomainError(f"dt={dt} exceeds R^2/100={R * R / 100.0}")
    gen = make_rng(seed)
    xs, ys, n, has_exit, te, ex, ey = _simulate_disc(gen, start[0], start[1], float(R), float(dt),
                                                     _max_steps(dt, t_max))
    times = np.arange(n, dtype=float) * dt
    points = np.column_stack([xs, ys])
    exit_ = (float(te), (float(ex), float(ey))) if has_exit else None
    return PlanarPath(tuple(start), float(R), times, points, exit_, int(seed), float(dt))


def exit_samples(start, R: float, dt: float, n: int, master_seed: int, threads: int = 1,
                 stream: int = 0):
    """Exit times and exit points of ``n`` independent replicas.

    Replica ``i`` uses ``derive_seed(master_seed, stream, i)``.
    """
    start = _check_start(start, R, dt)

    def one(i):
        gen = make_rng(derive_seed(master_seed, stream, i))
        _, _, _, has_exit, te, ex, ey = _simulate_disc(gen, start[0], start[1], float(R), float(dt),
                                                       np.iinfo(np.int64).max)
        return te, ex, ey

    out = np.array(map_ordered(one, range(n), threads), dtype=float).reshape(n, 3)
    return out[:, 0], out[:, 1:]


def annulus_escape_mc(r_inner: float, r_outer: float, start_radius: float, dt: float, n: int,
                      master_seed: int, threads: int = 1, stream: int = 1):
    """Monte-Carlo frequency of reaching ``r_outer`` before ``r_inner``; returns (p_hat, stderr)."""
    if not (0 < r_inner < start_radius < r_outer):
        raise DomainError("need 0 < r_inner < start_radius < r_outer")

    def one(i):
        gen = make_rng(derive_seed(master_seed, stream, i))
        return _annulus_escape(gen, float(start_radius), float(r_inner), float(r_outer), float(dt))

    hits = np.array(map_ordered(one, range(n), threads), dtype=float)
    if n == 0:
        return math.nan, math.nan
    p = hits.mean()
    return float(p), float(math.sqrt(max(p * (1 - p), 0.0) / n))


# --------------------------------------------------------------------------- refinement

def bridge_fill(p, q, h, k, rng):
    """``k - 1`` Brownian-bridge samples at ``j h / k`` between ``p`` (time 0) and ``q`` (time h).

    ``p`` and ``q`` may be stacked with shape (m, 2); the result has shape (m, k - 1, 2).
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    h = np.broadcast_to(np.asarray(h, dtype=float), (p.shape[0],))
    if k <= 1:
        return np.empty((p.shape[0], 0, 2))
    frac = np.arange(1, k) / k
    incr = rng.standard_normal((p.shape[0], k, 2)) * np.sqrt(h / k)[:, None, None]
    w = np.cumsum(incr, axis=1)
    w_inner = w[:, :-1, :] - frac[None, :, None] * w[:, -1:, :]
    return p[:, None, :] + frac[None, :, None] * (q - p)[:, None, :] + w_inner


def _kill_recheck(times, points, R, exit_, inserted_mask):
    radii = np.hypot(points[:, 0], points[:, 1])
    bad = np.flatnonzero((radii >= R) & inserted_mask)
    if bad.size == 0:
        return times, points, exit_
    j = int(bad[0])
    p, q = points[j - 1], points[j]
    s = _segment_exit(p[0], p[1], q[0], q[1], R)
    e = p + s * (q - p)
    e = e * R / np.hypot(*e)
    t_e = times[j - 1] + s * (times[j] - times[j - 1])
    return times[:j], points[:j], (float(t_e), (float(e[0]), float(e[1])))


def refine(path: PlanarPath, req: RefinementRequest, seed: int) -> PlanarPath:
    """Insert bridge samples into one sampling interval at step ``req.new_step``."""
    i = req.interval
    if not (0 <= i < path.n_points - 1):
        raise DomainError(f"interval index {i} out of range for {path.n_points} samples")
    t0, t1 = path.times[i], path.times[i + 1]
    h = t1 - t0
    if not (req.new_step > 0):
        raise DomainError("new step must be positive")
    if req.new_step >= h * (1 - 1e-12):
        return path
    k = int(math.ceil(h / req.new_step - 1e-9))
    rng = make_rng(seed)
    fill = bridge_fill(path.points[i], path.points[i + 1], h, k, rng)[0]
    new_t = t0 + np.arange(1, k) * (h / k)
    times = np.concatenate([path.times[: i + 1], new_t, path.times[i + 1:]])
    points = np.concatenate([path.points[: i + 1], fill, path.points[i + 1:]])
    mask = np.zeros(len(times), dtype=bool)
    mask[i + 1: i + k] = True
    times, points, exit_ = _kill_recheck(times, points, path.R, path.exit, mask)
    return PlanarPath(path.start, path.R, times, points, exit_, path.seed, path.dt_nominal,
                      path.refinements + ((i, float(req.new_step), int(seed)),))


def refine_uniform(path: PlanarPath, new_step: float, seed: int) -> PlanarPath:
    """Refine every interval (including the final one up to the exit) to ``new_step``."""
    if not (new_step > 0):
        raise DomainError("new step must be positive")
    if new_step >= path.dt_nominal * (1 - 1e-12):
        return path
    k = int(math.ceil(path.dt_nominal / new_step - 1e-9))
    ts, ps = path.polyline()
    if len(ts) < 2:
        return path
    rng = make_rng(seed)
    h = np.diff(ts)
    fill = bridge_fill(ps[:-1], ps[1:], h, k, rng)
    m = len(h)
    grid_t = ts[:-1, None] + np.arange(1, k)[None, :] * (h / k)[:, None]
    all_t = np.empty((m, k))
    all_p = np.empty((m, k, 2))
    all_t[:, 0] = ts[:-1]
    all_t[:, 1:] = grid_t
    all_p[:, 0] = ps[:-1]
    all_p[:, 1:] = fill
    times = all_t.reshape(-1)
    points = all_p.reshape(-1, 2)
    mask = np.ones((m, k), dtype=bool)
    mask[:, 0] = False
    mask = mask.reshape(-1)
    if path.exit is None:
        times = np.append(times, ts[-1])
        points = np.vstack([points, ps[-1:]])
        mask = np.append(mask, False)
    times, points, exit_ = _kill_recheck(times, points, path.R, path.exit, mask)
    return PlanarPath(path.start, path.R, times, points, exit_, path.seed, path.dt_nominal / k,
                      path.refinements + ((-1, float(path.dt_nominal / k), int(seed)),))
