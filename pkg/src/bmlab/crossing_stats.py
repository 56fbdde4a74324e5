"""Annulus crossing counts and local-time estimates.

A crossing at ``x`` and scale ``eps`` starts when the path enters the closed disc
``B(x, eps * inner_ratio)`` and ends when it next reaches distance ``eps``. With the
default ``inner_ratio = 1/e`` each crossing spans exactly one unit of ``log(1/r)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import BudgetExceededError, DomainError
from .path_engine import PlanarPath, refine_uniform
from .seeding import derive_seed

INNER_RATIO = math.exp(-1.0)


@dataclass(frozen=True)
class CrossingQuery:
    x: tuple
    eps: float
    inner_ratio: float = INNER_RATIO
    kill_radius: float = 1.0

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        object.__setattr__(self, "x", x)
        if not (0 < self.inner_ratio < 1):
            raise DomainError(f"inner_ratio must lie in (0, 1), got {self.inner_ratio}")
        if not (0 < self.eps < self.kill_radius - math.hypot(*x)):
            raise DomainError(f"need 0 < eps < kill_radius - |x|; eps={self.eps}, x={x}")

    @property
    def inner(self) -> float:
        return self.eps * self.inner_ratio

    def required_dt(self) -> float:
        return self.inner ** 2 / 10.0


@dataclass(frozen=True)
class CrossingRecord:
    query: CrossingQuery
    count: int
    resolved: bool


@dataclass(frozen=True)
class LocalTimeEstimate:
    x: tuple
    eps_grid: np.ndarray
    counts: np.ndarray
    a_hat: float
    stderr: float


# --------------------------------------------------------------------------- kernels

@numba.njit(cache=True, inline="always")
def _first_inside(px, py, dx, dy, cx, cy, rad, s0):
    # first s in [s0, 1] with |p + s d - c| <= rad, or -1
    ox = px - cx
    oy = py - cy
    fx = ox + s0 * dx
    fy = oy + s0 * dy
    if fx * fx + fy * fy <= rad * rad:
        return s0
    a = dx * dx + dy * dy
    if a == 0.0:
        return -1.0
    b = 2.0 * (ox * dx + oy * dy)
    c = ox * ox + oy * oy - rad * rad
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return -1.0
    s = (-b - math.sqrt(disc)) / (2.0 * a)
    if s0 <= s <= 1.0:
        return s
    return -1.0


@numba.njit(cache=True, inline="always")
def _first_outside(px, py, dx, dy, cx, cy, rad, s0):
    # first s in [s0, 1] with |p + s d - c| >= rad, or -1
    ox = px - cx
    oy = py - cy
    fx = ox + s0 * dx
    fy = oy + s0 * dy
    if fx * fx + fy * fy >= rad * rad:
        return s0
    a = dx * dx + dy * dy
    if a == 0.0:
        return -1.0
    b = 2.0 * (ox * dx + oy * dy)
    c = ox * ox + oy * oy - rad * rad
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        disc = 0.0
    s = (-b + math.sqrt(disc)) / (2.0 * a)
    if s < s0:
        s = s0
    if s <= 1.0:
        return s
    return -1.0


@numba.njit(cache=True, inline="always")
def _advance(px, py, qx, qy, cx, cy, rho, eps, armed):
    """Run the crossing automaton along one segment; returns (new_armed, completed)."""
    dx = qx - px
    dy = qy - py
    s = 0.0
    done = 0
    while True:
        if not armed:
            s = _first_inside(px, py, dx, dy, cx, cy, rho, s)
            if s < 0.0:
                return armed, done
            armed = True
        else:
            s = _first_outside(px, py, dx, dy, cx, cy, eps, s)
            if s < 0.0:
                return armed, done
            done += 1
            armed = False


@numba.njit(nogil=True, cache=True)
def _count_crossings(xs, ys, cx, cy, rho, eps):
    armed = False
    count = 0
    n = xs.shape[0]
    for i in range(n - 1):
        armed, done = _advance(xs[i], ys[i], xs[i + 1], ys[i + 1], cx, cy, rho, eps, armed)
        count += done
    return count


@numba.njit(nogil=True, cache=True)
def _grid_crossings(xs, ys, lo, step, n_cells, rho, eps):
    """Crossing counts at every cell centre of an n_cells x n_cells grid.

    Only segments passing within eps of a centre can change that centre's state,
    so each segment visits the few centres inside its eps-inflated bounding box.
    """
    counts = np.zeros((n_cells, n_cells), dtype=np.int64)
    armed = np.zeros((n_cells, n_cells), dtype=np.bool_)
    n = xs.shape[0]
    for i in range(max(n - 1, 0)):
        px = xs[i]
        py = ys[i]
        qx = xs[i + 1]
        qy = ys[i + 1]
        i0 = int(math.ceil((min(px, qx) - eps - lo) / step - 0.5))
        i1 = int(math.floor((max(px, qx) + eps - lo) / step - 0.5))
        j0 = int(math.ceil((min(py, qy) - eps - lo) / step - 0.5))
        j1 = int(math.floor((max(py, qy) + eps - lo) / step - 0.5))
        if i0 < 0:
            i0 = 0
        if j0 < 0:
            j0 = 0
        if i1 > n_cells - 1:
            i1 = n_cells - 1
        if j1 > n_cells - 1:
            j1 = n_cells - 1
        for a in range(i0, i1 + 1):
            cx = lo + (a + 0.5) * step
            for b in range(j0, j1 + 1):
                cy = lo + (b + 0.5) * step
                st, done = _advance(px, py, qx, qy, cx, cy, rho, eps, armed[a, b])
                armed[a, b] = st
                counts[a, b] += done
    return counts


# --------------------------------------------------------------------------- operations

def _check_path(path: PlanarPath, kill_radius: float):
    if not math.isclose(path.R, kill_radius, rel_tol=1e-12):
        raise DomainError(f"path killed at R={path.R}, query expects {kill_radius}")


def count_crossings(path: PlanarPath, query: CrossingQuery) -> CrossingRecord:
    """Number of completed inner-to-outer crossings around ``query.x``."""
    _check_path(path, query.kill_radius)
    _, ps = path.polyline()
    ps = np.ascontiguousarray(ps)
    n = _count_crossings(ps[:, 0].copy(), ps[:, 1].copy(), query.x[0], query.x[1],
                         query.inner, query.eps)
    resolved = path.dt_nominal <= query.required_dt() * (1 + 1e-12)
    return CrossingRecord(query, int(n), bool(resolved))


def fit_local_time(eps_grid, counts):
    """Least-squares slope of counts against ``log(1/eps)``; returns (slope, stderr)."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    counts = np.asarray(counts, dtype=float)
    u = np.log(1.0 / eps_grid)
    if len(u) == 1:
        return float(counts[0] / u[0]), math.nan
    uc = u - u.mean()
    sxx = float(uc @ uc)
    slope = float(uc @ (counts - counts.mean()) / sxx)
    if len(u) > 2:
        resid = counts - counts.mean() - slope * uc
        stderr = math.sqrt(float(resid @ resid) / (len(u) - 2) / sxx)
    else:
        stderr = math.nan
    return slope, stderr


def _validate_grid(eps_grid):
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.ndim != 1 or len(eps_grid) == 0:
        raise DomainError("eps_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(eps_grid) >= 0):
        raise DomainError("eps_grid must be strictly decreasing")
    return eps_grid


def resolve_path(path: PlanarPath, queries, max_refine: int = 64) -> PlanarPath:
    """``path`` refined by Brownian bridges until every query is resolved.

    Raises ``BudgetExceededError`` (carrying the queries already resolved) when more
    than ``max_refine``-fold refinement would be needed.
    """
    need = min(q.required_dt() for q in queries)
    if path.dt_nominal <= need * (1 + 1e-12):
        return path
    factor = int(math.ceil(path.dt_nominal / need - 1e-9))
    if factor > max_refine:
        ok = [q for q in queries if path.dt_nominal <= q.required_dt() * (1 + 1e-12)]
        raise BudgetExceededError(
            f"resolving eps={min(q.eps for q in queries)} needs {factor}-fold refinement "
            f"(budget {max_refine})", partial=ok)
    return refine_uniform(path, path.dt_nominal / factor, derive_seed(path.seed, 0x5EF1))


def estimate_local_time(path: PlanarPath, x, eps_grid, inner_ratio: float = INNER_RATIO,
                        max_refine: int = 64) -> LocalTimeEstimate:
    """Crossing counts over ``eps_grid`` and the fitted local-time rate ``a_hat``.

    If the path is too coarse for the smallest radius it is refined by Brownian
    bridges (at most ``max_refine``-fold); beyond that a ``BudgetExceededError``
    carries the estimate restricted to the radii the path already resolves.
    """
    eps_grid = _validate_grid(eps_grid)
    queries = [CrossingQuery(x, e, inner_ratio, path.R) for e in eps_grid]
    try:
        path = resolve_path(path, queries, max_refine)
    except BudgetExceededError as err:
        partial = None
        if err.partial:
            cnt = np.array([count_crossings(path, q).count for q in err.partial])
            grid = np.array([q.eps for q in err.partial])
            slope, se = fit_local_time(grid, cnt)
            partial = LocalTimeEstimate(tuple(x), grid, cnt, slope, se)
        raise BudgetExceededError(str(err), partial=partial) from None
    counts = np.array([count_crossings(path, q).count for q in queries], dtype=np.int64)
    slope, se = fit_local_time(eps_grid, counts)
    return LocalTimeEstimate(tuple(float(v) for v in x), eps_grid, counts, slope, se)


def grid_centres(R: float, grid_step: float):
    """Cell centres of a square grid over [-R, R]^2 (one cell if the step exceeds 2R)."""
    n = max(1, int(math.floor(2 * R / grid_step + 1e-9)))
    step = 2 * R / n if grid_step > 2 * R else grid_step
    lo = -n * step / 2.0
    return lo, step, n


def scan_thick_points(path: PlanarPath, grid_step: float, eps: float, top_k: int,
                      inner_ratio: float = INNER_RATIO):
    """Top ``top_k`` grid centres by crossing count at scale ``eps``.

    Ties are broken by lexicographic order of the point. Centres closer than ``eps``
    to the kill circle are not valid queries and are skipped.
    """
    if grid_step <= 0 or top_k < 0:
        raise DomainError("grid_step must be positive and top_k non-negative")
    lo, step, n = grid_centres(path.R, grid_step)
    _, ps = path.polyline()
    counts = _grid_crossings(np.ascontiguousarray(ps[:, 0]), np.ascontiguousarray(ps[:, 1]),
                             lo, step, n, eps * inner_ratio, eps)
    c = lo + (np.arange(n) + 0.5) * step
    gx, gy = np.meshgrid(c, c, indexing="ij")
    valid = np.hypot(gx, gy) < path.R - eps
    if not valid.any():
        # the single-cell grid centre is the origin, always valid for eps < R
        raise DomainError("no grid centre is a valid query at this eps")
    gx, gy, cnt = gx[valid], gy[valid], counts[valid]
    order = np.lexsort((gy, gx, -cnt))
    return [((float(gx[i]), float(gy[i])), int(cnt[i])) for i in order[:top_k]]
