"""Gauge functions, time sets and bounds on phi-Hausdorff measure.

Only bounds are computed here: ``premeasure`` covers a set greedily and so gives an
upper estimate of the delta-premeasure, and ``rogers_taylor_lower`` converts a density
bound for a measure into a lower estimate. Neither claims the true infimum.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ResolutionError
from .path_engine import PlanarPath

E_INV = math.exp(-1.0)
TRIPLE_LOG_SMAX = math.exp(-math.e)


@dataclass(frozen=True)
class GaugeFunction:
    """A Hausdorff gauge, evaluable on ``(0, s_max]``.

    kinds:
      ``log_power``  ``log(1/s) ** -alpha``
      ``triple_log`` ``log log log(1/s) / log(1/s)``
      ``linear``     ``s``
      ``tabulated``  piecewise-linear through ``table`` (increasing knots)
    """

    kind: str
    alpha: float = 1.0
    s_max: float | None = None
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("log_power", "triple_log", "linear", "tabulated"):
            raise DomainError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "log_power" and not self.alpha > 0:
            raise DomainError("log_power gauge needs alpha > 0")
        if self.kind == "tabulated":
            if self.table is None or len(self.table) < 2:
                raise DomainError("tabulated gauge needs at least two (s, value) knots")
            tab = np.asarray(self.table, dtype=float)
            if np.any(np.diff(tab[:, 0]) <= 0) or np.any(np.diff(tab[:, 1]) < 0) or tab[0, 0] < 0:
                raise DomainError("tabulated gauge knots must be increasing in s and non-decreasing in value")
            object.__setattr__(self, "table", tuple(map(tuple, tab)))
        if self.s_max is None:
            default = {"log_power": E_INV, "triple_log": TRIPLE_LOG_SMAX, "linear": E_INV,
                       "tabulated": self.table[-1][0] if self.table else None}[self.kind]
            object.__setattr__(self, "s_max", default)

    @classmethod
    def log_power(cls, alpha):
        return cls("log_power", alpha=alpha)

    @classmethod
    def triple_log(cls):
        return cls("triple_log")

    @classmethod
    def linear(cls, s_max=E_INV):
        return cls("linear", s_max=s_max)

    @classmethod
    def tabulated(cls, table):
        return cls("tabulated", table=tuple(map(tuple, table)))

    @property
    def monotone_below(self) -> float:
        """Largest ``s`` such that the gauge is increasing on ``(0, s]``.

        The triple-log gauge is evaluable up to ``exp(-e)`` but only increases once
        ``log log log L = 1 / (log L * log log L)`` with ``L = log(1/s)``, i.e. for
        ``s`` below about ``3e-15``.
        """
        if self.kind == "triple_log":
            return _triple_log_turning_point()
        return self.s_max

    def __call__(self, s):
        return gauge_eval(self, s)


@functools.lru_cache(maxsize=None)
def _triple_log_turning_point():
    # in y = log L: 1 / (y log y) - log log y = 0
    y = brentq(lambda y: 1.0 / (y * math.log(y)) - math.log(math.log(y)), math.e * 1.0001, 50.0)
    return math.exp(-math.exp(y))


def gauge_eval(g: GaugeFunction, s):
    """Evaluate ``g`` at ``s`` (scalar or array); every nested log is guarded."""
    arr = np.asarray(s, dtype=float)
    if np.any(~(arr > 0)) or np.any(arr > g.s_max):
        raise DomainError(f"gauge {g.kind} evaluated outside (0, {g.s_max}]")
    if g.kind == "linear":
        out = arr.copy()
    elif g.kind == "log_power":
        L = np.log(1.0 / arr)
        if np.any(L <= 0):
            raise DomainError("log(1/s) must be positive")
        out = L ** (-g.alpha)
    elif g.kind == "triple_log":
        L = np.log(1.0 / arr)
        if np.any(L <= 1):
            raise DomainError("triple-log gauge needs log(1/s) > 1")
        LL = np.log(L)
        if np.any(LL < 1):
            raise DomainError("triple-log gauge needs log log(1/s) >= 1")
        out = np.log(LL) / L
    else:
        tab = np.asarray(g.table)
        if np.any(arr < tab[0, 0]):
            raise DomainError("tabulated gauge evaluated below its first knot")
        out = np.interp(arr, tab[:, 0], tab[:, 1])
    return float(out) if np.ndim(s) == 0 else out


# --------------------------------------------------------------------------- time sets

@dataclass(frozen=True, eq=False)
class TimeSet:
    """Finite union of closed intervals in ``[0, inf)``, kept sorted and merged."""

    intervals: np.ndarray
    note: str = field(default="")

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if np.any(iv[:, 1] < iv[:, 0]) or (len(iv) and iv[:, 0].min() < 0):
            raise DomainError("intervals must satisfy 0 <= start <= end")
        iv = _merge(iv)
        iv.setflags(write=False)
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def empty(cls, note=""):
        return cls(np.empty((0, 2)), note)

    @classmethod
    def points(cls, ts, note=""):
        ts = np.asarray(ts, dtype=float)
        return cls(np.column_stack([ts, ts]), note)

    def __len__(self):
        return len(self.intervals)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    def is_empty(self) -> bool:
        return len(self.intervals) == 0

    def contains(self, t) -> bool:
        iv = self.intervals
        k = np.searchsorted(iv[:, 0], t, side="right") - 1
        return bool(k >= 0 and t <= iv[k, 1])

    def issubset(self, other: "TimeSet") -> bool:
        for a, b in self.intervals:
            k = np.searchsorted(other.intervals[:, 0], a, side="right") - 1
            if k < 0 or b > other.intervals[k, 1]:
                return False
        return True

    def cover_count(self, length: float) -> int:
        """Intervals of exactly ``length`` used by the greedy left-to-right cover."""
        return greedy_cover_count(self.intervals[:, 0], self.intervals[:, 1], length)

    def to_csv(self, fh):
        fh.write("start,end\n")
        for a, b in self.intervals:
            fh.write(f"{a!r},{b!r}\n")


def _merge(iv):
    if len(iv) == 0:
        return np.empty((0, 2))
    iv = iv[np.lexsort((iv[:, 1], iv[:, 0]))]
    out = [list(iv[0])]
    for a, b in iv[1:]:
        if a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return np.array(out, dtype=float)


@numba.njit(cache=True)
def greedy_cover_count(starts, ends, length):
    """Greedy cover of sorted intervals by closed intervals of a fixed length."""
    count = 0
    cover_end = -np.inf
    for i in range(starts.shape[0]):
        a = starts[i]
        b = ends[i]
        if b <= cover_end:
            continue
        s = a if a > cover_end else cover_end
        k = int(math.ceil((b - s) / length))
        if k == 0:
            k = 1
        count += k
        cover_end = s + k * length
    return count


def premeasure(E: TimeSet, delta: float, g: GaugeFunction) -> float:
    """Greedy-cover UPPER estimate of the delta-premeasure of ``E`` under gauge ``g``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    n = E.cover_count(delta)
    return n * gauge_eval(g, delta) if n else 0.0


# --------------------------------------------------------------------------- measures

@dataclass(frozen=True, eq=False)
class MeasureOnTimeSet:
    """Finite measure given by a right-continuous, piecewise-linear distribution function.

    ``knots_t`` is non-decreasing; a repeated time encodes an atom (left value, then
    right value). The measure is zero before the first knot and constant after the last.
    """

    knots_t: np.ndarray
    knots_F: np.ndarray
    support: TimeSet | None = None

    def __post_init__(self):
        t = np.asarray(self.knots_t, dtype=float)
        F = np.asarray(self.knots_F, dtype=float)
        if t.shape != F.shape or t.ndim != 1 or len(t) == 0:
            raise DomainError("knots must be matching 1-d arrays")
        if np.any(np.diff(t) < 0) or np.any(np.diff(F) < 0) or F[0] < 0:
            raise DomainError("distribution function must be non-decreasing and non-negative")
        object.__setattr__(self, "knots_t", t)
        object.__setattr__(self, "knots_F", F)

    @classmethod
    def lebesgue(cls, a=0.0, b=1.0):
        return cls(np.array([a, b]), np.array([0.0, b - a]), TimeSet(np.array([[a, b]])))

    @classmethod
    def atom(cls, t0, mass=1.0):
        return cls(np.array([t0, t0]), np.array([0.0, mass]), TimeSet.points([t0]))

    @classmethod
    def occupation(cls, E: TimeSet):
        """Lebesgue measure restricted to ``E``."""
        if E.is_empty():
            return cls(np.array([0.0]), np.array([0.0]), E)
        iv = E.intervals
        lengths = iv[:, 1] - iv[:, 0]
        F_end = np.cumsum(lengths)
        F = np.column_stack([F_end - lengths, F_end]).ravel()
        return cls(iv.ravel().copy(), F, E)

    @classmethod
    def from_distribution(cls, ts, Fs, support=None):
        return cls(np.asarray(ts), np.asarray(Fs), support)

    @property
    def total(self) -> float:
        return float(self.knots_F[-1])

    def F(self, t):
        """Right-continuous distribution function ``mu[0, t]`` (mass before first knot is 0)."""
        t = np.asarray(t, dtype=float)
        kt, kF = self.knots_t, self.knots_F
        idx = np.searchsorted(kt, t, side="right")
        out = np.empty_like(t)
        before = idx == 0
        after = idx >= len(kt)
        mid = ~(before | after)
        out[before] = 0.0
        out[after] = kF[-1]
        j = idx[mid]
        t0, t1 = kt[j - 1], kt[j]
        F0, F1 = kF[j - 1], kF[j]
        out[mid] = F0 + (F1 - F0) * (t[mid] - t0) / (t1 - t0)
        return out

    def F_left(self, t):
        """Left limit ``mu[0, t)``."""
        t = np.asarray(t, dtype=float)
        kt, kF = self.knots_t, self.knots_F
        idx = np.searchsorted(kt, t, side="left")
        out = np.empty_like(t)
        before = idx == 0
        after = idx >= len(kt)
        mid = ~(before | after)
        out[before] = 0.0
        out[after] = kF[-1]
        j = idx[mid]
        t0, t1 = kt[j - 1], kt[j]
        F0, F1 = kF[j - 1], kF[j]
        out[mid] = F0 + (F1 - F0) * (t[mid] - t0) / (t1 - t0)
        return out

    def interval_mass(self, t, eps):
        """``mu[t, t + eps]`` for the closed interval."""
        return self.F(np.asarray(t) + eps) - self.F_left(t)

    def atoms(self):
        kt, kF = self.knots_t, self.knots_F
        rep = np.flatnonzero((np.diff(kt) == 0) & (np.diff(kF) > 0))
        return kt[rep], np.diff(kF)[rep]

    def quantiles(self, n: int):
        """Deterministic sample ``t_j = inf{t : F(t) >= (j + 1/2) total / n}``."""
        u = (np.arange(n) + 0.5) / n * self.total
        kt, kF = self.knots_t, self.knots_F
        j = np.searchsorted(kF, u, side="left")
        j = np.clip(j, 1, len(kF) - 1)
        F0, F1 = kF[j - 1], kF[j]
        t0, t1 = kt[j - 1], kt[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(F1 > F0, (u - F0) / (F1 - F0), 0.0)
        return np.where(F1 > F0, t0 + w * (t1 - t0), t1)


@dataclass(frozen=True)
class RogersTaylorBound:
    value: float
    fraction_in_A: float
    alpha: float
    n_samples: int
    note: str = ("estimate of a lower bound: the limsup is taken over a finite eps grid, "
                 "which under-approximates it and biases A, and hence the bound, upwards")


def rogers_taylor_lower(E: TimeSet, mu: MeasureOnTimeSet, g: GaugeFunction, alpha: float,
                        eps_grid, n_samples: int = 4096) -> RogersTaylorBound:
    """Mass-distribution lower estimate ``mu(A) / alpha`` of the phi-measure of ``E``.

    ``A`` holds the points ``t`` of ``E`` whose density ratio ``mu[t, t+eps] / g(eps)``
    stays below ``alpha`` over ``eps_grid``. Atoms of ``mu`` have an infinite limsup
    and are never in ``A``.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.size == 0:
        raise DomainError("eps_grid is empty")
    if np.any(np.diff(eps_grid) >= 0):
        raise DomainError("eps_grid must be strictly decreasing")
    if mu.total == 0:
        return RogersTaylorBound(0.0, 0.0, alpha, 0)
    ts = mu.quantiles(n_samples)
    in_E = np.array([E.contains(t) for t in ts])
    g_eps = gauge_eval(g, eps_grid)
    ratios = mu.interval_mass(ts[:, None], eps_grid[None, :]) / g_eps[None, :]
    in_A = in_E & (ratios.max(axis=1) < alpha)
    atom_t, _ = mu.atoms()
    if atom_t.size:
        in_A &= ~np.isin(ts, atom_t)
    frac = float(in_A.mean())
    return RogersTaylorBound(frac * mu.total / alpha, frac, alpha, n_samples)


# --------------------------------------------------------------------------- visit sets

@numba.njit(nogil=True, cache=True)
def _disc_visits(ts, xs, ys, cx, cy, eta):
    n = ts.shape[0]
    out = np.empty((max(n, 1), 2))
    m = 0
    r2 = eta * eta
    if n == 1:
        if (xs[0] - cx) ** 2 + (ys[0] - cy) ** 2 <= r2:
            out[0, 0] = ts[0]
            out[0, 1] = ts[0]
            m = 1
        return out[:m]
    for i in range(n - 1):
        ox = xs[i] - cx
        oy = ys[i] - cy
        dx = xs[i + 1] - xs[i]
        dy = ys[i + 1] - ys[i]
        a = dx * dx + dy * dy
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - r2
        if a == 0.0:
            if c > 0.0:
                continue
            s0, s1 = 0.0, 1.0
        else:
            disc = b * b - 4.0 * a * c
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            s0 = (-b - sq) / (2.0 * a)
            s1 = (-b + sq) / (2.0 * a)
            if s0 < 0.0:
                s0 = 0.0
            if s1 > 1.0:
                s1 = 1.0
            if s0 > s1:
                continue
        h = ts[i + 1] - ts[i]
        a0 = ts[i] + s0 * h
        a1 = ts[i] + s1 * h
        if m > 0 and a0 <= out[m - 1, 1]:
            if a1 > out[m - 1, 1]:
                out[m - 1, 1] = a1
        else:
            if m == out.shape[0]:
                grown = np.empty((2 * m, 2))
                grown[:m] = out[:m]
                out = grown
            out[m, 0] = a0
            out[m, 1] = a1
            m += 1
    return out[:m]


def visit_time_set(path: PlanarPath, x, eta: float) -> TimeSet:
    """``{t : |B_t - x| <= eta}`` on the linearly interpolated path."""
    if not eta > 0:
        raise DomainError("eta must be positive")
    if eta < math.sqrt(path.dt_nominal) * (1 - 1e-12):
        raise ResolutionError(f"eta={eta} is below the path resolution sqrt(dt)={math.sqrt(path.dt_nominal)}")
    ts, ps = path.polyline()
    iv = _disc_visits(np.ascontiguousarray(ts), np.ascontiguousarray(ps[:, 0]),
                      np.ascontiguousarray(ps[:, 1]), float(x[0]), float(x[1]), float(eta))
    return TimeSet(iv, note=f"eta-visits of ({x[0]}, {x[1]}), eta={eta}")
