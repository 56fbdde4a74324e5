"""Pure-jump subordinators from a Poisson point process of jump sizes.

Jumps are drawn as a Poisson process on ``[0, T] x (0, inf)`` in the pair
(arrival, level u) with unit intensity, visited in increasing ``u``; a jump of level
``u`` has size ``nu_bar^{-1}(u)`` where ``nu_bar`` is the tail of the Levy measure.
Truncating at ``theta_min`` keeps the levels below ``nu_bar(theta_min)``, so every
truncation level sees a prefix of the same random sequence, and lowering
``theta_min`` only adds (smaller) jumps.

Sums are strict: ``xi(theta)`` counts the jumps with arrival ``< theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DomainError, ToleranceError
from .seeding import derive_seed, make_rng, map_ordered

LOG_TAIL = "log_tail"
GAMMA = "gamma"
_BLOCK = 64


def exp1_inverse(y):
    """Solve ``E1(x) = y`` for ``x > 0``, elementwise, by Newton's method on ``log E1`` in ``log x``."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("E1 inverse needs y > 0")
    big = y > 0.5
    L = np.empty_like(y)
    L[big] = -np.euler_gamma - y[big]
    L[~big] = np.log(-np.log(y[~big]) + 1.0)
    log_y = np.log(y)
    for _ in range(80):
        x = np.exp(L)
        e1 = special.exp1(x)
        # Newton on log E1, close to linear in x for small y
        step = (np.log(e1) - log_y) * e1 * np.exp(x)
        L = L + step
        if np.all(np.abs(step) < 1e-14 * np.maximum(1.0, np.abs(L))):
            break
    else:
        raise ToleranceError("E1 inverse did not converge", float(np.max(np.abs(step))))
    return np.exp(L)


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Levy measure of the jump sizes.

    ``log_tail``: ``nu(sigma > theta) = c log(1/theta)`` on ``(theta_min, 1)``.
    ``gamma``: density ``b exp(-beta s) / s``, exponent ``b log(1 + lam/beta)``,
    truncated below ``theta_min`` for sampling.
    """

    kind: str = LOG_TAIL
    c: float = 0.5
    theta_min: float = 1e-8
    b: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in (LOG_TAIL, GAMMA):
            raise DomainError(f"unknown Levy measure kind {self.kind!r}")
        if not (0 < self.theta_min < 1):
            raise DomainError(f"theta_min must lie in (0, 1), got {self.theta_min}")
        if self.kind == LOG_TAIL and not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}")
        if self.kind == GAMMA and not (self.b > 0 and self.beta > 0):
            raise DomainError("gamma spec needs b > 0 and beta > 0")

    @classmethod
    def log_tail(cls, c: float, theta_min: float = 1e-8) -> "LevyMeasureSpec":
        return cls(LOG_TAIL, c=c, theta_min=theta_min)

    @classmethod
    def gamma(cls, b: float = 1.0, beta: float = 1.0, theta_min: float = 1e-8) -> "LevyMeasureSpec":
        return cls(GAMMA, b=b, beta=beta, theta_min=theta_min)

    @property
    def mass(self) -> float:
        """``nu(sigma > theta_min)``, the jump rate per unit of local time."""
        if self.kind == LOG_TAIL:
            return self.c * math.log(1.0 / self.theta_min)
        return self.b * float(special.exp1(self.beta * self.theta_min))

    def tail(self, theta):
        """``nu(sigma > theta)`` of the truncated measure."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == LOG_TAIL:
            th = np.clip(theta, self.theta_min, 1.0)
            return self.c * np.log(1.0 / th)
        th = np.maximum(theta, self.theta_min)
        return self.b * special.exp1(self.beta * th)

    def size_from_level(self, u):
        """Inverse of the tail: the size whose tail mass is ``u``."""
        u = np.asarray(u, dtype=float)
        if self.kind == LOG_TAIL:
            return np.exp(-u / self.c)
        return exp1_inverse(u / self.b) / self.beta

    def exponent(self, lam: float) -> float:
        """Laplace exponent used by the LIL statistic.

        Truncated quadrature for ``log_tail``; the untruncated closed form for ``gamma``.
        """
        if self.kind == GAMMA:
            return self.b * math.log1p(lam / self.beta)
        return truncated_exponent(self, lam)


def truncated_exponent(spec: LevyMeasureSpec, lam: float, rel_tol: float = 1e-10) -> float:
    """``int (1 - exp(-lam s)) nu(ds)`` over ``s > theta_min``, by quadrature in ``log s``."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    lo = math.log(spec.theta_min)
    if spec.kind == LOG_TAIL:
        f = lambda v: spec.c * -math.expm1(-lam * math.exp(v))
        hi = 0.0
    else:
        f = lambda v: spec.b * -math.expm1(-lam * math.exp(v)) * math.exp(-spec.beta * math.exp(v))
        hi = math.log(700.0 / spec.beta)
    # split where lam*s ~ 1 so the quadrature sees the knee
    knee = min(max(-math.log(lam), lo), hi) if lam > 0 else hi
    val = 0.0
    err = 0.0
    for a, b in ((lo, knee), (knee, hi)):
        if b > a:
            v, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=rel_tol, limit=200)
            val += v
            err += e
    if err > 1e3 * rel_tol * max(val, 1e-300):
        raise ToleranceError(f"truncated exponent at lam={lam}", err)
    return val


@dataclass(frozen=True)
class SubordinatorPath:
    """Jumps ``(arrival, size)`` on ``[0, T]`` sorted by arrival."""

    T: float
    arrivals: np.ndarray
    sizes: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.asarray(self.arrivals, dtype=float)
        z = np.asarray(self.sizes, dtype=float)
        if s.shape != z.shape:
            raise DomainError("arrivals and sizes differ in length")
        if s.size and np.any(np.diff(s) < 0):
            order = np.argsort(s, kind="stable")
            s, z = s[order], z[order]
        c = np.cumsum(z)
        for name, arr in (("arrivals", s), ("sizes", z), ("cumulative", c)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_jumps(self) -> int:
        return int(self.arrivals.size)

    @property
    def total(self) -> float:
        """``xi_T`` including jumps at ``T``."""
        return float(self.cumulative[-1]) if self.n_jumps else 0.0

    def xi(self, theta):
        """Strict sum of sizes with arrival ``< theta``."""
        theta = np.asarray(theta, dtype=float)
        j = np.searchsorted(self.arrivals, theta, side="left")
        padded = np.concatenate(([0.0], self.cumulative))
        out = padded[j]
        return float(out) if out.ndim == 0 else out

    def inverse(self, t):
        """``S(t) = sup{theta : xi(theta) <= t}`` and a censoring flag.

        ``S(t)`` is the arrival of the first jump whose inclusive cumulative sum
        exceeds ``t``; when no such jump exists the horizon ``T`` is returned with
        ``censored = True``.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("inverse needs t >= 0")
        j = np.searchsorted(self.cumulative, t, side="right")
        censored = j >= self.n_jumps
        padded = np.concatenate((self.arrivals, [self.T]))
        S = padded[j]
        if S.ndim == 0:
            return float(S), bool(censored)
        return S, censored

    def scaled(self, k: float) -> "SubordinatorPath":
        """Same arrivals, sizes multiplied by ``k``."""
        return SubordinatorPath(self.T, self.arrivals, self.sizes * k)


@dataclass(frozen=True)
class InverseLocalTime:
    source: SubordinatorPath

    def __call__(self, t):
        return self.source.inverse(t)


def inverse(path: SubordinatorPath, t):
    return path.inverse(t)


def sample_subordinator(spec: LevyMeasureSpec, T: float, seed: int) -> SubordinatorPath:
    """Jumps of the truncated subordinator on ``[0, T]``."""
    if T < 0:
        raise DomainError(f"horizon must be nonnegative, got {T}")
    if T == 0:
        return SubordinatorPath(0.0, np.empty(0), np.empty(0))
    rng = make_rng(seed)
    M = spec.mass
    levels, arrivals = [], []
    u = 0.0
    while u < M:
        gaps = rng.exponential(1.0 / T, _BLOCK)
        arr = rng.uniform(0.0, T, _BLOCK)
        lv = u + np.cumsum(gaps)
        keep = lv < M
        levels.append(lv[keep])
        arrivals.append(arr[keep])
        u = lv[-1]
    levels = np.concatenate(levels)
    arrivals = np.concatenate(arrivals)
    sizes = spec.size_from_level(levels) if levels.size else levels
    order = np.argsort(arrivals, kind="stable")
    return SubordinatorPath(float(T), arrivals[order], sizes[order])


def sample_many(spec: LevyMeasureSpec, T: float, n: int, master_seed: int, threads: int = 1,
                stream: int = 5):
    """``n`` independent paths with replica seeds derived from ``master_seed``."""
    seeds = [derive_seed(master_seed, stream, i) for i in range(n)]
    return map_ordered(lambda s: sample_subordinator(spec, T, s), seeds, threads)


def laplace_mc(xis, lam: float, t: float):
    """``-(1/t) log mean exp(-lam xi_t)`` and its delta-method standard error.

    Also returns the plain mean of ``exp(-lam xi_t)`` and its standard error.
    """
    e = np.exp(-lam * np.asarray(xis, dtype=float))
    m = float(e.mean())
    se = float(e.std(ddof=1) / math.sqrt(e.size))
    return -math.log(m) / t, se / (m * t), m, se


def _loglog_abs(phi: float) -> float:
    if not phi > 0:
        raise DomainError(f"Phi = {phi} must be positive for the gauge")
    L = abs(math.log(phi))
    if L == 0:
        raise DomainError("log Phi = 0 at this eps")
    return math.log(L)


def lil_factor(phi, t: float) -> float:
    """``Phi(LL/t) / LL`` with ``LL = log|log Phi(1/t)|``; the path-free part of the statistic."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    LL = _loglog_abs(phi(1.0 / t))
    if not LL > 0:
        raise DomainError(f"log|log Phi(1/t)| = {LL:.4g} is not positive at t={t}")
    return phi(LL / t) / LL


def lil_statistic(spec: LevyMeasureSpec, phi, t: float, path: SubordinatorPath) -> float:
    """``S(t) Phi(LL/t) / LL`` with ``LL = log|log Phi(1/t)|``; ``phi=None`` uses ``spec.exponent``."""
    phi = spec.exponent if phi is None else phi
    S, _ = path.inverse(t)
    return S * lil_factor(phi, t)


def dyadic_levels(k_hi: int, k_lo: int) -> np.ndarray:
    """``2^-k`` for ``k = k_hi .. k_lo``, decreasing."""
    return 2.0 ** -np.arange(k_hi, k_lo + 1, dtype=float)


@dataclass(frozen=True)
class LimsupSample:
    t_levels: np.ndarray
    statistics: np.ndarray  # replica x level
    censored: np.ndarray
    running_max: np.ndarray  # replica x level, max over levels[: j + 1]

    @property
    def maxima(self) -> np.ndarray:
        if self.running_max.shape[1] == 0:
            return np.zeros(self.running_max.shape[0])
        return self.running_max[:, -1]

    def median_max_through(self, t_floor: float) -> float:
        j = int(np.searchsorted(-self.t_levels, -t_floor, side="right")) - 1
        return float(np.median(self.running_max[:, j]))


def empirical_limsup(spec: LevyMeasureSpec, phi, t_levels, n: int, seed: int, T: float = 4.0,
                     threads: int = 1) -> LimsupSample:
    """Per-replica statistics over a decreasing grid of ``t`` and their running maxima."""
    t_levels = np.asarray(t_levels, dtype=float)
    if t_levels.size > 1 and np.any(np.diff(t_levels) >= 0):
        raise DomainError("t_levels must be strictly decreasing")
    phi = spec.exponent if phi is None else phi
    factors = np.array([lil_factor(phi, float(t)) for t in t_levels])
    paths = sample_many(spec, T, n, seed, threads, stream=6)
    stats = np.empty((n, t_levels.size))
    cens = np.zeros((n, t_levels.size), dtype=bool)
    for i, p in enumerate(paths):
        S, c = p.inverse(t_levels)
        stats[i] = S * factors
        cens[i] = c
    running = np.maximum.accumulate(stats, axis=1) if t_levels.size else stats
    return LimsupSample(t_levels, stats, cens, running)
