import numpy as np
import pytest

from bmlab.path_engine import PlanarPath


def make_path(points, dt, R=1.0, exit_=None, seed=0):
    """PlanarPath through the given interior samples at spacing ``dt``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    times = np.arange(len(pts), dtype=float) * dt
    return PlanarPath(tuple(pts[0]), float(R), times, pts.copy(), exit_, seed, float(dt))


def radial_walk(waypoints, step):
    """Straight-line polyline through ``waypoints`` sampled every ``step`` in space."""
    out = [np.asarray(waypoints[0], dtype=float)]
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        n = max(1, int(np.ceil(np.hypot(*(b - a)) / step)))
        for j in range(1, n + 1):
            out.append(a + (b - a) * j / n)
    return np.array(out)


@pytest.fixture
def synthetic():
    return make_path


SMALL = {
    "path_engine": dict(n_paths=50, dt=1e-3, annulus_n=2000, annulus_dt=1e-4),
    "crossing_stats": dict(n_paths=3, dt=1e-5, eps_grid=[0.1, 0.05], grid_step=0.1),
    "cube_covering": dict(level=3, n_replicas=300, k_max=10, min_successes=5, covering_seeds=3,
                          m_max=6, covering_R=1.0),
    "subordinator_lab": dict(laplace_n=500, lil_replicas=10, lil_k_mid=10, lil_k_lo=20),
    "gauge_measure": dict(n_paths=5, dt=1e-3),
}


def small_config(experiment, seed=7, threads=1, out="bmlab_out"):
    """Default config shrunk so every experiment runs in a few seconds."""
    from bmlab.config import ExperimentConfig

    cfg = ExperimentConfig().replace("run", experiment=experiment, seed=seed, threads=threads, out=out)
    for sec, kw in SMALL.items():
        cfg = cfg.replace(sec, **kw)
    return cfg
