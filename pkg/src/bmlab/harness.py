"""Running experiments: CSV persistence, plot data and the run manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import BMLabError
from .experiments import REGISTRY, ExperimentResult, Table


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    version: str
    wall_time: float
    summary: dict
    assertions: dict
    files: list = field(default_factory=list)  # (relative path, sha256, rows)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def lines(self) -> list[str]:
        head = {"experiment": self.experiment, "config_hash": self.config_hash,
                "version": self.version, "wall_time": self.wall_time,
                "passed": self.passed, "summary": self.summary, "assertions": self.assertions}
        out = [json.dumps(head, sort_keys=True, default=_json_default)]
        out += [json.dumps({"file": f, "sha256": d, "rows": n}, sort_keys=True) for f, d, n in self.files]
        return out


class ExperimentError(BMLabError):
    """A module error raised while running a named experiment."""


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(type(v).__name__)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write(path: Path, text: str) -> str:
    """Write ``text`` via a temporary file and rename; returns its sha256."""
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


def table_text(table: Table, comment_prefix: str | None = None) -> str:
    buf = io.StringIO()
    if comment_prefix:
        for c in table.comments:
            buf.write(f"{comment_prefix} {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit_plotdata(results: ExperimentResult | None, kind: str, out_dir) -> list[Path]:
    """Plain-text plot data with ``#`` header comments naming the axes and the check."""
    if results is None:
        raise ExperimentError(f"no results to emit for {kind!r}")
    out_dir = Path(out_dir)
    written = []
    for table in results.plots:
        path = out_dir / f"{kind}.{table.name}.dat"
        lines = [f"# experiment: {kind}"]
        lines += [f"# {c}" for c in table.comments]
        lines.append("# columns: " + " ".join(table.header))
        lines += [" ".join(_cell(v) for v in row) for row in table.rows]
        atomic_write(path, "\n".join(lines) + "\n")
        written.append(path)
    return written


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    fn = REGISTRY[cfg.experiment]
    try:
        return fn(cfg)
    except BMLabError as e:
        raise ExperimentError(f"{cfg.experiment}: {type(e).__name__}: {e}") from e


def run(cfg: ExperimentConfig, write: bool = True) -> tuple[RunManifest, ExperimentResult]:
    """Run the configured experiment; with ``write`` persist data, plot data and manifest."""
    cfg.validate()
    t0 = time.perf_counter()
    res = run_experiment(cfg)
    wall = time.perf_counter() - t0
    manifest = RunManifest(cfg.experiment, cfg.digest(), __version__, wall,
                           res.summary, res.assertions)
    if write:
        out = Path(cfg.out) / cfg.experiment
        for table in res.tables:
            rel = f"{table.name}.csv"
            digest = atomic_write(out / rel, table_text(table, "#"))
            manifest.files.append((rel, digest, len(table.rows)))
        for path in emit_plotdata(res, cfg.experiment, out):
            manifest.files.append((path.name, hashlib.sha256(path.read_bytes()).hexdigest(), None))
        atomic_write(out / "config.ini", cfg.to_text())
        atomic_write(out / "manifest.jsonl", "\n".join(manifest.lines()) + "\n")
    return manifest, res


def load_config(path, experiment=None, seed=None, threads=None, out=None) -> ExperimentConfig:
    cfg = ExperimentConfig.load(path) if path else ExperimentConfig()
    run_kw = {}
    if experiment is not None:
        run_kw["experiment"] = experiment
    if seed is not None:
        run_kw["seed"] = int(seed)
    if threads is not None:
        run_kw["threads"] = int(threads)
    env_out = os.environ.get("BMLAB_OUT")
    if env_out:
        run_kw["out"] = env_out
    elif out is not None:
        run_kw["out"] = str(out)
    return cfg.replace("run", **run_kw) if run_kw else cfg.validate()
