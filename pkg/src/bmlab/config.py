"""Experiment configuration: flat ``key = value`` text with one section per module.

Every key has a typed default; unknown sections or keys are rejected and every
parse error names the offending line.
"""
from __future__ import annotations

import configparser
import copy
import hashlib
import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError

EXPERIMENTS = (
    "exit-stats", "crossings", "thick-scan", "theta-fit", "covering",
    "phi-asymptotics", "tail-asymptotics", "lil", "hausdorff-bounds",
)

DEFAULTS: dict[str, dict] = {
    "run": {
        "experiment": "exit-stats",
        "seed": 12345,
        "threads": 1,
        "out": "bmlab_out",
    },
    "path_engine": {
        "R": 1.0,
        "dt": 1e-4,
        "n_paths": 2000,
        "start": [0.0, 0.0],
        "annulus_inner": 0.01,
        "annulus_outer": 2.0,
        "annulus_start": 0.2,
        "annulus_dt": 1e-5,
        "annulus_n": 100000,
    },
    "crossing_stats": {
        "x": [0.1, 0.0],
        "eps_grid": [0.1, 0.05, 0.02, 0.01],
        "inner_ratio": math.exp(-1.0),
        "dt": 1e-6,
        "max_refine": 64,
        "n_paths": 20,
        "grid_step": 0.05,
        "thick_eps": 0.02,
        "top_k": 10,
    },
    "cube_covering": {
        "level": 5,
        "corner": [0.25, 0.25],
        "z": [0.0, 0.0],
        "R": 2.0,
        "k_max": 40,
        "n_replicas": 10000,
        "min_successes": 30,
        "covering_R": 2.0,
        "m_min": 3,
        "m_max": 9,
        "covering_seeds": 100,
    },
    "excursion_calculus": {
        "a": 0.4,
        "delta": 0.5,
        "theta_grid": [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12],
        "lambda_grid": [1e1, 1e2, 1e3, 1e4, 1e6, 1e8, 1e10, 1e12],
        "eps_grid": [1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12],
    },
    "subordinator_lab": {
        "kind": "gamma",
        "c": 0.5,
        "theta_min": 1e-6,
        "b": 1.0,
        "beta": 1.0,
        "laplace_n": 100000,
        "lambdas": [0.5, 1.0, 5.0],
        "times": [0.5, 1.0],
        "lil_theta_min": 1e-20,
        "lil_k_hi": 5,
        "lil_k_mid": 20,
        "lil_k_lo": 40,
        "lil_replicas": 200,
        "lil_horizon": 4.0,
    },
    "gauge_measure": {
        "visit_x": [0.3, 0.2],
        "eta": 0.1,
        "dt": 1e-4,
        "n_paths": 1000,
        "alphas": [2.0, 4.0, 8.0],
        "rt_eps_grid": [1e-2, 5e-3, 2e-3, 1e-3],
        "deltas": [1e-1, 1e-2, 1e-3],
    },
}

_EXECUTION_KEYS = ("threads", "out")

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s]+)\s*[=:]")


def _format(v) -> str:
    if isinstance(v, list):
        return ", ".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(raw: str, default, where: str):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false"):
                raise ValueError(raw)
            return low == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            parts = [p for p in (s.strip() for s in raw.split(",")) if p]
            return [float(p) for p in parts]
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {type(default).__name__}") from None


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def experiment(self) -> str:
        return self.values["run"]["experiment"]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def threads(self) -> int:
        return self.values["run"]["threads"]

    @property
    def out(self) -> str:
        return self.values["run"]["out"]

    def replace(self, section: str, **kw) -> "ExperimentConfig":
        new = ExperimentConfig(copy.deepcopy(self.values))
        for k, v in kw.items():
            if k not in new.values[section]:
                raise ConfigError(f"unknown key {section}.{k}")
            new.values[section][k] = v
        new.validate()
        return new

    def validate(self):
        run = self.values["run"]
        if run["experiment"] not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {run['experiment']!r}; choose from {', '.join(EXPERIMENTS)}")
        if run["threads"] < 1:
            raise ConfigError("threads must be at least 1")
        return self

    def to_text(self) -> str:
        lines = []
        for sec, kv in self.values.items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {_format(v)}" for k, v in kv.items())
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        """sha256 of the settings that affect results; output dir and thread count excluded."""
        vals = copy.deepcopy(self.values)
        for k in _EXECUTION_KEYS:
            vals["run"].pop(k)
        return hashlib.sha256(ExperimentConfig(vals).to_text().encode()).hexdigest()

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text, source=source)
        except configparser.Error as e:
            raise ConfigError(f"{source}: {e}") from None
        lines = _key_lines(text)
        cfg = cls()
        for sec in cp.sections():
            if sec not in DEFAULTS:
                raise ConfigError(f"{source}:{lines.get((sec, None), '?')}: unknown section [{sec}]")
            for key, raw in cp.items(sec):
                where = f"{source}:{lines.get((sec, key), '?')}"
                if key not in DEFAULTS[sec]:
                    raise ConfigError(f"{where}: unknown key {key!r} in [{sec}]")
                cfg.values[sec][key] = _parse(raw, DEFAULTS[sec][key], where)
        try:
            return cfg.validate()
        except ConfigError as e:
            line = lines.get(("run", "experiment"), "?")
            raise ConfigError(f"{source}:{line}: {e}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        return cls.from_text(text, str(path))


def _key_lines(text: str) -> dict:
    """Line number of every ``(section, key)`` and of each section header ``(section, None)``."""
    out = {}
    sec = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            sec = m.group(1).strip()
            out.setdefault((sec, None), no)
            continue
        m = _KEY_RE.match(line)
        if m and sec is not None:
            out.setdefault((sec, m.group(1)), no)
    return out
