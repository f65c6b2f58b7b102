"""Flat ``key = value`` experiment configuration.

Keys may be dotted (``space.kind``, ``policy.ts_scale``).  Blank lines and
lines starting with ``#`` or ``;`` are ignored.  Every key is checked
against the table below so that typos fail loudly.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .actionspace import Ellipsoid, FiniteSet, PNormBall, UnitSphere
from .policies import PolicyConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "SCENARIOS", "SEED_ENV"]

SEED_ENV = "BANDITLAB_SEED"

SCENARIOS = ("eigen_trace", "dim_sweep", "convex_counterexample", "alb", "clustering", "verify_theory")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(" ", "").split(",") if v)


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _points(text: str) -> tuple:
    return tuple(_floats(row) for row in text.split(";") if row.strip())


def _scale(text: str):
    return "radius" if text.strip() == "radius" else float(text)


def _theta(text: str):
    t = text.strip()
    return t if t in ("e1", "ones") else _floats(t)


# key -> (parser, default)
KEYS = {
    "name": (str, "experiment"),
    "scenario": (str, None),
    "d": (int, 3),
    "n": (int, 8192),
    "trials": (int, 20),
    "master_seed": (int, 0),
    "lambda": (float, 1.0),
    "delta": (float, 0.1),
    "sigma": (float, 1.0),
    "theta": (_theta, "e1"),
    "output.dir": (str, "out"),
    "output.format": (str, "csv+svg"),
    "space.kind": (str, "sphere"),
    "space.p": (float, 10.0),
    "space.radius": (float, 1.0),
    "space.axes": (_floats, None),
    "space.c": (float, 1.0),
    "space.center": (_floats, None),
    "space.points": (_points, None),
    "policy.kind": (str, "lints"),
    "policy.b": (float, 1.0),
    "policy.delta": (float, None),
    "policy.ts_scale": (_scale, 1.0),
    "checkpoints.count": (int, 64),
    "checkpoints.start": (int, 16),
    "trace.tail_fraction": (float, 0.5),
    "trace.threshold": (float, 0.5),
    "band.k_sigma": (float, 3.0),
    "sweep.dims": (_ints, (3, 5, 10)),
    "alb.runs": (int, 50),
    "alb.b_init": (float, 10.0),
    "alb.n1": (int, 256),
    "alb.epochs": (int, 6),
    "alb.theta_norm": (float, 0.5),
    "alb.mode": (str, "exact"),
    "clustering.runs": (int, 50),
    "clustering.agents": (int, 6),
    "clustering.k": (int, 2),
    "clustering.separation": (float, 2.0),
    "clustering.params": (_points, None),
    "clustering.eta": (float, None),
    "clustering.gamma": (float, 0.5),
    "chain.eps_c": (float, 0.1),
}


# defaults that depend on the scenario; explicit keys always win
SCENARIO_DEFAULTS = {
    "convex_counterexample": {"d": 5, "space.kind": "pball", "space.p": 10.0, "theta": "ones"},
    "alb": {"d": 3, "policy.kind": "oful"},
    "clustering": {"d": 2, "n": 2048, "sigma": 0.1, "policy.kind": "oful"},
    "verify_theory": {"d": 3, "n": 4096, "policy.kind": "oful"},
}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        if key not in KEYS:
            raise KeyError(key)
        if key in self.values:
            return self.values[key]
        return SCENARIO_DEFAULTS.get(self.values.get("scenario"), {}).get(key, KEYS[key][1])

    def get(self, key, default=None):
        v = self[key]
        return default if v is None else v

    @property
    def name(self) -> str:
        return self["name"]

    @property
    def scenario(self) -> str:
        return self["scenario"]

    @property
    def seed(self) -> int:
        return self["master_seed"]

    def with_overrides(self, **kv) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in kv.items():
            vals[k.replace("__", ".")] = v
        cfg = ExperimentConfig(vals)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}; got {self.scenario!r}")
        for key in ("d", "n", "trials"):
            if self[key] < 1:
                raise ConfigError(f"{key} must be at least 1")
        if not self["lambda"] > 0:
            raise ConfigError("lambda must be positive")
        if not 0 < self["delta"] <= 1:
            raise ConfigError("delta must lie in (0, 1]")
        if self["sigma"] < 0:
            raise ConfigError("sigma must be non-negative")
        if self["output.format"] not in ("csv", "csv+svg"):
            raise ConfigError("output.format must be csv or csv+svg")
        if self.scenario in ("eigen_trace", "dim_sweep", "convex_counterexample") and self["checkpoints.count"] < 5:
            raise ConfigError("checkpoints.count must be at least 5")
        if self.scenario == "alb" and self["alb.mode"] not in ("exact", "bound"):
            raise ConfigError("alb.mode must be exact or bound")
        try:
            self.space(self["d"])
            self.policy_config()
            self.theta_star(self["d"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # builders ------------------------------------------------------------

    def space(self, d: int):
        kind = self["space.kind"]
        if kind == "sphere":
            return UnitSphere(d)
        if kind == "pball":
            return PNormBall(d, self["space.p"], self["space.radius"])
        if kind == "ellipsoid":
            axes = self["space.axes"] or (1.0,) * d
            if len(axes) != d:
                raise ValueError("space.axes must have d entries")
            return Ellipsoid(np.diag(axes), self["space.c"], self["space.center"])
        if kind == "finite":
            pts = self["space.points"]
            if not pts:
                raise ValueError("space.points is required for a finite action set")
            return FiniteSet(pts)
        raise ValueError(f"unknown space.kind {kind!r}")

    def theta_star(self, d: int) -> np.ndarray:
        t = self["theta"]
        if t == "e1":
            v = np.zeros(d)
            v[0] = 1.0
            return v
        if t == "ones":
            return np.ones(d)
        v = np.array(t, dtype=float)
        if len(v) != d:
            raise ValueError("theta must have d entries")
        return v

    def policy_config(self) -> PolicyConfig:
        return PolicyConfig(kind=self["policy.kind"], delta=self.get("policy.delta", self["delta"]),
                            b=self["policy.b"], ts_scale=self["policy.ts_scale"])


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=None)
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = {}
    for key, raw in parser["experiment"].items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        try:
            values[key] = KEYS[key][0](raw.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    if "scenario" not in values:
        raise ConfigError("missing required key 'scenario'")
    cfg = ExperimentConfig(values)
    cfg.validate()
    return cfg


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    """Read a config file; the seed comes from ``seed``, else the environment, else the file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text)
    if seed is None and os.environ.get(SEED_ENV, "").strip():
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    if seed is not None:
        cfg = cfg.with_overrides(master_seed=int(seed))
    return cfg
