"""Run configuration files.

A run is described by one INI file::

    [distribution]
    kind = uniform
    lo = 1
    hi = 2

    [model]
    N = 2
    alpha = 2.0
    alpha_grid = 2.0, 2.5, 3.0     ; or alpha_start / alpha_stop / alpha_points

    [oracle]
    grid_points = 201
    refine_rounds = 3

    [improve]
    epsilon_fraction = 0.5         ; or epsilon = ...

    [simulation]
    n_paths = 1000000
    seed = 7
    deviation_nodes = 200
    theta_grid = 16
    dump_paths = false

    [runtime]
    threads = 4

Every section except ``distribution`` and ``model`` is optional.  Unknown
sections and keys are errors, so a typo never silently falls back to a
default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dist import CostDistribution, DistributionError, make_scaled_beta, make_truncated_normal, make_uniform

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "build_distribution"]


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


DIST_PARAMS = {
    "uniform": ("lo", "hi"),
    "truncnorm": ("mu", "sigma", "lo", "hi"),
    "scaledbeta": ("a", "b", "lo", "hi"),
}

SECTIONS = {
    "distribution": {"kind", "lo", "hi", "mu", "sigma", "a", "b"},
    "model": {"n", "alpha", "alpha_grid", "alpha_start", "alpha_stop", "alpha_points"},
    "oracle": {"grid_points", "refine_rounds"},
    "improve": {"epsilon", "epsilon_fraction"},
    "simulation": {"n_paths", "seed", "deviation_nodes", "theta_grid", "dump_paths"},
    "runtime": {"threads", "paranoid"},
}


@dataclass(frozen=True)
class RunConfig:
    distribution: dict
    N: int
    alpha: float | None = None
    alpha_grid: tuple | None = None
    grid_points: int | None = None
    refine_rounds: int = 3
    epsilon: float | None = None
    epsilon_fraction: float | None = None
    n_paths: int = 100_000
    seed: int = 0
    deviation_nodes: int = 200
    theta_grid: int = 16
    dump_paths: bool = False
    threads: int | None = None
    paranoid: bool = False
    has_simulation: bool = False
    source: str | None = field(default=None, compare=False)

    def dist(self) -> CostDistribution:
        return build_distribution(self.distribution)

    def require_alpha(self) -> float:
        if self.alpha is None:
            raise ConfigError("this command needs [model] alpha")
        return self.alpha

    def require_grid(self) -> tuple:
        if self.alpha_grid is None:
            raise ConfigError("this command needs [model] alpha_grid or alpha_start/alpha_stop/alpha_points")
        return self.alpha_grid


def build_distribution(spec: dict) -> CostDistribution:
    kind = spec["kind"]
    params = {k: spec[k] for k in DIST_PARAMS[kind]}
    try:
        if kind == "uniform":
            return make_uniform(**params)
        if kind == "truncnorm":
            return make_truncated_normal(**params)
        return make_scaled_beta(**params)
    except DistributionError as exc:
        raise ConfigError(f"[distribution] {exc}") from exc


def _number(section: str, key: str, raw: str, kind=float):
    try:
        if kind is int:
            val = float(raw)
            if not val.is_integer():
                raise ValueError
            return int(val)
        val = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None
    if not np.isfinite(val):
        raise ConfigError(f"[{section}] {key} must be finite")
    return val


def _bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key} = {raw!r} is not a boolean")


def parse_config(text: str, source: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(cp[sec]) - SECTIONS[sec]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")
    for sec in ("distribution", "model"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing required section [{sec}]")

    dsec = cp["distribution"]
    kind = dsec.get("kind")
    if kind not in DIST_PARAMS:
        raise ConfigError(f"[distribution] kind must be one of {sorted(DIST_PARAMS)}, got {kind!r}")
    dist = {"kind": kind}
    for p in DIST_PARAMS[kind]:
        if p not in dsec:
            raise ConfigError(f"[distribution] {kind} needs {p}")
        dist[p] = _number("distribution", p, dsec[p])
    extra = set(dsec) - set(DIST_PARAMS[kind]) - {"kind"}
    if extra:
        raise ConfigError(f"[distribution] {kind} does not take {', '.join(sorted(extra))}")

    msec = cp["model"]
    if "n" not in msec:
        raise ConfigError("[model] N is required")
    N = _number("model", "N", msec["n"], int)
    if N < 1:
        raise ConfigError(f"[model] N must be >= 1, got {N}")
    alpha = _number("model", "alpha", msec["alpha"]) if "alpha" in msec else None
    grid = None
    if "alpha_grid" in msec:
        if any(k in msec for k in ("alpha_start", "alpha_stop", "alpha_points")):
            raise ConfigError("[model] give either alpha_grid or alpha_start/alpha_stop/alpha_points, not both")
        parts = [p for p in msec["alpha_grid"].replace("\n", ",").split(",") if p.strip()]
        grid = tuple(_number("model", "alpha_grid", p) for p in parts)
    elif any(k in msec for k in ("alpha_start", "alpha_stop", "alpha_points")):
        try:
            start = _number("model", "alpha_start", msec["alpha_start"])
            stop = _number("model", "alpha_stop", msec["alpha_stop"])
            pts = _number("model", "alpha_points", msec["alpha_points"], int)
        except KeyError as exc:
            raise ConfigError(f"[model] {exc.args[0]} is required with the other alpha_* keys") from None
        if pts < 1:
            raise ConfigError("[model] alpha_points must be >= 1")
        grid = tuple(float(a) for a in np.linspace(start, stop, pts))
    if grid is not None and any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("[model] alpha grid must be ascending")

    kw: dict = {}
    if cp.has_section("oracle"):
        o = cp["oracle"]
        if "grid_points" in o:
            kw["grid_points"] = _number("oracle", "grid_points", o["grid_points"], int)
        if "refine_rounds" in o:
            kw["refine_rounds"] = _number("oracle", "refine_rounds", o["refine_rounds"], int)
    if cp.has_section("improve"):
        i = cp["improve"]
        if "epsilon" in i and "epsilon_fraction" in i:
            raise ConfigError("[improve] give epsilon or epsilon_fraction, not both")
        if "epsilon" in i:
            kw["epsilon"] = _number("improve", "epsilon", i["epsilon"])
        if "epsilon_fraction" in i:
            frac = _number("improve", "epsilon_fraction", i["epsilon_fraction"])
            if not 0 < frac <= 1:
                raise ConfigError("[improve] epsilon_fraction must lie in (0, 1]")
            kw["epsilon_fraction"] = frac
    if cp.has_section("simulation"):
        kw["has_simulation"] = True
        s = cp["simulation"]
        for key in ("n_paths", "seed", "deviation_nodes", "theta_grid"):
            if key in s:
                kw[key] = _number("simulation", key, s[key], int)
        if "dump_paths" in s:
            kw["dump_paths"] = _bool("simulation", "dump_paths", s["dump_paths"])
        if kw.get("n_paths", 1) < 1:
            raise ConfigError("[simulation] n_paths must be >= 1")
        if not 0 <= kw.get("seed", 0) < 2**64:
            raise ConfigError("[simulation] seed must be a 64-bit unsigned integer")
    if cp.has_section("runtime"):
        r = cp["runtime"]
        if "threads" in r:
            kw["threads"] = _number("runtime", "threads", r["threads"], int)
            if kw["threads"] < 1:
                raise ConfigError("[runtime] threads must be >= 1")
        if "paranoid" in r:
            kw["paranoid"] = _bool("runtime", "paranoid", r["paranoid"])

    cfg = RunConfig(distribution=dist, N=N, alpha=alpha, alpha_grid=grid, source=source, **kw)
    cfg.dist()  # validate parameters now, before any command runs
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, source=str(path))
