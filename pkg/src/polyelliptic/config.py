"""Strict run-configuration parsing (JSON or TOML)."""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, PolyellipticError
from .geometry import PolygonSpec, build_polygon

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FORMATS = ("svg", "csv", "json")
COMMANDS = ("net", "rectplot", "metric-profile", "eigen", "radial", "verify")

_TOP_KEYS = {"f", "sides", "square", "grid", "format", "tolerances", "command", "k",
             "n_eigen", "eigen_index", "mu_max", "steps", "bc", "sector", "profile_mu",
             "interior_grid"}
_GRID_KEYS = {"mu", "mu_range", "mu_count", "theta_count"}


@dataclass
class RunConfig:
    """Validated run configuration; ``echo`` keeps the parsed input for reports."""

    polygon: PolygonSpec
    mu_values: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
    theta_count: int = 24
    fmt: str = "svg"
    tolerances: dict[str, float] = field(default_factory=dict)
    command: str | None = None
    k: float = 1.0
    n_eigen: int = 5
    eigen_index: int = 1
    mu_max: float = 3.0
    steps: int = 3000
    bc: str = "unit"
    sector: str | None = None
    profile_mu: float = 1.1
    interior_grid: bool = False
    echo: dict[str, Any] = field(default_factory=dict)


def _number(v, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    return v


def _count(v, name: str, minimum: int = 2) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {v}")
    return v


def parse_polygon(data: Mapping[str, Any]) -> PolygonSpec:
    """Polygon from exactly one of ``f``, ``sides`` or ``square``."""
    given = [key for key in ("f", "sides", "square") if key in data]
    if len(given) != 1:
        raise ConfigError("give exactly one of 'f', 'sides', 'square'")
    key = given[0]
    val = data[key]
    if key == "square":
        if not isinstance(val, Mapping) or set(val) != {"f"}:
            raise ConfigError("'square' must be an object with the single key 'f'")
        f = [_number(val["f"], "square.f")] * 4
    else:
        if not isinstance(val, list):
            raise ConfigError(f"'{key}' must be a list")
        nums = [_number(x, key) for x in val]
        f = nums if key == "f" else [0.5 * x for x in nums]
    try:
        return build_polygon(f)
    except PolyellipticError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_grid(grid: Any, cfg: dict) -> None:
    if not isinstance(grid, Mapping):
        raise ConfigError("'grid' must be an object")
    extra = set(grid) - _GRID_KEYS
    if extra:
        raise ConfigError(f"unknown grid keys: {sorted(extra)}")
    if "mu" in grid and ("mu_range" in grid or "mu_count" in grid):
        raise ConfigError("give either 'mu' or 'mu_range'/'mu_count'")
    if "mu" in grid:
        vals = grid["mu"]
        if not isinstance(vals, list):
            raise ConfigError("'grid.mu' must be a list")
        mus = [_number(v, "grid.mu") for v in vals]
        _count(len(mus), "mu count")
    elif "mu_range" in grid or "mu_count" in grid:
        rng = grid.get("mu_range", [0.25, 1.5])
        if not isinstance(rng, list) or len(rng) != 2:
            raise ConfigError("'grid.mu_range' must be [lo, hi]")
        lo, hi = (_number(v, "grid.mu_range") for v in rng)
        n = _count(grid.get("mu_count", 6), "mu_count")
        if hi <= lo:
            raise ConfigError("mu_range must be increasing")
        mus = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    else:
        mus = None
    if mus is not None:
        if any(m < 0 for m in mus):
            raise ConfigError("mu_c values must be >= 0")
        cfg["mu_values"] = tuple(mus)
    if "theta_count" in grid:
        cfg["theta_count"] = _count(grid["theta_count"], "theta_count")


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("config must be an object")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown keys: {sorted(extra)}")
    cfg: dict[str, Any] = {"polygon": parse_polygon(data)}
    if "grid" in data:
        _parse_grid(data["grid"], cfg)
    if "format" in data:
        if data["format"] not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        cfg["fmt"] = data["format"]
    if "command" in data:
        if data["command"] not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}")
        cfg["command"] = data["command"]
    if "tolerances" in data:
        tol = data["tolerances"]
        if not isinstance(tol, Mapping):
            raise ConfigError("'tolerances' must be an object")
        cfg["tolerances"] = {str(key): _number(v, f"tolerances.{key}") for key, v in tol.items()}
        if any(v <= 0 for v in cfg["tolerances"].values()):
            raise ConfigError("tolerances must be positive")
    if "k" in data:
        cfg["k"] = _number(data["k"], "k")
        if cfg["k"] < 0:
            raise ConfigError("k must be >= 0")
    if "n_eigen" in data:
        cfg["n_eigen"] = _count(data["n_eigen"], "n_eigen", 1)
    if "eigen_index" in data:
        cfg["eigen_index"] = _count(data["eigen_index"], "eigen_index", 0)
    if "mu_max" in data:
        cfg["mu_max"] = _number(data["mu_max"], "mu_max")
        if cfg["mu_max"] <= 0:
            raise ConfigError("mu_max must be > 0")
    if "steps" in data:
        cfg["steps"] = _count(data["steps"], "steps")
    if "bc" in data:
        if data["bc"] not in ("unit", "dirichlet"):
            raise ConfigError("bc must be 'unit' or 'dirichlet'")
        cfg["bc"] = data["bc"]
    if "sector" in data:
        if not isinstance(data["sector"], str):
            raise ConfigError("sector must be a label string")
        cfg["sector"] = data["sector"]
    if "profile_mu" in data:
        cfg["profile_mu"] = _number(data["profile_mu"], "profile_mu")
        if cfg["profile_mu"] < 0:
            raise ConfigError("profile_mu must be >= 0")
    if "interior_grid" in data:
        if not isinstance(data["interior_grid"], bool):
            raise ConfigError("interior_grid must be true or false")
        cfg["interior_grid"] = data["interior_grid"]
    cfg["echo"] = json.loads(json.dumps(data))
    return RunConfig(**cfg)


def load_config(path: str | Path) -> RunConfig:
    """Read a ``.json`` or ``.toml`` file into a :class:`RunConfig`."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data)
