"""Full verification suite and its schema-stable JSON report."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .atlas import (TWO_PI, SectorTable, boundary_mismatch, degeneration_deviation, forward,
                    inverse, sector_partition)
from .charts import tangent_mismatch
from .config import RunConfig
from .errors import ConvergenceFailure, ProtectedRegion
from .geometry import build_polygon
from .metric import jacobian, separability_residual
from .separated import (angular_spectrum, helmholtz_residual, in_piece_grid,
                        mathieu_periodic_spectrum, radial_solution)
from .render import fmt

DEFAULT_TOLERANCES = {
    "covering": 1e-12,
    "continuity": 1e-9,
    "round-trip": 1e-9,
    "orthogonality": 1e-7,
    "separability": 1e-8,
    "tangent-matching": 1e-10,
    "degeneration": 1e-4,
    "mathieu-limit": 1e-5,
    "helmholtz-residual": 1e-3,
    "helmholtz-order": 0.2,
}

NOTES = (
    "angular problem: Psi1 and Psi1' continuous at sector boundaries (g1 = 1 in the asymptotic charts)",
    "lambda gauge: Mathieu a = lambda - 2q in the degenerate limit",
)


@dataclass
class CheckResult:
    check: str
    status: str
    residual: float
    tolerance: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class VerifyReport:
    checks: list[CheckResult]
    config: dict[str, Any]
    version: str = __version__
    notes: tuple[str, ...] = NOTES

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.check for c in self.checks if not c.passed]

    def to_json(self) -> str:
        return dumps({
            "version": self.version,
            "overall_pass": self.overall_pass,
            "checks": [{"check": c.check, "status": c.status, "residual": c.residual,
                        "tolerance": c.tolerance, "n_samples": c.n_samples} for c in self.checks],
            "failures": self.failures,
            "notes": list(self.notes),
            "config": self.config,
        })


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits; keys keep insertion order."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else '"' + str(x) + '"'
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def check_covering(table: SectorTable):
    widths = np.array([s.theta_hi - s.theta_lo for s in table.sectors])
    ok_sign = bool(np.all(widths > 0))
    res = abs(float(widths.sum()) - TWO_PI)
    return res if ok_sign else math.inf, len(widths)


def check_continuity(table: SectorTable):
    mu = np.linspace(4.0 / 50, 4.0, 50)
    return boundary_mismatch(table, mu), 50 * len(table.sectors)


def check_round_trip(table: SectorTable, n: int = 10_000, seed: int = 0):
    rng = np.random.default_rng(seed)
    mu = rng.uniform(1e-3, 4.0, n)
    th = rng.uniform(0.0, TWO_PI, n)
    p = forward(table, mu, th)
    mu2, th2 = inverse(table, p)
    dth = np.abs((th2 - th + math.pi) % TWO_PI - math.pi)
    res = float(max(np.max(np.abs(mu2 - mu)), np.max(dth)))
    # interior points must be refused
    try:
        inverse(table, table.spec.centroid[None, :])
        res = math.inf
    except ProtectedRegion:
        pass
    return res, n


def check_orthogonality(table: SectorTable, n: int = 100):
    mu, th = np.meshgrid(np.linspace(4.0 / n, 4.0, n), np.linspace(0.0, TWO_PI, n, endpoint=False))
    return float(np.max(jacobian(table, mu, th, mode="fd").normalized_offdiag)), n * n


def check_separability(table: SectorTable, n: int = 10_000):
    return separability_residual(table, n, seed=0), n


def check_tangents(table: SectorTable, n: int = 100):
    return tangent_mismatch(table.spec, n), n * 2 * table.spec.n


def check_degeneration():
    devs = [degeneration_deviation(r) for r in (1e-2, 1e-4, 1e-6)]
    monotone = devs[0] > devs[1] > devs[2]
    return (devs[-1] if monotone else math.inf), 3 * 20 * 40


def check_mathieu_limit(count: int = 5):
    table = sector_partition(build_polygon((1.0, 1.0, 1e-6)))
    worst = 0.0
    for q in (0.5, 1.0, 5.0):
        k = 2.0 * math.sqrt(q)
        lam = np.array([e.lam for e in angular_spectrum(table, k, count)])
        ref = mathieu_periodic_spectrum(q, count) + 2.0 * q
        worst = max(worst, float(np.max(np.abs(lam - ref) / np.maximum(np.abs(ref), 1.0))))
    return worst, 3 * count


def helmholtz_pair(table: SectorTable, k: float, index: int = 1, h: float = 1e-3):
    """Residuals at steps ``h`` and ``h/2`` for eigenpair ``index`` on the first usable wedge piece."""
    pair = angular_spectrum(table, k, index + 1)[index]
    for bar in table.bars:
        try:
            mu, th = in_piece_grid(table, bar.label)
        except ValueError:
            continue
        rad = radial_solution(table, k, pair.lam, mu_max=3.0, steps=3000, sector=bar.label)
        r1 = helmholtz_residual(table, k, pair, rad, mu, th, h=h)
        r2 = helmholtz_residual(table, k, pair, rad, mu, th, h=0.5 * h)
        return r1, r2, mu.size
    raise ConvergenceFailure("no wedge piece holds an in-piece grid")


CHECKS: dict[str, Callable] = {
    "covering": check_covering,
    "continuity": check_continuity,
    "round-trip": check_round_trip,
    "orthogonality": check_orthogonality,
    "separability": check_separability,
    "tangent-matching": check_tangents,
}


def run_verify(cfg: RunConfig) -> VerifyReport:
    """Run every check for the configured polygon."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update({key: v for key, v in cfg.tolerances.items() if key in tol})
    table = sector_partition(cfg.polygon)
    results = []

    def add(name, res, n):
        results.append(CheckResult(name, _status(res < tol[name]), float(res), tol[name], int(n)))

    for name, fn in CHECKS.items():
        add(name, *fn(table))
    add("degeneration", *check_degeneration())
    add("mathieu-limit", *check_mathieu_limit())
    k = cfg.k if cfg.k > 0 else 1.0
    try:
        r1, r2, n = helmholtz_pair(table, k, cfg.eigen_index)
        add("helmholtz-residual", r1, n)
        add("helmholtz-order", abs(r1 / r2 / 4.0 - 1.0) if r2 > 0 else math.inf, 2 * n)
    except ConvergenceFailure:
        add("helmholtz-residual", math.inf, 0)
        add("helmholtz-order", math.inf, 0)
    return VerifyReport(results, cfg.echo)
