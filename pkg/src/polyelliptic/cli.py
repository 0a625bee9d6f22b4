"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .atlas import sector_partition
from .config import RunConfig, load_config
from .errors import ConfigError, PolyellipticError
from .metric import metric_profile
from .render import fmt, render_net, render_rect
from .separated import angular_spectrum, radial_solution
from .verify import dumps, run_verify

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyelliptic", description="Polyelliptic coordinate nets and checks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(name, help_, formats):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="JSON or TOML config file")
        s.add_argument("-o", "--output", help="output file (default: stdout)")
        s.add_argument("--format", choices=formats, default=None)
        return s

    for name, help_ in (("net", "coordinate net"), ("rectplot", "theta_c versus log ae_c diagnostic")):
        s = common(name, help_, ("svg", "csv"))
        s.add_argument("--csv", help="also write the polyline CSV here")
        s.add_argument("--mu", type=float, nargs="+", help="mu_c isoline values")
        s.add_argument("--theta-count", type=int)
    s = common("metric-profile", "scale factors along one mu_c isoline", ("csv", "json"))
    s.add_argument("--mu", type=float, help="mu_c of the profile")
    s.add_argument("--n-theta", type=int, default=721)
    s = common("eigen", "angular eigenvalue table", ("csv", "json"))
    s.add_argument("--k", type=float)
    s.add_argument("--n", type=int, dest="n_eigen")
    s.add_argument("--psi", help="write eigenfunction samples (theta_c, psi1_n) to this CSV")
    s = common("radial", "radial solution for one eigenpair", ("csv", "json"))
    s.add_argument("--k", type=float)
    s.add_argument("--index", type=int, dest="eigen_index")
    s.add_argument("--sector")
    s.add_argument("--bc", choices=("unit", "dirichlet"))
    s = common("verify", "run the verification suite", ("json",))
    return p


def _override(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    mu = getattr(args, "mu", None)
    if isinstance(mu, list):
        if len(mu) < 2 or any(m < 0 for m in mu):
            raise ConfigError("need at least 2 mu_c values, all >= 0")
        changes["mu_values"] = tuple(mu)
    elif mu is not None:
        if mu < 0:
            raise ConfigError("mu_c must be >= 0")
        changes["profile_mu"] = mu
    for name in ("theta_count", "k", "n_eigen", "eigen_index", "sector", "bc"):
        val = getattr(args, name, None)
        if val is not None:
            changes[name] = val
    if "theta_count" in changes and changes["theta_count"] < 2:
        raise ConfigError("theta_count must be >= 2")
    if changes.get("k", 0.0) < 0:
        raise ConfigError("k must be >= 0")
    if changes.get("n_eigen", 1) < 1 or changes.get("eigen_index", 0) < 0:
        raise ConfigError("eigen counts must be positive")
    if getattr(args, "n_theta", 2) < 2:
        raise ConfigError("n_theta must be >= 2")
    return replace(cfg, **changes)


def _table_csv(header, rows) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    return out.getvalue()


def _records_json(header, rows, meta) -> str:
    return dumps({**meta, "columns": list(header), "rows": [list(r) for r in rows]}) + "\n"


def _tabular(header, rows, fmt_, meta) -> str:
    return _records_json(header, rows, meta) if fmt_ == "json" else _table_csv(header, rows)


def cmd_net(cfg, args):
    render = render_net if args.command == "net" else render_rect
    fmt_ = args.format or "svg"
    svg, csv = render(cfg, with_csv=True)
    if args.csv:
        Path(args.csv).write_text(csv)
    return (svg if fmt_ == "svg" else csv), EXIT_OK


def cmd_profile(cfg, args):
    table = sector_partition(cfg.polygon)
    th, hth, hmu, labels = metric_profile(table, cfg.profile_mu, args.n_theta)
    rows = [(t, a, b, str(lab)) for t, a, b, lab in zip(th, hth, hmu, labels)]
    meta = {"mu_c": cfg.profile_mu}
    cols = ("theta_c", "H_theta_sq", "H_mu_sq", "sector_id")
    return _tabular(cols, rows, args.format or "csv", meta), EXIT_OK


def cmd_eigen(cfg, args):
    table = sector_partition(cfg.polygon)
    pairs = angular_spectrum(table, cfg.k, cfg.n_eigen)
    rows = [(p.n, p.lam, p.convergence_estimate) for p in pairs]
    if args.psi:
        cols = ["theta_c"] + [f"psi1_{p.n}" for p in pairs]
        data = zip(pairs[0].theta, *(p.psi for p in pairs))
        Path(args.psi).write_text(_table_csv(cols, data))
    meta = {"k": cfg.k, "grid_nodes": len(pairs[0].theta), "weight": pairs[0].weight}
    return _tabular(("n", "lambda", "convergence_estimate"), rows, args.format or "csv", meta), EXIT_OK


def cmd_radial(cfg, args):
    table = sector_partition(cfg.polygon)
    pair = angular_spectrum(table, cfg.k, cfg.eigen_index + 1)[cfg.eigen_index]
    sector = cfg.sector or table.bars[0].label
    try:
        table.piece(sector)
    except KeyError as exc:
        raise ConfigError(f"unknown sector {sector!r}") from exc
    sol = radial_solution(table, cfg.k, pair.lam, cfg.bc, cfg.mu_max, cfg.steps, sector)
    rows = list(zip(sol.mu, sol.psi, sol.dpsi))
    meta = {"k": cfg.k, "lambda": pair.lam, "bc": cfg.bc, "sector": sector}
    return _tabular(("mu_c", "psi2", "dpsi2"), rows, args.format or "csv", meta), EXIT_OK


def cmd_verify(cfg, args):
    report = run_verify(cfg)
    return report.to_json() + "\n", EXIT_OK if report.overall_pass else EXIT_FAIL


COMMANDS = {"net": cmd_net, "rectplot": cmd_net, "metric-profile": cmd_profile,
            "eigen": cmd_eigen, "radial": cmd_radial, "verify": cmd_verify}


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _override(load_config(args.config), args)
        text, code = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    except PolyellipticError as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_FAIL
    if args.output:
        Path(args.output).write_text(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader closed early (e.g. piped into head)
            import os
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


if __name__ == "__main__":
    sys.exit(main())
