"""Batch runner: ``rhtau --family NAME --suite SUITE --grid 0.1:0.5:5``.

Exit status: 0 when every row passes, 1 on any numeric failure, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .catalog import list_catalog
from .config import SUITES, ExperimentConfig, load_config, parse_config, parse_grid, resolve_family
from .errors import ConfigError, RHTauError
from .suites import SUITE_FUNCTIONS, chain_for

__all__ = ["main", "run_suite", "render", "chain_report", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
log = logging.getLogger("rhtau")


def _evaluate(args):
    family, suite, idx, t, policy, options = args
    row = {"index": idx}
    for i, v in enumerate(t):
        row[f"t{i}"] = float(v)
    try:
        row.update(SUITE_FUNCTIONS[suite](family, t, policy, options))
    except (RHTauError, ValueError, ArithmeticError, FloatingPointError) as exc:
        row["ok"] = False
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_suite(config: ExperimentConfig) -> dict:
    """Evaluate every grid point; rows come back in grid order regardless of threads."""
    family = resolve_family(config.family)
    points = config.points(family.param_dim)
    if any(len(p) != family.param_dim for p in points):
        raise ConfigError(f"grid has {len(points[0])} axes but the family has {family.param_dim} parameters",
                          field="grid")
    jobs = [(family, config.suite, k, p, config.policy, config.options) for k, p in enumerate(points)]
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            rows = list(pool.map(_evaluate, jobs))
    else:
        rows = [_evaluate(j) for j in jobs]
    for r in rows:
        log.info("point %d ok=%s", r["index"], r.get("ok"))
    return {"schema": SCHEMA_VERSION, "suite": config.suite,
            "family": config.family if isinstance(config.family, str) else "custom",
            "policy": config.to_dict()["policy"], "options": config.options,
            "ok": all(r.get("ok", False) for r in rows), "rows": rows}


def chain_report(config: ExperimentConfig) -> dict:
    """Factor list with contour radii and entry Laurent coefficients at every grid point."""
    family = resolve_family(config.family)
    out = []
    for k, p in enumerate(config.points(family.param_dim)):
        try:
            chain = chain_for(family, p, config.options)
            out.append({"index": k, "t": [float(v) for v in p], **chain.report()})
        except RHTauError as exc:
            out.append({"index": k, "t": [float(v) for v in p], "error": f"{type(exc).__name__}: {exc}"})
    return {"schema": SCHEMA_VERSION, "family": family.name or "custom", "chains": out}


def _columns(rows):
    cols = []
    for r in rows:
        for k in r:
            if k not in cols and k not in ("ok", "error"):
                cols.append(k)
    return cols + ["ok", "error"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=False) + "\n"
    cols = _columns(report["rows"])
    buf = io.StringIO()
    buf.write(f"# rhtau report schema={report['schema']} suite={report['suite']} family={report['family']}\n")
    buf.write(f"# columns: {','.join(cols)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in report["rows"]:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rhtau", description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--family", help="catalog name or path to a JSON family definition")
    src.add_argument("--config", help="JSON experiment config")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--grid", help="per-parameter min:max:steps, comma separated")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--npoints", type=int, help="initial contour points")
    p.add_argument("--tol", type=float, help="grid-doubling tolerance for tau")
    p.add_argument("--threads", type=int, help="parallel parameter points")
    p.add_argument("--option", action="append", default=[], metavar="KEY=JSON",
                   help="suite option, e.g. --option inner_outer=0.6")
    p.add_argument("--list", action="store_true", help="list the built-in families and exit")
    p.add_argument("--chain", action="store_true",
                   help="print the factor chains (JSON) at the grid points instead of running a suite")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.family:
        cfg = parse_config({"family": args.family, "suite": args.suite or "tau"})
    else:
        raise ConfigError("give --family or --config", field="family")
    changes = {}
    if args.suite:
        changes["suite"] = args.suite
    if args.grid:
        changes["grid"] = parse_grid(args.grid)
    if args.out:
        changes["out"] = args.out
    if args.format:
        changes["format"] = args.format
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be positive", field="threads")
        changes["threads"] = args.threads
    pol = {}
    if args.npoints is not None:
        if args.npoints < 2 or args.npoints & (args.npoints - 1):
            raise ConfigError("--npoints must be a power of two", field="policy.n_points")
        pol["n_points"] = args.npoints
    if args.tol is not None:
        if args.tol <= 0:
            raise ConfigError("--tol must be positive", field="policy.tol")
        pol["tol"] = args.tol
    if pol:
        changes["policy"] = replace(cfg.policy, **pol)
    if args.option:
        opts = dict(cfg.options)
        for item in args.option:
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"option {item!r} must be KEY=VALUE", field="options")
            try:
                opts[key] = json.loads(val)
            except json.JSONDecodeError:
                opts[key] = val
        changes["options"] = opts
    return replace(cfg, **changes)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.list:
        entries = list_catalog()
        if args.format == "json":
            sys.stdout.write(json.dumps(entries, indent=2) + "\n")
        else:
            for e in entries:
                sys.stdout.write(f"{e['name']:<22} {e['description']}\n")
        return 0
    try:
        cfg = _config_from_args(args)
        if args.chain:
            rep = chain_report(cfg)
            _emit(json.dumps(rep, indent=2) + "\n", cfg.out)
            return 1 if any("error" in c for c in rep["chains"]) else 0
        report = run_suite(cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    _emit(render(report, cfg.format), cfg.out)
    return 0 if report["ok"] else 1


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    raise SystemExit(main())
