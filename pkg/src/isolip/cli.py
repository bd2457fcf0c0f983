"""Command line entry point.

Exit codes: 0 when every assertion holds, 1 when one fails, 2 for usage,
input or budget errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .coupling import prohorov
from .isoorder import BudgetError, decide_iso_order
from .isoperim import SUBSET_BUDGET, SubsetBudgetError, check_IC_plus, check_ICL
from .measure import AtomicMeasure
from .mmspace import FiniteMMSpace, distance_pushforward, make_cube, make_product_graph, make_torus

log = logging.getLogger("isolip")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
EXPERIMENTS = ("normal-law", "cube-stability", "torus", "obsdiam-chain")


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(payload) -> str:
    return json.dumps(payload, default=_jsonable, indent=2, sort_keys=True) + "\n"


def rows_to_csv(experiment: str, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# isolip-csv v{ex.CSV_VERSION} {experiment}\n")
    writer = csv.DictWriter(buf, fieldnames=ex.COLUMNS[experiment], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _measure(data, key: str) -> AtomicMeasure:
    if data is None:
        raise UsageError(f'config needs "{key}" as {{"atoms": [...], "weights": [...]}}')
    return AtomicMeasure.from_dict(data)


def build_space(spec: dict) -> FiniteMMSpace:
    """``{"cube": {...}}``, ``{"torus": {...}}``, ``{"product": {"factors": [...], "scale": s}}``
    or an explicit ``{"dist": ..., "weights": ...}``."""
    if "cube" in spec:
        return make_cube(**spec["cube"])
    if "torus" in spec:
        return make_torus(**spec["torus"])
    if "product" in spec:
        prod = spec["product"]
        return make_product_graph([ex.parse_graph(g) for g in prod["factors"]], scale=prod.get("scale", 1.0))
    return FiniteMMSpace.from_dict(spec)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run_experiment(name: str, args) -> int:
    raw = _load_config(args.config)
    raw.setdefault("name", name)
    if raw["name"] != name:
        raise UsageError(f"config is for {raw['name']!r}, not {name!r}")
    cfg = ex.ExperimentConfig.from_dict(raw)
    if args.seed is not None:
        cfg.family.seed = args.seed
    if args.budget is not None:
        cfg.budget = args.budget
    out = args.out or cfg.out
    if name == "normal-law":
        report = ex.run_normal_law(cfg.k, cfg.n_list, cfg.grid, cfg.kappa)
    elif name == "cube-stability":
        report = ex.run_cube_stability(cfg.k_list, cfg.n, cfg.family, cfg.budget)
    elif name == "torus":
        report = ex.run_torus(cfg.k, cfg.n, cfg.family, cfg.budget, cfg.subset_budget)
    else:
        report = ex.run_obsdiam_chain(cfg.k, cfg.n, cfg.factors, cfg.kappa_list, cfg.family, cfg.budget)
    if args.format == "csv":
        _emit(rows_to_csv(name, report.rows), out)
    else:
        _emit(dumps(report.as_dict()), out)
    for c in report.checks:
        log.info("%s %s %s", "PASS" if c.passed else "FAIL", c.name, c.detail)
    return EXIT_OK if report.passed else EXIT_FAIL


def run_check_icl(args) -> int:
    cfg = _load_config(args.config)
    if "space" not in cfg:
        raise UsageError('check-icl config needs "space"')
    X = build_space(cfg["space"])
    nu = AtomicMeasure.from_dict(cfg["nu"]) if "nu" in cfg else distance_pushforward(X, cfg.get("base", 0))
    eps = float(cfg.get("eps", 0.0))
    budget = args.budget if args.budget is not None else cfg.get("budget", SUBSET_BUDGET)
    icl = check_ICL(X, nu, eps, budget)
    payload = {"eps": eps, "nu": nu.as_dict(), "icl": icl.as_dict()}
    if cfg.get("ic_plus", True):
        payload["ic_plus"] = check_IC_plus(X, nu, eps, budget).as_dict()
    expect = cfg.get("expect", True)
    payload["expect"] = expect
    _emit(dumps(payload), args.out)
    return EXIT_OK if icl.passed == expect else EXIT_FAIL


def run_decide_order(args) -> int:
    cfg = _load_config(args.config)
    mu, nu = _measure(cfg.get("mu"), "mu"), _measure(cfg.get("nu"), "nu")
    budget = args.budget if args.budget is not None else cfg.get("budget", 400)
    decision = decide_iso_order(mu, nu, float(cfg.get("s", 0.0)), float(cfg.get("t", 0.0)),
                                cfg.get("mode", "exact"), budget)
    _emit(dumps(decision.as_dict()), args.out)
    if "expect" in cfg and bool(cfg["expect"]) != decision.holds:
        return EXIT_FAIL
    return EXIT_OK


def run_prohorov(args) -> int:
    cfg = _load_config(args.config)
    mu, nu = _measure(cfg.get("mu"), "mu"), _measure(cfg.get("nu"), "nu")
    d = prohorov(mu, nu)
    _emit(dumps({"prohorov": d}), args.out)
    if "expect" in cfg and abs(d - float(cfg["expect"])) > float(cfg.get("tol", 1e-9)):
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isolip", description="Iso-Lipschitz order and isoperimetry toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*EXPERIMENTS, "check-icl", "decide-order", "prohorov"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=int, help="seed for sampled Lipschitz fields")
        p.add_argument("--budget", type=int, help="exact-search budget (grid cells, or points for check-icl)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    if args.format == "csv" and args.command not in EXPERIMENTS:
        print(f"isolip: --format csv only applies to {', '.join(EXPERIMENTS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command in EXPERIMENTS:
            return run_experiment(args.command, args)
        return {"check-icl": run_check_icl, "decide-order": run_decide_order, "prohorov": run_prohorov}[args.command](args)
    except (UsageError, BudgetError, SubsetBudgetError, ValueError, TypeError, KeyError) as exc:
        print(f"isolip: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
