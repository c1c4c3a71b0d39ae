"""Command-line entry point.

Every subcommand maps to one library operation. Tables go out as CSV (with a
JSON metadata comment line) or JSON lines; single records as JSON or a
one-row CSV. Report commands also render a figure next to ``--output``.

Exit status: 0 on success, 1 on invalid input, 2 when a budget or precision
cap is hit.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field

from . import experiments, plotting, reports
from .arith import as_fraction
from .cache import ResultCache
from .curve import DEFAULT_MAX_DEPTH, check_twist
from .descent import count_N, enumerate_quadruples, quadruples_csv
from .errors import BudgetError
from .reports import atomic_write
from .sieve import (
    MAX_LIMIT,
    count_T,
    enumerate_T_arrays,
    mertens_window_sum,
    mobius_range,
    primes_in,
    squarefree_progression_count,
)

log = logging.getLogger("congruent_eta")

# Ceilings for the commands whose cost is not already capped by the sieve.
MAX_SEARCH_BOUND = 10**7
MAX_TABLE_D = 10**5
MAX_TUNNELL_X = 10**8
MAX_TSET_ROWS_X = 10**8


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output: str | None = None
    format: str | None = None
    workers: int = 1
    cache_dir: str | None = None
    figure: bool = True
    timestamp: bool = True

    def validate(self) -> None:
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if self.format not in (None, "csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.command not in COMMANDS:
            raise UsageError(f"unknown subcommand {self.command!r}")


# ---------------------------------------------------------------------------
# Output helpers


@dataclass
class Output:
    text: str
    figure: object = None  # callable(path) rendering the figure, or None


def _meta(cfg: RunConfig, kind: str, params: dict, constants: dict | None = None) -> dict:
    return reports.make_metadata(kind, params, constants, timestamp=cfg.timestamp)


def _stamp(cfg: RunConfig, meta: dict) -> None:
    if cfg.timestamp:
        meta["generated_at"] = reports.make_metadata("", {}, timestamp=True)["generated_at"]


def _table(cfg: RunConfig, columns, rows, meta) -> str:
    if (cfg.format or "csv") == "csv":
        return reports.to_csv(columns, rows, meta)
    return reports.to_jsonl(columns, rows, meta)


def _record(cfg: RunConfig, record: dict, meta) -> str:
    if (cfg.format or "json") == "json":
        return json.dumps({"metadata": meta, **record}, sort_keys=True) + "\n"
    cols = sorted(record)
    vals = [json.dumps(record[c]) if isinstance(record[c], (list, dict)) else record[c] for c in cols]
    return reports.to_csv(cols, [vals], meta)


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def _budget(value: int, ceiling: int, name: str) -> None:
    if value > ceiling:
        raise BudgetError(f"{name} = {value} exceeds the configured ceiling {ceiling}")


def _theta(p) -> float:
    t = float(p["theta"])
    _need(0 < t < 0.5, "--theta must lie in (0, 1/2)")
    return t


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_sieve(cfg: RunConfig) -> Output:
    p = cfg.params
    kind, lo, hi = p["kind"], p["lo"], p["hi"]
    _need(lo >= 1 and hi >= lo, "need 1 <= --lo <= --hi")
    _budget(hi, MAX_LIMIT, "--hi")
    meta = _meta(cfg, f"sieve-{kind}", {"lo": lo, "hi": hi})
    if kind == "mobius":
        if cfg.cache_dir is not None:
            values = ResultCache(cfg.cache_dir).mobius_segment(lo, hi).values
        else:
            values = mobius_range(lo, hi, workers=cfg.workers)
        return Output(_table(cfg, ("n", "mu"), zip(range(lo, hi + 1), values.tolist()), meta))
    if kind == "primes":
        ps = primes_in(lo, hi, workers=cfg.workers)
        return Output(_table(cfg, ("p",), [(int(x),) for x in ps], meta))
    if kind == "squarefree":
        _need(p["modulus"] >= 1, "--modulus must be >= 1")
        c = squarefree_progression_count(hi, p["residue"], p["modulus"], workers=cfg.workers)
        meta = _meta(cfg, "sieve-squarefree", {"X": hi, "a": p["residue"], "q": p["modulus"]})
        return Output(_record(cfg, {"X": hi, "a": p["residue"], "q": p["modulus"], "count": c}, meta))
    # mertens
    theta = _theta(p)
    _need(hi >= 3, "--hi must be >= 3")
    s = mertens_window_sum(hi, theta, workers=cfg.workers)
    target = -math.log(1 - theta)
    meta = _meta(cfg, "sieve-mertens", {"X": hi, "theta": as_fraction(theta)})
    return Output(_record(cfg, {"X": hi, "theta": theta, "sum": s, "target": target, "error": s - target}, meta))


def _cmd_tset(cfg: RunConfig) -> Output:
    p = cfg.params
    theta, X = _theta(p), p["limit"]
    _need(X >= 1, "--limit must be >= 1")
    _budget(X, MAX_LIMIT, "--limit")
    if p["count_only"]:
        return Output(f"{count_T(theta, X, workers=cfg.workers)}\n")
    _budget(X, MAX_TSET_ROWS_X, "--limit")
    n, m, q = enumerate_T_arrays(theta, X, workers=cfg.workers)
    meta = _meta(cfg, "tset", {"theta": as_fraction(theta), "X": X})
    return Output(_table(cfg, ("n", "m", "p"), zip(n.tolist(), m.tolist(), q.tolist()), meta))


def _grid(p) -> list[int]:
    grid = p["grid"]
    _need(bool(grid) and all(x >= 1 for x in grid), "--grid needs positive values")
    return sorted(set(grid))


def _cmd_lemma_t(cfg: RunConfig) -> Output:
    p = cfg.params
    theta, grid = _theta(p), _grid(p)
    _budget(grid[-1], MAX_LIMIT, "grid maximum")
    rep = experiments.verify_lemma_T(theta, grid, workers=cfg.workers)
    _stamp(cfg, rep.metadata)
    text = rep.to_csv() if (cfg.format or "csv") == "csv" else rep.to_jsonl()
    return Output(text, lambda path: plotting.plot_density(rep, path, f"theta = {theta:g}"))


def _cmd_lemma_e(cfg: RunConfig) -> Output:
    p = cfg.params
    theta, grid, alpha = _theta(p), _grid(p), p["alpha"]
    _need(alpha > 0, "--alpha must be positive")
    _need(alpha + theta / 2 < 7 / 8, "need alpha + theta/2 < 7/8")
    _budget(grid[-1], MAX_LIMIT, "grid maximum")
    rep = experiments.verify_lemma_E(alpha, theta, grid, p["tol"], workers=cfg.workers, oracle_height=p["oracle_height"])
    _stamp(cfg, rep.metadata)
    text = rep.to_csv() if (cfg.format or "csv") == "csv" else rep.to_jsonl()
    return Output(text, lambda path: plotting.plot_lemma_e(rep, path))


def _cmd_count_n(cfg: RunConfig) -> Output:
    p = cfg.params
    theta, alpha, X = _theta(p), p["alpha"], p["limit"]
    _need(alpha > 0, "--alpha must be positive")
    _need(X >= 1, "--limit must be >= 1")
    _budget(X, MAX_LIMIT, "--limit")
    res = count_N(alpha, theta, X, p["tol"], p["margin"], workers=cfg.workers)
    meta = _meta(cfg, "count-n", {"alpha": alpha, "theta": theta, "X": X, "tol": p["tol"], "margin": p["margin"]})
    return Output(_record(cfg, res.to_json(), meta))


def _cmd_descent(cfg: RunConfig) -> Output:
    p = cfg.params
    bound, d = p["bound"], p["d"]
    _need(bound >= 2, "--bound must be >= 2")
    _budget(bound, MAX_SEARCH_BOUND, "--bound")
    if d is not None:
        check_twist(d)
        quads = list(enumerate_quadruples(bound, d=d))
    else:
        lo, hi = p["d_min"], p["d_max"]
        _need(hi is not None and 1 <= lo <= hi, "give --d or --d-max (with optional --d-min)")
        _budget(hi, MAX_TABLE_D, "--d-max")
        quads = list(enumerate_quadruples(bound, d_range=(lo, hi), workers=cfg.workers))
    meta = _meta(cfg, "descent", {"bound": bound, "d": d, "d_min": p["d_min"], "d_max": p["d_max"]})
    if (cfg.format or "csv") == "csv":
        return Output(quadruples_csv(quads, meta))
    return Output(reports.to_jsonl(quads[0].CSV_COLUMNS if quads else (), [q.csv_row() for q in quads], meta))


def _eta_params(p):
    _need(p["bound"] >= 2, "--bound must be >= 2")
    _need(1e-30 <= p["tol"] < 1, "--tol must lie in [1e-30, 1)")
    _need(p["max_depth"] >= 1, "--max-depth must be >= 1")
    _budget(p["bound"], MAX_SEARCH_BOUND, "--bound")


def _cmd_eta(cfg: RunConfig) -> Output:
    p = cfg.params
    d = check_twist(p["d"])
    _eta_params(p)
    cache = ResultCache(cfg.cache_dir)
    res = cache.eta(d, p["bound"], p["tol"], p["max_depth"])
    meta = _meta(cfg, "eta", {"d": d, "B": p["bound"], "tol": p["tol"], "max_depth": p["max_depth"]})
    record = res.to_json()
    record["certified_minimum"] = res.certified_minimum
    return Output(_record(cfg, record, meta))


def _cmd_eta_table(cfg: RunConfig) -> Output:
    p = cfg.params
    _eta_params(p)
    _need(p["d_max"] >= 1, "--d-max must be >= 1")
    _budget(p["d_max"], MAX_TABLE_D, "--d-max")
    rows = experiments.eta_table(p["d_max"], p["bound"], p["tol"], cfg.workers, p["max_depth"])
    trend = experiments.eta_trend(rows)
    meta = _meta(
        cfg,
        "eta-table",
        {"d_max": p["d_max"], "B": p["bound"], "tol": p["tol"], "max_depth": p["max_depth"]},
        {"five_eighths": 0.625, "target_exponent": 0.845},
    )
    meta["trend"] = trend
    text = _table(cfg, experiments.EtaTableRow.COLUMNS, [r.as_tuple() for r in rows], meta)
    return Output(text, lambda path: plotting.plot_eta_table(rows, path))


def _cmd_tunnell(cfg: RunConfig) -> Output:
    p = cfg.params
    if p["d"] is not None:
        v = experiments.tunnell_classify(check_twist(p["d"]))
        return Output(_record(cfg, v.to_json(), _meta(cfg, "tunnell", {"d": v.d})))
    _need(p["limit"] is not None and p["limit"] >= 1, "give --d or --limit")
    _budget(p["limit"], MAX_TUNNELL_X, "--limit")
    table = experiments.tunnell_table(p["limit"])
    cols = ("d", "tunnell_lhs", "tunnell_rhs_half", "verdict")
    rows = [(v.d, v.tunnell_lhs, v.tunnell_rhs_half, v.verdict.value) for v in table.values()]
    return Output(_table(cfg, cols, rows, _meta(cfg, "tunnell-table", {"X": p["limit"]})))


def _cmd_proportion(cfg: RunConfig) -> Output:
    X = cfg.params["limit"]
    _need(X >= 1, "--limit must be >= 1")
    _budget(X, MAX_TUNNELL_X, "--limit")
    res = experiments.congruent_proportion_detail(X)
    meta = _meta(cfg, "proportion", {"X": X}, {"smith_citation": experiments.SMITH_CITATION})
    return Output(_record(cfg, res.to_json(), meta))


def _cmd_theorem_check(cfg: RunConfig) -> Output:
    p = cfg.params
    theta, alpha = as_fraction(p["theta"]), as_fraction(p["alpha"])
    _need(0 < theta < 0.5 and alpha > 0, "need theta in (0, 1/2) and alpha > 0")
    res = experiments.theorem_arithmetic(theta, alpha)
    record = res.to_json()
    record["all_ok"] = res.all_ok
    meta = _meta(cfg, "theorem-check", {"theta": theta, "alpha": alpha}, {"smith_citation": experiments.SMITH_CITATION})
    return Output(_record(cfg, record, meta))


COMMANDS = {
    "sieve": _cmd_sieve,
    "tset": _cmd_tset,
    "lemma-t": _cmd_lemma_t,
    "lemma-e": _cmd_lemma_e,
    "count-n": _cmd_count_n,
    "descent": _cmd_descent,
    "eta": _cmd_eta,
    "eta-table": _cmd_eta_table,
    "tunnell": _cmd_tunnell,
    "proportion": _cmd_proportion,
    "theorem-check": _cmd_theorem_check,
}


def run(cfg: RunConfig, stdout=None) -> int:
    """Dispatch one command; return the exit status."""
    stdout = stdout or sys.stdout
    try:
        cfg.validate()
        out = COMMANDS[cfg.command](cfg)
        if cfg.output is None:
            stdout.write(out.text)
        else:
            atomic_write(cfg.output, out.text)
            if cfg.figure and out.figure is not None:
                out.figure(plotting.figure_path(cfg.output))
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    # Usage errors share exit status 1 with the other validation failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int(s: str) -> int:
    # Accept 1e6 style literals for limits and bounds.
    try:
        return int(s)
    except ValueError:
        f = float(s)
        if not f.is_integer():
            raise argparse.ArgumentTypeError(f"{s!r} is not an integer")
        return int(f)


def _int_list(s: str) -> list[int]:
    return [_int(x) for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write here (atomically) instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="csv or json (JSON lines for tables)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--cache-dir", help="cache directory (default: $CONGRUENT_ETA_CACHE or ~/.cache)")
    common.add_argument("--no-figure", action="store_true", help="skip the figure next to --output")
    common.add_argument("--no-timestamp", action="store_true", help="omit generated_at from metadata")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="congruent-eta", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sieve", parents=[common], help="Mobius values, primes, squarefree counts, Mertens sums")
    s.add_argument("--kind", choices=("mobius", "primes", "squarefree", "mertens"), default="mobius")
    s.add_argument("--lo", type=_int, default=1)
    s.add_argument("--hi", "--limit", type=_int, required=True)
    s.add_argument("--residue", type=int, default=5)
    s.add_argument("--modulus", type=int, default=8)
    s.add_argument("--theta", type=float, default=0.3)

    s = sub.add_parser("tset", parents=[common], help="enumerate or count the special set T_theta(X)")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--limit", type=_int, required=True)
    s.add_argument("--count-only", action="store_true")

    s = sub.add_parser("lemma-t", parents=[common], help="count_T against its main term on a grid")
    s.add_argument("--theta", type=float, default=0.3)
    s.add_argument("--grid", type=_int_list, default=[10**4, 10**5, 10**6, 10**7])

    s = sub.add_parser("lemma-e", parents=[common], help="exact N_{alpha,theta}(X) against its power bound")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--grid", type=_int_list, default=[10**2, 10**3])
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--oracle-height", type=_int, default=None)

    s = sub.add_parser("count-n", parents=[common], help="exact N_{alpha,theta}(X)")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--limit", type=_int, required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--margin", type=float, default=4.0)

    s = sub.add_parser("descent", parents=[common], help="2-descent quadruples up to a bound")
    s.add_argument("--bound", type=_int, required=True)
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--d-min", type=int, default=1)
    s.add_argument("--d-max", type=int, default=None)

    for name, helptext in (("eta", "minimal canonical height for one d"), ("eta-table", "eta for every squarefree d")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        if name == "eta":
            s.add_argument("--d", type=int, required=True)
        else:
            s.add_argument("--d-max", type=int, required=True)
        s.add_argument("--bound", type=_int, default=10**4)
        s.add_argument("--tol", type=float, default=1e-10)
        s.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)

    s = sub.add_parser("tunnell", parents=[common], help="Tunnell's counting test for one d or all d <= X")
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--limit", type=_int, default=None)

    s = sub.add_parser("proportion", parents=[common], help="share of squarefree d = 5 (mod 8) passing Tunnell")
    s.add_argument("--limit", type=_int, required=True)

    s = sub.add_parser("theorem-check", parents=[common], help="closing exponent and proportion arithmetic")
    s.add_argument("--theta", type=float, default=float(experiments.CHOSEN_THETA))
    s.add_argument("--alpha", type=float, default=float(experiments.CHOSEN_ALPHA))
    return parser


_COMMON = {"output", "format", "workers", "cache_dir", "no_figure", "no_timestamp", "verbose", "command"}


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k not in _COMMON}
    if ns.verbose:
        logging.basicConfig(level=logging.INFO)
    return RunConfig(
        command=ns.command,
        params=params,
        output=ns.output,
        format=ns.format,
        workers=ns.workers,
        cache_dir=ns.cache_dir,
        figure=not ns.no_figure,
        timestamp=not ns.no_timestamp,
    )


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    return run(parse_config(argv))


if __name__ == "__main__":
    sys.exit(main())
