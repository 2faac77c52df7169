"""Seeded experiments on the compact GA and the UMDA from the command line.

Every subcommand resolves its configuration from (in increasing priority)
built-in defaults, an optional JSON ``--config`` file and command-line flags,
then echoes the resolved config in the output header.  Feeding that config
back through ``--config`` reproduces the run.

Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from typing import Any

from . import drift, oracle
from .algorithms import run_cga
from .benchmarks import available, get_benchmark
from .core import FrequencyVector, make_well_behaved
from .experiments import compare_cga_umda, parse_rule, scaling_experiment

SCHEMA_VERSION = 1
ORACLE_TOL = 1e-10


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str
    seed: int | None = None
    benchmark: str = "leadingones"
    output: str | None = None
    format: str | None = None
    workers: int = 1
    # run / oracle-check / genetic drift
    n: int | None = None
    mu: float | None = None
    budget: int | None = None
    stream: int = 0
    trace_every: int | None = None
    # scaling / compare
    n_grid: list[int] | None = None
    mu_rule: str | None = None
    budget_rule: str | None = None
    umda_rule: str | None = None
    trials: int | None = None
    # drift-check
    theorem: str | None = None
    delta: float | None = None
    r: float | None = None
    x0: float | None = None
    s_min: float | None = None
    eps: float | None = None
    step: float | None = None
    b: float | None = None
    c: float | None = None
    horizon: int | None = None
    gamma: float | None = None
    T: int | None = None
    position: int | None = None
    # oracle-check
    k: list[int] | None = None
    steps: int | None = None
    exact: bool | None = None

    def to_json(self) -> dict:
        allowed = _ALLOWED[self.subcommand]
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name in allowed and getattr(self, f.name) is not None}


_COMMON = {"subcommand", "seed", "benchmark", "output", "format", "workers"}
_ALLOWED = {
    "run": _COMMON | {"n", "mu", "budget", "stream", "trace_every"},
    "scaling": _COMMON | {"n_grid", "mu_rule", "budget_rule", "trials"},
    "compare": _COMMON | {"n_grid", "mu_rule", "budget_rule", "umda_rule", "trials"},
    "oracle-check": _COMMON | {"n", "mu", "k", "steps", "exact"},
    "drift-check": _COMMON | {"theorem", "trials", "delta", "r", "x0", "s_min", "eps", "step",
                              "b", "c", "horizon", "n", "mu", "gamma", "T", "position"},
}
_DEFAULTS = {
    "run": {"format": "json"},
    "scaling": {"format": "csv", "mu_rule": "2*n*ln2n", "budget_rule": "24*mu*n*lnn", "trials": 30},
    "compare": {"format": "csv", "mu_rule": "2*n*ln2n", "budget_rule": "24*mu*n*lnn",
                "umda_rule": "12*mu", "trials": 30},
    "oracle-check": {"format": "json", "steps": 0, "exact": False},
    "drift-check": {"format": "csv", "trials": 1000},
}
_REQUIRED = {
    "run": ["n", "mu", "budget"],
    "scaling": ["n_grid"],
    "compare": ["n_grid"],
    "oracle-check": ["n", "mu"],
    "drift-check": ["theorem"],
}
_THEOREM_REQUIRED = {
    "mult": ["delta", "r"],
    "neg": ["eps", "step", "b", "horizon"],
    "genetic": ["n", "mu", "gamma", "T"],
}
_INT_FIELDS = {"seed", "workers", "n", "budget", "stream", "trace_every", "trials", "horizon",
               "T", "position", "steps"}
_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if not as_float.is_integer():
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return int(as_float)


def resolve_config(subcommand: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    merged: dict[str, Any] = dict(_DEFAULTS[subcommand])
    for source in (file_values, flag_values):
        for key, value in source.items():
            if key not in _FIELD_NAMES:
                raise ConfigError(f"unknown config key {key!r}")
            if key not in _ALLOWED[subcommand]:
                raise ConfigError(f"config key {key!r} does not apply to {subcommand}")
            merged[key] = value
    if merged.get("subcommand", subcommand) != subcommand:
        raise ConfigError(f"subcommand: config is for {merged['subcommand']!r}, not {subcommand!r}")
    merged["subcommand"] = subcommand

    if merged.get("seed") is None:
        raise ConfigError("seed: an explicit seed is required")
    for key in _REQUIRED[subcommand]:
        if merged.get(key) is None:
            raise ConfigError(f"{key}: required for {subcommand}")
    for key in _INT_FIELDS & merged.keys():
        if merged[key] is not None:
            merged[key] = _as_int(key, merged[key])
    for key in ("mu", "delta", "r", "x0", "s_min", "eps", "step", "b", "c", "gamma"):
        if merged.get(key) is not None:
            try:
                merged[key] = float(merged[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: expected a number, got {merged[key]!r}") from None
    cfg = ExperimentConfig(**merged)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.seed < 0 or cfg.seed >= 1 << 64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format: expected csv or json, got {cfg.format!r}")
    try:
        get_benchmark(cfg.benchmark)
    except KeyError:
        raise ConfigError(f"benchmark: unknown {cfg.benchmark!r} (known: {', '.join(available())})") from None
    for key in ("n", "budget", "trials", "horizon", "T", "position", "trace_every", "workers"):
        value = getattr(cfg, key)
        if value is not None and value <= 0 and not (key == "budget" and value == 0):
            raise ConfigError(f"{key}: must be positive, got {value}")
    for key in ("mu", "delta", "step", "b", "gamma", "x0", "s_min"):
        value = getattr(cfg, key)
        if value is not None and not value > 0:
            raise ConfigError(f"{key}: must be positive, got {value}")
    if cfg.n is not None and cfg.n < 3:
        raise ConfigError(f"n: must be >= 3, got {cfg.n}")
    if cfg.n_grid is not None:
        if not isinstance(cfg.n_grid, list) or not cfg.n_grid:
            raise ConfigError("n_grid: expected a non-empty list of integers")
        cfg.n_grid = [_as_int("n_grid", v) for v in cfg.n_grid]
        if min(cfg.n_grid) < 3:
            raise ConfigError("n_grid: every n must be >= 3")
    for key in ("mu_rule", "budget_rule", "umda_rule"):
        if getattr(cfg, key) is not None:
            try:
                parse_rule(getattr(cfg, key))
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
    if cfg.subcommand == "oracle-check":
        if cfg.n > oracle.MAX_N:
            raise ConfigError(f"n: oracle-check enumerates 4**n pairs and needs n <= {oracle.MAX_N}, got {cfg.n}")
        if cfg.exact and cfg.n > oracle.MAX_N_EXACT:
            raise ConfigError(f"exact: rational mode needs n <= {oracle.MAX_N_EXACT}")
        if cfg.k is not None and len(cfg.k) != cfg.n:
            raise ConfigError(f"k: expected {cfg.n} grid indices")
        if cfg.steps < 0:
            raise ConfigError("steps: must be >= 0")
    if cfg.subcommand == "drift-check":
        if cfg.theorem not in _THEOREM_REQUIRED:
            raise ConfigError(f"theorem: expected one of mult, neg, genetic, got {cfg.theorem!r}")
        for key in _THEOREM_REQUIRED[cfg.theorem]:
            if getattr(cfg, key) is None:
                raise ConfigError(f"{key}: required for theorem {cfg.theorem}")
        if cfg.theorem == "neg" and not cfg.eps < 0:
            raise ConfigError(f"eps: must be negative, got {cfg.eps}")
        if cfg.theorem == "neg" and abs(cfg.eps) > cfg.step:
            raise ConfigError("eps: |eps| must not exceed step")
        if cfg.theorem == "mult" and not cfg.delta <= 1:
            raise ConfigError("delta: must lie in (0, 1]")


# --- output -----------------------------------------------------------------

def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else format(value, ".17g")
    return str(value)


def _csv_text(cfg: ExperimentConfig, derived: dict, schema: str, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# cgalab {schema} schema v{SCHEMA_VERSION}\n")
    buf.write(f"# config: {json.dumps(cfg.to_json(), sort_keys=True)}\n")
    buf.write(f"# derived: {json.dumps(derived, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(cfg: ExperimentConfig, derived: dict, schema: str, payload: Any) -> str:
    doc = {"schema": f"{schema}/v{SCHEMA_VERSION}", "config": cfg.to_json(),
           "derived": derived, "result": payload}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# --- subcommands ------------------------------------------------------------

def _cmd_run(cfg: ExperimentConfig) -> tuple[str, int]:
    params = make_well_behaved(cfg.n, cfg.mu)
    f = get_benchmark(cfg.benchmark)
    result = run_cga(params, f, cfg.budget, cfg.seed, cfg.stream, cfg.trace_every)
    derived = {"mu": params.mu, "m": params.m, "mu_adjustment": params.adjustment}
    if cfg.format == "json":
        return _json_text(cfg, derived, "run", result.to_dict()), 0
    header = ["iteration", "critical_pos", "min_freq", "prefix_len_at_upper", "optimum_prob"]
    rows = [[r.iteration, r.critical_pos, r.min_freq, r.prefix_len_at_upper, r.optimum_prob]
            for r in result.trace]
    derived.update(success=result.success, hit_time_evals=result.hit_time_evals)
    return _csv_text(cfg, derived, "run", header, rows), 0


SCALING_COLUMNS = ["n", "mu", "trials", "success_rate", "median_evals", "iqr_lo", "iqr_hi",
                   "mean_first_all_high", "slope", "r2"]


def _cmd_scaling(cfg: ExperimentConfig) -> tuple[str, int]:
    report = scaling_experiment(cfg.n_grid, cfg.mu_rule, cfg.budget_rule, cfg.trials, cfg.seed,
                                get_benchmark(cfg.benchmark), workers=cfg.workers)
    derived = {"budgets": {str(r.n): r.budget for r in report.rows}}
    if cfg.format == "json":
        payload = {"rows": report.rows, "slope": report.slope, "intercept": report.intercept,
                   "r_squared": report.r_squared}
        return _json_text(cfg, derived, "scaling", payload), 0
    rows = [[r.n, r.mu, r.trials, r.success_rate, r.median_evals, r.iqr_lo, r.iqr_hi,
             r.mean_first_all_high, None, None] for r in report.rows]
    rows.append(["fit"] + [None] * 7 + [report.slope, report.r_squared])
    return _csv_text(cfg, derived, "scaling", SCALING_COLUMNS, rows), 0


DRIFT_COLUMNS = ["theorem", "params", "bound", "empirical", "trials", "wilson_lower",
                 "wilson_upper", "vacuous", "pass"]


def _cmd_drift(cfg: ExperimentConfig) -> tuple[str, int]:
    derived: dict = {}
    if cfg.theorem == "mult":
        rep = drift.check_mult_drift(cfg.delta, cfg.r, cfg.trials, cfg.seed,
                                     x0=cfg.x0 or 1.0, s_min=cfg.s_min or 1.0)
    elif cfg.theorem == "neg":
        rep = drift.check_neg_drift(cfg.eps, cfg.step, cfg.b, cfg.horizon, cfg.trials, cfg.seed, c=cfg.c)
    else:
        params = make_well_behaved(cfg.n, cfg.mu)
        derived = {"mu": params.mu, "m": params.m, "mu_adjustment": params.adjustment}
        rep = drift.check_genetic_drift_on_cga(params, cfg.position or cfg.n, cfg.gamma, cfg.T,
                                               cfg.trials, cfg.seed, get_benchmark(cfg.benchmark))
    code = 0 if rep.passed else 1
    if cfg.format == "json":
        payload = {"theorem": rep.theorem, "params": rep.params, "bound": rep.bound_value,
                   "empirical": rep.empirical_rate, "trials": rep.trials,
                   "wilson_lower": rep.wilson_lower, "wilson_upper": rep.wilson_upper,
                   "vacuous": rep.vacuous, "underpowered": rep.underpowered, "pass": rep.passed}
        return _json_text(cfg, derived, "drift-check", payload), code
    params_text = ";".join(f"{k}={fmt(v)}" for k, v in rep.params.items())
    row = [rep.theorem, params_text, rep.bound_value, rep.empirical_rate, rep.trials,
           rep.wilson_lower, rep.wilson_upper, rep.vacuous, rep.passed]
    return _csv_text(cfg, derived, "drift-check", DRIFT_COLUMNS, [row]), code


def _cmd_oracle(cfg: ExperimentConfig) -> tuple[str, int]:
    params = make_well_behaved(cfg.n, cfg.mu)
    f = get_benchmark(cfg.benchmark)
    try:
        p = FrequencyVector(params, cfg.k) if cfg.k is not None else FrequencyVector.initial(params)
    except ValueError as exc:
        raise ConfigError(f"k: {exc}") from None
    dist = oracle.exact_step_distribution(p, f, exact=bool(cfg.exact))
    positions, ok = [], True
    for i in range(1, p.n + 1):
        interior = 0 < p.k[i - 1] < params.upper
        oracle_value = float(oracle.exact_expected_delta(dist, i))
        row = {"position": i, "interior": bool(interior), "expected_delta": oracle_value}
        if f.name == "leadingones":
            formula = float(oracle.expected_change_formula(p, i - 1, params.mu_exact))
            row["formula"] = formula
            row["abs_error"] = abs(oracle_value - formula)
            if interior and row["abs_error"] > ORACLE_TOL:
                ok = False
        positions.append(row)
    payload = {"total": float(dist.total()), "positions": positions,
               "entries": oracle.to_json_entries(dist)}
    if cfg.steps:
        emp = oracle.empirical_step_distribution(p, f, cfg.steps, cfg.seed)
        payload["tv_distance"] = oracle.total_variation(dist, emp)
    derived = {"mu": params.mu, "m": params.m, "mu_adjustment": params.adjustment}
    code = 0 if ok else 1
    if cfg.format == "json":
        return _json_text(cfg, derived, "oracle-check", payload), code
    rows = [[" ".join(str(d) for d in e["delta"]), e["prob"]] for e in payload["entries"]]
    return _csv_text(cfg, derived, "oracle-check", ["delta", "prob"], rows), code


COMPARE_COLUMNS = ["algorithm", "n", "mu", "lambda", "trials", "success_rate", "median_evals",
                   "departure_fraction"]


def _cmd_compare(cfg: ExperimentConfig) -> tuple[str, int]:
    rows = compare_cga_umda(cfg.n_grid, cfg.mu_rule, cfg.umda_rule, cfg.trials, cfg.seed,
                            cfg.budget_rule, get_benchmark(cfg.benchmark), workers=cfg.workers)
    table = [[r.algorithm, r.n, r.mu, r.lam, r.trials, r.success_rate, r.median_evals,
              r.departure_fraction] for r in rows]
    if cfg.format == "json":
        return _json_text(cfg, {}, "compare", [dict(zip(COMPARE_COLUMNS, row)) for row in table]), 0
    return _csv_text(cfg, {}, "compare", COMPARE_COLUMNS, table), 0


_COMMANDS = {
    "run": _cmd_run,
    "scaling": _cmd_scaling,
    "drift-check": _cmd_drift,
    "oracle-check": _cmd_oracle,
    "compare": _cmd_compare,
}


# --- argument parsing -------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgalab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", help="JSON file with config values (flags override)", default=S)
        p.add_argument("--seed", default=S)
        p.add_argument("--benchmark", default=S)
        p.add_argument("--output", "-o", default=S, help="output path (default: stdout)")
        p.add_argument("--format", choices=["csv", "json"], default=S)
        p.add_argument("--workers", default=S)

    p = sub.add_parser("run", help="one traced cGA run")
    common(p)
    for flag in ("--n", "--mu", "--budget", "--stream", "--trace-every"):
        p.add_argument(flag, default=S)

    for name, helptext in (("scaling", "runtime scaling over a grid of n"),
                           ("compare", "cGA vs UMDA at matched settings")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--n-grid", nargs="+", default=S)
        p.add_argument("--mu-rule", default=S)
        p.add_argument("--budget-rule", default=S)
        p.add_argument("--trials", default=S)
        if name == "compare":
            p.add_argument("--umda-rule", default=S)

    p = sub.add_parser("drift-check", help="Monte Carlo check of a drift tail bound")
    common(p)
    p.add_argument("--theorem", default=S, choices=["mult", "neg", "genetic"])
    for flag in ("--trials", "--delta", "--r", "--x0", "--s-min", "--eps", "--step", "--b", "--c",
                 "--horizon", "--n", "--mu", "--gamma", "--T", "--position"):
        p.add_argument(flag, default=S)

    p = sub.add_parser("oracle-check", help="exact one-step distribution vs closed-form drift")
    common(p)
    p.add_argument("--n", default=S)
    p.add_argument("--mu", default=S)
    p.add_argument("--k", nargs="+", default=S, help="grid indices (default: all at 1/2)")
    p.add_argument("--steps", default=S, help="also sample this many steps and report TV distance")
    p.add_argument("--exact", action="store_true", default=S)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from None
    if isinstance(data, dict) and "config" in data and isinstance(data["config"], dict):
        data = data["config"]  # a whole JSON output document
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    return data


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    subcommand = args.pop("subcommand")
    try:
        file_values = _load_config_file(args.pop("config")) if "config" in args else {}
        flags = {key: value for key, value in args.items()}
        if "n_grid" in flags:
            flags["n_grid"] = list(flags["n_grid"])
        if "k" in flags:
            flags["k"] = [_as_int("k", v) for v in flags["k"]]
        cfg = resolve_config(subcommand, file_values, flags)
        text, code = _COMMANDS[subcommand](cfg)
    except ConfigError as exc:
        print(f"cgalab: config error: {exc}", file=sys.stderr)
        return 2
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
