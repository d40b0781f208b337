"""Batch command-line front end with machine-readable CSV/JSON output.

Subcommands: ``exponent`` (single-letter curves), ``bounds`` (finite-n
sandwich), ``simulate`` (cipher attack report), ``sweep`` (finite-n vs
single-letter convergence), ``verify`` (registered identity checks).
Identical config and seed produce byte-identical output regardless of the
thread count: cells are computed independently and emitted in config
order.

Exit codes: 0 success, 1 verification failure, 2 config error,
3 numeric error, 4 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import cipher as ci
from . import compression as co
from . import exponents as ex
from . import sources as so
from .errors import CapExceededError, NumericError, ValidationError
from .verify import run_all

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CAP = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model_path: str = ""
    rhos: list = field(default_factory=list)
    rates: list = field(default_factory=list)
    ns: list = field(default_factory=list)
    out_format: str = "csv"
    out_path: str = ""
    materialize_cap: int = so.DEFAULT_MATERIALIZE_CAP
    brute_force_messages: int = 5
    brute_force_keys: int = 2
    threads: int = 1
    seed: int = 0


def _rate_grid(spec) -> list:
    if isinstance(spec, list):
        rates = [float(r) for r in spec]
    elif isinstance(spec, dict):
        lo, hi = float(spec["min"]), float(spec["max"])
        step = float(spec["step"])
        if step <= 0.0:
            raise ConfigError("R grid step must be positive")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        rates = [lo + i * step for i in range(count)]
    else:
        raise ConfigError("R must be a list or a {min, max, step} object")
    if any(r <= 0.0 for r in rates):
        raise ConfigError("key rates must be positive")
    return rates


def load_config(path: str, overrides) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    cfg = RunConfig()
    base = Path(path).parent
    if "model" in doc:
        cfg.model_path = str((base / doc["model"]).resolve())
    cfg.rhos = [float(r) for r in doc.get("rho", [])]
    if any(r <= 0.0 for r in cfg.rhos):
        raise ConfigError("rho values must be positive")
    if "R" in doc:
        cfg.rates = _rate_grid(doc["R"])
    cfg.ns = [int(n) for n in doc.get("n", [])]
    if any(n < 1 for n in cfg.ns):
        raise ConfigError("n values must be positive integers")
    cfg.out_format = doc.get("format", "csv")
    cfg.out_path = doc.get("out", "")
    caps = doc.get("caps", {})
    cfg.materialize_cap = int(caps.get("materialize", cfg.materialize_cap))
    cfg.brute_force_messages = int(caps.get("brute_force_messages", cfg.brute_force_messages))
    cfg.brute_force_keys = int(caps.get("brute_force_keys", cfg.brute_force_keys))
    if cfg.materialize_cap < 1 or cfg.brute_force_messages < 1 or cfg.brute_force_keys < 0:
        raise ConfigError("caps must be positive")
    cfg.threads = int(doc.get("threads", 1))
    cfg.seed = int(doc.get("seed", 0))
    if overrides.format:
        cfg.out_format = overrides.format
    if overrides.out:
        cfg.out_path = overrides.out
    if overrides.threads is not None:
        cfg.threads = overrides.threads
    if overrides.seed is not None:
        cfg.seed = overrides.seed
    if cfg.out_format not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg.threads < 1:
        raise ConfigError("thread count must be at least 1")
    return cfg


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "-inf" if x < 0 else "inf"
        return f"{x:.12g}"
    return str(x)


def _csv(header: list, rows: list, preamble: list = ()) -> str:
    lines = [f"# {line}" for line in preamble]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _emit(text: str, out_path: str):
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _map_cells(cells, worker, threads: int) -> list:
    if threads <= 1:
        return [worker(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, cells))


def _require(cfg: RunConfig, *, model=False, rhos=False, rates=False, ns=False):
    if model and not cfg.model_path:
        raise ConfigError("this command needs a 'model' entry in the config")
    if rhos and not cfg.rhos:
        raise ConfigError("this command needs a nonempty 'rho' list")
    if rates and not cfg.rates:
        raise ConfigError("this command needs an 'R' grid")
    if ns and not cfg.ns:
        raise ConfigError("this command needs a nonempty 'n' list")


def _curve_out_path(base: str, rho: float, multiple: bool) -> str:
    if not base or not multiple:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}_rho{_fmt(rho)}{p.suffix}"))


def cmd_exponent(cfg: RunConfig) -> int:
    _require(cfg, model=True, rhos=True, rates=True)
    model = so.load_model(cfg.model_path)
    grid_states = (
        isinstance(model, so.MarkovSource) and model.alphabet_size <= 4
    )

    def one_curve(rho: float):
        curve = ex.build_curve(model, rho, cfg.rates)
        rows = []
        for r, e, branch in zip(curve.rates.tolist(), curve.values.tolist(), curve.branches):
            row = [r, e, branch]
            if grid_states:
                row.append(ex.markov_exponent_grid(model.transition, rho, r))
            rows.append(row)
        return curve, rows

    results = _map_cells(cfg.rhos, one_curve, cfg.threads)
    multiple = len(cfg.rhos) > 1
    for rho, (curve, rows) in zip(cfg.rhos, results):
        header = ["R", "E", "branch"] + (["grid_check"] if grid_states else [])
        preamble = [
            f"rho={_fmt(rho)}",
            f"H_P={_fmt(curve.h_source)}",
            f"H_prime={_fmt(curve.h_saturation)}",
            f"E_max={_fmt(curve.e_max)}",
        ]
        if cfg.out_format == "csv":
            text = _csv(header, rows, preamble)
        else:
            text = json.dumps({
                "rho": rho,
                "H_P": curve.h_source,
                "H_prime": curve.h_saturation,
                "E_max": curve.e_max,
                "samples": [dict(zip(header, row)) for row in rows],
            }, indent=2) + "\n"
        _emit(text, _curve_out_path(cfg.out_path, rho, multiple))
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    _require(cfg, model=True, rhos=True, rates=True, ns=True)
    model = so.load_model(cfg.model_path)
    cells = [(n, rho, r) for n in cfg.ns for rho in cfg.rhos for r in cfg.rates]

    def one_cell(cell):
        n, rho, r = cell
        p_n = so.materialize(model, n, cap=cfg.materialize_cap)
        lower = co.lower_bound_finite(p_n, n, rho, r)
        relaxed = co.relaxed_optimum(p_n, n, rho, r)
        upper = co.upper_bound_finite(p_n, n, rho, r)
        ok = (lower.value - lower.slack <= relaxed.value + 1e-12
              and relaxed.value <= upper + 1e-12)
        return (n, rho, r, lower.value, lower.slack, relaxed.value, relaxed.slack, upper, ok)

    rows = _map_cells(cells, one_cell, cfg.threads)
    if cfg.out_format == "csv":
        text = _csv(
            ["n", "rho", "R", "lower", "lower_slack", "relaxed", "relaxed_slack", "upper", "ok"],
            rows,
        )
    else:
        records = []
        violations = 0
        for n, rho, r, lo, lo_slack, mid, mid_slack, up, ok in rows:
            records.append({"n": n, "rho": rho, "R": r, "value": lo,
                            "bound_kind": "lower", "slack": lo_slack})
            records.append({"n": n, "rho": rho, "R": r, "value": mid,
                            "bound_kind": "relaxed", "slack": mid_slack})
            records.append({"n": n, "rho": rho, "R": r, "value": up,
                            "bound_kind": "upper", "slack": 0.0})
            violations += 0 if ok else 1
        text = json.dumps({"records": records, "violations": violations}, indent=2) + "\n"
    _emit(text, cfg.out_path)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    _require(cfg, model=True, rhos=True, rates=True, ns=True)
    model = so.load_model(cfg.model_path)
    cells = [(n, rho, r) for n in cfg.ns for rho in cfg.rhos for r in cfg.rates]

    def one_cell(cell):
        n, rho, r = cell
        p_n = so.materialize(model, n, cap=cfg.materialize_cap)
        achieved = ci.guessing_exponent_achieved(model, n, rho, r, cap=cfg.materialize_cap)
        relaxed = co.relaxed_optimum(p_n, n, rho, r)
        bound = math.log((4.0 * achieved.harmonic) ** rho * (2.0 + rho)) / n
        gap = abs(achieved.exponent - relaxed.value)
        ok = gap <= bound + relaxed.slack + 1e-12
        row = [n, rho, r, achieved.k, achieved.num_keys, achieved.num_messages,
               achieved.moment, achieved.exponent, relaxed.value, bound, gap, ok]
        if p_n.size <= cfg.brute_force_messages and achieved.k <= cfg.brute_force_keys:
            result = ci.brute_force_best_cipher(
                p_n, achieved.k, rho,
                max_messages=cfg.brute_force_messages,
                max_keys=cfg.brute_force_keys,
                threads=1,
            )
            bf_exp = math.log(result.max_moment) / n
            lo, hi = sorted((achieved.exponent, bf_exp))
            row += [result.max_moment, bf_exp, lo, hi, hi - lo]
        else:
            row += ["", "", "", "", ""]
        return row

    rows = _map_cells(cells, one_cell, cfg.threads)
    header = ["n", "rho", "R", "k", "num_keys", "num_messages", "moment", "exponent",
              "compression", "gap_bound", "gap", "ok",
              "bf_max_moment", "bf_exponent", "bracket_lo", "bracket_hi", "bracket_width"]
    if cfg.out_format == "csv":
        text = _csv(header, rows)
    else:
        text = json.dumps(
            {"rows": [dict(zip(header, row)) for row in rows]}, indent=2
        ) + "\n"
    _emit(text, cfg.out_path)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    _require(cfg, model=True, rhos=True, rates=True, ns=True)
    model = so.load_model(cfg.model_path)
    cells = [(n, rho, r) for n in cfg.ns for rho in cfg.rhos for r in cfg.rates]

    def one_cell(cell):
        n, rho, r = cell
        p_n = so.materialize(model, n, cap=cfg.materialize_cap)
        dual = ex.model_exponent_dual(model, rho, r)
        relaxed = co.relaxed_optimum(p_n, n, rho, r)
        lower = co.lower_bound_finite(p_n, n, rho, r)
        upper = co.upper_bound_finite(p_n, n, rho, r)
        return (n, rho, r, dual, relaxed.value, abs(relaxed.value - dual),
                lower.value, lower.slack, upper)

    rows = _map_cells(cells, one_cell, cfg.threads)
    header = ["n", "rho", "R", "dual", "relaxed", "gap", "lower", "lower_slack", "upper"]
    if cfg.out_format == "csv":
        text = _csv(header, rows)
    else:
        text = json.dumps(
            {"rows": [dict(zip(header, row)) for row in rows]}, indent=2
        ) + "\n"
    _emit(text, cfg.out_path)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = run_all(seed=cfg.seed)
    rows = [(r.name, "pass" if r.passed else "FAIL", r.detail) for r in results]
    if cfg.out_format == "csv":
        text = _csv(["check", "status", "detail"],
                    [(n, s, d.replace(",", ";")) for n, s, d in rows],
                    preamble=[f"seed={cfg.seed}"])
    else:
        text = json.dumps({
            "seed": cfg.seed,
            "checks": [{"check": n, "passed": s == "pass", "detail": d} for n, s, d in rows],
            "all_passed": all(r.passed for r in results),
        }, indent=2) + "\n"
    _emit(text, cfg.out_path)
    if cfg.out_path:
        width = max(len(r.name) for r in results)
        for r in results:
            sys.stdout.write(f"{r.name:<{width}}  {'pass' if r.passed else 'FAIL'}  {r.detail}\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED


COMMANDS = {
    "exponent": cmd_exponent,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="guesswork",
        description="Guessing exponents of a key-rate-limited cipher system.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run configuration", default="")
    parser.add_argument("--out", help="output path (default: stdout)", default="")
    parser.add_argument("--format", choices=["csv", "json"], default="")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        if args.config:
            cfg = load_config(args.config, args)
        else:
            if args.command != "verify":
                raise ConfigError("--config is required for this command")
            cfg = RunConfig(
                out_format=args.format or "csv",
                out_path=args.out,
                threads=args.threads or 1,
                seed=args.seed or 0,
            )
        return COMMANDS[args.command](cfg)
    except (ConfigError, ValidationError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except CapExceededError as exc:
        sys.stderr.write(f"cap exceeded: {exc}\n")
        return EXIT_CAP
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
