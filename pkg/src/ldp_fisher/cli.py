"""Command-line front end: ``ldp-fisher <command> [options]``.

Exit status is 0 on success, 2 when an input fails validation (the message
names the offending field) and 1 when a numerical routine fails.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import artifacts, continuous, finite_fisher, simplex, uniform_sim
from .channel import Channel, verify_ldp
from .factorize import factorize
from .quadrature import QuadratureError


class CliError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericFailure(Exception):
    pass


@contextlib.contextmanager
def field_context(name: str):
    """Report any input problem raised inside the block against ``name``."""
    try:
        yield
    except CliError:
        raise
    except (QuadratureError, simplex.LPError) as exc:
        raise NumericFailure(str(exc)) from exc
    except (ValueError, KeyError, TypeError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        raise CliError(name, str(msg)) from exc


def _load_json(path: Optional[str], field: str) -> dict:
    if path is None:
        raise CliError(field, "required")
    with field_context(field):
        obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict):
        raise CliError(field, "expected a JSON object")
    return obj


# schema documentation shown by --help ---------------------------------------

CHANNEL_SCHEMA = """channel JSON:
  {"d": <inputs>, "l": <outputs>, "kernel": [[q_0(0), ..., q_0(l-1)], ...]}
  rows are P(Z = z | X = x) and must sum to 1; "d" and "l" are optional checks."""

MODEL_SCHEMA = """model JSON:
  {"p0": [p(0), ..., p(d-1)], "score": [s(0), ..., s(d-1)], "alpha": <optional>}
  p0 is a probability vector and the score must satisfy sum p0 * score = 0."""

PIECEWISE_SCHEMA = """piecewise JSON (bounds --model custom-piecewise):
  {"breaks": [b_0, ..., b_k], "density": [k values], "score": [k values]}
  density and score are constant on each [b_j, b_{j+1})."""

CONFIG_SCHEMA = """config JSON (--config):
  {"<option>": value, ...} using the long option names of the command,
  with dashes or underscores; command-line flags override the file and
  unknown keys are rejected. An optional "command" key must match."""

OUTPUT_SCHEMA = """output JSON carries {"kind": ...} and is read back by
ldp_fisher.artifacts.read_artifact."""


# commands -------------------------------------------------------------------

def _emit(args, kind: str, payload: dict, csv_columns=None, csv_rows=None) -> None:
    fmt = args.format or ("csv" if kind == "bounds" else "json")
    if fmt == "csv":
        if csv_columns is None:
            raise CliError("format", f"csv output is not available for '{args.command}'")
        text = artifacts.to_csv(csv_columns, csv_rows)
    else:
        text = artifacts.dumps(kind, payload)
    _write(args.out, text)


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with field_context("out"):
        Path(path).write_text(text)


def _alpha(args) -> float:
    a = args.alpha
    if a is None:
        raise CliError("alpha", "required")
    if not (math.isfinite(a) and a >= 0):
        raise CliError("alpha", f"must be finite and non-negative, got {a!r}")
    return a


def cmd_verify(args) -> int:
    obj = _load_json(args.channel, "channel")
    with field_context("channel"):
        ch = Channel.from_dict(obj)
    cert = verify_ldp(ch, _alpha(args))
    d = cert.to_dict()
    cols = ["alpha", "alpha_effective", "passes", "is_extremal", "witness", "zero_columns", "note"]
    _emit(args, "ldp_certificate", d, cols, [d])
    return 0


def cmd_factorize(args) -> int:
    obj = _load_json(args.channel, "channel")
    with field_context("channel"):
        ch = Channel.from_dict(obj)
    alpha = _alpha(args)
    if args.mode not in ("product", "sparse"):
        raise CliError("mode", f"expected 'product' or 'sparse', got {args.mode!r}")
    with field_context("alpha"):
        fac = factorize(ch, alpha, args.mode)
    _emit(args, "factorization", fac.to_dict(ch))
    return 0


def cmd_fisher_max(args) -> int:
    obj = _load_json(args.model, "model")
    if args.alpha is None and "alpha" in obj:
        args.alpha = obj["alpha"]
    with field_context("alpha"):
        args.alpha = None if args.alpha is None else float(args.alpha)
    alpha = _alpha(args)
    with field_context("model"):
        extra = set(obj) - {"p0", "score", "alpha"}
        if extra:
            raise ValueError(f"unknown keys {sorted(extra)}")
        m = finite_fisher.FiniteModel.from_dict(obj)
    method = args.method
    if method not in ("auto", "lp", "closed-form"):
        raise CliError("method", f"expected auto, lp or closed-form, got {method!r}")
    if method == "auto":
        method = "lp" if np.any(m.score == 0) else "closed-form"
    with field_context("method"):
        if method == "lp":
            res = finite_fisher.solve_lp(m, alpha)
        else:
            res = finite_fisher.closed_form_max(m, alpha, check_lp=m.d <= finite_fisher.LP_MAX_DIM)
    d = res.to_dict()
    cols = ["alpha", "method", "M_star", "I_max", "support", "n_max", "alpha_bar_check",
            "lp_vs_closed_form_gap"]
    _emit(args, "fisher_max", d, cols, [d])
    return 0


BOUNDS_COLUMNS = ["alpha", "lower", "upper", "two_point_info", "ratio_to_limit"]


def _continuous_row(m: continuous.ContinuousModel, alpha: float) -> dict:
    lo, hi = continuous.info_bounds(m, alpha)
    tp = continuous.fisher_info_extremal(m, continuous.two_point_mechanism(m, alpha))
    limit = continuous.small_alpha_limit(m, alpha)
    return {"alpha": alpha, "lower": lo, "upper": hi, "two_point_info": tp,
            "ratio_to_limit": tp / limit if limit > 0 else math.nan}


def cmd_bounds(args) -> int:
    alphas = args.alpha
    if not alphas:
        raise CliError("alpha", "required")
    for a in alphas:
        if not (math.isfinite(a) and a >= 0):
            raise CliError("alpha", f"must be finite and non-negative, got {a!r}")
    name = args.model
    if name == "gaussian":
        with field_context("sigma"):
            m = continuous.gaussian(args.mu, args.sigma)
    elif name == "custom-piecewise":
        obj = _load_json(args.piecewise, "piecewise")
        with field_context("piecewise"):
            m = continuous.piecewise(obj["breaks"], obj["density"], obj["score"])
            m.validate()
    elif name == "uniform":
        if not args.theta0 > 0:
            raise CliError("theta0", f"must be positive, got {args.theta0!r}")
        m = None
    else:
        raise CliError("model", f"expected gaussian, uniform or custom-piecewise, got {name!r}")
    rows = []
    for a in alphas:
        if m is None:
            rows.append(uniform_sim.uniform_bounds(args.theta0, a))
            continue
        try:
            rows.append(_continuous_row(m, a))
        except (QuadratureError, continuous.ContinuousError) as exc:
            raise NumericFailure(str(exc)) from exc
    payload = {"model": name, "rows": rows}
    _emit(args, "bounds", payload, BOUNDS_COLUMNS, rows)
    return 0


def cmd_simulate_uniform(args) -> int:
    with field_context("grid"):
        grid = uniform_sim.make_grid(args.grid_start, args.grid_end, args.grid_step)
    for name in ("theta0", "n", "iters", "workers"):
        v = getattr(args, name)
        if not v > 0:
            raise CliError(name, f"must be positive, got {v!r}")
    if args.seed < 0:
        raise CliError("seed", f"must be non-negative, got {args.seed!r}")
    with field_context("method"):
        cfg = uniform_sim.SimConfig(
            theta0=args.theta0, n=args.n, alpha=_alpha(args), grid=grid, mc_iters=args.iters,
            seed=args.seed, workers=args.workers, method=args.method, two_stage=args.two_stage,
        )
    report = uniform_sim.run_simulation(cfg)
    fmt = args.format or "csv"
    if fmt == "csv":
        _write(args.out, report.to_csv())
    else:
        _write(args.out, artifacts.dumps("uniform_sim", report.to_dict()))
    if args.json:
        with field_context("json"):
            Path(args.json).write_text(artifacts.dumps("uniform_sim", report.to_dict()))
    return 0


# parser ---------------------------------------------------------------------

# defaults live here, not in argparse, so a config file can fill gaps without
# being overridden by them
DEFAULTS: dict[str, dict[str, Any]] = {
    "verify": {},
    "factorize": {"mode": "sparse"},
    "fisher-max": {"method": "auto"},
    "bounds": {"model": "gaussian", "mu": 0.0, "sigma": 1.0, "theta0": 1.0},
    "simulate-uniform": {
        "theta0": 1.0, "n": 1000, "alpha": 0.3, "grid_start": 0.5, "grid_end": 1.3,
        "grid_step": 0.05, "iters": 100_000, "seed": 0, "workers": 1, "method": "counts",
        "two_stage": False,
    },
}

COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "verify": cmd_verify,
    "factorize": cmd_factorize,
    "fisher-max": cmd_fisher_max,
    "bounds": cmd_bounds,
    "simulate-uniform": cmd_simulate_uniform,
}

GLOBAL_OPTIONS = ("config", "format", "out")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option values (see schema below)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--out", help="output file (default: stdout)")

    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(
        prog="ldp-fisher",
        description="Fisher information under local differential privacy.",
        epilog="\n\n".join([CHANNEL_SCHEMA, MODEL_SCHEMA, PIECEWISE_SCHEMA, CONFIG_SCHEMA,
                            OUTPUT_SCHEMA]),
        formatter_class=fmt,
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    s = sub.add_parser("verify", parents=[common], formatter_class=fmt,
                       help="certify the privacy level of a finite channel",
                       epilog=CHANNEL_SCHEMA + "\n\n" + CONFIG_SCHEMA)
    s.add_argument("--channel", help="channel JSON file")
    s.add_argument("--alpha", type=float, help="privacy budget to check against")

    s = sub.add_parser("factorize", parents=[common], formatter_class=fmt,
                       help="split a channel into an extremal stage and a post-randomization",
                       epilog=CHANNEL_SCHEMA + "\n\n" + CONFIG_SCHEMA)
    s.add_argument("--channel", help="channel JSON file")
    s.add_argument("--alpha", type=float, help="privacy budget of the channel")
    s.add_argument("--mode", choices=("product", "sparse"),
                   help="vertex decomposition: sparse (<= d+1 atoms, default) or product")

    s = sub.add_parser("fisher-max", parents=[common], formatter_class=fmt,
                       help="maximal private Fisher information of a finite model",
                       epilog=MODEL_SCHEMA + "\n\n" + CONFIG_SCHEMA)
    s.add_argument("--model", help="model JSON file")
    s.add_argument("--alpha", type=float, help="privacy budget (overrides the model file)")
    s.add_argument("--method", choices=("auto", "lp", "closed-form"),
                   help="auto (default) uses the closed form when the score never vanishes")

    s = sub.add_parser("bounds", parents=[common], formatter_class=fmt,
                       help="bounds on the best private information of a continuous model",
                       epilog=PIECEWISE_SCHEMA + "\n\n" + CONFIG_SCHEMA)
    s.add_argument("--model", choices=("gaussian", "uniform", "custom-piecewise"),
                   help="built-in model (default gaussian)")
    s.add_argument("--alpha", type=float, nargs="+", help="one or more budgets")
    s.add_argument("--mu", type=float, help="gaussian mean (default 0)")
    s.add_argument("--sigma", type=float, help="gaussian standard deviation (default 1)")
    s.add_argument("--theta0", type=float, help="uniform range (default 1)")
    s.add_argument("--piecewise", help="piecewise model JSON file")

    s = sub.add_parser("simulate-uniform", parents=[common], formatter_class=fmt,
                       help="Monte Carlo study of the private uniform-range estimator",
                       epilog=CONFIG_SCHEMA + "\n\nCSV columns: "
                       + ", ".join(uniform_sim.UniformSimReport.CSV_COLUMNS))
    s.add_argument("--theta0", type=float, help="true range (default 1)")
    s.add_argument("--n", type=int, help="records per replication (default 1000)")
    s.add_argument("--alpha", type=float, help="privacy budget (default 0.3)")
    s.add_argument("--grid-start", type=float, help="first preliminary estimate (default 0.5)")
    s.add_argument("--grid-end", type=float, help="last preliminary estimate (default 1.3)")
    s.add_argument("--grid-step", type=float, help="grid spacing (default 0.05)")
    s.add_argument("--iters", type=int, help="replications per grid point (default 100000)")
    s.add_argument("--seed", type=int, help="master seed (default 0)")
    s.add_argument("--workers", type=int, help="worker processes (default 1)")
    s.add_argument("--method", choices=("counts", "records"),
                   help="counts draws aggregated binomials (default); records privatizes each draw")
    s.add_argument("--two-stage", action="store_true", default=None,
                   help="estimate the preliminary value from a pilot split (not the default study)")
    s.add_argument("--json", help="also write the full report as JSON here")
    return p


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # argparse keeps no public accessor
        if command in action.choices:
            return action.choices[command]
    raise KeyError(command)


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    obj = _load_json(args.config, "config")
    if obj.get("command", args.command) != args.command:
        raise CliError("config", f"written for '{obj['command']}', not '{args.command}'")
    actions = {a.dest: a for a in _subparser(parser, args.command)._actions
               if a.dest not in ("help", "config")}
    for key, value in obj.items():
        if key == "command":
            continue
        dest = key.replace("-", "_")
        if dest not in actions:
            raise CliError(key, f"unknown config key for '{args.command}'")
        if getattr(args, dest) is not None:
            continue  # the command line wins
        act = actions[dest]
        with field_context(key):
            if act.nargs == "+":
                vals = value if isinstance(value, list) else [value]
                value = [act.type(v) for v in vals]
            elif act.type is not None:
                if isinstance(value, (bool, list, dict)) or value is None:
                    raise TypeError(f"expected a scalar, got {value!r}")
                if act.type is int and isinstance(value, float) and not value.is_integer():
                    raise ValueError(f"expected an integer, got {value!r}")
                value = act.type(value)
            elif isinstance(act, argparse._StoreTrueAction):
                if not isinstance(value, bool):
                    raise TypeError(f"expected true or false, got {value!r}")
            if act.choices is not None and not (
                    set(value) <= set(act.choices) if isinstance(value, list) else value in act.choices):
                raise ValueError(f"{value!r} is not one of {list(act.choices)}")
        setattr(args, dest, value)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed its message
        return int(exc.code or 0)
    try:
        if args.config:
            _apply_config(parser, args)
        for key, value in DEFAULTS[args.command].items():
            if getattr(args, key, None) is None:
                setattr(args, key, value)
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, QuadratureError, simplex.LPError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
