"""Command-line front end: figures, validation suites, sweeps, spectra and dynamics.

Rates are given as rate/2pi in GHz; detuning as delta/g0. Exit codes are
0 on success, 1 when a validation check fails, 2 on usage or configuration
errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .coherent import probabilities
from .dephasing import dephased_probabilities
from .figures import FIGURE_IDS, SWEEP_PARAMS, SWEEP_QUANTITIES, RunConfig, run_figure, sweep
from .params import CONFIG_KEYS, GHZ, REFERENCE_PARAMS, SystemParams, params_from_config
from .spectra import REFERENCES, FrequencyGrid, default_grid, emission_spectrum, normalize_spectrum, splittings_ghz
from .validate import BUDGETS, SUITES, run_validate

log = logging.getLogger("sps_sim")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
RUN_KEYS = ("output_dir", "seed", "grid", "budget", "sweep")
PARAM_FLAGS = {
    "g0": "g0_ghz",
    "kappa": "kappa_ghz",
    "gamma": "gamma_ghz",
    "gamma_p": "gamma_p_ghz",
    "delta_over_g0": "delta_over_g0",
}


class ConfigError(ValueError):
    pass


def parse_grid(text) -> tuple[float, float, int]:
    """'min:max:points' (or a 3-item list) -> (min, max, points)."""
    parts = text.split(":") if isinstance(text, str) else list(text)
    if len(parts) != 3:
        raise ConfigError(f"grid must look like min:max:points, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid {text!r}") from exc
    if not hi > lo or n < 2:
        raise ConfigError(f"grid needs max > min and at least 2 points, got {text!r}")
    return lo, hi, n


def _common(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("system parameters (rate/2pi in GHz)")
    g.add_argument("--g0", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--gamma-p", dest="gamma_p", type=float)
    g.add_argument("--delta-over-g0", dest="delta_over_g0", type=float)
    parser.add_argument("--config", type=Path, help="JSON file with parameter and run keys")
    parser.add_argument("--grid", help="axis override min:max:points (ns for time, GHz for frequency)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="64-bit seed for stochastic runs")
    parser.add_argument("--budget", choices=tuple(BUDGETS), help="validation effort")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sps-sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure", help="reproduce a figure as CSV + SVG")
    p.add_argument("figure_id", choices=FIGURE_IDS)
    _common(p)

    p = sub.add_parser("validate", help="run closed-form vs oracle checks")
    p.add_argument("suite", choices=SUITES)
    _common(p)

    p = sub.add_parser("sweep", help="sweep one parameter")
    p.add_argument("--param", choices=SWEEP_PARAMS)
    p.add_argument("--values", help="comma-separated values (alternative to --grid)")
    p.add_argument("--quantity", choices=SWEEP_QUANTITIES)
    _common(p)

    p = sub.add_parser("spectra", help="side and forward spectra plus splittings")
    p.add_argument("--unnormalized", action="store_true")
    _common(p)

    p = sub.add_parser("dynamics", help="probabilities in time; optional Monte Carlo")
    p.add_argument("--monte-carlo", dest="n_traj", type=int, default=0,
                   help="also run this many phase-diffusion trajectories")
    _common(p)
    return parser


def load_config(args) -> tuple[SystemParams, dict]:
    """Merge the JSON config (if any) with command-line flags; flags win."""
    raw = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - set(CONFIG_KEYS) - set(RUN_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values = {k: raw[k] for k in CONFIG_KEYS if k in raw}
    base = REFERENCE_PARAMS.to_ghz()
    for flag, key in PARAM_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    merged = {**base, **values}
    try:
        params = params_from_config(merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    run = {k: raw[k] for k in RUN_KEYS if k in raw}
    for key, flag in (("output_dir", "out"), ("seed", "seed"), ("grid", "grid"), ("budget", "budget")):
        v = getattr(args, flag, None)
        if v is not None:
            run[key] = v
    if "grid" in run:
        run["grid"] = parse_grid(run["grid"])
    run.setdefault("output_dir", "out")
    run.setdefault("seed", 12345)
    run.setdefault("budget", "quick")
    if run["budget"] not in BUDGETS:
        raise ConfigError(f"budget must be one of {tuple(BUDGETS)}")
    if not isinstance(run["seed"], int) or not 0 <= run["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return params, run


def _run_config(params, run, task) -> RunConfig:
    return RunConfig(params=params, task=task, output_dir=Path(run["output_dir"]),
                     seed=run["seed"], grid=run.get("grid"))


def cmd_figure(args, params, run) -> int:
    manifest = run_figure(args.figure_id, _run_config(params, run, args.figure_id))
    print(json.dumps(manifest["summary"], indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate(args, params, run) -> int:
    report = run_validate(args.suite, seed=run["seed"], budget=run["budget"])
    if args.out is not None or args.config is not None:
        io.write_json(Path(run["output_dir"]) / f"validate_{args.suite}.json", report)
    for c in report["checks"]:
        log.info("%s %s value=%.6g tol=%s", "PASS" if c["passed"] else "FAIL", c["name"], c["value"], c["tolerance"])
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_sweep(args, params, run) -> int:
    spec = dict(run.get("sweep", {}))
    if not isinstance(spec, dict):
        raise ConfigError("sweep config must be an object with param, values, quantity")
    name = args.param or spec.get("param")
    quantity = args.quantity or spec.get("quantity") or "eta_q"
    if name is None:
        raise ConfigError("sweep needs --param")
    if not isinstance(name, str):
        raise ConfigError("only single-parameter sweeps are supported")
    if args.values is not None:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --values {args.values!r}") from exc
    elif "grid" in run:
        lo, hi, n = run["grid"]
        values = list(np.linspace(lo, hi, n))
    else:
        values = spec.get("values", [])
    if len(values) == 0:
        raise ConfigError("sweep value list is empty")
    header, cols = sweep(params, name, values, quantity)
    path = io.write_csv(Path(run["output_dir"]) / f"sweep_{name}_{quantity}.csv", header, cols)
    print(path.read_text(), end="")
    return EXIT_OK


def cmd_spectra(args, params, run) -> int:
    out = Path(run["output_dir"])
    cols, header, grid_ghz = [], ["omega_over_2pi_ghz"], None
    for channel in ("side", "forward"):
        if "grid" in run:
            lo, hi, n = run["grid"]
            grid = FrequencyGrid.uniform(lo * GHZ, hi * GHZ, n, REFERENCES[channel])
        else:
            grid = default_grid(params, channel)
        s = emission_spectrum(params, grid, channel)
        if not args.unnormalized:
            s = normalize_spectrum(s, params)
        grid_ghz = grid.ghz()
        cols.append(s.values)
        header.append(f"s_{channel}")
    io.write_csv(out / "spectra.csv", header, [grid_ghz] + cols)
    report = splittings_ghz(params)
    io.write_json(out / "splittings.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_dynamics(args, params, run) -> int:
    out = Path(run["output_dir"])
    if "grid" in run:
        lo, hi, n = run["grid"]
        if lo != 0:
            raise ConfigError("time grids must start at 0 ns")
        t = np.linspace(0.0, hi * 1e-9, n)
    else:
        t = np.linspace(0.0, 1.25e-9, 2001)
    if params.gamma_p > 0:
        path = io.probabilities_csv(out / "dynamics_dephased.csv", dephased_probabilities(params, t), dephased=True)
    else:
        path = io.probabilities_csv(out / "dynamics.csv", probabilities(params, t))
    print(path)
    if args.n_traj:
        from .oracle import monte_carlo_moments
        est = monte_carlo_moments(params, t, args.n_traj, run["seed"])
        for p in io.monte_carlo_csv(out / "monte_carlo.csv", est):
            print(p)
    return EXIT_OK


COMMANDS = {
    "figure": cmd_figure,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "spectra": cmd_spectra,
    "dynamics": cmd_dynamics,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        params, run = load_config(args)
        return COMMANDS[args.command](args, params, run)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
