"""Command line entry point: ``thermoisp {forward,reconstruct,sweep,noise-gen,epsilon}``.

Settings come from built-in defaults, then an optional INI file
(``--config``, section ``[run]``), then command line flags.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .experiments import (
    COPPER,
    SUMMARY_FIELDS,
    RunConfig,
    _fmt,
    build_case,
    nondimensional_epsilon,
    prepare_data,
    run_reconstruction,
    run_sweep,
)
from .forward import save_trajectory_csv, solve_forward
from .grid import SpaceGrid, TimeGrid, norm_l2
from .kernel import Kernel
from .measurements import Measurement, apply_measurement, save_measurement

log = logging.getLogger("thermoisp")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

_RUN_FIELDS = {f.name: f for f in fields(RunConfig)}


class ConfigError(ValueError):
    pass


def load_config(path) -> RunConfig:
    """Read the ``[run]`` section of an INI file into a :class:`RunConfig`."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "run" not in parser:
        raise ConfigError(f"{path}: missing [run] section")
    cfg = RunConfig()
    updates = {}
    for key, raw in parser["run"].items():
        if key not in _RUN_FIELDS:
            raise ConfigError(f"{path}: unknown key {key!r}; valid keys: {', '.join(_RUN_FIELDS)}")
        default = getattr(cfg, key)
        try:
            if isinstance(default, bool):
                updates[key] = parser["run"].getboolean(key)
            elif isinstance(default, int):
                updates[key] = int(raw)
            elif isinstance(default, float):
                updates[key] = float(raw)
            else:
                updates[key] = raw or None
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {key}: {raw!r}") from exc
    return replace(cfg, **updates)


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with a [run] section")
    p.add_argument("--isp", choices=["1.1", "1.2", "2"])
    p.add_argument("--target", choices=["f0", "f1"])
    p.add_argument("--method", choices=["landweber", "sd", "cg"])
    p.add_argument("--gradient", choices=["l2", "sobolev"])
    p.add_argument("--alpha", type=float, help="Landweber relaxation")
    p.add_argument("--beta", type=float, help="Tikhonov weight")
    p.add_argument("--noise", type=float, help="relative noise level, e.g. 0.01 for 1%%")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--nx", dest="n_x", type=int)
    p.add_argument("--nt", dest="n_t", type=int)
    p.add_argument("--out", help="output directory")


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    updates = {k: v for k, v in vars(args).items() if k in _RUN_FIELDS and v is not None}
    cfg = replace(cfg, **updates)
    try:
        return cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _print_rows(rows):
    writer = csv.DictWriter(sys.stdout, fieldnames=SUMMARY_FIELDS, extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in SUMMARY_FIELDS})


def cmd_forward(args) -> int:
    cfg = _run_config(args)
    case = build_case(cfg.target, cfg.isp, kernel=Kernel(cfg.kernel_a, cfg.kernel_b))
    space, time = SpaceGrid(cfg.n_x), TimeGrid(cfg.n_t, cfg.T)
    sol = solve_forward(case.full_problem(space, time))
    meas = apply_measurement(sol, case.isp)
    exact = case.exact_measurement(space.nodes, cfg.T)
    rel = norm_l2(meas - exact, space) / norm_l2(exact, space)
    print(f"isp={case.isp.value} n_x={cfg.n_x} n_t={cfg.n_t} relative_measurement_error={rel!r}")
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        save_trajectory_csv(out / "trajectory.csv", sol)
        save_measurement(out / "measurement.csv", Measurement(case.isp, meas, space))
        log.info("wrote %s", out)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _run_config(args)
    out = run_reconstruction(cfg)
    _print_rows([out.summary])
    return EXIT_DIVERGED if out.result.diverged else EXIT_OK


def _parse_values(text: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value list {text!r}") from exc
    if not vals:
        raise ConfigError("sweep value list is empty")
    return vals


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    rows = run_sweep(cfg, args.param, _parse_values(args.values), workers=args.workers)
    _print_rows(rows)
    if rows and all(int(r.get("diverged") or 0) for r in rows):
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_noise_gen(args) -> int:
    cfg = _run_config(args)
    _, space, _, meas, _ = prepare_data(cfg)
    print(f"kind={meas.kind.value} noise_level={meas.noise_level!r} seed={meas.seed} "
          f"noise_e={meas.noise_e!r}")
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        save_measurement(out / "measurement.csv", meas)
    return EXIT_OK


def cmd_epsilon(args) -> int:
    vals = {k: getattr(args, k) if getattr(args, k) is not None else v for k, v in COPPER.items()}
    try:
        eps, gamma = nondimensional_epsilon(**vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"epsilon={eps!r}")
    print(f"gamma={gamma!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoisp", description="Source reconstruction for 1D type-III thermoelasticity.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="solve the manufactured direct problem")
    _add_run_flags(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("reconstruct", help="run one reconstruction and print its summary row")
    _add_run_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep", help="reconstruct over a grid of alpha, beta or noise values")
    _add_run_flags(p)
    p.add_argument("--param", choices=["alpha", "beta", "noise"], required=True)
    p.add_argument("--values", required=True, help="comma separated list, e.g. 1,2,3")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("noise-gen", help="write a noisy measurement and its metadata")
    _add_run_flags(p)
    p.set_defaults(func=cmd_noise_gen)

    p = sub.add_parser("epsilon", help="nondimensional coupling number from material constants")
    p.add_argument("--G", type=float, help="shear modulus [Pa]")
    p.add_argument("--nu", type=float, help="Poisson ratio")
    p.add_argument("--alpha-T", dest="alpha_T", type=float, help="thermal expansion [1/K]")
    p.add_argument("--rho", type=float, help="density [kg/m^3]")
    p.add_argument("--Cs", dest="C_s", type=float, help="specific heat [J/(kg K)]")
    p.add_argument("--T0", type=float, help="reference temperature [K]")
    p.set_defaults(func=cmd_epsilon)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"thermoisp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"thermoisp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
