"""Command-line entry point.

Subcommands::

    pielm solve   --config CFG [--data CSV] --out DIR [--seed N --mc N --nc N --nf N --rcond X]
    pielm fdm     --config CFG --out DIR [--nf N]
    pielm compare PROFILE_A PROFILE_B
    pielm study   --config STUDY --out DIR [--seed N --nf N]
    pielm list

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .experiments import UndefinedReferenceError, relative_l2, run_study
from .fdm import FdmConfig, FdmError, solve_fdm
from .fileio import (
    ConfigError,
    RunSetup,
    build_manifest,
    bundled_names,
    load_setup,
    load_study,
    read_data_csv,
    read_profile_csv,
    solver_to_dict,
    setup_to_dict,
    write_profile_csv,
    write_yaml,
)
from .physics import DomainError
from .solver import TrainingError, solve

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("pielm_pile")


def _apply_overrides(setup: RunSetup, args) -> RunSetup:
    solver, fdm = setup.solver, setup.fdm
    elm_changes = {}
    if getattr(args, "seed", None) is not None:
        elm_changes["seed"] = args.seed
    if getattr(args, "mc", None) is not None:
        elm_changes["Mc"] = args.mc
    try:
        if elm_changes:
            solver = replace(solver, elm=replace(solver.elm, **elm_changes))
        if getattr(args, "nc", None) is not None:
            solver = replace(solver, Nc=args.nc)
        if getattr(args, "rcond", None) is not None:
            solver = replace(solver, rcond=args.rcond)
    except ValueError as exc:
        raise ConfigError("solver flags", str(exc)) from None
    if getattr(args, "nf", None) is not None:
        try:
            fdm = FdmConfig(args.nf)
        except ValueError as exc:
            raise ConfigError("--nf", str(exc)) from None
    return replace(setup, solver=solver, fdm=fdm)


def _prepare_out(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError("--out", f"cannot create {path}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise ConfigError("--out", f"{path} is not writable")
    return path


def cmd_solve(args) -> int:
    started = dt.datetime.now(dt.timezone.utc)
    setup = _apply_overrides(load_setup(args.config), args)
    data = read_data_csv(args.data) if args.data else setup.data
    data.check_within(setup.problem.L)
    setup = replace(setup, data=data)
    out = _prepare_out(args.out)

    sol = solve(setup.problem, setup.solver, data)
    z = np.linspace(0.0, setup.problem.L, setup.fdm.Nf + 1)
    prof = sol(z)
    paths = {
        "profile": os.path.join(out, "profile.csv"),
        "summary": os.path.join(out, "summary.yaml"),
        "manifest": os.path.join(out, "manifest.yaml"),
    }
    write_profile_csv(paths["profile"], prof.z, prof.w, prof.theta, prof.M, prof.Q)
    summary = {"method": "pielm", "bc": setup.problem.bc.value, **sol.metadata(), "basis": sol.basis.to_dict()}
    write_yaml(paths["summary"], summary)
    manifest = build_manifest(
        "solve", setup_to_dict(setup), {k: paths[k] for k in ("profile", "summary")}, started, setup.solver.elm.seed
    )
    write_yaml(paths["manifest"], manifest)
    print(
        f"solved {setup.problem.bc.value}: Mc={sol.basis.Mc} Nc={setup.solver.Nc} N_data={len(data)} "
        f"rank={sol.rank} residual={sol.residual_norm:.3e} training={sol.training_time:.3f}s -> {paths['profile']}"
    )
    return EXIT_OK


def cmd_fdm(args) -> int:
    started = dt.datetime.now(dt.timezone.utc)
    setup = _apply_overrides(load_setup(args.config), args)
    out = _prepare_out(args.out)
    fd = solve_fdm(setup.problem, setup.fdm)
    paths = {
        "profile": os.path.join(out, "profile.csv"),
        "summary": os.path.join(out, "summary.yaml"),
        "manifest": os.path.join(out, "manifest.yaml"),
    }
    write_profile_csv(paths["profile"], fd.z, fd.w, fd.theta, fd.M, fd.Q)
    write_yaml(
        paths["summary"],
        {"method": "fdm", "bc": setup.problem.bc.value, "Nf": setup.fdm.Nf, "l": fd.l, "max_abs_w": float(np.max(np.abs(fd.w)))},
    )
    manifest = build_manifest("fdm", setup_to_dict(setup), {k: paths[k] for k in ("profile", "summary")}, started)
    write_yaml(paths["manifest"], manifest)
    print(f"fdm {setup.problem.bc.value}: Nf={setup.fdm.Nf} -> {paths['profile']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = read_profile_csv(args.profile_a)
    b = read_profile_csv(args.profile_b)
    if a["z_m"].shape != b["z_m"].shape or not np.allclose(a["z_m"], b["z_m"], rtol=1e-12, atol=1e-12):
        raise ConfigError("profile", f"z grids differ ({a['z_m'].size} vs {b['z_m'].size} points)")
    status = EXIT_OK
    for key, name in (("w_m", "w"), ("M_Nm", "M"), ("Q_N", "Q")):
        try:
            print(f"L2({name}) = {relative_l2(a[key], b[key]):.6e}")
        except UndefinedReferenceError:
            print(f"L2({name}) = undefined (reference field is identically zero)")
            status = EXIT_NUMERIC
    return status


def cmd_study(args) -> int:
    started = dt.datetime.now(dt.timezone.utc)
    config = load_study(args.config)
    if args.seed is not None:
        config = replace(config, solver=replace(config.solver, elm=replace(config.solver.elm, seed=args.seed)))
    if args.nf is not None:
        try:
            config = replace(config, Nf=args.nf)
        except ValueError as exc:
            raise ConfigError("--nf", str(exc)) from None
    out = _prepare_out(args.out)
    report = run_study(config)
    paths = {"report": os.path.join(out, "report.csv")}
    report.write_csv(paths["report"])
    for p in report.write_profiles(os.path.join(out, "profiles")):
        paths[os.path.splitext(os.path.basename(p))[0]] = p
    snapshot = {
        "kind": config.kind,
        "values": [_plain(v) for v in config.values],
        "problem": _problem_only(config),
        "solver": solver_to_dict(config.solver),
        "Nf": config.Nf,
        "repeats": config.repeats,
    }
    write_yaml(os.path.join(out, "manifest.yaml"), build_manifest("study", snapshot, paths, started, config.solver.elm.seed))
    for r in report.records:
        print(f"{r.label:>28s}  L2 w={r.l2_w:.3e}  M={r.l2_M:.3e}  Q={r.l2_Q:.3e}  {r.training_time:.3f}s")
    return EXIT_OK


def _problem_only(config) -> dict:
    d = setup_to_dict(RunSetup(config.problem))
    return {k: d[k] for k in ("pile", "soil", "tunnel", "bc")}


def _plain(value):
    if isinstance(value, tuple) and len(value) == 2 and hasattr(value[1], "depths"):
        name, series = value
        entry = {"name": name, "depths": list(series.depths)}
        if series.Nc is not None:
            entry["Nc"] = series.Nc
        return entry
    if isinstance(value, tuple):
        bc, eps = value
        return {"bc": getattr(bc, "value", bc), "epsilon": eps}
    return value


def cmd_list(args) -> int:
    for name in bundled_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pielm", description="PIELM and finite-difference solvers for tunnelling-induced pile deflection.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="train a PIELM and write its profile")
    p.add_argument("--config", required=True, help="problem YAML, bundled name (e.g. table1) or manifest")
    p.add_argument("--data", help="monitored data CSV with header depth_m,deflection_m")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--mc", type=int, help="hidden neurons Mc")
    p.add_argument("--nc", type=int, help="collocation points Nc")
    p.add_argument("--nf", type=int, help="profile evaluated on Nf+1 evenly spaced depths")
    p.add_argument("--rcond", type=float, help="relative singular-value cutoff")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fdm", help="solve the finite-difference benchmark")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--nf", type=int, help="number of grid intervals (>= 8)")
    p.set_defaults(func=cmd_fdm)

    p = sub.add_parser("compare", help="relative L2 errors of profile B against reference A")
    p.add_argument("profile_a", help="reference profile CSV")
    p.add_argument("profile_b", help="candidate profile CSV")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("study", help="run a study definition file")
    p.add_argument("--config", required=True, help="study file or bundled name (e.g. table2.study)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--nf", type=int, help="reference grid intervals")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("list", help="list bundled configs")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the input-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TrainingError, FdmError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
