"""Command-line entry point: generation, certification, recovery, experiments.

Exit codes: 0 success, 2 usage or config error, 3 infeasible or failed
recovery, 4 internal solver error. Single objects are emitted as JSON on
stdout; experiment sweeps are written as CSV files plus a JSON run manifest.
The SPARSE_LDS_SEED environment variable acts as a seed fallback wherever a
seed flag or config field is omitted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, certify, experiments
from .certify import Mode
from .lds import build_operators, load_system, observable, save_system
from .lpsolve import LpStatus, SolverError
from .recovery import sefati_sufficient, solve_d1
from .sparsity import Asc

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4


def _env_seed() -> int | None:
    raw = os.environ.get("SPARSE_LDS_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        return None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-lds",
        description="Certify and perform sparse-input recovery for linear dynamical systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random system and write it as JSON")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--out", required=True)

    cert = sub.add_parser("certify", help="emit recoverability verdicts for a system")
    cert.add_argument("--system", required=True)
    cert.add_argument("--s", type=int, required=True)
    cert.add_argument("--N", type=int, default=None, help="horizon (default: n)")
    cert.add_argument("--tol", type=float, default=certify.NSC_TOL)
    cert.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FULL.value)

    rec = sub.add_parser("recover", help="solve the joint l1 recovery program")
    rec.add_argument("--system", required=True)
    rec.add_argument("--y", required=True, help="JSON file with the stacked outputs")
    rec.add_argument("--N", type=int, default=None, help="horizon (default: inferred)")

    nsc = sub.add_parser("nsc", help="nullspace constant of the kernel of a matrix")
    nsc.add_argument("--matrix", required=True, help="JSON file with a 2-d array")
    group = nsc.add_mutually_exclusive_group(required=True)
    group.add_argument("--asc", help="support family as JSON, e.g. '{\"kind\":\"uniform\",\"s\":2}'")
    group.add_argument("--s", type=int, help="shorthand for a uniform family")
    nsc.add_argument("--tol", type=float, default=certify.NSC_TOL)
    nsc.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FULL.value)

    exp = sub.add_parser("experiment", help="run a sweep and write CSV outputs")
    exp.add_argument("kind", choices=["table1", "phase", "scatter"])
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", required=True, help="output directory")
    exp.add_argument("--threads", type=int, default=None, help="default: available cores")
    return parser


def _cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is None:
        print("gen: a --seed flag or SPARSE_LDS_SEED is required", file=sys.stderr)
        return EXIT_USAGE
    if min(args.n, args.m, args.p) < 1:
        print("gen: --n, --m, --p must be positive", file=sys.stderr)
        return EXIT_USAGE
    system = experiments.gen_system(seed, args.n, args.m, args.p)
    save_system(system, args.out)
    return EXIT_OK


def _cmd_certify(args) -> int:
    system = load_system(args.system)
    if not 1 <= args.s <= system.m:
        print(f"certify: --s must lie in [1, {system.m}]", file=sys.stderr)
        return EXIT_USAGE
    horizon = args.N if args.N is not None else system.n
    asc = Asc.uniform(system.m, args.s)
    mode = Mode(args.mode)
    ops = build_operators(system, horizon)
    verdict = {
        "observable": observable(system, horizon),
        "necessary": certify.necessary_condition(system, asc, args.tol, mode).to_json(),
        "sufficient": certify.sufficient_condition(system, asc, args.tol, mode).to_json(),
        "tight_case": certify.tight_case(system).value,
        "sefati": sefati_sufficient(ops, args.s),
    }
    print(json.dumps(verdict, indent=2))
    return EXIT_OK


def _cmd_recover(args) -> int:
    system = load_system(args.system)
    raw = json.loads(Path(args.y).read_text())
    outputs = np.asarray(raw["Y"] if isinstance(raw, dict) else raw, dtype=float).reshape(-1)
    if outputs.size % system.p:
        print(f"recover: output length {outputs.size} is not a multiple of p={system.p}", file=sys.stderr)
        return EXIT_USAGE
    horizon = outputs.size // system.p - 1
    if args.N is not None:
        if args.N != horizon:
            print(f"recover: --N={args.N} conflicts with inferred horizon {horizon}", file=sys.stderr)
            return EXIT_USAGE
    if horizon < 1:
        print("recover: need outputs for at least two time steps", file=sys.stderr)
        return EXIT_USAGE
    result = solve_d1(build_operators(system, horizon), outputs)
    if result.status is not LpStatus.OPTIMAL:
        print(json.dumps({"status": result.status.value}))
        return EXIT_INFEASIBLE
    print(
        json.dumps(
            {
                "status": result.status.value,
                "x0_hat": result.x0_hat.tolist(),
                "U_hat": result.u_hat.tolist(),
                "l1_value": result.l1_value,
                "residual": result.residual,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_nsc(args) -> int:
    matrix = np.asarray(json.loads(Path(args.matrix).read_text()), dtype=float)
    if matrix.ndim != 2:
        print("nsc: matrix file must hold a 2-d array", file=sys.stderr)
        return EXIT_USAGE
    ambient = matrix.shape[1]
    asc = Asc.uniform(ambient, args.s) if args.s is not None else Asc.from_json(args.asc, ambient)
    interval = certify.nsc_matrix(matrix, asc, args.tol, Mode(args.mode))
    print(json.dumps(interval.to_json(), indent=2))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        print(f"experiment: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = experiments.ExperimentConfig.from_json(raw, fallback_seed=_env_seed())
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        print("experiment: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "table1":
        stats = experiments.table1(cfg, threads)
        experiments.write_trials_csv(stats.trials, out / "trials.csv")
        experiments.write_table1_csv(stats, out / "table1.csv")
    elif args.kind == "phase":
        stats = experiments.phase_grid(cfg, threads)
        experiments.write_trials_csv(stats.trials, out / "trials.csv")
        experiments.write_phase_csv(stats, out / "phase.csv")
    else:
        stats = experiments.scatter(cfg, threads)
        experiments.write_scatter_csv(stats, out / "scatter.csv")
    experiments.write_manifest(cfg, args.kind, out / "manifest.json")
    return EXIT_OK


_HANDLERS = {
    "gen": _cmd_gen,
    "certify": _cmd_certify,
    "recover": _cmd_recover,
    "nsc": _cmd_nsc,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except experiments.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (FileNotFoundError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
