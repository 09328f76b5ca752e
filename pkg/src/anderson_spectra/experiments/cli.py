"""Command-line entry point.

Exit codes: 0 ok, 2 config error, 3 infeasible geometry, 4 dimension cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import numpy as np

from ..eigensolve import DimensionCapError, full_spectrum
from ..hamiltonian import LatticeCube, assemble, sample_potential
from ..two_scale import InfeasibleGeometryError
from .config import ConfigError, ExperimentConfig, load_config
from .runner import OUTPUT_ENV, run

EXIT_OK, EXIT_CONFIG, EXIT_GEOMETRY, EXIT_CAP = 0, 2, 3, 4

# subcommand -> statistics it runs
_SUBCOMMANDS = {
    "ids": [],
    "spacings": ["dls", "dls_macroscopic"],
    "centers": ["centers"],
    "dcs": ["dcs"],
    "poisson": ["poisson", "independence"],
    "two-scale": ["two_scale"],
    "ldp": ["ldp"],
    "wegner-minami": ["wegner_minami"],
}


def _model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--d", type=int, default=1, help="lattice dimension")
    g.add_argument("--L", type=int, default=100, help="cube side")
    g.add_argument("--boundary", default="periodic", choices=["periodic", "dirichlet"])
    g.add_argument("--lambda", dest="coupling", type=float, default=1.0, help="disorder strength")
    g.add_argument("--distribution", default="uniform", choices=["uniform", "bump"])
    g.add_argument("--seed", type=int, default=0, help="master seed")


def _ensemble_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("ensemble")
    g.add_argument("--realizations", type=int, default=10)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--ids-side", type=int, default=200)
    g.add_argument("--ids-realizations", type=int, default=100)
    g.add_argument("--E0", type=float, default=0.0, help="window center energy")
    w = g.add_mutually_exclusive_group()
    w.add_argument("--count", type=float, help="window IDS mass times |Lambda| (default 100)")
    w.add_argument("--alpha", type=float, help="window IDS mass 2 |Lambda|^-alpha")
    w.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), help="fixed energy window")
    g.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/<digest>)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anderson-spectra", description="Spectral statistics of the Anderson model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="print the eigenvalues of one realization")
    _model_args(p)
    p.add_argument("--realization", type=int, default=0)

    p = sub.add_parser("run", help="run an experiment config file")
    p.add_argument("config", help="YAML config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="override ensemble.workers")

    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the '{name}' statistics")
        _model_args(p)
        _ensemble_args(p)
        if name == "spacings":
            p.add_argument("--J", type=float, nargs=2, metavar=("A", "B"), help="macroscopic interval")
        if name == "ldp":
            p.add_argument("--delta", type=float, default=0.3)
        if name == "wegner-minami":
            p.add_argument("--widths", type=float, nargs="+", default=[0.2, 0.1, 0.05])
            p.add_argument("--rho", type=float, default=1.0)
        if name == "two-scale":
            p.add_argument("--ell", type=int)
            p.add_argument("--ell-prime", type=int)
            p.add_argument("--beta", type=float)
            p.add_argument("--beta-prime", type=float)
            p.add_argument("--tol", type=float, default=1e-6)
            p.add_argument("--sub-boundary", default="periodic", choices=["periodic", "dirichlet"])
    return parser


def _config_from_args(args) -> ExperimentConfig:
    dist = {"kind": "uniform", "lo": -1.0, "hi": 1.0} if args.distribution == "uniform" else {"kind": "bump"}
    window = {"E0": args.E0, "kind": "count", "count": 100.0}
    if args.alpha is not None:
        window = {"E0": args.E0, "kind": "alpha", "alpha": args.alpha, "count": None}
    elif args.interval is not None:
        window = {"E0": args.E0, "kind": "interval", "interval": list(args.interval), "count": None}
    elif args.count is not None:
        window["count"] = args.count
    stats = {s: {} for s in _SUBCOMMANDS[args.command]}
    if args.command == "spacings" and args.J:
        stats["dls_macroscopic"]["J"] = list(args.J)
    if args.command == "ldp":
        stats["ldp"]["delta"] = args.delta
    if args.command == "wegner-minami":
        stats["wegner_minami"].update(widths=args.widths, rho=args.rho)
    data = {
        "model": {"d": args.d, "L": args.L, "boundary": args.boundary, "coupling": args.coupling, "distribution": dist},
        "ids": {"side": args.ids_side, "realizations": args.ids_realizations},
        "window": window,
        "statistics": stats,
        "ensemble": {"realizations": args.realizations, "master_seed": args.seed, "workers": args.workers},
    }
    if args.command == "two-scale":
        data["two_scale"] = {
            "ell": args.ell,
            "ell_prime": args.ell_prime,
            "beta": args.beta,
            "beta_prime": args.beta_prime,
            "tol": args.tol,
            "boundary": args.sub_boundary,
        }
    if args.out:
        data["output"] = args.out
    return ExperimentConfig.from_dict(data)


def _print_spectrum(args) -> None:
    m = ExperimentConfig.from_dict(
        {"model": {"d": args.d, "L": args.L, "boundary": args.boundary, "coupling": args.coupling}}
    ).model
    cube = LatticeCube(m.d, m.L, m.boundary)
    field = sample_potential(cube, m.disorder(args.seed).realization(args.realization))
    ev = full_spectrum(assemble(cube, field)).eigenvalues
    for e in np.round(ev, 12) + 0.0:
        print(f"{e:.12g}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "spectrum":
            _print_spectrum(args)
            return EXIT_OK
        if args.command == "run":
            config = load_config(args.config)
            if args.workers is not None:
                config = config.replace(ensemble__workers=args.workers)
            record = run(config, args.out)
        else:
            record = run(_config_from_args(args), want_ids=args.command == "ids")
        print(json.dumps({"directory": record.directory, "summaries": record.summaries}, indent=2, default=str))
        return EXIT_OK
    except InfeasibleGeometryError as exc:
        print(f"error: infeasible geometry: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except DimensionCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
