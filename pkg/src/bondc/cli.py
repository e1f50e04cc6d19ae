"""bondc command line interface.

Exit codes: 0 success, 1 model error (with a machine-parsable
``error[CODE]:`` line on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import ode as ode_mod
from . import ssa as ssa_mod
from .congruence import serialize
from .expr import DomainError
from .parser import ParseError, parse_model
from .reactions import (
    UnboundedError,
    build_reaction_system,
    initial_mixture,
    reachable_primes,
    reaction_system_json,
)
from .terms import Call, ModelError
from .transitions import TransitionSystem, format_transition


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    model = parse_model(text)
    for w in model.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return model


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="bondc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a model")
    p.add_argument("file")

    p = sub.add_parser("primes", help="list reachable prime species")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=512)

    p = sub.add_parser("transitions", help="print the species transition table")
    p.add_argument("file")
    p.add_argument("--species", help="restrict to one defined species")

    p = sub.add_parser("crn", help="emit the extracted reaction network")
    p.add_argument("file")
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--cap", type=int, default=512)

    p = sub.add_parser("odes", help="emit the extracted ODE system")
    p.add_argument("file")
    p.add_argument("--format", choices=["text", "latex", "json"], default="text")
    p.add_argument("--cap", type=int, default=512)

    p = sub.add_parser("simulate", help="deterministic (ODE) trajectory as CSV")
    p.add_argument("file")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=1e-9)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("ssa", help="stochastic (Gillespie) trajectories as CSV")
    p.add_argument("file")
    p.add_argument("--h", type=float, required=True, help="concentration per level")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--sample-dt", type=float)
    p.add_argument("--out", help="output CSV path (default: stdout)")

    args = ap.parse_args(argv)
    try:
        return _dispatch(args)
    except (ParseError, ModelError, UnboundedError, DomainError, ode_mod.StiffnessError) as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error[PARSE]: {e}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "check":
        _load(args.file)
        print("ok")
        return 0

    if args.command == "primes":
        model = _load(args.file)
        index = reachable_primes(model, cap=args.cap)
        for name in index.names:
            print(name)
        return 0

    if args.command == "transitions":
        model = _load(args.file)
        ts = TransitionSystem(model.species)
        if args.species:
            if args.species not in model.species:
                raise ModelError(f"unknown species '{args.species}'")
            sources = [Call(args.species, ())]
        else:
            sources = [Call(name, ()) for name, sd in model.species.items() if not sd.params]
        for src in sources:
            for tr, mult in sorted(
                ts.transitions(src).items(), key=lambda kv: repr(kv[0])
            ):
                print(format_transition(src, tr, mult))
        return 0

    if args.command == "crn":
        model = _load(args.file)
        rs = build_reaction_system(model, cap=args.cap)
        print(json.dumps(reaction_system_json(rs), indent=2))
        return 0

    if args.command == "odes":
        model = _load(args.file)
        rs = build_reaction_system(model, cap=args.cap)
        sys_ = ode_mod.build_odes(rs)
        print(ode_mod.render_odes(sys_, fmt=args.format), end="")
        return 0

    if args.command == "simulate":
        model = _load(args.file)
        rs = build_reaction_system(model)
        sys_ = ode_mod.build_odes(rs)
        x0 = initial_mixture(model, rs.index)
        traj = ode_mod.integrate(
            sys_, x0, args.t_end, rtol=args.rtol, atol=args.atol, grid=args.grid
        )
        ode_mod.write_trajectory_csv(
            args.out if args.out else sys.stdout, sys_.names, traj
        )
        return 0

    if args.command == "ssa":
        model = _load(args.file)
        rs = build_reaction_system(model)
        dm = ssa_mod.discretize(rs, args.h)
        x0 = initial_mixture(model, rs.index)
        n0 = ssa_mod.initial_levels(x0, args.h)
        runs = ssa_mod.gillespie_runs(
            dm, n0, args.t_end, args.seed, args.runs, sample_dt=args.sample_dt
        )
        for r in runs:
            for w in r.warnings:
                print(f"warning: run {r.run_id}: {w}", file=sys.stderr)
        ssa_mod.write_runs_csv(args.out if args.out else sys.stdout, dm, runs)
        return 0

    raise AssertionError(args.command)


if __name__ == "__main__":
    raise SystemExit(main())
