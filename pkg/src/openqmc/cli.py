"""Command line front end.

Subcommands:

* ``openqmc run --config cfg.json [--method m] [--seed s] [--threads k]
  [--output out.csv]`` -- run one experiment (flags override the file);
* ``openqmc variance --config cfg.json --repeats N --reference ref.csv
  [--reference-btb ref2.csv]`` -- the small-budget variance harness;
* ``openqmc pairings count --m M [--ell L] --family all|connected|btb``
  -- pairing-family cardinalities for regression against the reference
  table.

Exit codes: 0 success, 2 configuration error, 3 numerical check failure.
"""

from __future__ import annotations

import argparse
import sys

from .driver import Trajectory, load_config, run_experiment, variance_harness
from .errors import ConfigError, NumericalCheckError
from .pairings import Family, enumerate_family


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="openqmc", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--method", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--threads", type=int, default=None)
    run.add_argument("--output", default=None)

    var = sub.add_parser("variance", help="variance comparison harness")
    var.add_argument("--config", required=True)
    var.add_argument("--repeats", type=int, required=True)
    var.add_argument("--reference", required=True)
    var.add_argument("--reference-btb", default=None)
    var.add_argument("--output", default=None)

    pair = sub.add_parser("pairings", help="pairing family utilities")
    psub = pair.add_subparsers(dest="pairings_command", required=True)
    count = psub.add_parser("count", help="count pairings in a family")
    count.add_argument("--m", type=int, required=True, help="even point count")
    count.add_argument("--ell", type=int, default=None)
    count.add_argument(
        "--family", required=True, choices=[f.value for f in Family]
    )
    return top


def _cmd_run(args) -> int:
    overrides = {
        "method": args.method,
        "seed": args.seed,
        "threads": args.threads,
        "output": args.output,
    }
    config = load_config(args.config, overrides)
    traj = run_experiment(config)
    dest = config.output if config.output else "(not written, no output path)"
    print(f"method={config.method} steps={config.steps} dt={config.dt} -> {dest}")
    print(f"final <O(t={traj.t[-1]:g})> = {traj.obs[-1]:.6f}")
    return 0


def _cmd_variance(args) -> int:
    config = load_config(args.config, {"output": args.output})
    reference = Trajectory.read_csv(args.reference)
    ref_btb = (
        Trajectory.read_csv(args.reference_btb) if args.reference_btb else None
    )
    result = variance_harness(config, args.repeats, reference, ref_btb)
    final = result.ratio[-1]
    print(
        f"repeats={args.repeats} Var_D(T)={result.var_dyson[-1]:.6g} "
        f"Var_BTB(T)={result.var_btb[-1]:.6g} ratio={final:.3f}"
    )
    return 0


def _cmd_pairings(args) -> int:
    family = Family(args.family)
    if args.m < 2 or args.m % 2:
        raise ConfigError("m: need an even point count >= 2")
    if family is Family.BTB:
        if args.ell is None:
            for ell in range(1, args.m + 1):
                n = len(enumerate_family(family, args.m, ell))
                print(f"m={args.m} ell={ell} family=btb count={n}")
            return 0
        n = len(enumerate_family(family, args.m, args.ell))
        print(f"m={args.m} ell={args.ell} family=btb count={n}")
        return 0
    n = len(enumerate_family(family, args.m))
    print(f"m={args.m} family={family.value} count={n}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "variance":
            return _cmd_variance(args)
        return _cmd_pairings(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalCheckError as exc:
        print(f"numerical check failed: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
