"""Command-line entry point for batch runs and replays.

Every flag has an environment-variable override with the BURKLAB_ prefix
(list-valued variables are comma separated), so batch scripts can pin a
configuration without repeating flags.  Exit status: 0 when every executed
suite passed (or a replay showed no drift), 1 on a failed suite or drift,
3 on a numerical abort (the message carries the replay seed of the failing
item); argparse reports usage errors with its usual status 2.
"""

from __future__ import annotations

import argparse
import os
import sys

from .optimize import CgOptions, NonFiniteError
from .runner import SUITE_NAMES, ExperimentConfig, replay, run


def _env(name: str, default):
    return os.environ.get(f"BURKLAB_{name}", default)


def _env_list(name: str, default, cast):
    raw = os.environ.get(f"BURKLAB_{name}")
    if raw is None:
        return default
    return [cast(tok) for tok in raw.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burklab",
        description="Seeded experiment runner for the Burkholder integrand laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute one suite or all of them")
    runp.add_argument(
        "--suite",
        choices=SUITE_NAMES + ("all",),
        default=_env("SUITE", "all"),
    )
    runp.add_argument(
        "--n",
        type=int,
        nargs="+",
        default=_env_list("N", [6, 8, 12, 16], int),
        help="grid resolutions for the mesh suites",
    )
    runp.add_argument("--starts", type=int, default=int(_env("STARTS", 20)))
    runp.add_argument("--seed", type=int, default=int(_env("SEED", 20240901)))
    runp.add_argument("--amplitude", type=float, default=float(_env("AMPLITUDE", 5.0)))
    runp.add_argument(
        "--p",
        type=float,
        nargs="+",
        default=_env_list("P", [1.2, 1.5, 3.0, 5.0], float),
        help="exponents for the upper-bound sampling",
    )
    runp.add_argument(
        "--tol-grad",
        type=float,
        default=float(_env("TOL_GRAD", 1e-10)),
        help="gradient infinity-norm stopping tolerance for the minimizer",
    )
    runp.add_argument("--out", default=_env("OUT", "runrecord.json"))
    runp.add_argument("--format", choices=("json", "csv"), default=_env("FORMAT", "json"))
    runp.add_argument("--threads", type=int, default=int(_env("THREADS", 1)))
    runp.add_argument(
        "--ray-fixture",
        default=_env("RAY_FIXTURE", None),
        help="grid-function JSON file used as the single ray direction",
    )
    runp.add_argument(
        "--identity-fixture",
        default=_env("IDENTITY_FIXTURE", None),
        help="JSON file with the (z, w, p) grid for the dilation identities",
    )

    rep = sub.add_parser("replay", help="re-execute a stored record and report drift")
    rep.add_argument("record", help="path of a previously written run record")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "replay":
        _, drift = replay(args.record)
        if drift:
            print(f"drift in {len(drift)} field(s):")
            for path, old, new in drift[:50]:
                print(f"  {path}: {old!r} -> {new!r}")
            return 1
        print("replay matched the stored record")
        return 0

    config = ExperimentConfig(
        suite=args.suite,
        n_list=tuple(args.n),
        starts=args.starts,
        master_seed=args.seed,
        amplitude=args.amplitude,
        p_list=tuple(args.p),
        tolerances=CgOptions(gradient_tolerance=args.tol_grad),
        output_path=args.out,
        format=args.format,
        threads=args.threads,
        ray_fixture=args.ray_fixture,
        identity_fixture=args.identity_fixture,
    )
    try:
        record = run(config)
    except NonFiniteError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    return 0 if record["pass"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
