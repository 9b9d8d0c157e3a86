"""Command-line entry point: ``run``, ``verify`` and ``thresholds``."""

from __future__ import annotations

import argparse
import sys

from seqfusion.scenario import ScenarioError, load_scenario_file, run_scenario
from seqfusion.seq_engine import TargetOperatingPoint, wald_thresholds


def _coalesce(value: str) -> str:
    if value in ("exact", "off") or value.startswith("tol="):
        return value
    raise argparse.ArgumentTypeError("expected exact, off or tol=<tau>")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqfusion", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compute and write the scenario's statistics")
    run.add_argument("scenario")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--coalesce", type=_coalesce, default=None, help="exact | tol=<tau> | off")
    run.add_argument("--plots", action="store_true", default=None, help="also write SVG charts")

    ver = sub.add_parser("verify", help="check the engine against the oracles")
    ver.add_argument("scenario")
    ver.add_argument("--max-horizon", type=int, default=12)
    ver.add_argument("--mc-trials", type=int, default=None)
    ver.add_argument("--seed", type=int, default=0)

    th = sub.add_parser("thresholds", help="Wald thresholds for a target operating point")
    th.add_argument("--pf", type=float, required=True)
    th.add_argument("--pd", type=float, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "thresholds":
            t = wald_thresholds(TargetOperatingPoint(args.pf, args.pd))
            print(f"eta0 {t.eta0!r}")
            print(f"eta1 {t.eta1!r}")
            print(f"midpoint {t.midpoint!r}")
            return 0

        scenario = load_scenario_file(args.scenario)
        if args.command == "run":
            result = run_scenario(scenario, args.out, coalesce=args.coalesce, plots=args.plots)
            for path in result.files:
                print(path)
            s = result.summary
            print(f"P_D' = {s['pd_final']:.6g}  P_F' = {s['pf_final']:.6g}  R = {s['growth_base']:.6g}")
            return 0

        from seqfusion.verify import verify_scenario

        result = verify_scenario(
            scenario, max_horizon=args.max_horizon, mc_trials=args.mc_trials, seed=args.seed
        )
        for line in result.lines():
            print(line)
        return 0 if result.ok else 1
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
