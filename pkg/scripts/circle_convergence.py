"""Bounds per refinement iteration on the circle instance.

    python scripts/circle_convergence.py --csv circle.csv
"""
import argparse
import csv
import math
import sys

from cdaqcp.oracle import circle_instance
from cdaqcp.refine import RefineParams, solve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps-gap", type=float, default=1e-4)
    ap.add_argument("--T", type=int, default=20)
    ap.add_argument("--csv", help="write k, tau_lower, tau_upper, gap, nu here")
    args = ap.parse_args(argv)

    state = solve(circle_instance(), RefineParams(T=args.T, eps_gap=args.eps_gap))
    target = math.sqrt(0.5)
    print(f"{'k':>3} {'tau_lower':>12} {'tau_upper':>12} {'lower err':>10} {'nodes':>6}")
    for e in state.log:
        print(f"{e['k']:>3} {e['tau_lower']:>12.8f} {e['tau_upper']:>12.8f} {target - e['tau_lower']:>10.2e} {e['nodes']:>6}")
    print(f"status {state.status}, final nu {state.nu.tolist()}, {state.seconds:.2f}s")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "tau_lower", "tau_upper", "gap", "nodes"])
            for e in state.log:
                w.writerow([e["k"], e["tau_lower"], e["tau_upper"], e["gap"], e["nodes"]])
    return 0


if __name__ == "__main__":
    sys.exit(main())
