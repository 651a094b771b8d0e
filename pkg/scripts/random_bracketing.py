"""Solve the seeded random QCPs and compare the bounds with the grid oracle.

    python scripts/random_bracketing.py --count 20 --eps-gap 1e-3
"""
import argparse
import sys
import time

from cdaqcp.refine import RefineParams, solve
from cdaqcp.verify import bracketing_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--eps-gap", type=float, default=1e-3)
    ap.add_argument("--time-limit", type=float, default=60.0)
    args = ap.parse_args(argv)

    failures = 0
    print(f"{'name':<12} {'n':>2} {'m':>2} {'tau_lower':>11} {'grid':>11} {'tau_upper':>11} {'gap':>8} {'secs':>6}  ok")
    for inst, star in bracketing_suite(args.count):
        t0 = time.perf_counter()
        st = solve(inst, RefineParams(eps_gap=args.eps_gap, time_limit=args.time_limit))
        dt = time.perf_counter() - t0
        ok = st.tau_lower - 1e-6 <= star <= st.tau_upper + 0.05 and st.gap <= 1e-3
        failures += not ok
        print(f"{inst.name:<12} {inst.n:>2} {inst.m:>2} {st.tau_lower:>11.6f} {star:>11.6f} {st.tau_upper:>11.6f} {st.gap:>8.1e} {dt:>6.1f}  {ok}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
