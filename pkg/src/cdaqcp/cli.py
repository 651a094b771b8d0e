"""Command-line front end.

Exit codes: 0 solved or complete, 2 a limit was hit (bounds still valid),
3 infeasible, 64 usage error, 65 bad input data.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from .bench import BenchParams, run_bench
from .instance_io import InstanceError, load, write_solution
from .oracle import check_projection_equivalence, enumerate_disjunction, grid_optimum
from .refine import RefineParams, solve

EXIT_OK = 0
EXIT_LIMIT = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 64
EXIT_DATA = 65

MODE_NAMES = {"d": "D", "dplus": "Dplus", "auto": None}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(v):
    return v if v is None or math.isfinite(v) else None


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=sorted(MODE_NAMES), default="auto")
    p.add_argument("--T", type=int, default=20, help="refinement batch size")
    p.add_argument("--eps-viol", type=float, default=1e-5)
    p.add_argument("--eps-gap", type=float, default=1e-4)
    p.add_argument("--time-limit", type=float, default=math.inf, help="seconds")
    p.add_argument("--node-limit", type=int, default=100_000, help="per branch-and-bound run")
    p.add_argument("--negate", action="store_true", help="maximize instead: flip the objective sign")
    p.add_argument("--paper-exact-diagonal", action="store_true", help="use delta = -diag(Q) for diagonal matrices")


def _refine_params(args, log_stream=None) -> RefineParams:
    return RefineParams(
        T=args.T,
        eps_viol=args.eps_viol,
        eps_gap=args.eps_gap,
        time_limit=args.time_limit,
        node_limit=args.node_limit,
        mode=MODE_NAMES[args.mode],
        paper_exact_diagonal=args.paper_exact_diagonal,
        log_stream=log_stream,
        node_log=sys.stderr if args.verbose >= 2 else None,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdaqcp", description="Adaptive disjunctive relaxations for nonconvex QCPs.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv node log")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve an instance (.json or boxqp text)")
    p.add_argument("file")
    _add_solver_flags(p)
    p.add_argument("--log-json", metavar="PATH", help="per-iteration JSON lines ('-' for stdout)")
    p.add_argument("--output", metavar="PATH", help="write the solution file here")

    p = sub.add_parser("verify", help="run the invariant and oracle checks")
    p.add_argument("--full", action="store_true", help="acceptance-size runs (minutes)")

    p = sub.add_parser("oracle", help="brute-force grid optimum (n <= 4)")
    p.add_argument("file")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--negate", action="store_true")

    p = sub.add_parser("enumerate", help="triangles and knots of the level-nu disjunction")
    p.add_argument("l", type=float)
    p.add_argument("u", type=float)
    p.add_argument("nu", type=int)
    p.add_argument("--svg", metavar="PATH", help="also draw the curve and triangles")
    p.add_argument("--points", type=int, default=200, help="curve polyline resolution")

    p = sub.add_parser("equivalence", help="fixed-z projection check for one block")
    p.add_argument("l", type=float)
    p.add_argument("u", type=float)
    p.add_argument("nu", type=int)
    p.add_argument("--mode", choices=["d", "dplus"], default="d")

    p = sub.add_parser("bench", help="solve every instance in a directory")
    p.add_argument("directory")
    _add_solver_flags(p)
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--plot", default="bench_plot.csv")
    p.add_argument("--baseline", metavar="CSV", help="columns name, lower_bound, upper_bound")
    return parser


def _status_code(status: str) -> int:
    if status in ("optimal", "no_refinement"):
        return EXIT_OK
    if status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def cmd_solve(args) -> int:
    inst = load(args.file, negate=args.negate)
    stream, close = None, False
    if args.log_json == "-":
        stream = sys.stdout
    elif args.log_json:
        stream, close = open(args.log_json, "w", encoding="utf-8"), True
    try:
        state = solve(inst, _refine_params(args, stream))
    finally:
        if close:
            stream.close()
    summary = {
        "name": inst.name,
        "status": state.status,
        "tau_lower": _num(state.tau_lower),
        "tau_upper": _num(state.tau_upper),
        "gap": _num(state.gap),
        "iterations": state.iterations,
        "nodes": state.nodes,
        "seconds": round(state.seconds, 3),
        "nu": [int(v) for v in state.nu],
        "x": None if state.incumbent is None else [float(v) for v in state.incumbent],
    }
    out = sys.stderr if stream is sys.stdout else sys.stdout
    print(json.dumps(summary), file=out)
    if args.output:
        write_solution(args.output, state, inst.name)
    return _status_code(state.status)


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(full=args.full)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else 1


def cmd_oracle(args) -> int:
    inst = load(args.file, negate=args.negate)
    res = grid_optimum(inst, args.step)
    print(
        json.dumps(
            {
                "name": inst.name,
                "feasible": res.feasible,
                "value": _num(res.value),
                "point": None if res.point is None else [float(v) for v in res.point],
                "lattice_size": res.lattice_size,
            }
        )
    )
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def disjunction_data(l: float, u: float, nu: int, points: int = 200) -> dict:
    """Curve polyline, triangles and knots, ready for plotting."""
    import numpy as np

    from .geometry import knot

    xs = np.linspace(l, u, points)
    tris = []
    knots = set()
    for z, tri in enumerate_disjunction(l, u, nu):
        V = tri.vertices()
        knots.update((round(knot(tri.alpha), 12), round(knot(tri.beta), 12)))
        tris.append(
            {
                "z": list(z),
                "alpha": tri.alpha,
                "beta": tri.beta,
                "vertices": V.tolist(),
                "polyline": [V[0].tolist(), V[2].tolist(), V[1].tolist(), V[0].tolist()],
            }
        )
    return {
        "l": l,
        "u": u,
        "nu": nu,
        "knots": sorted(knots),
        "curve": np.column_stack([xs, xs * xs]).tolist(),
        "triangles": tris,
    }


def render_svg(data: dict, width: int = 640, height: int = 480, pad: int = 20) -> str:
    pts = [p for t in data["triangles"] for p in t["vertices"]] + data["curve"]
    xmin, xmax = min(p[0] for p in pts), max(p[0] for p in pts)
    ymin, ymax = min(p[1] for p in pts), max(p[1] for p in pts)
    sx = (width - 2 * pad) / max(xmax - xmin, 1e-12)
    sy = (height - 2 * pad) / max(ymax - ymin, 1e-12)

    def path(poly):
        return " ".join(f"{pad + (x - xmin) * sx:.2f},{height - pad - (y - ymin) * sy:.2f}" for x, y in poly)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    for t in data["triangles"]:
        parts.append(f'<polygon points="{path(t["polyline"])}" fill="#9ecae1" fill-opacity="0.4" stroke="#3182bd"/>')
    parts.append(f'<polyline points="{path(data["curve"])}" fill="none" stroke="black" stroke-width="1.5"/>')
    for k in data["knots"]:
        cx, cy = path([(k, k * k)]).split(",")
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="#de2d26"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def cmd_enumerate(args) -> int:
    data = disjunction_data(args.l, args.u, args.nu, args.points)
    print(json.dumps(data))
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(data))
    return EXIT_OK


def cmd_equivalence(args) -> int:
    rep = check_projection_equivalence(args.l, args.u, args.nu, MODE_NAMES[args.mode])
    print(rep.to_json())
    return EXIT_OK if rep.ok else 1


def cmd_bench(args) -> int:
    params = BenchParams(
        refine=_refine_params(args),
        negate=args.negate,
        out_csv=args.out,
        plot_csv=args.plot,
        baseline_csv=args.baseline,
    )
    rows = run_bench(args.directory, params)
    print(f"{len(rows)} instances -> {args.out}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "enumerate": cmd_enumerate,
    "equivalence": cmd_equivalence,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InstanceError, OSError) as exc:
        print(f"cdaqcp: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # bad numeric arguments, e.g. l > u or nu out of range
        print(f"cdaqcp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
