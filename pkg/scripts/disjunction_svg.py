"""Draw the level-nu triangles over y = x^2 for several levels side by side.

    python scripts/disjunction_svg.py -1 1 --levels 1 2 3 --out disjunction.svg
"""
import argparse
import sys

from cdaqcp.cli import disjunction_data, render_svg


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("l", type=float)
    ap.add_argument("u", type=float)
    ap.add_argument("--levels", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--width", type=int, default=360)
    ap.add_argument("--out", default="disjunction.svg")
    args = ap.parse_args(argv)

    w, h = args.width, int(args.width * 0.8)
    panels = []
    for k, nu in enumerate(args.levels):
        inner = render_svg(disjunction_data(args.l, args.u, nu), width=w, height=h)
        body = inner.split("\n", 1)[1].rsplit("\n", 1)[0]
        panels.append(f'<g transform="translate({k * w},0)">\n{body}\n<text x="{w // 2}" y="14" text-anchor="middle">nu = {nu}</text>\n</g>')
    svg = f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * len(panels)}" height="{h}">\n' + "\n".join(panels) + "\n</svg>\n"
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
