"""Data (and optional SVG charts) for the layer-BWE, structure and width figures."""
import argparse
import sys
from pathlib import Path

from bullwhip import io
from bullwhip.experiments import REPRODUCTIONS, preset


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", default=["fig2", "fig3", "fig4", "fig5"])
    ap.add_argument("--out-dir", default="results/figures")
    ap.add_argument("--svg", action="store_true", help="also draw SVG charts (needs matplotlib)")
    args = ap.parse_args()
    ok = True
    for name in args.names:
        rep = REPRODUCTIONS[name](preset(name))
        paths = io.save_report(rep, Path(args.out_dir))
        if args.svg:
            paths += io.save_svg(rep, Path(args.out_dir))
        print(f"== {name}")
        for line in rep.summary_lines():
            print(line)
        for p in paths:
            print(f"wrote {p}")
        ok &= rep.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
