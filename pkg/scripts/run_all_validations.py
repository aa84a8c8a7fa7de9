"""Run every validator and print one line per check; exit 1 if any check fails."""
import argparse
import sys
import time
from pathlib import Path

from bullwhip import io
from bullwhip.experiments import VALIDATORS, preset


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/validate")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    ok = True
    for name, fn in VALIDATORS.items():
        cfg = preset(name)
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
        t0 = time.perf_counter()
        rep = fn(cfg)
        io.save_report(rep, Path(args.out_dir), "json")
        print(f"== {name} ({time.perf_counter() - t0:.1f}s)")
        for line in rep.summary_lines():
            print(line)
        ok &= rep.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
