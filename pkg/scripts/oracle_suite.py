"""Enumeration vs penalty search on every small block grid.

    python3 scripts/oracle_suite.py [--max-grid 5] [--max-cells 6]
"""

import argparse
import time

from eigshape.cli import run_oracle_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-grid", type=int, default=5)
    ap.add_argument("--max-cells", type=int, default=6)
    args = ap.parse_args()
    t0 = time.perf_counter()
    report = run_oracle_suite(args.max_grid, args.max_cells)
    elapsed = time.perf_counter() - t0
    _, rows = report.tables["oracle.csv"]
    print(f"{'grid':>6} {'cells':>5} {'enumeration':>14} {'search':>14} {'rel err':>9}")
    for n, m, k, lam_e, lam_s, err, ok in rows:
        print(f"{n}x{m:<4} {k:5d} {lam_e:14.6f} {lam_s:14.6f} {err:9.1e}{'' if ok else '  MISMATCH'}")
    print(f"{len(rows)} cases, {report.value('mismatches')} mismatches, {elapsed:.1f} s")


if __name__ == "__main__":
    main()
