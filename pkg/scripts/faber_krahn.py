"""Optimal shape of area 0.2 in the unit square at h = 1/128.

Runs the full solve and diagnostics, then prints the headline values next to
the disk references.

    python3 scripts/faber_krahn.py [--out DIR]
"""

import argparse
import math
import time
from pathlib import Path

from eigshape.cli import run_experiment
from eigshape.config import load_config
from eigshape.reference import disk_boundary_gradient, disk_eigenvalue, disk_multiplier

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "faber_krahn.cfg"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/faber_krahn")
    args = ap.parse_args()
    cfg = load_config(CONFIG)
    t0 = time.perf_counter()
    report = run_experiment(cfg, Path(args.out))
    elapsed = time.perf_counter() - t0
    a = cfg.a
    rows = [
        ("lambda_a", report.value("lambda_a"), disk_eigenvalue(a)),
        ("lambda_est", report.value("lambda_est"), disk_multiplier(a)),
        ("grad_median", report.value("grad_median"), disk_boundary_gradient(a)),
        ("circle_r", report.value("circle_r"), math.sqrt(a / math.pi)),
    ]
    print(f"{'quantity':<12} {'measured':>12} {'disk':>12} {'rel err':>9}")
    for name, got, ref in rows:
        print(f"{name:<12} {got:12.5f} {ref:12.5f} {got / ref - 1:+9.4f}")
    print(f"hausdorff / h = {report.value('circle_hausdorff') / cfg.domain.h:.2f}")
    failed = [c[0] for c in report.checks if not c[1]]
    print(f"checks: {len(report.checks) - len(failed)}/{len(report.checks)} passed")
    for name in failed:
        print(f"  FAIL {name}")
    print(f"elapsed {elapsed:.1f} s, outputs in {args.out}")


if __name__ == "__main__":
    main()
