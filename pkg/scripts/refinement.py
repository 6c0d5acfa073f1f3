"""Grid refinement studies.

Prints the unit-square eigenvalue error against 2 pi^2 with observed orders,
and the disk eigenvalue and contour length of an area-0.2 disk against the
continuum values.

    python3 scripts/refinement.py [--finest 512]
"""

import argparse
import math

from eigshape.domain import BallSpec, ball_support, build_box_domain
from eigshape.freeboundary import perimeter_estimate
from eigshape.reference import disk_eigenvalue, disk_perimeter
from eigshape.spectral import smallest_eigenpair


def unit_square(n):
    return build_box_domain([(0, 1, 0, 1)], 1 / n, anchor="node")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--finest", type=int, default=256)
    args = ap.parse_args()
    ns = [n for n in (16, 32, 64, 128, 256, 512, 1024) if n <= args.finest]

    print("unit square")
    prev = None
    for n in ns:
        d = unit_square(n)
        err = abs(smallest_eigenpair(d, d.full_support()).lam - 2 * math.pi**2)
        order = "" if prev is None else f"{math.log2(prev / err):6.3f}"
        print(f"  h=1/{n:<5d} error={err:.4e} order={order}")
        prev = err

    print("disk of area 0.2")
    r = math.sqrt(0.2 / math.pi)
    for n in ns[2:]:
        d = unit_square(n)
        s = ball_support(d, BallSpec((0.5, 0.5), r))
        lam = smallest_eigenpair(d, s).lam
        per = perimeter_estimate(s)
        print(
            f"  h=1/{n:<5d} lambda err={lam / disk_eigenvalue(0.2) - 1:+.4f}"
            f" perimeter err={per / disk_perimeter(0.2) - 1:+.4f}"
        )


if __name__ == "__main__":
    main()
