"""Develop square loops through the twisted-plane frame and compare with the closed form."""

import argparse
import math

import numpy as np

from dislogeo.exprfield import BoxDomain
from dislogeo.frame import LoopSpec, develop_loop, helical


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--sides", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0])
    args = ap.parse_args()

    print(f"{'side':>6s} {'b2':>12s} {'b3':>12s} {'closed-form gap':>16s} {'developed end gap':>22s}")
    for L in args.sides:
        domain = BoxDomain.from_bounds((-0.1, -0.1, -0.1), (L + 0.1, L + 0.1, L + 0.1))
        frame = helical(args.gamma, domain=domain)
        dev = develop_loop(frame, LoopSpec.polygon([(0, 0, 0), (L, 0, 0), (L, L, 0), (0, L, 0)]))
        g = args.gamma
        exact = np.array([0.0, L * (math.cos(g * L) - 1), -L * math.sin(g * L)])
        print(f"{L:6.2f} {dev.burgers[1]:12.6f} {dev.burgers[2]:12.6f} {np.abs(dev.burgers - exact).max():16.2e} {np.linalg.norm(dev.points[-1]):22.6f}")


if __name__ == "__main__":
    main()
