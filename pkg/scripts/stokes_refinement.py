"""Loop integral vs surface integral of the density under quadrature refinement."""

import argparse

import numpy as np

from dislogeo.density import SurfacePatch, burgers_via_surface
from dislogeo.frame import develop_loop, perturbed_frame
from dislogeo.quadrature import QuadratureSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--amplitude", type=float, default=0.3)
    ap.add_argument("--levels", type=int, default=6)
    args = ap.parse_args()

    frame = perturbed_frame(np.random.default_rng(args.seed), amplitude=args.amplitude)
    patches = {
        "square": SurfacePatch.parallelogram((0.2, 0.2, 0.5), (0.6, 0, 0), (0, 0.6, 0)),
        "tilted": SurfacePatch.parallelogram((0.1, 0.1, 0.2), (0.7, 0.1, 0.2), (0.1, 0.6, 0.4)),
        "disk": SurfacePatch.disk((0.5, 0.5, 0.5), 0.4, plane=(1, 3)),
    }
    print(f"{'patch':8s} {'panels':>6s} {'|b_loop - b_surface|':>22s}")
    for name, patch in patches.items():
        loop = patch.boundary()
        for level in range(args.levels):
            panels = 2**level
            quad = QuadratureSpec(panels, 4)
            gap = np.linalg.norm(develop_loop(frame, loop, quad).burgers - burgers_via_surface(frame, patch, quad))
            print(f"{name:8s} {panels:6d} {gap:22.3e}")


if __name__ == "__main__":
    main()
