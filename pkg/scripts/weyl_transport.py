"""Length change of a transported vector versus half the line integral of the Weyl form."""

import argparse

import numpy as np

from dislogeo.frame import LoopSpec
from dislogeo.metric import ExpressionMetric
from dislogeo.weyl import ThermalModel, WeylStructure, parallel_transport_length_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--curves", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    structures = {
        "non-exact": WeylStructure(ExpressionMetric.from_upper(["1 + 0.2*X3^2", "0.1*X1", "0", "1", "0", "1"]), ["X2", "-X1", "0.3"]),
        "thermal": ThermalModel.parse("0.3 + 0.2*theta", 1.0, "1 + X1 + X2*X3").weyl_structure(),
    }
    print(f"{'structure':10s} {'log change':>12s} {'predicted':>12s} {'gap':>10s} {'steps':>6s}")
    for name, w in structures.items():
        for _ in range(args.curves):
            a, b = rng.uniform(0.1, 0.9, (2, 3))
            mid = rng.uniform(0.1, 0.9, 3)
            curve = LoopSpec.parse(*[f"{float(a[k])!r}*(1-t)^2 + 2*{float(mid[k])!r}*t*(1-t) + {float(b[k])!r}*t^2" for k in range(3)])
            r = parallel_transport_length_check(w, curve, rng.standard_normal(3))
            print(f"{name:10s} {r.log_length_change:12.8f} {r.predicted:12.8f} {r.discrepancy:10.2e} {r.steps:6d}")


if __name__ == "__main__":
    main()
