"""Monte Carlo size of the sign, signed-rank and Hotelling tests under N(0, I_p)."""
import argparse

import numpy as np

from spatialhl.inference import hotelling_t2, sign_test, signed_rank_test
from spatialhl.sim import SimSpec, parse_family, sample


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--family", default="normal")
    ap.add_argument("--replications", type=int, default=2000)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    family, df = parse_family(args.family)
    spec = SimSpec(args.n, args.p, family, df, args.seed, args.replications)
    tests = {"sign": sign_test, "signed-rank": signed_rank_test, "hotelling": hotelling_t2}
    rejections = {k: 0 for k in tests}
    for r in range(args.replications):
        y = sample(spec, r)
        for name, fn in tests.items():
            rejections[name] += fn(y).p_value < args.alpha
    se = np.sqrt(args.alpha * (1 - args.alpha) / args.replications)
    for name, k in rejections.items():
        print(f"{name:>12}: rejection rate {k / args.replications:.4f} (nominal {args.alpha}, MC s.e. {se:.4f})")


if __name__ == "__main__":
    main()
