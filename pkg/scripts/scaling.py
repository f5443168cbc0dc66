"""Locality-framework cost vs training size with a constant-label stub trainer.

    python3 scripts/scaling.py --sizes 5000 10000 20000 40000
"""

import argparse
import time

import numpy as np

from lqsvm.data import separated_blobs
from lqsvm.falk import FalkParams, MajorityTrainer, falk_predict, train_falk


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[5000, 10000, 20000])
    ap.add_argument("--k", type=int, default=80)
    ap.add_argument("--k-prime", type=int, default=60)
    ap.add_argument("--queries", type=int, default=2000)
    args = ap.parse_args()

    q = np.random.default_rng(0).normal(size=(args.queries, 2)) * 2.0
    for n in args.sizes:
        data = separated_blobs(2, n, 2.0, seed=n)
        t = time.perf_counter()
        model = train_falk(data, FalkParams(k=args.k, k_prime=args.k_prime), MajorityTrainer())
        train_s = time.perf_counter() - t
        model.index.visits = 0
        t = time.perf_counter()
        for x in q:
            falk_predict(model, x)
        lat = (time.perf_counter() - t) / len(q)
        print(f"N={n:6d} centers {len(model.centers):5d} train {train_s:7.2f}s "
              f"predict {lat * 1e6:7.1f}us visits/query {model.index.visits / len(q):7.1f}", flush=True)


if __name__ == "__main__":
    main()
