"""Three-class blobs: local QMSVM (plain and kernel-selected) vs global QMSVM, 10-fold CV.

    python3 scripts/multiclass_cv.py --n 300 --distance 6 --seed 0
"""

import argparse

from lqsvm.data import separated_blobs
from lqsvm.evaluation import MethodConfig, run_cv
from lqsvm.falk import FalkParams, QmsvmTrainer
from lqsvm.kernel import KernelConfig
from lqsvm.qmsvm import WeightingConfig
from lqsvm.sampler import SamplerConfig, SimulatedAnnealingSampler


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--distance", type=float, default=6.0, help="pairwise center distance in sigmas")
    ap.add_argument("--k", type=int, default=24)
    ap.add_argument("--k-prime", type=int, default=18)
    ap.add_argument("--reads", type=int, default=1000)
    ap.add_argument("--sweeps", type=int, default=100)
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-selection", action="store_true")
    args = ap.parse_args()

    data = separated_blobs(args.classes, args.n, args.distance, seed=args.seed)
    sampler = SimulatedAnnealingSampler(SamplerConfig(num_reads=args.reads, sweeps_per_read=args.sweeps))
    trainer = QmsvmTrainer(sampler, KernelConfig(1.0), K=2, mu=1.0, beta=1.0, S=min(100, args.reads),
                           weighting=WeightingConfig(10.0))
    p = FalkParams(k=args.k, k_prime=args.k_prime, grid=(KernelConfig(-0.5), KernelConfig(1.0)))
    methods = [MethodConfig("local", trainer, p), MethodConfig("global", trainer, p)]
    if not args.skip_selection:
        methods.insert(1, MethodConfig("local", trainer, p, selection=True))
    for m in methods:
        r = run_cv(data, m, args.folds, args.seed)
        print(f"{m.label:24s} acc {r.accuracy:.4f} bal {r.balanced_accuracy:.4f} f1 {r.macro_f1:.4f}")


if __name__ == "__main__":
    main()
