"""Local vs global QMSVM accuracy on overlapping three-class blobs over several seeds.

    python3 scripts/overlap_gap.py --distance 2 --seeds 5
"""

import argparse

from lqsvm.data import separated_blobs
from lqsvm.evaluation import MethodConfig, run_cv
from lqsvm.falk import FalkParams, QmsvmTrainer
from lqsvm.qmsvm import WeightingConfig
from lqsvm.sampler import SamplerConfig, SimulatedAnnealingSampler


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--distance", type=float, default=2.0)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--reads", type=int, default=1000)
    ap.add_argument("--sweeps", type=int, default=100)
    ap.add_argument("--folds", type=int, default=10)
    args = ap.parse_args()

    sampler = SimulatedAnnealingSampler(SamplerConfig(num_reads=args.reads, sweeps_per_read=args.sweeps))
    trainer = QmsvmTrainer(sampler, K=2, S=min(100, args.reads), weighting=WeightingConfig(10.0))
    p = FalkParams(k=24, k_prime=18)
    wins = 0
    for s in range(args.seeds):
        data = separated_blobs(3, args.n, args.distance, seed=100 + s)
        local = run_cv(data, MethodConfig("local", trainer, p), args.folds, s).accuracy
        glob = run_cv(data, MethodConfig("global", trainer, p), args.folds, s).accuracy
        wins += local >= glob
        print(f"seed {s}: local {local:.4f} global {glob:.4f} gap {local - glob:+.4f}", flush=True)
    print(f"local >= global in {wins}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
