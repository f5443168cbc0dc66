"""Local kernel SVMs trained by sampling QUBO formulations."""

from .data import Dataset, load_csv, make_blobs, separated_blobs, stratified_kfold
from .evaluation import MethodConfig, run_cv
from .falk import FalkParams, MajorityTrainer, QbsvmTrainer, QmsvmTrainer, train_falk, train_falk_selected
from .kernel import KernelConfig
from .qubo import QuboMatrix
from .sampler import ExhaustiveSampler, RemoteSampler, SamplerConfig, SimulatedAnnealingSampler

__version__ = "0.1.0"
