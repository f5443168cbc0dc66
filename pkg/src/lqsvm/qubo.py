"""QUBO matrices, Ising conversion and the SVM-specific QUBO builders.

Matrices are stored upper-triangular. The builders first write out the full
(non-symmetric) coefficient array over ordered variable pairs, then fold it:
``U[i, j] = F[i, j] + F[j, i]`` for ``i < j`` and ``U[i, i] = F[i, i]``. The
folding leaves ``x^T F x`` unchanged for every binary ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernel import kernel_matrix


class QuboError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuboMatrix:
    upper: np.ndarray

    def __post_init__(self):
        U = np.array(self.upper, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] < 1:
            raise QuboError(f"QUBO matrix must be square with dim >= 1, got shape {U.shape}")
        if np.any(np.tril(U, -1) != 0):
            raise QuboError("entries below the diagonal are not allowed; use QuboMatrix.from_full")
        U.setflags(write=False)
        object.__setattr__(self, "upper", U)

    @classmethod
    def from_full(cls, F) -> "QuboMatrix":
        """Fold an arbitrary square matrix into upper-triangular form."""
        F = np.asarray(F, dtype=float)
        return cls(np.triu(F) + np.triu(F.T, 1))

    @classmethod
    def from_entries(cls, dim: int, entries) -> "QuboMatrix":
        U = np.zeros((dim, dim))
        for i, j, v in entries:
            i, j = int(i), int(j)
            if i > j:
                i, j = j, i
            U[i, j] += float(v)
        return cls(U)

    @property
    def dim(self) -> int:
        return self.upper.shape[0]

    def entries(self):
        """Nonzero ``(i, j, value)`` triples in row-major order."""
        ii, jj = np.nonzero(self.upper)
        return [(int(i), int(j), float(self.upper[i, j])) for i, j in zip(ii, jj)]

    def symmetric_parts(self):
        """Linear coefficients and the zero-diagonal symmetric coupling matrix."""
        h = np.diag(self.upper).copy()
        W = np.triu(self.upper, 1)
        return h, W + W.T

    def __eq__(self, other):
        return isinstance(other, QuboMatrix) and np.array_equal(self.upper, other.upper)

    __hash__ = None


def qubo_energy(Q: QuboMatrix, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != Q.dim:
        raise QuboError(f"assignment has {x.size} bits, QUBO has {Q.dim} variables")
    return float(x @ Q.upper @ x)


def qubo_energies(Q: QuboMatrix, X) -> np.ndarray:
    """Energies of many assignments at once (one per row)."""
    X = np.asarray(X, dtype=float)
    return np.einsum("ri,ri->r", X @ Q.upper, X)


# -- Ising ---------------------------------------------------------------------


@dataclass(frozen=True)
class IsingModel:
    h: np.ndarray
    J: dict
    offset: float

    def __post_init__(self):
        for i, j in self.J:
            if not i < j:
                raise QuboError(f"coupling ({i}, {j}) must satisfy i < j")


def qubo_to_ising(Q: QuboMatrix) -> IsingModel:
    """Substitute ``x = (z + 1) / 2``; energies agree up to the returned offset."""
    U = Q.upper
    diag = np.diag(U)
    off = np.triu(U, 1)
    h = diag / 2 + (off.sum(axis=1) + off.sum(axis=0)) / 4
    offset = diag.sum() / 2 + off.sum() / 4
    ii, jj = np.nonzero(off)
    J = {(int(i), int(j)): float(off[i, j]) / 4 for i, j in zip(ii, jj)}
    return IsingModel(h, J, float(offset))


def ising_energy(model: IsingModel, z) -> float:
    z = np.asarray(z)
    if z.shape != model.h.shape:
        raise QuboError(f"spin vector length {z.size} != {model.h.size}")
    if not np.all((z == 1) | (z == -1)):
        raise QuboError("spins must be -1 or +1")
    z = z.astype(float)
    e = float(model.h @ z)
    for (i, j), v in model.J.items():
        e += v * z[i] * z[j]
    return e


# -- pruning -------------------------------------------------------------------


def prune_qubo(Q: QuboMatrix, max_min_ratio: float) -> QuboMatrix:
    """Zero off-diagonal entries smaller than ``max|Q| / max_min_ratio``."""
    if not max_min_ratio > 0:
        raise QuboError("max_min_ratio must be positive")
    U = Q.upper.copy()
    top = np.abs(U).max()
    if top == 0:
        return Q
    small = np.abs(U) < top / max_min_ratio
    np.fill_diagonal(small, False)
    U[small] = 0.0
    return QuboMatrix(U)


# -- binary SVM ----------------------------------------------------------------


@dataclass(frozen=True)
class QbsvmQuboParams:
    B: int = 2
    K: int = 2
    xi: float = 1.0
    gamma_eff: float = 1.0

    def __post_init__(self):
        if self.B < 2:
            raise QuboError("encoding base B must be >= 2")
        if self.K < 1:
            raise QuboError("bits per coefficient K must be >= 1")
        if self.xi < 0:
            raise QuboError("penalty xi must be >= 0")
        if not self.gamma_eff > 0:
            raise QuboError("gamma_eff must be positive")

    @property
    def A(self) -> int:
        """Largest representable coefficient (the box bound)."""
        return sum(self.B**k for k in range(self.K))


def signed_binary_labels(labels) -> np.ndarray:
    """Map {0, 1} to {-1, +1}; already-signed labels pass through."""
    y = np.asarray(labels)
    vals = set(np.unique(y).tolist())
    if vals <= {-1, 1}:
        return y.astype(float)
    if vals <= {0, 1}:
        return np.where(y == 1, 1.0, -1.0)
    raise QuboError(f"binary labels expected, got classes {sorted(vals)}")


def build_qbsvm_qubo(X, y, p: QbsvmQuboParams) -> QuboMatrix:
    """QUBO for the bit-encoded binary SVM dual.

    ``y`` holds ±1 (or 0/1) labels for the rows of ``X``; both classes must occur.
    The quadratic form equals ``0.5 * sum_nm a_n a_m y_n y_m (k_nm + xi) - sum_n a_n``
    on the decoded coefficients.
    """
    X = getattr(X, "features", X)
    y = signed_binary_labels(y)
    if np.unique(y).size != 2:
        raise QuboError("binary QUBO needs both classes present")
    N, K, B = y.size, p.K, p.B
    Kmat = kernel_matrix(X, p.gamma_eff)
    w = float(B) ** np.arange(K)
    # F[n, k, m, j]
    F = 0.5 * np.einsum("nm,k,j->nkmj", np.outer(y, y) * (Kmat + p.xi), w, w)
    F = F.reshape(N * K, N * K)
    F[np.diag_indices(N * K)] -= np.tile(w, N)
    return QuboMatrix.from_full(F)


def decode_alphas(bits, B: int, K: int, N: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=float).reshape(-1)
    if bits.size != N * K:
        raise QuboError(f"expected {N * K} bits, got {bits.size}")
    return bits.reshape(N, K) @ (float(B) ** np.arange(K))


# -- multiclass SVM --------------------------------------------------------------


@dataclass(frozen=True)
class QmsvmQuboParams:
    K: int = 2
    mu: float = 1.0
    beta: float = 1.0
    gamma_eff: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise QuboError("bits per variable K must be >= 1")
        if not self.gamma_eff > 0:
            raise QuboError("gamma_eff must be positive")


def build_qmsvm_qubo(X, labels, n_classes: int, p: QmsvmQuboParams) -> QuboMatrix:
    """QUBO for the bit-encoded Crammer-Singer multiclass SVM.

    Variable ``n*C*K + c*K + k`` is bit ``k`` of ``tau[n, c]``; labels are in
    ``0..n_classes-1``.
    """
    X = getattr(X, "features", X)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    C, K = int(n_classes), p.K
    if C < 2:
        raise QuboError("multiclass QUBO needs at least two classes")
    if np.unique(y).size < 2:
        raise QuboError("multiclass QUBO needs at least two distinct labels")
    if y.min() < 0 or y.max() >= C:
        raise QuboError("labels out of range")
    N = y.size
    Kmat = kernel_matrix(X, p.gamma_eff)
    span = 2.0**K - 1
    pw = 2.0 ** np.arange(K)
    dim = N * C * K

    own = np.zeros((N, C))
    own[np.arange(N), y] = 1.0
    # diagonal-only term, indexed [n, c, k]
    lin = (-Kmat.sum(axis=1))[:, None] - own * (p.beta + p.mu) - 2 * C * p.mu + p.mu
    lin = lin[:, :, None] * (2 * pw / span)[None, None, :]

    pk = np.outer(pw, pw)  # 2^(k1+k2)
    F = np.zeros((N, C, K, N, C, K))
    eyeC = np.eye(C)
    # same class, any samples
    F += (2.0 / span**2) * np.einsum("nm,cd,kj->nckmdj", Kmat, eyeC, pk)
    # same sample, any classes
    F += (4.0 * p.mu / span**2) * np.einsum("nm,cd,kj->nckmdj", np.eye(N), np.ones((C, C)), pk)
    F = F.reshape(dim, dim)
    F[np.diag_indices(dim)] += lin.reshape(-1)
    return QuboMatrix.from_full(F)


def decode_taus(bits, K: int, N: int, C: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=float).reshape(-1)
    if bits.size != N * C * K:
        raise QuboError(f"expected {N * C * K} bits, got {bits.size}")
    scale = 2.0 / (2.0**K - 1)
    return -1.0 + scale * (bits.reshape(N, C, K) @ (2.0 ** np.arange(K)))


# -- text dump -------------------------------------------------------------------


def dump_qubo(Q: QuboMatrix, path) -> None:
    lines = [f"dim {Q.dim}"]
    lines += [f"{i} {j} {v!r}" for i, j, v in Q.entries()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_qubo(path) -> QuboMatrix:
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0][0] != "dim" or len(lines[0]) != 2:
        raise QuboError(f"{path}: missing 'dim N' header")
    dim = int(lines[0][1])
    return QuboMatrix.from_entries(dim, [(int(a), int(b), float(c)) for a, b, c in lines[1:]])
