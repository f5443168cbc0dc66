"""QUBO samplers: simulated annealing, exhaustive enumeration and a remote job client.

Every backend returns a :class:`SampleSet` sorted by ascending energy. Energies
are always recomputed from the returned bits with :func:`qubo_energy`
semantics, never carried over from an incremental update.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from numba import njit

from .qubo import QuboMatrix, qubo_energies

logger = logging.getLogger(__name__)


class SamplerError(RuntimeError):
    """Base class for sampler/backend failures."""


class CapacityError(SamplerError):
    pass


class RemoteConnectionError(SamplerError):
    pass


class RemoteTimeoutError(SamplerError):
    pass


class RemoteProtocolError(SamplerError):
    """The server answered with something that is not a valid job response."""


class IntegrityError(SamplerError):
    """A reported energy disagrees with the energy of the reported bits."""


@dataclass(frozen=True)
class SamplerConfig:
    num_reads: int = 1000
    sweeps_per_read: int = 100
    t_start: float | None = None  # default: max |Q entry|
    t_end: float | None = None  # default: 1e-3 * t_start
    seed: int = 0
    best_S: int | None = None  # None keeps every read
    chain_strength: float = 1.0  # remote hardware only; SA ignores it

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sweeps_per_read < 1:
            raise ValueError("sweeps_per_read must be >= 1")
        if self.best_S is not None and not 1 <= self.best_S <= self.num_reads:
            raise ValueError("best_S must lie in 1..num_reads")
        if self.t_start is not None and self.t_end is not None and not self.t_start > self.t_end > 0:
            raise ValueError("temperatures must satisfy t_start > t_end > 0")

    def temperatures(self, Q: QuboMatrix) -> tuple[float, float]:
        t0 = self.t_start
        if t0 is None:
            t0 = float(np.abs(Q.upper).max()) or 1.0
        t1 = self.t_end if self.t_end is not None else 1e-3 * t0
        if not t0 > t1 > 0:
            raise ValueError("temperatures must satisfy t_start > t_end > 0")
        return t0, t1


@dataclass(frozen=True, eq=False)
class SampleSet:
    bits: np.ndarray  # (reads, dim) uint8
    energies: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        e = np.asarray(self.energies, dtype=float)
        if b.ndim != 2 or b.shape[0] != e.shape[0]:
            raise ValueError("bits must be (reads, dim) with one energy per read")
        b.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "bits", b)
        object.__setattr__(self, "energies", e)

    @classmethod
    def from_bits(cls, Q: QuboMatrix, bits) -> "SampleSet":
        """Score and stably sort raw reads."""
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, Q.dim)
        energies = qubo_energies(Q, bits)
        order = np.argsort(energies, kind="stable")
        return cls(bits[order], energies[order])

    def __len__(self):
        return self.bits.shape[0]

    def __iter__(self):
        return iter(zip(self.bits, self.energies))

    @property
    def best(self):
        return self.bits[0], float(self.energies[0])

    def __eq__(self, other):
        return (
            isinstance(other, SampleSet)
            and np.array_equal(self.bits, other.bits)
            and np.array_equal(self.energies, other.energies)
        )

    __hash__ = None


def take_best(s: SampleSet, S: int) -> SampleSet:
    if S < 1:
        raise ValueError("S must be >= 1")
    return SampleSet(s.bits[:S], s.energies[:S])


# -- structure cache -------------------------------------------------------------


class Structure(NamedTuple):
    """Per-dimension preparation for a complete coupling graph."""

    dim: int
    rows: np.ndarray  # strict upper-triangle coordinates
    cols: np.ndarray


class StructureCache:
    """Builds at most one :class:`Structure` per dimension, thread-safely."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items: dict[int, Structure] = {}
        self.builds = 0
        self.hits = 0

    def get_or_build(self, dim: int) -> Structure:
        with self._lock:
            item = self._items.get(dim)
            if item is not None:
                self.hits += 1
                return item
            rows, cols = np.triu_indices(dim, 1)
            item = Structure(dim, rows, cols)
            self._items[dim] = item
            self.builds += 1
            return item

    def clear(self):
        with self._lock:
            self._items.clear()

    def __len__(self):
        return len(self._items)

    def __contains__(self, dim):
        return dim in self._items


default_structure_cache = StructureCache()


def structure_cache_get_or_build(dim: int, cache: StructureCache | None = None) -> Structure:
    return (default_structure_cache if cache is None else cache).get_or_build(dim)


# -- simulated annealing -----------------------------------------------------------


@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _anneal(h, W, betas, seed, first_read, n_reads, out):
    n = h.shape[0]
    golden = np.uint64(0x9E3779B97F4A7C15)
    inv53 = 1.0 / 9007199254740992.0
    x = np.zeros(n, dtype=np.uint8)
    fld = np.zeros(n)
    for r in range(n_reads):
        # independent stream per (seed, read index)
        state = _mix64(np.uint64(seed) ^ _mix64(np.uint64(first_read + r) + golden))
        for i in range(n):
            state += golden
            x[i] = np.uint8(_mix64(state) >> np.uint64(63))
        for i in range(n):
            acc = 0.0
            for j in range(n):
                if x[j]:
                    acc += W[i, j]
            fld[i] = acc
        for s in range(betas.shape[0]):
            beta = betas[s]
            for i in range(n):
                if x[i]:
                    delta = -(h[i] + fld[i])
                else:
                    delta = h[i] + fld[i]
                accept = delta <= 0.0
                if not accept:
                    state += golden
                    u = float(_mix64(state) >> np.uint64(11)) * inv53
                    accept = u < math.exp(-beta * delta)
                if accept:
                    # W is symmetric; row i is contiguous
                    if x[i]:
                        x[i] = 0
                        for j in range(n):
                            fld[j] -= W[i, j]
                    else:
                        x[i] = 1
                        for j in range(n):
                            fld[j] += W[i, j]
        for i in range(n):
            out[r, i] = x[i]


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)


def sample(Q: QuboMatrix, cfg: SamplerConfig, cache: StructureCache | None = None) -> SampleSet:
    """Simulated annealing with geometric cooling and single-bit Metropolis moves.

    One sweep visits every variable once in index order. Each read starts from
    its own random state, so reads are independent and repeated optima are kept.
    """
    struct = structure_cache_get_or_build(Q.dim, cache)
    h = np.ascontiguousarray(np.diag(Q.upper), dtype=float)
    W = np.zeros((Q.dim, Q.dim))
    vals = Q.upper[struct.rows, struct.cols]
    W[struct.rows, struct.cols] = vals
    W[struct.cols, struct.rows] = vals
    t0, t1 = cfg.temperatures(Q)
    temps = np.geomspace(t0, t1, cfg.sweeps_per_read)
    out = np.empty((cfg.num_reads, Q.dim), dtype=np.uint8)
    _anneal(h, W, 1.0 / temps, _seed64(cfg.seed), 0, cfg.num_reads, out)
    return SampleSet.from_bits(Q, out)


class SimulatedAnnealingSampler:
    name = "sa"

    def __init__(self, cfg: SamplerConfig | None = None, cache: StructureCache | None = None,
                 max_variables: int | None = None):
        self.cfg = cfg or SamplerConfig()
        self.cache = cache
        self.max_variables = max_variables

    def sample(self, Q: QuboMatrix, seed: int | None = None) -> SampleSet:
        if self.max_variables is not None and Q.dim > self.max_variables:
            raise CapacityError(f"QUBO has {Q.dim} variables; SA sampler limit is {self.max_variables}")
        cfg = self.cfg if seed is None else replace(self.cfg, seed=seed)
        return sample(Q, cfg, self.cache)


# -- exhaustive ------------------------------------------------------------------

EXHAUSTIVE_CAP = 24


def _assignments(dim: int, start: int, stop: int) -> np.ndarray:
    """Rows are the binary expansions of start..stop-1, variable 0 leftmost."""
    v = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(dim - 1, -1, -1, dtype=np.int64)
    return ((v[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def exhaustive_solve(Q: QuboMatrix, cap: int = EXHAUSTIVE_CAP, keep: int | None = None) -> SampleSet:
    """Enumerate all ``2**dim`` assignments; optionally keep only the ``keep`` lowest."""
    if Q.dim > cap:
        raise CapacityError(f"exhaustive solver limited to {cap} variables, QUBO has {Q.dim}")
    total = 1 << Q.dim
    chunk = 1 << 16
    best_bits, best_e = [], []
    for start in range(0, total, chunk):
        X = _assignments(Q.dim, start, min(total, start + chunk))
        e = qubo_energies(Q, X)
        if keep is not None and e.size > keep:
            sel = np.argsort(e, kind="stable")[:keep]
            X, e = X[sel], e[sel]
        best_bits.append(X)
        best_e.append(e)
        if keep is not None and len(best_bits) > 1:
            X = np.vstack(best_bits)
            e = np.concatenate(best_e)
            sel = np.argsort(e, kind="stable")[:keep]
            best_bits, best_e = [X[sel]], [e[sel]]
    X = np.vstack(best_bits)
    e = np.concatenate(best_e)
    order = np.argsort(e, kind="stable")
    if keep is not None:
        order = order[:keep]
    return SampleSet(X[order], e[order])


class ExhaustiveSampler:
    name = "exhaustive"

    def __init__(self, cap: int = EXHAUSTIVE_CAP, keep: int | None = None):
        self.cap = cap
        self.keep = keep
        self.max_variables = cap

    def sample(self, Q: QuboMatrix, seed: int | None = None) -> SampleSet:
        return exhaustive_solve(Q, self.cap, self.keep)


# -- remote ----------------------------------------------------------------------


def encode_job(Q: QuboMatrix, cfg: SamplerConfig) -> dict:
    return {
        "dim": Q.dim,
        "entries": [[i, j, v] for i, j, v in Q.entries()],
        "num_reads": cfg.num_reads,
        "seed": cfg.seed,
    }


def decode_samples(Q: QuboMatrix, payload, tol: float = 1e-6) -> SampleSet:
    """Validate a finished job's samples and return them re-sorted."""
    if not isinstance(payload, list) or not payload:
        raise RemoteProtocolError("job reported done without samples")
    bits = np.empty((len(payload), Q.dim), dtype=np.uint8)
    reported = np.empty(len(payload))
    for r, item in enumerate(payload):
        try:
            s, e = item["bits"], float(item["energy"])
        except (KeyError, TypeError, ValueError) as exc:
            raise RemoteProtocolError(f"sample {r} malformed: {item!r}") from exc
        if not isinstance(s, str) or len(s) != Q.dim or set(s) - {"0", "1"}:
            raise RemoteProtocolError(f"sample {r}: bit string must be {Q.dim} characters of 0/1")
        bits[r] = np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
        reported[r] = e
    actual = qubo_energies(Q, bits)
    bad = np.flatnonzero(np.abs(actual - reported) > tol)
    if bad.size:
        r = int(bad[0])
        raise IntegrityError(f"sample {r}: reported energy {reported[r]!r}, recomputed {actual[r]!r}")
    return SampleSet.from_bits(Q, bits)


def remote_sample(Q: QuboMatrix, endpoint: str, cfg: SamplerConfig, *, timeout: float = 60.0,
                  poll_interval: float = 0.05, transport=None) -> SampleSet:
    """Submit a QUBO job over HTTP and poll it to completion."""
    import httpx

    base = endpoint.rstrip("/")
    try:
        with httpx.Client(transport=transport, timeout=timeout) as client:
            resp = client.post(f"{base}/jobs", json=encode_job(Q, cfg))
            resp.raise_for_status()
            try:
                job_id = resp.json()["job_id"]
            except (ValueError, KeyError, TypeError) as exc:
                raise RemoteProtocolError(f"submit response lacks job_id: {resp.text[:200]!r}") from exc
            deadline = time.monotonic() + timeout
            while True:
                resp = client.get(f"{base}/jobs/{job_id}")
                resp.raise_for_status()
                try:
                    body = resp.json()
                    status = body["status"]
                except (ValueError, KeyError, TypeError) as exc:
                    raise RemoteProtocolError(f"status response malformed: {resp.text[:200]!r}") from exc
                if status == "done":
                    return decode_samples(Q, body.get("samples"))
                if status == "failed":
                    raise SamplerError(f"remote job {job_id} failed: {body.get('error', 'no reason given')}")
                if status != "pending":
                    raise RemoteProtocolError(f"unknown job status {status!r}")
                if time.monotonic() > deadline:
                    raise RemoteTimeoutError(f"job {job_id} not finished after {timeout}s")
                time.sleep(poll_interval)
    except httpx.TimeoutException as exc:
        raise RemoteTimeoutError(str(exc)) from exc
    except httpx.HTTPStatusError as exc:
        raise RemoteProtocolError(f"HTTP {exc.response.status_code} from {exc.request.url}") from exc
    except httpx.TransportError as exc:
        raise RemoteConnectionError(f"cannot reach {base}: {exc}") from exc


class RemoteSampler:
    name = "remote"

    def __init__(self, endpoint: str, cfg: SamplerConfig | None = None, timeout: float = 60.0,
                 transport=None, max_variables: int | None = None):
        self.endpoint = endpoint
        self.cfg = cfg or SamplerConfig()
        self.timeout = timeout
        self.transport = transport
        self.max_variables = max_variables
        self.cache = default_structure_cache

    def sample(self, Q: QuboMatrix, seed: int | None = None) -> SampleSet:
        if self.max_variables is not None and Q.dim > self.max_variables:
            raise CapacityError(f"QUBO has {Q.dim} variables; remote limit is {self.max_variables}")
        # mirrors hardware embedding reuse: one preparation per problem size
        self.cache.get_or_build(Q.dim)
        cfg = self.cfg if seed is None else replace(self.cfg, seed=seed)
        return remote_sample(Q, self.endpoint, cfg, timeout=self.timeout, transport=self.transport)
