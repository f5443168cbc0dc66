"""Exact nearest-neighbor search: a cover tree and a brute-force reference.

Both backends share one distance routine and the same tie rule (equal
distances are ordered by lower index), so their answers can be compared for
exact equality.
"""

from __future__ import annotations

import math

import numpy as np

# relative slack on pruning radii, absorbs rounding in the triangle inequality
_SLACK = 1e-9


def distances_to(X: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Euclidean distances from ``q`` to each row of ``X``."""
    diff = X - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _rank(idx: np.ndarray, dist: np.ndarray, k: int):
    order = np.lexsort((idx, dist))[:k]
    return idx[order], dist[order]


class BruteForce:
    """Linear scan; the oracle for :class:`CoverTree` and the fallback for tiny N."""

    def __init__(self, points):
        self.points = np.ascontiguousarray(points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("need a non-empty (N, d) point matrix")
        self.visits = 0

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def knn(self, query, k: int):
        """Indices and distances of the ``k`` nearest points, ascending."""
        if not 1 <= k <= self.n:
            raise ValueError(f"k={k} outside 1..{self.n}")
        q = np.asarray(query, dtype=float)
        if q.shape != (self.points.shape[1],):
            raise ValueError(f"query has shape {q.shape}, expected ({self.points.shape[1]},)")
        self.visits += self.n
        return _rank(np.arange(self.n), distances_to(self.points, q), k)

    def nearest(self, query) -> int:
        return int(self.knn(query, 1)[0][0])


class CoverTree:
    """Base-2 cover tree with explicit levels (Beygelzimer, Kakade & Langford).

    Nodes are distinct point locations; exact duplicates join the node of their
    first occurrence. A node created at level ``j`` is implicitly present at
    every level ``<= j`` (nesting). It hangs below a parent present at level
    ``j + 1`` within distance ``2**(j + 1)`` (covering), and nodes present at
    level ``j`` are pairwise more than ``2**j`` apart (separation).

    Points are inserted in index order, so the tree is deterministic.
    """

    def __init__(self, points):
        self.points = np.ascontiguousarray(points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("need a non-empty (N, d) point matrix")
        self.node_point: list[int] = []
        self.node_level: list[int] = []
        self.node_parent: list[int] = []
        self.members: list[list[int]] = []
        # children[v][j] lists the nodes created at level j below v
        self.children: list[dict[int, list[int]]] = []
        self.visits = 0

        spread = float(distances_to(self.points, self.points[0]).max())
        top = math.ceil(math.log2(spread)) if spread > 0 else 0
        while 2.0**top < spread:
            top += 1
        self.top_level = top
        self._new_node(0, top, -1)
        for i in range(1, self.n):
            self._insert(i)
        self._members = [np.asarray(m, dtype=np.int64) for m in self.members]
        self._sizes = np.array([len(m) for m in self.members])
        self._coords = self.points[self.node_point]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def node_count(self) -> int:
        return len(self.node_point)

    def _new_node(self, idx: int, level: int, parent: int) -> int:
        v = len(self.node_point)
        self.node_point.append(idx)
        self.node_level.append(level)
        self.node_parent.append(parent)
        self.members.append([idx])
        self.children.append({})
        if parent >= 0:
            self.children[parent].setdefault(level, []).append(v)
        return v

    def _dist(self, nodes, q) -> np.ndarray:
        return distances_to(self.points[[self.node_point[v] for v in nodes]], q)

    def _insert(self, idx: int) -> None:
        p = self.points[idx]
        level = self.top_level
        cover = [0]
        cover_d = self._dist(cover, p)
        if cover_d[0] == 0.0:
            self.members[0].append(idx)
            return
        trail = []
        while True:
            kids = [c for v in cover for c in self.children[v].get(level - 1, ())]
            if kids:
                kd = self._dist(kids, p)
                same = np.flatnonzero(kd == 0.0)
                if same.size:
                    self.members[kids[same[0]]].append(idx)
                    return
                q_nodes = cover + kids
                q_d = np.concatenate([cover_d, kd])
            else:
                q_nodes, q_d = cover, cover_d
            radius = 2.0**level
            if q_d.min() > radius:
                break
            trail.append((level, cover, cover_d))
            keep = np.flatnonzero(q_d <= radius)
            cover = [q_nodes[i] for i in keep]
            cover_d = q_d[keep]
            level -= 1
        # the deepest level whose cover set still reaches p takes it as a child
        for lvl, nodes, d in reversed(trail):
            ok = np.flatnonzero(d <= 2.0**lvl)
            if ok.size:
                best = ok[np.argmin(d[ok])]
                self._new_node(idx, lvl - 1, nodes[best])
                return
        raise AssertionError("cover tree root failed to cover a point")

    def knn(self, query, k: int):
        """Indices and distances of the ``k`` nearest points, ascending (ties: lower index)."""
        if not 1 <= k <= self.n:
            raise ValueError(f"k={k} outside 1..{self.n}")
        q = np.asarray(query, dtype=float)
        if q.shape != (self.points.shape[1],):
            raise ValueError(f"query has shape {q.shape}, expected ({self.points.shape[1]},)")

        d0 = distances_to(self._coords[:1], q)
        # candidate pool: every expanded node that can still reach the k nearest
        pool, pool_d = np.array([0]), d0
        cover, cover_d = pool, pool_d
        level = self.top_level
        visits = 1
        while True:
            # next level at which any cover node has children
            nxt = None
            for v in cover:
                for j in self.children[v]:
                    if j < level and (nxt is None or j > nxt):
                        nxt = j
            if nxt is None:
                break
            level = nxt
            kids = [c for v in cover for c in self.children[v].get(level, ())]
            if kids:
                kids = np.asarray(kids)
                kd = distances_to(self._coords[kids], q)
                visits += kids.size
                pool, pool_d = np.concatenate([pool, kids]), np.concatenate([pool_d, kd])
                cover, cover_d = np.concatenate([cover, kids]), np.concatenate([cover_d, kd])
            bound = self._kth_distance(pool, pool_d, k)
            # the bound only shrinks, so pool entries beyond it never return
            keep = pool_d <= bound
            pool, pool_d = pool[keep], pool_d[keep]
            # unexpanded descendants of a node present at `level` lie within 2**(level+1)
            reach = bound + 2.0 ** (level + 1) * (1 + _SLACK) + _SLACK * bound
            keep = cover_d <= reach
            cover, cover_d = cover[keep], cover_d[keep]
        self.visits += visits

        sizes = self._sizes[pool]
        idx = np.concatenate([self._members[v] for v in pool])
        return _rank(idx, np.repeat(pool_d, sizes), k)

    def _kth_distance(self, nodes: np.ndarray, dists: np.ndarray, k: int) -> float:
        order = np.argsort(dists, kind="stable")
        cum = np.cumsum(self._sizes[nodes[order]])
        pos = np.searchsorted(cum, k)
        return float(dists[order[pos]]) if pos < dists.size else math.inf

    def nearest(self, query) -> int:
        return int(self.knn(query, 1)[0][0])

    # -- auditing ------------------------------------------------------------

    def check_invariants(self) -> list[str]:
        """Return a list of violated invariants (empty when the tree is valid)."""
        problems = []
        present = sorted({self.node_level[v] for v in range(self.node_count)}, reverse=True)
        levels = np.asarray(self.node_level)
        coords = self._coords
        for v in range(1, self.node_count):
            par = self.node_parent[v]
            j = self.node_level[v]
            if self.node_level[par] < j + 1:
                problems.append(f"nesting: parent of node {v} not present at level {j + 1}")
            gap = float(distances_to(coords[[par]], coords[v])[0])
            if gap > 2.0 ** (j + 1):
                problems.append(f"covering: node {v} at level {j} is {gap} from its parent")
        for j in present:
            at = np.flatnonzero(levels >= j)
            if at.size < 2:
                continue
            P = coords[at]
            diff = P[:, None, :] - P[None, :, :]
            D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            np.fill_diagonal(D, np.inf)
            if D.min() <= 2.0**j:
                problems.append(f"separation: nodes at level {j} only {D.min()} apart")
        indexed = sorted(i for m in self.members for i in m)
        if indexed != list(range(self.n)):
            problems.append("not every point index is stored exactly once")
        return problems


def build_index(points, backend: str = "cover_tree"):
    if backend == "cover_tree":
        return CoverTree(points)
    if backend == "brute":
        return BruteForce(points)
    raise ValueError(f"unknown neighbor backend {backend!r}")
