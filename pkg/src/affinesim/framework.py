"""Graphs, configurations and frameworks, plus the connectivity and
affine-span predicates used by rigidity certification and leader selection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

# Singular values below max(shape) * sigma_max * RANK_RTOL count as zero.
RANK_RTOL = 1e-10


def readonly_array(values, dtype=float) -> np.ndarray:
    """Copy ``values`` into a locked ndarray so frozen dataclasses stay frozen."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 1..n.

    Edges are normalized to sorted (i, j) pairs with i < j; duplicates and
    reversed pairs collapse to one edge. Self-loops are rejected.
    """

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        normalized = set()
        for edge in self.edges:
            i, j = int(edge[0]), int(edge[1])
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge ({i}, {j}) outside nodes 1..{self.n}")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> tuple:
        """Sorted neighbor ids of node i."""
        out = [j for (a, b) in self.edges for j in ((b,) if a == i else (a,) if b == i else ())]
        return tuple(sorted(out))

    def adjacency(self) -> dict:
        adj = {i: set() for i in range(1, self.n + 1)}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj


@dataclass(frozen=True)
class Configuration:
    """Positions of n nodes in R^d, stored as a read-only (n, d) array."""

    positions: np.ndarray

    def __post_init__(self):
        try:
            pts = np.array(self.positions, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValueError("positions must be rectangular numeric data") from exc
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("positions must be a non-empty (n, d) array")
        if not np.isfinite(pts).all():
            raise ValueError("positions must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "positions", pts)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def stacked(self) -> np.ndarray:
        """Node-major flattening (p_1, p_2, ...) as a length n*d vector."""
        return self.positions.ravel().copy()


@dataclass(frozen=True)
class Framework:
    """A communication graph together with the configuration of its nodes."""

    graph: Graph
    config: Configuration

    def __post_init__(self):
        if self.graph.n != self.config.n:
            raise ValueError(
                f"graph has {self.graph.n} nodes but configuration has {self.config.n}"
            )


@dataclass(frozen=True)
class LeaderPartition:
    """Split of nodes 1..n into an ordered leader list and follower list.

    The leaders-first ordering (leaders + followers) is the reindexing every
    block computation uses.
    """

    leaders: tuple
    followers: tuple

    def __post_init__(self):
        leaders = tuple(int(i) for i in self.leaders)
        followers = tuple(int(i) for i in self.followers)
        object.__setattr__(self, "leaders", leaders)
        object.__setattr__(self, "followers", followers)
        n = len(leaders) + len(followers)
        if set(leaders) & set(followers):
            raise ValueError("leaders and followers overlap")
        if set(leaders) | set(followers) != set(range(1, n + 1)):
            raise ValueError(f"partition must cover nodes 1..{n} exactly")

    @classmethod
    def from_leaders(cls, leaders, n: int) -> "LeaderPartition":
        leaders = tuple(int(i) for i in leaders)
        followers = tuple(i for i in range(1, n + 1) if i not in set(leaders))
        return cls(leaders, followers)

    @property
    def n(self) -> int:
        return len(self.leaders) + len(self.followers)

    @property
    def n_leaders(self) -> int:
        return len(self.leaders)

    @property
    def n_followers(self) -> int:
        return len(self.followers)

    def order(self) -> tuple:
        """Node ids in leaders-first order."""
        return self.leaders + self.followers


@dataclass(frozen=True)
class LeaderSelectionReport:
    """Diagnostic result of a leader-selection check."""

    n_leaders: int
    required_leaders: int
    count_ok: bool
    span_dimension: int
    span_ok: bool
    passed: bool


def affine_span_dimension(points) -> int:
    """Dimension of the affine hull of a point set.

    Computed as the numerical rank of the matrix of differences p_i - p_1.
    A single point spans dimension 0; two distinct points a line, and so on.
    """
    try:
        pts = np.array(points, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError("points must share a common dimension") from exc
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("need at least one point")
    m, d = pts.shape
    if m == 1:
        return 0
    diffs = pts[1:] - pts[0]
    sigma = np.linalg.svd(diffs, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > max(m, d) * sigma[0] * RANK_RTOL))


def is_k_connected(graph: Graph, k: int) -> bool:
    """True iff removing any fewer than k vertices leaves the graph connected.

    Exhaustive cut enumeration; intended for desk-scale graphs (n up to ~20).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if graph.n <= k:
        raise ValueError(f"k-connectivity with k={k} needs more than k nodes, got n={graph.n}")
    adj = graph.adjacency()
    nodes = list(adj)
    for size in range(k):
        for cut in itertools.combinations(nodes, size):
            if not _connected_without(adj, set(cut)):
                return False
    return True


def _connected_without(adj: dict, removed: set) -> bool:
    remaining = set(adj) - removed
    start = next(iter(remaining))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v in remaining and v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(remaining)


def validate_leader_selection(
    framework: Framework, partition: LeaderPartition
) -> LeaderSelectionReport:
    """Check that d+1 leaders were chosen and that they affinely span R^d."""
    if partition.n != framework.config.n:
        raise ValueError("partition size does not match framework")
    d = framework.config.d
    required = d + 1
    count_ok = partition.n_leaders == required
    if partition.n_leaders == 0:
        span = 0
    else:
        idx = [i - 1 for i in partition.leaders]
        span = affine_span_dimension(framework.config.positions[idx])
    span_ok = span == d
    return LeaderSelectionReport(
        n_leaders=partition.n_leaders,
        required_leaders=required,
        count_ok=count_ok,
        span_dimension=span,
        span_ok=span_ok,
        passed=count_ok and span_ok,
    )
