"""Symmetric stochastic block model: parameters, samplers, ground-truth matrices.

The model SSBM(n, d/n, eps, k) assigns each vertex a uniform label in
{0, ..., k-1} and connects pairs independently with probability

    p_in  = (1 + (k-1)*eps/k) * d/n   (same label)
    p_out = (1 - eps/k) * d/n         (different labels)

eps = 0 degenerates to the Erdos-Renyi law G(n, d/n).  Ground-truth objects:
the membership matrix M  (entries 1{x_i = x_j} - 1/k), the edge probability
matrix theta (entries p_in / p_out), and the k-block graphon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .seeds import stream_rng


@dataclass(frozen=True)
class SbmParams:
    """Experiment parameter tuple (n, d, eps, k, eta, delta).

    n: vertex count; d: target average degree; eps: bias in [0, 1];
    k: community count; eta: holdout rate for edge subsampling in (0, 1);
    delta: target recovery rate in (0, 1].
    """

    n: int
    d: float
    eps: float = 0.0
    k: int = 2
    eta: float = 0.1
    delta: float = 0.1

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 vertices, got n={self.n}")
        if not 0 < self.d < self.n:
            raise ValueError(f"average degree must be in (0, n), got d={self.d}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"bias must be in [0, 1], got eps={self.eps}")
        if self.k < 1:
            raise ValueError(f"need at least one community, got k={self.k}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"holdout rate must be in (0, 1), got eta={self.eta}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"recovery rate must be in (0, 1], got delta={self.delta}")
        if self.p_in > 1.0:
            raise ValueError(f"p_in={self.p_in} exceeds 1; parameters out of range")

    @property
    def p_in(self) -> float:
        return (1.0 + (self.k - 1) * self.eps / self.k) * self.d / self.n

    @property
    def p_out(self) -> float:
        return (1.0 - self.eps / self.k) * self.d / self.n

    @property
    def ks_snr(self) -> float:
        return self.eps**2 * self.d / self.k**2


def ks_snr(params: SbmParams) -> float:
    """Signal-to-noise ratio eps^2 d / k^2; the critical threshold sits at 1."""
    return params.ks_snr


@dataclass(frozen=True, eq=False)
class Labels:
    """Community assignment: entries in {0, ..., k-1}, one per vertex."""

    assignment: np.ndarray
    k: int
    balanced: bool = False

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", a)
        if a.ndim != 1:
            raise ValueError("assignment must be a flat vector")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise ValueError("labels must lie in [0, k)")
        if self.balanced:
            counts = np.bincount(a, minlength=self.k)
            if np.any(counts != a.size // self.k):
                raise ValueError("balanced labels must have equal block sizes")

    @property
    def n(self) -> int:
        return self.assignment.size


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph stored as a sorted edge list (u < v)."""

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", e)
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges must satisfy u < v")
            order = np.lexsort((e[:, 1], e[:, 0]))
            if np.any(order != np.arange(e.shape[0])):
                raise ValueError("edge list must be sorted lexicographically")
            flat = e[:, 0] * self.n + e[:, 1]
            if np.any(np.diff(flat) == 0):
                raise ValueError("duplicate edge")

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    @cached_property
    def _dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        if self.edges.size:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 matrix, zero diagonal.  Cached; do not mutate."""
        return self._dense

    @staticmethod
    def from_edge_array(n: int, edges: np.ndarray) -> "Graph":
        """Normalize (orient u < v, sort, dedupe) an arbitrary pair array."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        keep = lo != hi
        e = np.unique(np.column_stack([lo[keep], hi[keep]]), axis=0)
        return Graph(n, e)


@dataclass(frozen=True, eq=False)
class BlockGraphon:
    """Step function on [0,1]^2 with m equal-mass blocks and value matrix b."""

    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "b", b)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("block value matrix must be square")
        if not np.allclose(b, b.T):
            raise ValueError("block value matrix must be symmetric")
        if b.min() < 0.0 or b.max() > 1.0:
            raise ValueError("graphon values must lie in [0, 1]")

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def masses(self) -> np.ndarray:
        """Equal block masses 1/m."""
        return np.full(self.m, 1.0 / self.m)

    def value(self, x: float, y: float) -> float:
        return self.b[block_of(x, self.m) - 1, block_of(y, self.m) - 1]


def block_of(x: float, m: int) -> int:
    """1-based block index ceil(m*x) of a point x in [0, 1] (x=0 maps to 1)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("graphon argument must lie in [0, 1]")
    return min(max(int(math.ceil(m * x)), 1), m)


def sample_labels(params: SbmParams, seed: int, balanced: bool = False) -> Labels:
    """i.i.d. uniform labels, or a uniformly random exactly-balanced assignment."""
    rng = stream_rng(seed, "labels")
    if balanced:
        if params.n % params.k != 0:
            raise ValueError(f"balanced labels need k | n, got n={params.n}, k={params.k}")
        base = np.repeat(np.arange(params.k), params.n // params.k)
        return Labels(rng.permutation(base), params.k, balanced=True)
    return Labels(rng.integers(0, params.k, size=params.n), params.k)


def membership_matrix(labels: Labels, k: int | None = None) -> np.ndarray:
    """Ground-truth membership matrix with entries 1{x_i = x_j} - 1/k."""
    k = labels.k if k is None else k
    a = labels.assignment
    return (a[:, None] == a[None, :]).astype(float) - 1.0 / k


def edge_prob_matrix(params: SbmParams, labels: Labels) -> np.ndarray:
    """Per-pair Bernoulli parameter matrix theta (diagonal set, never sampled)."""
    if labels.n != params.n:
        raise ValueError("labels length must match params.n")
    a = labels.assignment
    same = a[:, None] == a[None, :]
    return np.where(same, params.p_in, params.p_out)


def _sample_pair_graph(n: int, pair_probs: np.ndarray, rng: np.random.Generator) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < pair_probs
    return Graph(n, np.column_stack([iu[keep], ju[keep]]))


def sample_ssbm(params: SbmParams, seed: int, balanced: bool = False) -> tuple[Graph, Labels]:
    """Draw (graph, labels) from SSBM(n, d/n, eps, k).

    Each unordered pair is an independent Bernoulli with parameter p_in or
    p_out according to the labels; eps = 0 reproduces G(n, d/n) exactly.
    """
    labels = sample_labels(params, seed, balanced=balanced)
    rng = stream_rng(seed, "edges")
    iu, ju = np.triu_indices(params.n, 1)
    a = labels.assignment
    probs = np.where(a[iu] == a[ju], params.p_in, params.p_out)
    keep = rng.random(iu.size) < probs
    return Graph(params.n, np.column_stack([iu[keep], ju[keep]])), labels


def sample_er(n: int, d: float, seed: int) -> Graph:
    """Draw the null graph G(n, d/n)."""
    rng = stream_rng(seed, "edges-null")
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < d / n
    return Graph(n, np.column_stack([iu[keep], ju[keep]]))


def sbm_graphon(params: SbmParams) -> BlockGraphon:
    """k-block graphon generating the model: p_in on diagonal blocks, p_out off.

    Assortative convention throughout (same-label pairs get the larger
    probability when eps > 0), matching the model's sampling law.
    """
    b = np.full((params.k, params.k), params.p_out)
    np.fill_diagonal(b, params.p_in)
    return BlockGraphon(b)


# ---------------------------------------------------------------------------
# text formats


def write_edge_list(graph: Graph, path) -> None:
    """Edge-list text format: 'n m' header then 'u v' rows, sorted, 0-based."""
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {graph.edge_count}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("edge-list header must be 'n m'")
        n, m = int(header[0]), int(header[1])
        edges = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.empty((0, 2), np.int64)
    if edges.shape[0] != m:
        raise ValueError(f"expected {m} edges, found {edges.shape[0]}")
    return Graph(n, edges)


def write_labels(labels: Labels, path) -> None:
    """Labels text format: one integer per line."""
    with open(path, "w") as fh:
        for x in labels.assignment:
            fh.write(f"{x}\n")


def read_labels(path, k: int) -> Labels:
    a = np.loadtxt(path, dtype=np.int64, ndmin=1)
    return Labels(a, k)
