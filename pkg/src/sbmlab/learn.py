"""Parameter learning: rank-k SVD estimator and block-graphon distances.

Graphon distance for equal-mass step functions reduces to a quadratic
assignment over block permutations after refining both step functions to a
common grid.  Exact enumeration is limited to small refinements; a
pairwise-swap local search provides an upper bound otherwise.  Against a
constant target the distance is permutation-free and has a closed form.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .model import BlockGraphon, Graph
from .recover import _DENSE_EIG_LIMIT
from .seeds import stream_rng, unit_vector

_EXACT_GW_LIMIT = 8


def svd_theta(y: Graph | np.ndarray, k: int) -> np.ndarray:
    """Best rank-k approximation of the adjacency matrix, clipped to [0, 1].

    Clipping is the entrywise projection onto [0,1]^{n x n}, which contains
    the true edge probability matrix, so it never increases the error.
    """
    a = y.adjacency() if isinstance(y, Graph) else np.asarray(y, dtype=float)
    n = a.shape[0]
    if k >= n:
        raise ValueError("truncation rank must be below n")
    if n <= _DENSE_EIG_LIMIT or k > n // 10:
        vals, vecs = np.linalg.eigh(a)
        top = np.argsort(np.abs(vals))[::-1][:k]
        vals, vecs = vals[top], vecs[:, top]
    else:
        import scipy.sparse.linalg as spla

        vals, vecs = spla.eigsh(a, k=k, which="LM", v0=unit_vector(n, "svd-start"), tol=1e-10)
    theta = (vecs * vals) @ vecs.T
    theta = (theta + theta.T) / 2.0
    return np.clip(theta, 0.0, 1.0)


def graphon_from_theta(theta: np.ndarray) -> BlockGraphon:
    """n-block graphon whose value matrix is theta (one block per vertex)."""
    return BlockGraphon(np.asarray(theta, dtype=float))


def refine(w: BlockGraphon, m: int) -> BlockGraphon:
    """Refine an equal-mass step function to m blocks (w.m must divide m)."""
    if m % w.m != 0:
        raise ValueError(f"cannot refine {w.m} blocks to {m}")
    r = m // w.m
    idx = np.repeat(np.arange(w.m), r)
    return BlockGraphon(w.b[np.ix_(idx, idx)])


def gw_constant(w: BlockGraphon, c: float) -> float:
    """Distance to the constant-c graphon: sqrt of the mean squared gap."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("constant target must lie in [0, 1]")
    return float(np.sqrt(np.mean((w.b - c) ** 2)))


def _perm_cost(b1: np.ndarray, b2: np.ndarray, perm: np.ndarray) -> float:
    d = b1[np.ix_(perm, perm)] - b2
    return float(np.sum(d * d))


def gw_distance(
    w1: BlockGraphon,
    w2: BlockGraphon,
    mode: str = "exact",
    seed: int = 0,
    starts: int = 20,
) -> float:
    """Graphon distance minimized over block permutations of a common refinement.

    mode 'exact' enumerates all permutations (refined size at most
    _EXACT_GW_LIMIT); mode 'local-search' runs pairwise-swap descent from
    `starts` random starts and returns an upper bound on the true distance.
    """
    m = math.lcm(w1.m, w2.m)
    b1 = refine(w1, m).b
    b2 = refine(w2, m).b
    if mode == "exact":
        if m > _EXACT_GW_LIMIT:
            raise ValueError(f"refined block count {m} too large for exact enumeration")
        best = min(
            _perm_cost(b1, b2, np.array(perm)) for perm in itertools.permutations(range(m))
        )
    elif mode == "local-search":
        rng = stream_rng(seed, "gw-local-search")
        best = math.inf
        for _ in range(starts):
            perm = rng.permutation(m)
            cost = _perm_cost(b1, b2, perm)
            improved = True
            while improved:
                improved = False
                for i in range(m - 1):
                    for j in range(i + 1, m):
                        perm[i], perm[j] = perm[j], perm[i]
                        trial = _perm_cost(b1, b2, perm)
                        if trial < cost - 1e-15:
                            cost = trial
                            improved = True
                        else:
                            perm[i], perm[j] = perm[j], perm[i]
            best = min(best, cost)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(np.sqrt(best / m**2))


def write_graphon(w: BlockGraphon, path) -> None:
    """Text format: first line m, then m rows of m values (17 significant digits)."""
    with open(path, "w") as fh:
        fh.write(f"{w.m}\n")
        for row in w.b:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def read_graphon(path) -> BlockGraphon:
    with open(path) as fh:
        m = int(fh.readline())
        b = np.loadtxt(fh, ndmin=2)
    if b.shape != (m, m):
        raise ValueError("graphon file shape mismatch")
    return BlockGraphon(b)
