"""Weak-recovery baselines and the normalized-correlation recovery metric.

The spectral baseline is a rank-k truncation of the degree-centered
adjacency A - (d_hat/n) J, a stand-in for any estimator achieving some
recovery rate; it is reliable for d at least around log n.  The random
baseline produces a membership matrix from uniformly random labels and
carries no signal by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .model import Graph, Labels, SbmParams, membership_matrix, sample_labels
from .seeds import unit_vector

_DENSE_EIG_LIMIT = 800


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    """Estimate of the membership matrix plus how it was produced."""

    m_hat0: np.ndarray
    method: str
    rate: float | None = None
    factors: tuple[np.ndarray, np.ndarray] | None = None  # (vals, vecs), vecs n x r


def estimate_degree(y: Graph) -> float:
    """Average degree 2|E|/n."""
    if y.n < 2:
        raise ValueError("need at least 2 vertices")
    return 2.0 * y.edge_count / y.n


def offdiag_inner(a: np.ndarray, b: np.ndarray) -> float:
    """<a, b> with diagonal terms excluded (the package-wide convention)."""
    return float(np.sum(a * b) - np.sum(np.diag(a) * np.diag(b)))


def offdiag_norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0)))


def recovery_rate(m: np.ndarray, m_true: np.ndarray) -> float:
    """Normalized correlation <M, M*> / (|M|_F |M*|_F), diagonal excluded."""
    m = np.asarray(m, dtype=float)
    m_true = np.asarray(m_true, dtype=float)
    if m.shape != m_true.shape:
        raise ValueError("matrices must have equal shape")
    nm, nt = offdiag_norm(m), offdiag_norm(m_true)
    if nm == 0.0 or nt == 0.0:
        raise ValueError("recovery rate undefined for a zero matrix")
    return offdiag_inner(m, m_true) / (nm * nt)


def spectral_factors(y1: Graph, k: int, d_hat: float) -> tuple[np.ndarray, np.ndarray]:
    """Top-k eigenpairs by magnitude of A - (d_hat/n) J.

    Dense solve below _DENSE_EIG_LIMIT vertices, Lanczos with a fixed
    deterministic start vector above it.
    """
    if d_hat <= 0:
        raise ValueError("centering degree must be positive")
    n = y1.n
    if k >= n:
        raise ValueError("truncation rank must be below n")
    c = d_hat / n
    if n <= _DENSE_EIG_LIMIT:
        centered = y1.adjacency() - c
        vals, vecs = np.linalg.eigh(centered)
        top = np.argsort(np.abs(vals))[::-1][:k]
        top = np.sort(top)
        return vals[top], vecs[:, top]
    a = sparse.csr_matrix(
        (
            np.ones(2 * y1.edge_count),
            (
                np.concatenate([y1.edges[:, 0], y1.edges[:, 1]]),
                np.concatenate([y1.edges[:, 1], y1.edges[:, 0]]),
            ),
        ),
        shape=(n, n),
    )

    def matvec(x):
        return a @ x - c * x.sum() * np.ones(n)

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    vals, vecs = spla.eigsh(op, k=k, which="LM", v0=unit_vector(n, "spectral-start"), tol=1e-10)
    return vals, vecs


def spectral_membership(y1: Graph, k: int, d_hat: float) -> np.ndarray:
    """Rank-k spectral truncation of the centered adjacency, symmetrized."""
    vals, vecs = spectral_factors(y1, k, d_hat)
    if np.all(np.abs(vals) < 1e-12):
        raise ValueError("spectral truncation vanished; no usable estimate")
    m = (vecs * vals) @ vecs.T
    return (m + m.T) / 2.0


def membership_factors(labels: Labels) -> tuple[np.ndarray, np.ndarray]:
    """Exact low-rank eigenpairs of the membership matrix of the labels."""
    n, k = labels.n, labels.k
    ind = np.zeros((n, k))
    ind[np.arange(n), labels.assignment] = 1.0
    q, r = np.linalg.qr(ind)
    ones_coord = r @ np.ones(k)
    small = r @ r.T - np.outer(ones_coord, ones_coord) / k
    vals, w = np.linalg.eigh((small + small.T) / 2.0)
    keep = np.abs(vals) > 1e-9
    return vals[keep], q @ w[:, keep]


def random_membership(n: int, k: int, seed: int) -> tuple[np.ndarray, Labels]:
    """Membership matrix of uniformly random labels (signal-free baseline)."""
    labels = sample_labels(SbmParams(n, 1.0, k=k), seed)
    return membership_matrix(labels), labels


def run_recovery(
    y1: Graph,
    params: SbmParams,
    method: str = "spectral",
    seed: int = 0,
    labels: Labels | None = None,
    d_hat: float | None = None,
) -> RecoveryResult:
    """Dispatch a recovery baseline; attaches rate when true labels are given."""
    if method == "spectral":
        d_used = estimate_degree(y1) if d_hat is None else d_hat
        if d_used <= 0:
            raise ValueError("empty graph: cannot center the adjacency")
        factors = spectral_factors(y1, params.k, d_used)
        vals, vecs = factors
        if np.all(np.abs(vals) < 1e-12):
            raise ValueError("spectral truncation vanished; no usable estimate")
        m0 = (vecs * vals) @ vecs.T
        m0 = (m0 + m0.T) / 2.0
    elif method == "random":
        m0, rand_labels = random_membership(y1.n, params.k, seed)
        factors = membership_factors(rand_labels)
    elif method == "oracle":
        if labels is None:
            raise ValueError("oracle recovery needs the true labels")
        m0 = membership_matrix(labels)
        factors = membership_factors(labels)
    else:
        raise ValueError(f"unknown recovery method {method!r}")
    rate = None
    if labels is not None:
        rate = recovery_rate(m0, membership_matrix(labels))
    return RecoveryResult(m_hat0=m0, method=method, rate=rate, factors=factors)
