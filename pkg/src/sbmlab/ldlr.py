"""Exact low-degree likelihood ratio norm on small instances.

Works in the p-biased character basis of the null law G(n, p), p = d/n: each
edge variable contributes chi_e(Y) = (Y_e - p) / sqrt(p (1-p)), and chi_S is
the product over an edge subset S.  These are orthonormal under the null, so
the squared norm of the degree-ell projection of the relative density mu is
the sum of squared coefficients

    mu_hat(S) = (eps p)^{|S|} (p (1-p))^{-|S|/2} E_label[ prod_{e in S} M_e ],

where M_e = 1{x_u = x_v} - 1/k and the expectation runs over i.i.d. uniform
labels.  The label expectation factorizes over the vertex support of S, so
the enumeration is over k^{|support|} assignments rather than k^n (an exact
shortcut).  Per-degree masses accumulate with compensated summation, making
the reported norm independent of enumeration order to the last bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import Graph, SbmParams, sample_er, sample_ssbm
from .seeds import derive_seed, stream_rng

_SUPPORT_LIMIT = 16  # k^support enumeration cap
DEFAULT_WORK_BUDGET = 5e8

LDLR_CSV_COLUMNS = ("n", "d", "eps", "k", "ell", "degree", "mass", "cumulative_norm")


@dataclass(frozen=True)
class LdlrResult:
    """Degree-ell likelihood ratio norm and its per-degree decomposition."""

    norm: float
    per_degree: tuple
    n: int
    d: float
    eps: float
    k: int
    ell: int


def all_edges(n: int) -> list[tuple[int, int]]:
    """Vertex pairs of K_n in lexicographic order (the edge index space)."""
    return list(itertools.combinations(range(n), 2))


def colex_subsets(m: int, t: int):
    """t-subsets of range(m) in colexicographic order."""
    if t == 0:
        yield ()
        return
    for last in range(t - 1, m):
        for rest in colex_subsets(last, t - 1):
            yield rest + (last,)


def label_moment(edges: tuple, k: int) -> float:
    """E[prod_e (1{x_u = x_v} - 1/k)] over i.i.d. uniform labels.

    Exact enumeration over the vertex support of the edge set.
    """
    support = sorted({v for e in edges for v in e})
    if len(support) > _SUPPORT_LIMIT:
        raise ValueError(f"edge-set support {len(support)} too large for enumeration")
    pos = {v: i for i, v in enumerate(support)}
    local = [(pos[u], pos[v]) for u, v in edges]
    shift = 1.0 / k
    terms = []
    for assign in itertools.product(range(k), repeat=len(support)):
        prod = 1.0
        for u, v in local:
            prod *= (1.0 if assign[u] == assign[v] else 0.0) - shift
        terms.append(prod)
    return math.fsum(terms) / k ** len(support)


def fourier_coefficient(edges: tuple, params: SbmParams) -> float:
    """Coefficient of chi_S in the planted-vs-null relative density."""
    p = params.d / params.n
    if not 0.0 < p < 1.0:
        raise ValueError("null edge probability must lie strictly in (0, 1)")
    t = len(edges)
    if t == 0:
        return 1.0
    base = (params.eps * p / math.sqrt(p * (1.0 - p))) ** t
    if base == 0.0:
        return 0.0
    return base * label_moment(edges, params.k)


def character(adjacency: np.ndarray, edges: tuple, p: float) -> float:
    """chi_S(Y): product of normalized edge indicators over the subset."""
    scale = math.sqrt(p * (1.0 - p))
    out = 1.0
    for u, v in edges:
        out *= (adjacency[u, v] - p) / scale
    return out


def enumeration_work(n: int, k: int, ell: int) -> float:
    """Cost model for the exact norm: subsets times label assignments."""
    m = n * (n - 1) // 2
    return float(
        sum(math.comb(m, t) * k ** min(2 * t, n) for t in range(ell + 1))
    )


def exact_ldlr_norm(
    params: SbmParams, ell: int, work_budget: float = DEFAULT_WORK_BUDGET
) -> LdlrResult:
    """Sum mu_hat(S)^2 over all edge subsets of size at most ell."""
    if ell < 0:
        raise ValueError("degree bound must be nonnegative")
    work = enumeration_work(params.n, params.k, ell)
    if work > work_budget:
        raise ValueError(
            f"enumeration needs ~{work:.2e} operations, budget is {work_budget:.2e}"
        )
    edges = all_edges(params.n)
    m = len(edges)
    p = params.d / params.n
    if not 0.0 < p < 1.0:
        raise ValueError("null edge probability must lie strictly in (0, 1)")
    per_degree = []
    for t in range(ell + 1):
        if t == 0:
            per_degree.append(1.0)
            continue
        base = (params.eps * p / math.sqrt(p * (1.0 - p))) ** t
        if base == 0.0:
            per_degree.append(0.0)
            continue
        squares = []
        for sub in colex_subsets(m, t):
            c = base * label_moment(tuple(edges[i] for i in sub), params.k)
            squares.append(c * c)
        per_degree.append(math.fsum(squares))
    norm = math.sqrt(math.fsum(per_degree))
    return LdlrResult(
        norm=norm,
        per_degree=tuple(per_degree),
        n=params.n,
        d=params.d,
        eps=params.eps,
        k=params.k,
        ell=ell,
    )


def write_ldlr_csv(result: LdlrResult, fh) -> None:
    fh.write(",".join(LDLR_CSV_COLUMNS) + "\n")
    cum = 0.0
    for t, mass in enumerate(result.per_degree):
        cum = math.fsum([cum, mass])
        fh.write(
            f"{result.n},{result.d!r},{result.eps!r},{result.k},{result.ell},"
            f"{t},{mass!r},{math.sqrt(cum)!r}\n"
        )


# ---------------------------------------------------------------------------
# the explicit bipartite quadratic statistic and Monte-Carlo moments


def bipartite_partition(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random equal split of the vertices, reproducible from the seed."""
    if n % 2:
        raise ValueError("need an even vertex count")
    perm = stream_rng(seed, "bipartite-partition").permutation(n)
    return np.sort(perm[: n // 2]), np.sort(perm[n // 2 :])


def bipartite_quadratic_statistic(y: Graph, f_plugin, params: SbmParams, seed: int) -> float:
    """g(Y) = <(Y12 - p) X (Y12 - p), Y2 - p> with X = (f(Y1) - p) / (eps p).

    Y1, Y2 are the within-side blocks of a random equal vertex split and Y12
    the cross block; diagonal terms of the Y2 block are excluded.  f_plugin
    maps the m x m adjacency of the first side to an m x m matrix.
    """
    if params.eps == 0.0:
        raise ValueError("statistic undefined at eps = 0 (normalization divides by eps)")
    s1, s2 = bipartite_partition(y.n, seed)
    m = s1.size
    p = params.d / params.n
    a = y.adjacency()
    y1 = a[np.ix_(s1, s1)]
    y2 = a[np.ix_(s2, s2)]
    y12 = a[np.ix_(s1, s2)]
    x = (np.asarray(f_plugin(y1), dtype=float) - p) / (params.eps * p)
    if x.shape != (m, m):
        raise ValueError("plugin must return an m x m matrix")
    w12 = y12 - p
    z = w12.T @ x @ w12
    w2 = y2 - p
    np.fill_diagonal(z, 0.0)
    np.fill_diagonal(w2, 0.0)
    return float(np.sum(z * w2))


@dataclass(frozen=True)
class McMoments:
    mean: float
    var: float
    std_error: float
    trials: int


def mc_moments(statistic_fn, params: SbmParams, arm: str, trials: int, seed: int) -> McMoments:
    """Sample moments of a scalar statistic under the planted or null law."""
    if trials < 30:
        raise ValueError("need at least 30 trials")
    if arm not in ("P", "Q"):
        raise ValueError("arm must be 'P' or 'Q'")
    vals = []
    for t in range(trials):
        gseed = derive_seed(seed, f"mc-{arm}", t)
        g = sample_ssbm(params, gseed)[0] if arm == "P" else sample_er(params.n, params.d, gseed)
        vals.append(statistic_fn(g, derive_seed(seed, f"mc-{arm}-stat", t)))
    mean = float(np.mean(vals))
    var = float(np.var(vals, ddof=1)) if trials > 1 else 0.0
    return McMoments(mean=mean, var=var, std_error=math.sqrt(var / trials), trials=trials)
