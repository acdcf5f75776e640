import io
import itertools
import math

import numpy as np
import pytest

from sbmlab.learn import svd_theta
from sbmlab.ldlr import (
    LdlrResult,
    all_edges,
    bipartite_quadratic_statistic,
    bipartite_partition,
    character,
    colex_subsets,
    enumeration_work,
    exact_ldlr_norm,
    fourier_coefficient,
    label_moment,
    mc_moments,
    write_ldlr_csv,
)
from sbmlab.model import SbmParams, edge_prob_matrix, membership_matrix, sample_er, sample_ssbm
from sbmlab.seeds import derive_seed, stream_rng


def brute_force_per_degree(params, ell):
    """Independent oracle: enumerate all k^n labelings for every subset."""
    n, k, p, eps = params.n, params.k, params.d / params.n, params.eps
    edges = all_edges(n)
    labelings = list(itertools.product(range(k), repeat=n))
    per_degree = []
    for t in range(ell + 1):
        if t == 0:
            per_degree.append(1.0)
            continue
        base = (eps * p / math.sqrt(p * (1 - p))) ** t
        total = 0.0
        for sub in itertools.combinations(range(len(edges)), t):
            moment = 0.0
            for lab in labelings:
                prod = 1.0
                for ei in sub:
                    u, v = edges[ei]
                    prod *= (1.0 if lab[u] == lab[v] else 0.0) - 1.0 / k
                moment += prod
            moment /= k**n
            total += (base * moment) ** 2
        per_degree.append(total)
    return per_degree


def test_colex_order():
    subs = list(colex_subsets(4, 2))
    assert subs == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
    assert list(colex_subsets(3, 0)) == [()]
    assert len(list(colex_subsets(6, 3))) == math.comb(6, 3)


def test_label_moment_hand_values():
    # single edge: P(same) = 1/k, so the mean is (1/k)(1-1/k) + (1-1/k)(-1/k) = 0
    assert label_moment(((0, 1),), 2) == 0.0
    assert label_moment(((0, 1),), 5) == pytest.approx(0.0, abs=1e-15)
    # path of two edges: conditioning on the middle label kills the product
    assert label_moment(((0, 1), (1, 2)), 2) == pytest.approx(0.0, abs=1e-15)
    # two disjoint edges factorize into zero means
    assert label_moment(((0, 1), (2, 3)), 2) == pytest.approx(0.0, abs=1e-15)
    # triangle at k=2: every labeling gives product exactly 1/8
    assert label_moment(((0, 1), (0, 2), (1, 2)), 2) == pytest.approx(0.125, abs=1e-15)


def test_fourier_coefficient_basics():
    p = SbmParams(8, 4.0, eps=0.5, k=2)
    assert fourier_coefficient((), p) == 1.0
    p0 = SbmParams(8, 4.0, eps=0.0, k=2)
    assert fourier_coefficient(((0, 1), (2, 3)), p0) == 0.0
    assert fourier_coefficient(((0, 1),), p) == pytest.approx(0.0, abs=1e-15)
    # triangle: base (eps p / sqrt(p(1-p)))^3 = 0.125 at p=1/2, times moment 1/8
    tri = ((0, 1), (0, 2), (1, 2))
    assert fourier_coefficient(tri, p) == pytest.approx(0.125 * 0.125, abs=1e-15)
    assert fourier_coefficient(tri, p) == pytest.approx((0.5 * 0.5 / 0.5) ** 3 / 8, abs=1e-15)


def test_fourier_coefficient_relabeling_invariance():
    p = SbmParams(8, 4.0, eps=0.7, k=3)
    rng = stream_rng(1, "perm")
    edges = all_edges(8)
    for trial in range(10):
        sub = tuple(edges[i] for i in rng.choice(len(edges), size=3, replace=False))
        perm = rng.permutation(8)
        relabeled = tuple(
            (min(perm[u], perm[v]), max(perm[u], perm[v])) for u, v in sub
        )
        assert fourier_coefficient(relabeled, p) == pytest.approx(
            fourier_coefficient(sub, p), abs=1e-12
        )


def test_exact_norm_eps_zero_is_one():
    res = exact_ldlr_norm(SbmParams(8, 4.0, eps=0.0, k=2), ell=3)
    assert res.norm == 1.0
    assert res.per_degree[0] == 1.0
    assert all(m == 0.0 for m in res.per_degree[1:])


def test_exact_norm_hand_value():
    # k=2, n=8, d=4 (p=1/2), eps=1, ell=3: degrees 1 and 2 vanish, and each of
    # the C(8,3)=56 triangles contributes (1/8)^2, so norm = sqrt(1 + 56/64)
    res = exact_ldlr_norm(SbmParams(8, 4.0, eps=1.0, k=2), ell=3)
    assert res.per_degree[1] == pytest.approx(0.0, abs=1e-15)
    assert res.per_degree[2] == pytest.approx(0.0, abs=1e-15)
    assert res.per_degree[3] == pytest.approx(56 / 64, rel=1e-12)
    assert res.norm == pytest.approx(math.sqrt(1.875), rel=1e-12)


def test_exact_norm_monotone():
    norms_eps = [
        exact_ldlr_norm(SbmParams(8, 4.0, eps=e, k=2), ell=3).norm
        for e in (0.0, 0.25, 0.5, 0.75, 1.0)
    ]
    assert all(a < b for a, b in zip(norms_eps, norms_eps[1:]))
    norms_ell = [
        exact_ldlr_norm(SbmParams(7, 3.5, eps=0.8, k=2), ell=ell).norm for ell in (0, 1, 2, 3, 4)
    ]
    assert all(a <= b for a, b in zip(norms_ell, norms_ell[1:]))
    assert all(n >= 1.0 for n in norms_ell)


def test_exact_norm_against_brute_force():
    # independent oracle: full k^n labeling enumeration
    for params in (SbmParams(5, 2.5, eps=0.8, k=2), SbmParams(5, 2.0, eps=0.6, k=3)):
        res = exact_ldlr_norm(params, ell=3)
        oracle = brute_force_per_degree(params, 3)
        for got, want in zip(res.per_degree, oracle):
            assert got == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_exact_norm_work_budget():
    with pytest.raises(ValueError, match="budget"):
        exact_ldlr_norm(SbmParams(12, 5.0, eps=0.5, k=2), ell=3, work_budget=10.0)
    assert enumeration_work(8, 2, 3) < 5e8


def test_coefficients_match_planted_monte_carlo():
    # vectorized sampler over the full graph, 50 random subsets, 4 sigma bands
    params = SbmParams(8, 4.0, eps=0.6, k=2)
    p = params.d / params.n
    edges = all_edges(8)
    m = len(edges)
    trials = 200_000
    rng = stream_rng(7, "mc-oracle")
    labels = rng.integers(0, params.k, size=(trials, 8))
    same = labels[:, [e[0] for e in edges]] == labels[:, [e[1] for e in edges]]
    theta = np.where(same, params.p_in, params.p_out)
    bits = rng.random((trials, m)) < theta
    chi = (bits - p) / math.sqrt(p * (1 - p))
    pick = stream_rng(8, "mc-pick")
    for _ in range(50):
        t = int(pick.integers(1, 4))
        sub = pick.choice(m, size=t, replace=False)
        est = float(np.mean(np.prod(chi[:, sub], axis=1)))
        se = float(np.std(np.prod(chi[:, sub], axis=1), ddof=1)) / math.sqrt(trials)
        closed = fourier_coefficient(tuple(edges[i] for i in sub), params)
        assert abs(est - closed) <= 4 * se + 1e-12


def test_character_orthonormality_under_null():
    params = SbmParams(8, 4.0, eps=0.0, k=2)
    p = params.d / params.n
    edges = all_edges(8)
    m = len(edges)
    trials = 100_000
    rng = stream_rng(9, "ortho")
    bits = rng.random((trials, m)) < p
    chi = (bits - p) / math.sqrt(p * (1 - p))
    pick = stream_rng(10, "ortho-pick")
    for _ in range(12):
        s = tuple(sorted(pick.choice(m, size=int(pick.integers(1, 4)), replace=False)))
        t = tuple(sorted(pick.choice(m, size=int(pick.integers(1, 4)), replace=False)))
        prod = np.prod(chi[:, s], axis=1) * np.prod(chi[:, t], axis=1)
        est = float(np.mean(prod))
        se = float(np.std(prod, ddof=1)) / math.sqrt(trials) + 1e-12
        want = 1.0 if s == t else 0.0
        assert abs(est - want) <= 4 * se


def test_character_helper_consistency():
    params = SbmParams(8, 4.0, eps=0.5, k=2)
    g, _ = sample_ssbm(params, seed=3)
    a = g.adjacency()
    sub = ((0, 1), (2, 5))
    p = params.d / params.n
    direct = ((a[0, 1] - p) / math.sqrt(p * (1 - p))) * ((a[2, 5] - p) / math.sqrt(p * (1 - p)))
    assert character(a, sub, p) == pytest.approx(direct, rel=1e-14)


def test_bipartite_statistic_zero_plugin():
    params = SbmParams(80, 16.0, eps=0.9, k=2)
    g, _ = sample_ssbm(params, seed=5)
    p = params.d / params.n
    g_val = bipartite_quadratic_statistic(g, lambda y1: np.full_like(y1, p), params, seed=1)
    assert g_val == 0.0


def test_bipartite_statistic_validation():
    params = SbmParams(80, 16.0, eps=0.0, k=2)
    g, _ = sample_ssbm(params, seed=5)
    with pytest.raises(ValueError):
        bipartite_quadratic_statistic(g, lambda y1: y1, params, seed=1)
    odd = SbmParams(81, 16.0, eps=0.9, k=2)
    g2, _ = sample_ssbm(odd, seed=6)
    with pytest.raises(ValueError):
        bipartite_quadratic_statistic(g2, lambda y1: y1, odd, seed=1)


def test_bipartite_statistic_null_mean_and_planted_z():
    # dense regime: m=150 per side, p = 0.2
    m_side = 150
    params = SbmParams(2 * m_side, 0.2 * 2 * m_side, eps=0.9, k=2)

    def svd_stat(g, s):
        return bipartite_quadratic_statistic(g, lambda y1: svd_theta(y1, params.k), params, s)

    null = mc_moments(svd_stat, params, "Q", trials=100, seed=11)
    assert abs(null.mean) <= 4 * null.std_error

    # oracle plugin: rebuild the partition to hand the true first-side block over
    planted_vals = []
    for t in range(100):
        gseed = derive_seed(13, "mc-P", t)
        sseed = derive_seed(13, "mc-P-stat", t)
        g, lab = sample_ssbm(params, gseed)
        theta = edge_prob_matrix(params, lab)
        s1, _ = bipartite_partition(params.n, sseed)
        block = theta[np.ix_(s1, s1)]
        planted_vals.append(
            bipartite_quadratic_statistic(g, lambda y1: block, params, sseed)
        )
    null_vals = mc_moments(svd_stat, params, "Q", trials=100, seed=17)
    z = (np.mean(planted_vals) - null_vals.mean) / math.sqrt(
        np.var(planted_vals, ddof=1) / 100 + null_vals.var / 100
    )
    assert np.mean(planted_vals) > 0
    assert z >= 3.0


def test_mc_moments_constant_and_scaling():
    params = SbmParams(60, 6.0, eps=0.5, k=2)
    const = mc_moments(lambda g, s: 2.5, params, "Q", trials=40, seed=1)
    assert const.var == 0.0 and const.std_error == 0.0

    def edge_stat(g, s):
        return float(g.edge_count)

    # 1/sqrt(trials) law: quadrupling the trial count halves the standard error
    se_small = mc_moments(edge_stat, params, "Q", trials=60, seed=3).std_error
    se_large = mc_moments(edge_stat, params, "Q", trials=240, seed=3).std_error
    assert abs(se_large / se_small - 0.5) <= 0.1
    with pytest.raises(ValueError):
        mc_moments(edge_stat, params, "Q", trials=10, seed=0)
    with pytest.raises(ValueError):
        mc_moments(edge_stat, params, "X", trials=40, seed=0)


def test_ldlr_csv_format():
    res = exact_ldlr_norm(SbmParams(6, 3.0, eps=0.5, k=2), ell=2)
    buf = io.StringIO()
    write_ldlr_csv(res, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n,d,eps,k,ell,degree,mass,cumulative_norm"
    assert len(lines) == 4
    last = lines[-1].split(",")
    assert float(last[-1]) == pytest.approx(res.norm, rel=1e-15)
    buf2 = io.StringIO()
    write_ldlr_csv(exact_ldlr_norm(SbmParams(6, 3.0, eps=0.5, k=2), ell=2), buf2)
    assert buf.getvalue() == buf2.getvalue()
