import math

import numpy as np
import pytest

from sbmlab.model import SbmParams, membership_matrix, sample_labels
from sbmlab.project import (
    ProjectionDidNotConverge,
    ProjectionInfeasibleError,
    ProjectionSpec,
    _dykstra_dense,
    _dykstra_subspace,
    corr_preserving_projection,
    k_residuals,
    project_constraints,
)
from sbmlab.recover import membership_factors, recovery_rate
from sbmlab.seeds import stream_rng


def noisy_instance(n, sigma, seed, k=2):
    p = SbmParams(n, 10.0, k=k)
    lab = sample_labels(p, seed=seed, balanced=True)
    m_true = membership_matrix(lab)
    rng = stream_rng(seed, "proj-noise")
    g = rng.standard_normal((n, n))
    m0 = m_true + sigma * (g + g.T) / (2.0 * math.sqrt(n))
    return m_true, m0


def test_project_constraints_identities():
    spec = ProjectionSpec(delta=0.5, k=2, n=4)
    inside = np.diag([0.5, 0.5, -0.25, -0.25])
    out = project_constraints(inside, spec)
    # box and trace leave an interior point alone
    assert np.array_equal(out["box"], inside)
    assert np.array_equal(out["trace"], inside)
    # psd-shift is the identity on a matrix already satisfying the shift
    lab = sample_labels(SbmParams(4, 1.0, k=2), seed=0, balanced=True)
    m = membership_matrix(lab)
    assert np.allclose(project_constraints(m, spec)["psd_shift"], m, atol=1e-12)


def test_project_constraints_box_clamp():
    spec = ProjectionSpec(delta=0.5, k=2, n=2)
    m = np.array([[0.0, 3.0], [3.0, 0.0]])
    assert project_constraints(m, spec)["box"][0, 1] == 2.0


def test_project_constraints_halfspace():
    spec = ProjectionSpec(delta=1.0, k=2, n=2)
    p = np.eye(2)
    m = np.zeros((2, 2))
    out = project_constraints(m, spec, halfspace=(p, 1.0))["halfspace"]
    # projection adds ((b - <P,m>)/|P|^2) P = 0.5 I
    assert np.allclose(out, 0.5 * np.eye(2), atol=1e-14)


def test_oracle_input_fixed_point():
    # input equal to the ground truth: minimum-norm point is delta * M_true,
    # so the rescaled output reproduces M_true and the rate is 1
    p = SbmParams(8, 2.0, k=2, delta=0.5)
    lab = sample_labels(p, seed=1, balanced=True)
    m_true = membership_matrix(lab)
    spec = ProjectionSpec(delta=0.5, k=2, n=8, norm_target=float(np.linalg.norm(m_true)))
    rep = corr_preserving_projection(m_true, spec)
    assert rep.iterations <= 5
    assert recovery_rate(rep.m_hat, m_true) >= 0.25
    assert np.allclose(rep.m_hat, m_true, atol=1e-7)
    assert max(k_residuals(rep.m_hat, spec).values()) <= 1e-6
    # n_norm hits the Cauchy-Schwarz floor delta * norm_target exactly
    assert rep.n_norm == pytest.approx(spec.delta * spec.target, rel=1e-9)


def test_feasible_minimizer_is_fixed_point():
    # feeding the minimum-norm point back in changes nothing
    p = SbmParams(12, 2.0, k=2, delta=0.4)
    lab = sample_labels(p, seed=3, balanced=True)
    m_true = membership_matrix(lab)
    spec = ProjectionSpec(delta=0.4, k=2, n=12, norm_target=float(np.linalg.norm(m_true)))
    first = corr_preserving_projection(m_true, spec)
    again = corr_preserving_projection(0.4 * m_true, spec)
    assert again.iterations <= 5
    assert np.allclose(first.m_hat, again.m_hat, atol=1e-7)


def test_noisy_certificate_and_feasibility():
    m_true, m0 = noisy_instance(200, sigma=26.0, seed=5)
    d0 = recovery_rate(m0, m_true)
    assert d0 >= 0.3
    spec = ProjectionSpec(
        delta=d0, k=2, n=200, tol=1e-7, max_iters=4000,
        norm_target=float(np.linalg.norm(m_true)),
    )
    rep = corr_preserving_projection(m0, spec)
    assert recovery_rate(rep.m_hat, m_true) >= d0 / 2 - 1e-3
    assert max(k_residuals(rep.m_hat, spec).values()) <= 1e-6
    assert rep.max_violation <= spec.tol
    # Cauchy-Schwarz floor: the halfspace forces |N| >= delta * norm_target
    assert rep.n_norm >= spec.delta * spec.target * (1 - 1e-6)
    # halfspace achieved: <M0, N> >= delta * norm_target * |M0|_F
    assert rep.halfspace_value >= spec.delta * spec.target * np.linalg.norm(m0) * (1 - 1e-6)


def test_scaling_invariance():
    m_true, m0 = noisy_instance(80, sigma=10.0, seed=7)
    spec = ProjectionSpec(delta=0.4, k=2, n=80, tol=1e-9, max_iters=4000)
    rep1 = corr_preserving_projection(m0, spec)
    rep2 = corr_preserving_projection(3.7 * m0, spec)
    assert np.max(np.abs(rep1.m_hat - rep2.m_hat)) <= 1e-8


def test_norm_converges_monotonically_with_tol():
    # Dykstra from zero approaches the minimum-norm point from below, so
    # tightening the tolerance can only grow |N|_F (up to roundoff)
    m_true, m0 = noisy_instance(100, sigma=12.0, seed=9)
    norms = []
    for tol in (1e-4, 1e-6, 1e-8):
        spec = ProjectionSpec(delta=0.4, k=2, n=100, tol=tol, max_iters=6000)
        norms.append(corr_preserving_projection(m0, spec).n_norm)
    assert norms[0] <= norms[1] + 1e-9
    assert norms[1] <= norms[2] + 1e-9
    assert norms[2] - norms[0] <= 1e-3 * norms[2]


def test_infeasible_halfspace_detected():
    # anti-correlated input: no psd-shifted matrix can meet the constraint
    p = SbmParams(60, 2.0, k=2, delta=0.5)
    lab = sample_labels(p, seed=11, balanced=True)
    m_true = membership_matrix(lab)
    spec = ProjectionSpec(delta=0.5, k=2, n=60, max_iters=3000)
    with pytest.raises(ProjectionInfeasibleError):
        corr_preserving_projection(-m_true, spec)


def test_nonconvergence_raises():
    m_true, m0 = noisy_instance(100, sigma=20.0, seed=13)
    spec = ProjectionSpec(delta=0.35, k=2, n=100, tol=1e-10, max_iters=2)
    with pytest.raises(ProjectionDidNotConverge):
        corr_preserving_projection(m0, spec)


def test_zero_input_rejected():
    spec = ProjectionSpec(delta=0.5, k=2, n=10)
    with pytest.raises(ValueError):
        corr_preserving_projection(np.zeros((10, 10)), spec)


def test_subspace_matches_dense_low_rank():
    # low-rank input solved both ways gives the same matrix
    p = SbmParams(150, 4.0, k=3, delta=0.3)
    lab = sample_labels(p, seed=17, balanced=True)
    m0 = membership_matrix(lab)
    vals, vecs = membership_factors(lab)
    spec = ProjectionSpec(delta=0.3, k=3, n=150, tol=1e-9, max_iters=4000)
    dense = corr_preserving_projection(m0, spec)
    fast = corr_preserving_projection(None, spec, factors=(vals, vecs))
    assert fast.backend == "subspace"
    assert np.max(np.abs(dense.m_hat - fast.m_hat)) <= 1e-7
    assert dense.iterations == fast.iterations


def test_subspace_matches_dense_with_active_entry_bound():
    # localized spike forces the entry bound to bind; solvers must agree
    rng = stream_rng(3, "adversarial")
    n = 120
    v1 = rng.standard_normal(n)
    v1 /= np.linalg.norm(v1)
    spike = np.zeros(n)
    spike[7], spike[23] = 0.9, -0.43
    v2 = spike + 0.1 * rng.standard_normal(n)
    v2 -= v1 * (v1 @ v2)
    v2 /= np.linalg.norm(v2)
    vals = np.array([9.0, 6.0])
    vecs = np.column_stack([v1, v2])
    m0 = (vecs * vals) @ vecs.T
    u = m0 / np.linalg.norm(m0)
    b = 0.35 * (n * 0.5)
    xd, itd, _ = _dykstra_dense(u, b, n, 2, 1e-8, 8000)
    xs, its, _ = _dykstra_subspace(vals, vecs, b, n, 2, 1e-8, 8000)
    assert np.abs(xd).max() > 1.0 - 1e-6  # bound is genuinely active
    assert np.max(np.abs(xd - xs)) <= 1e-9
    assert itd == its
