"""Experiment configs, phase-diagram sweeps, concentration checks, acceptance.

Configs are flat ``key = value`` text with dotted keys; unknown keys are
rejected so stale files fail loudly.  All experiment entry points are pure
functions of (config, master seed): rerunning with the same seed reproduces
every emitted CSV byte for byte (wall-clock columns are zeroed via
``timing=False`` wherever byte-stability matters).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .model import Graph, SbmParams, edge_prob_matrix, membership_matrix, sample_ssbm
from .reduce import recovery_test_statistic, run_test_trials
from .seeds import derive_seed, unit_vector

PIPELINES = ("recovery", "learning", "graphon", "ldlr", "bipartite")

SWEEP_CSV_COLUMNS = (
    "snr",
    "eps",
    "power",
    "size",
    "r_value",
    "median_stat_p",
    "median_stat_q",
    "runtime_s",
    "status",
)


@dataclass(frozen=True)
class ExperimentConfig:
    params: SbmParams
    trials: int = 40
    seed: int = 0
    pipeline: str = "recovery"
    threshold_policy: str = "calibrated"  # calibrated | fixed | asymptotic
    threshold_quantile: float = 0.99
    threshold_value: float = 0.0
    recovery_method: str = "spectral"
    eta_policy: str = "fixed"  # fixed | slack
    ell: int = 3
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if self.threshold_policy not in ("calibrated", "fixed", "asymptotic"):
            raise ValueError(f"unknown threshold policy {self.threshold_policy!r}")
        if self.eta_policy not in ("fixed", "slack"):
            raise ValueError(f"unknown eta policy {self.eta_policy!r}")

    def effective_eta(self) -> float:
        """eta = 0.001 (1 - snr) under the 'slack' policy, else params.eta."""
        if self.eta_policy == "fixed":
            return self.params.eta
        slack = 1.0 - self.params.ks_snr
        if slack <= 0:
            raise ValueError("slack eta policy degenerates at or above the threshold")
        return 0.001 * slack

    def asymptotic_threshold(self) -> float:
        """Raw n^0.51 sqrt(d) override for asymptotic experiments."""
        return self.params.n**0.51 * math.sqrt(self.params.d)


_CONFIG_KEYS = {
    "params.n": int,
    "params.d": float,
    "params.eps": float,
    "params.k": int,
    "params.eta": float,
    "params.delta": float,
    "trials": int,
    "seed": int,
    "pipeline": str,
    "threshold.policy": str,
    "threshold.quantile": float,
    "threshold.value": float,
    "recovery.method": str,
    "eta.policy": str,
    "ldlr.ell": int,
    "threads": int,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat 'key = value' lines with dotted keys; unknown keys error."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _CONFIG_KEYS[key](value.strip())
    params = SbmParams(
        n=raw.pop("params.n", 400),
        d=raw.pop("params.d", 16.0),
        eps=raw.pop("params.eps", 0.5),
        k=raw.pop("params.k", 2),
        eta=raw.pop("params.eta", 0.1),
        delta=raw.pop("params.delta", 0.1),
    )
    rename = {
        "threshold.policy": "threshold_policy",
        "threshold.quantile": "threshold_quantile",
        "threshold.value": "threshold_value",
        "recovery.method": "recovery_method",
        "eta.policy": "eta_policy",
        "ldlr.ell": "ell",
    }
    kwargs = {rename.get(k, k): v for k, v in raw.items()}
    return ExperimentConfig(params=params, **kwargs)


def write_config(cfg: ExperimentConfig) -> str:
    p = cfg.params
    lines = [
        f"params.n = {p.n}",
        f"params.d = {p.d!r}",
        f"params.eps = {p.eps!r}",
        f"params.k = {p.k}",
        f"params.eta = {p.eta!r}",
        f"params.delta = {p.delta!r}",
        f"trials = {cfg.trials}",
        f"seed = {cfg.seed}",
        f"pipeline = {cfg.pipeline}",
        f"threshold.policy = {cfg.threshold_policy}",
        f"threshold.quantile = {cfg.threshold_quantile!r}",
        f"threshold.value = {cfg.threshold_value!r}",
        f"recovery.method = {cfg.recovery_method}",
        f"eta.policy = {cfg.eta_policy}",
        f"ldlr.ell = {cfg.ell}",
        f"threads = {cfg.threads}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# phase sweep


@dataclass(frozen=True)
class PhasePoint:
    snr: float
    eps: float
    power: float
    size: float
    r_value: float
    median_stat_p: float
    median_stat_q: float
    runtime_s: float
    status: str


def _arm_trials(cfg: ExperimentConfig, params: SbmParams, arm: str, seed: int):
    method = cfg.recovery_method

    def stat(g, s, labels=None):
        # the oracle baseline only exists under the planted law; the null arm
        # degrades it to the signal-free random baseline
        m = method if labels is not None or method != "oracle" else "random"
        return recovery_test_statistic(g, params, seed=s, method=m, labels=labels)

    return run_test_trials(stat, params, arm, cfg.trials, seed, workers=cfg.threads)


def _point_from_trials(rows_p, rows_q, quantile):
    """Calibrate on the Q arm, then score both arms against the quantile."""
    stats_q = np.array([r.statistic for r in rows_q])
    tau = float(np.quantile(stats_q, quantile))
    dec_q = np.array([s >= tau for s in stats_q], dtype=float)
    stats_p = np.array([r.statistic for r in rows_p])
    dec_p = np.array([s >= tau for s in stats_p], dtype=float)
    var_q = float(np.var(dec_q, ddof=1))
    gap = float(dec_p.mean() - dec_q.mean())
    if var_q == 0.0:
        r_value = math.inf if gap > 0 else (-math.inf if gap < 0 else math.nan)
    else:
        r_value = gap / math.sqrt(var_q)
    return tau, float(dec_p.mean()), float(dec_q.mean()), r_value, stats_p, stats_q


def sweep_phase(cfg: ExperimentConfig, snr_grid) -> list[PhasePoint]:
    """One calibrated testing experiment per SNR grid value, ordered by SNR."""
    points = []
    for snr in sorted(snr_grid):
        if snr <= 0:
            raise ValueError("SNR grid values must be positive")
        t0 = time.perf_counter()
        eps = cfg.params.k * math.sqrt(snr / cfg.params.d)
        if eps > 1.0:
            points.append(
                PhasePoint(snr, eps, math.nan, math.nan, math.nan, math.nan, math.nan, 0.0, "eps_gt_1")
            )
            continue
        params = replace(cfg.params, eps=eps)
        rows_q = _arm_trials(cfg, params, "Q", derive_seed(cfg.seed, "sweep-q", int(snr * 1e6)))
        rows_p = _arm_trials(cfg, params, "P", derive_seed(cfg.seed, "sweep-p", int(snr * 1e6)))
        _, power, size, r_value, stats_p, stats_q = _point_from_trials(
            rows_p, rows_q, cfg.threshold_quantile
        )
        points.append(
            PhasePoint(
                snr=snr,
                eps=eps,
                power=power,
                size=size,
                r_value=r_value,
                median_stat_p=float(np.median(stats_p)),
                median_stat_q=float(np.median(stats_q)),
                runtime_s=time.perf_counter() - t0,
                status="ok",
            )
        )
    return points


def write_sweep_csv(points, trials_per_arm: int, fh, timing: bool = True) -> None:
    fh.write(",".join(SWEEP_CSV_COLUMNS) + "\n")
    for pt in points:
        runtime = repr(round(pt.runtime_s, 3)) if timing else "0"
        fh.write(
            f"{pt.snr!r},{pt.eps!r},{pt.power!r},{pt.size!r},{pt.r_value!r},"
            f"{pt.median_stat_p!r},{pt.median_stat_q!r},{runtime},{pt.status}\n"
        )
    ok = sum(1 for pt in points if pt.status == "ok")
    fh.write(f"# grid={len(points)} trials_per_arm={trials_per_arm} total_trials={2 * trials_per_arm * ok}\n")


# ---------------------------------------------------------------------------
# spectral concentration


@dataclass(frozen=True)
class ConcentrationReport:
    max_norm: float
    mean_norm: float
    bound: float
    max_ratio: float
    trials: int


def centered_operator_norm(graph: Graph, theta: np.ndarray | None, labels=None, params=None) -> float:
    """Operator norm of A - theta via Lanczos on the implicitly centered matrix."""
    n = graph.n
    if graph.edge_count == 0 and (theta is None or not np.any(theta)):
        return 0.0
    a = sparse.csr_matrix(
        (
            np.ones(2 * graph.edge_count),
            (
                np.concatenate([graph.edges[:, 0], graph.edges[:, 1]]),
                np.concatenate([graph.edges[:, 1], graph.edges[:, 0]]),
            ),
        ),
        shape=(n, n),
    )
    if theta is None:
        # structured theta from labels: (eps d / n) M + (d/n) J, zero diagonal
        mm = membership_matrix(labels)
        theta = (params.eps * params.d / params.n) * mm + params.d / params.n
        np.fill_diagonal(theta, 0.0)

    def matvec(x):
        return a @ x - theta @ x

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    v0 = unit_vector(n, "concentration-start")
    hi = spla.eigsh(op, k=1, which="LA", v0=v0, tol=1e-8, return_eigenvectors=False)
    op_neg = spla.LinearOperator((n, n), matvec=lambda x: -matvec(x), dtype=float)
    lo = spla.eigsh(op_neg, k=1, which="LA", v0=v0, tol=1e-8, return_eigenvectors=False)
    return float(max(hi[0], lo[0]))


def check_spectral_concentration(params: SbmParams, trials: int, seed: int) -> ConcentrationReport:
    """Max over trials of |A - theta|_op against the sqrt(d log n) scale."""
    if params.d < 1:
        raise ValueError("need average degree at least 1")
    norms = []
    for t in range(trials):
        g, labels = sample_ssbm(params, derive_seed(seed, "concentration", t))
        theta = edge_prob_matrix(params, labels)
        np.fill_diagonal(theta, 0.0)
        norms.append(centered_operator_norm(g, theta))
    bound = 3.0 * math.sqrt(params.d * math.log(params.n))
    scale = math.sqrt(params.d * math.log(params.n))
    return ConcentrationReport(
        max_norm=float(np.max(norms)),
        mean_norm=float(np.mean(norms)),
        bound=bound,
        max_ratio=float(np.max(norms) / scale),
        trials=trials,
    )
