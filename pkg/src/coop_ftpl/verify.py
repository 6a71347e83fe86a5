"""Executable property suites for the estimator and graph lemmas.

Each suite returns a :class:`SuiteResult`; ``coop-ftpl verify`` prints one
line per suite.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .actions import DecisionFamily, enumerate_actions, oracle_argmax
from .agent import tune_parameters
from .graph import (Graph, complete_graph, independence_number_exact, observation_ratio_bound,
                    observation_ratio_sum, path_graph, random_graph, weight_ratio_sum)
from .resampling import (coop_gr, estimate_loss, estimate_mean_action,
                         expected_estimate_closed_form, min_geometric_param,
                         truncated_geometric_mean)
from .rng import RngStream


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - start
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def sample_geometric(stream: RngStream, p, size) -> np.ndarray:
    """Geometric(p) on {1, 2, ...} by inverse CDF, one uniform per draw."""
    p = np.asarray(p, dtype=float)
    u = stream.uniform(size)
    with np.errstate(divide="ignore"):
        g = np.ceil(np.log(u) / np.log1p(-p))
    return np.where(p >= 1.0, 1, np.maximum(g, 1)).astype(np.int64)


def geometric_chisquare(samples: np.ndarray, p: float, min_expected: float = 5.0) -> float:
    """p-value of a chi-square test of integer samples against Geometric(p) on {1,2,...}."""
    n = samples.size
    pmf = []
    s = 1
    while True:
        prob = p * (1 - p) ** (s - 1)
        tail = (1 - p) ** s
        if n * prob < min_expected or n * tail < min_expected:
            break
        pmf.append(prob)
        s += 1
    cut = len(pmf)
    probs = np.array(pmf + [(1 - p) ** cut])
    observed = np.bincount(np.minimum(samples, cut + 1), minlength=cut + 2)[1:]
    if probs.size < 2:
        return 1.0
    return float(stats.chisquare(observed, probs / probs.sum() * n).pvalue)


@_timed
def lemma_min_geometric(n_lists=20, n_samples=100_000, seed=0, alpha=0.01) -> SuiteResult:
    """Min of independent geometrics is geometric with parameter 1 - prod(1 - p_j)."""
    params = RngStream(seed, -1, 0, "adversary")
    worst = 1.0
    failures = 0
    for j in range(n_lists):
        length = 1 + int(params.uniform(1)[0] * 5)
        p = 0.05 + 0.9 * params.uniform(length)
        stream = RngStream(seed, j, 1, "resample-bernoulli")
        draws = sample_geometric(stream, p[:, None], (p.size, n_samples)).min(axis=0)
        pval = geometric_chisquare(draws, min_geometric_param(p))
        worst = min(worst, pval)
        failures += pval < alpha
    return SuiteResult("min of geometrics", failures == 0,
                       f"{failures}/{n_lists} lists rejected at {alpha}, min p-value {worst:.3g}")


@_timed
def lemma_truncated_mean(n_samples=1_000_000, seed=0, rtol=0.01) -> SuiteResult:
    """E[min(G, beta)] = (1 - (1 - q)^beta) / q on a 3x3 grid."""
    worst = 0.0
    for j, q in enumerate((0.1, 0.5, 0.9)):
        g = sample_geometric(RngStream(seed, j, 2, "resample-bernoulli"), q, n_samples)
        for beta in (1, 5, 50):
            emp = np.minimum(g, beta).mean()
            worst = max(worst, abs(emp - truncated_geometric_mean(q, beta))
                        / truncated_geometric_mean(q, beta))
    return SuiteResult("truncated geometric mean", worst <= rtol,
                       f"max relative error {worst:.2e} (tol {rtol})")


@_timed
def lemma_independent_stopping(n_runs=100_000, seed=0, tol=0.02) -> SuiteResult:
    """Stopping times of distinct (component, agent) pairs are uncorrelated."""
    fam = DecisionFamily.exactly(3, 1)
    states = [np.zeros(3), np.array([0.0, 0.5, 1.0])]
    q = (0.6, 0.9)
    beta = 8
    zs = [RngStream(seed, w, 0, "resample-z") for w in range(2)]
    ys = [RngStream(seed, w, 0, "resample-bernoulli") for w in range(2)]
    ks = np.empty((n_runs, 6))
    for r in range(n_runs):
        for w in range(2):
            ks[r, 3 * w:3 * w + 3] = coop_gr(states[w], fam, 1.0, q[w], beta, zs[w],
                                             "independent", ys[w])
    corr = np.corrcoef(ks, rowvar=False)
    off = np.abs(corr[~np.eye(6, dtype=bool)]).max()
    return SuiteResult("independent stopping times", off < tol,
                       f"max |correlation| {off:.4f} (tol {tol})")


@dataclass(frozen=True)
class NetworkState:
    """A frozen network snapshot seen from one estimating agent."""

    name: str
    graph: Graph
    family: DecisionFamily
    cum_loss_est: tuple
    q: tuple
    eta: float
    beta: int
    loss: tuple
    agent: int
    xbar: tuple | None = None   # known by symmetry, else estimated


def lemma4_states() -> list:
    return [
        NetworkState("2-clique symmetric", complete_graph(2), DecisionFamily.exactly(2, 1),
                     ((0.0, 0.0), (0.0, 0.0)), (1.0, 1.0), 1.0, 4, (0.7, 0.4), 0,
                     xbar=((0.5, 0.5), (0.5, 0.5))),
        NetworkState("3-path middle", path_graph(3), DecisionFamily.exactly(3, 1),
                     ((0.0,) * 3,) * 3, (0.5, 0.3, 0.8), 1.0, 3, (1.0, 0.6, 0.2), 1,
                     xbar=((1 / 3,) * 3,) * 3),
        NetworkState("edge asymmetric", complete_graph(2), DecisionFamily.exactly(3, 1),
                     ((0.0, 0.5, 1.0), (1.0, 0.0, 0.5)), (0.7, 0.6), 0.5, 6,
                     (0.9, 0.5, 0.8), 0),
    ]


def simulate_estimates(state: NetworkState, n_rounds: int, seed: int = 0) -> np.ndarray:
    """Loss estimates of ``state.agent`` over independent replays of one round."""
    g, fam, v = state.graph, state.family, state.agent
    hood = g.neighbors(v)
    ell = np.asarray(state.loss)
    L = {w: np.asarray(state.cum_loss_est[w], dtype=float) for w in hood}
    act = RngStream(seed, -1, 0, "activation")
    pred = {w: RngStream(seed, w, 0, "prediction") for w in hood}
    zs = {w: RngStream(seed, w, 0, "resample-z") for w in hood}
    ys = {w: RngStream(seed, w, 0, "resample-bernoulli") for w in hood}
    q = np.asarray(state.q)[list(hood)]
    out = np.empty((n_rounds, fam.k))
    active_all = act.uniform((n_rounds, len(hood))) < q
    for r in range(n_rounds):
        flags = np.zeros(fam.k, dtype=bool)
        for j, w in enumerate(hood):
            if active_all[r, j]:
                flags |= oracle_argmax(fam, pred[w].laplace(fam.k) - state.eta * L[w]).astype(bool)
        observed = np.where(flags, ell, np.nan)
        kv = [coop_gr(L[w], fam, state.eta, state.q[w], state.beta, zs[w], "independent", ys[w])
              for w in hood]
        out[r] = estimate_loss(observed, flags, kv)
    return out


def lemma4_target(state: NetworkState, n_samples: int = 1_000_000, seed: int = 0):
    """Closed-form expected estimate per component, plus its propagated standard error."""
    hood = state.graph.neighbors(state.agent)
    if state.xbar is not None:
        xbar = {w: np.asarray(state.xbar[w]) for w in hood}
        xerr = {w: np.zeros(state.family.k) for w in hood}
    else:
        xbar, xerr = {}, {}
        for w in hood:
            xbar[w], xerr[w] = estimate_mean_action(
                state.cum_loss_est[w], state.family, state.eta, n_samples,
                RngStream(seed + 1, w, 0, "prediction"))
    target = np.empty(state.family.k)
    err = np.empty(state.family.k)
    for i in range(state.family.k):
        xs = [xbar[w][i] for w in hood]
        qs = [state.q[w] for w in hood]
        target[i] = expected_estimate_closed_form(xs, qs, state.beta, state.loss[i])
        # first-order propagation through d/dx of 1 - prod(1 - x q)^beta
        prod = math.prod(1 - x * qq for x, qq in zip(xs, qs))
        grads = [state.loss[i] * state.beta * prod ** (state.beta - 1) * prod / (1 - x * qq) * qq
                 for x, qq in zip(xs, qs)]
        err[i] = math.sqrt(sum((gd * xerr[w][i]) ** 2 for gd, w in zip(grads, hood)))
    return target, err


@_timed
def lemma_expected_estimate(n_rounds=100_000, seed=0, rtol=0.02) -> SuiteResult:
    """Monte Carlo mean of the estimate matches the closed-form expectation."""
    worst = 0.0
    parts = []
    for state in lemma4_states():
        est = simulate_estimates(state, n_rounds, seed)
        target, _ = lemma4_target(state, seed=seed)
        rel = np.abs(est.mean(axis=0) - target) / target
        worst = max(worst, rel.max())
        parts.append(f"{state.name}: {rel.max():.2%}")
    return SuiteResult("expected loss estimate", worst <= rtol,
                       "; ".join(parts) + f" (tol {rtol:.0%})")


@_timed
def oracle_exactness(n_vectors=500, seed=0) -> SuiteResult:
    """Oracle output attains the brute-force maximum on random score vectors."""
    rng = np.random.default_rng(seed)
    mismatches = checked = 0
    for kind in ("exactly_m", "at_most_m"):
        for k in range(1, 13):
            for m in range(1, min(k, 4) + 1):
                fam = DecisionFamily(kind, k, m)
                acts = enumerate_actions(fam)
                index = {row.tobytes(): i for i, row in enumerate(acts)}
                for _ in range(n_vectors):
                    y = rng.normal(size=k)
                    a = oracle_argmax(fam, y)
                    checked += 1
                    # same row of the same product on both sides: exact comparison
                    values = acts.astype(float) @ y
                    i = index.get(a.astype(np.int8).tobytes())
                    if i is None or values[i] != values.max():
                        mismatches += 1
    return SuiteResult("oracle exactness", mismatches == 0,
                       f"{mismatches} mismatches over {checked} vectors")


@_timed
def graph_weight_inequalities(n_instances=200, max_n=16, seed=0) -> SuiteResult:
    """Both weight sums stay below their independence-number bounds."""
    rng = np.random.default_rng(seed)
    v1 = v2 = 0
    for _ in range(n_instances):
        n = int(rng.integers(1, max_n + 1))
        g = random_graph(n, float(rng.uniform(0.05, 0.9)), rng)
        alpha1 = independence_number_exact(g)
        q = rng.uniform(0.0, 1.0, size=n)
        q[q == 0] = 1.0
        v1 += weight_ratio_sum(g, q) > alpha1 * (1 + 1e-12)
        p = rng.uniform(0.0, 1.0, size=n) * (rng.random(n) < 0.8)
        v2 += observation_ratio_sum(g, p) > observation_ratio_bound(alpha1, p) * (1 + 1e-12)
    return SuiteResult("independence-number weight bounds", v1 + v2 == 0,
                       f"{v1} + {v2} violations over {n_instances} instances")


@_timed
def tuning_consistency(n_points=100, seed=0) -> SuiteResult:
    """beta * k * eta <= 1 on a random parameter grid."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_points):
        k = int(rng.integers(2, 50))
        n = int(rng.integers(1, 30))
        res = tune_parameters(k, int(rng.integers(1, k + 1)), int(rng.integers(1, 10 ** 6)),
                              int(rng.integers(1, n + 1)), float(rng.uniform(0.01, n)))
        bad += not (res.clamped or res.beta * k * res.eta <= 1.0)
    return SuiteResult("tuning beta*k*eta <= 1", bad == 0, f"{bad} violations / {n_points}")


def run_all(quick: bool = False, seed: int = 0) -> list:
    scale = 10 if quick else 1
    return [
        lemma_min_geometric(n_samples=100_000 // scale, seed=seed),
        lemma_truncated_mean(n_samples=1_000_000 // scale, seed=seed,
                             rtol=0.01 if not quick else 0.03),
        lemma_independent_stopping(n_runs=100_000 // scale, seed=seed,
                                   tol=0.02 if not quick else 0.06),
        lemma_expected_estimate(n_rounds=100_000 // scale, seed=seed,
                                rtol=0.02 if not quick else 0.06),
        oracle_exactness(n_vectors=500 // scale, seed=seed),
        graph_weight_inequalities(seed=seed),
        tuning_consistency(seed=seed),
    ]
