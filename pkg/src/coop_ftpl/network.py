"""Round-by-round simulation of cooperative semi-bandits on a graph.

Each round runs in barriered phases: activations, predictions, feedback to
closed neighborhoods, K-vector production from the previous cumulative
estimates, loss estimation, and finally the state updates.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from . import agent as agent_mod
from .actions import DecisionFamily, EXACTLY_M, best_fixed_action, best_fixed_loss_series
from .graph import (DEFAULT_EXACT_CAP, Graph, GraphTooLargeError,
                    greedy_independent_set, maximum_independent_set)
from .resampling import INDEPENDENT, MODES, ProtocolError, estimate_loss
from .rng import ENVIRONMENT, derive_stream

log = logging.getLogger(__name__)

IID_BERNOULLI = "iid_bernoulli"
PIECEWISE = "piecewise"
FROM_FILE = "file"
LOSS_KINDS = (IID_BERNOULLI, PIECEWISE, FROM_FILE)


@dataclass(frozen=True, eq=False)
class LossModel:
    """Oblivious loss sequence with values in [0, 1].

    ``iid_bernoulli`` uses ``means``; ``piecewise`` splits the horizon into
    equal segments, one mean vector each; ``file`` replays ``matrix``.
    """

    kind: str
    means: tuple = ()
    segments: tuple = ()
    matrix: np.ndarray | None = None
    source: str | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == IID_BERNOULLI:
            _check_means(self.means)
        elif self.kind == PIECEWISE:
            if not self.segments:
                raise ValueError("piecewise loss model needs at least one segment")
            for seg in self.segments:
                _check_means(seg)
            if len({len(s) for s in self.segments}) != 1:
                raise ValueError("all segments need the same dimension")
        else:
            mat = np.asarray(self.matrix, dtype=float)
            if mat.ndim != 2 or np.any((mat < 0) | (mat > 1)) or np.isnan(mat).any():
                raise ValueError("loss matrix must be T x k with entries in [0, 1]")
            object.__setattr__(self, "matrix", mat)

    @property
    def k(self) -> int:
        if self.kind == IID_BERNOULLI:
            return len(self.means)
        if self.kind == PIECEWISE:
            return len(self.segments[0])
        return self.matrix.shape[1]

    def materialize(self, horizon: int, seed: int) -> np.ndarray:
        """The full T x k loss sequence, drawn before any agent acts."""
        if self.kind == FROM_FILE:
            if self.matrix.shape[0] < horizon:
                raise ValueError(f"loss file has {self.matrix.shape[0]} rows < horizon {horizon}")
            return self.matrix[:horizon].copy()
        stream = derive_stream(seed, ENVIRONMENT, 0, "adversary")
        if self.kind == IID_BERNOULLI:
            means = np.broadcast_to(np.asarray(self.means, dtype=float), (horizon, self.k))
        else:
            seg = np.asarray(self.segments, dtype=float)
            idx = np.minimum(np.arange(horizon) * len(seg) // max(horizon, 1), len(seg) - 1)
            means = seg[idx]
        return (stream.uniform((horizon, self.k)) < means).astype(float)

    def to_dict(self) -> dict:
        if self.kind == IID_BERNOULLI:
            return {"kind": self.kind, "means": list(map(float, self.means))}
        if self.kind == PIECEWISE:
            return {"kind": self.kind, "segments": [list(map(float, s)) for s in self.segments]}
        if self.source is not None:
            return {"kind": self.kind, "file": self.source}
        return {"kind": self.kind, "matrix": self.matrix.tolist()}


def _check_means(means):
    arr = np.asarray(means, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or np.any((arr < 0) | (arr > 1)):
        raise ValueError("loss means must be a nonempty vector in [0, 1]")


@dataclass(frozen=True, eq=False)
class ActivationModel:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or np.any((q < 0) | (q > 1)):
            raise ValueError("activation probabilities must lie in [0, 1]")
        object.__setattr__(self, "q", q)

    @property
    def Q(self) -> float:
        return float(self.q.sum())

    def materialize(self, horizon: int, seed: int) -> np.ndarray:
        stream = derive_stream(seed, ENVIRONMENT, 0, "activation")
        return stream.uniform((horizon, self.q.size)) < self.q


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Everything a run needs besides the seed.

    ``eta = 0`` and ``beta = 0`` request automatic tuning. ``alpha1`` overrides
    the exact independence number. ``loss_seed`` fixes the adversary
    independently of the agents' seed.
    """

    graph: Graph
    family: DecisionFamily
    loss: LossModel
    activation: ActivationModel
    horizon: int
    eta: float = 0.0
    beta: int = 0
    mode: str = INDEPENDENT
    alpha1: int | None = None
    cooperate: bool = True
    loss_seed: int | None = None
    seeds: int = 1
    graph_source: str | None = None
    exact_cap: int = DEFAULT_EXACT_CAP

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.loss.k != self.family.k:
            raise ValueError(f"loss model has k={self.loss.k}, family has k={self.family.k}")
        if self.activation.q.size != self.graph.n_agents:
            raise ValueError(f"{self.activation.q.size} activation probabilities for "
                             f"{self.graph.n_agents} agents")
        if self.mode not in MODES:
            raise ValueError(f"unknown estimator mode {self.mode!r}")
        if self.eta < 0 or self.beta < 0:
            raise ValueError("eta and beta must be nonnegative (0 = auto)")
        if self.alpha1 is not None and self.alpha1 < 1:
            raise ValueError("alpha1 override must be >= 1")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RunParameters:
    eta: float
    beta: int
    alpha1: int
    Q: float
    bound: float
    tuned: bool


def resolve_parameters(cfg: SimConfig) -> RunParameters:
    """Independence number, activation mass, and the (possibly tuned) eta and beta."""
    g, fam = cfg.graph, cfg.family
    if cfg.alpha1 is not None:
        alpha1 = cfg.alpha1
    else:
        try:
            alpha1 = len(maximum_independent_set(g, cfg.exact_cap))
        except GraphTooLargeError:
            alpha1 = len(greedy_independent_set(g))
            log.warning("graph too large for exact alpha1; using greedy lower bound %d", alpha1)
    Q = cfg.activation.Q
    eta, beta = float(cfg.eta), int(cfg.beta)
    tuned = eta == 0 or beta == 0
    if Q == 0:
        # nobody is ever active; parameters are irrelevant
        return RunParameters(eta or 1.0, beta or 1, alpha1, Q, 0.0, tuned)
    if eta == 0:
        eta = agent_mod.tune_parameters(fam.k, fam.m, cfg.horizon, alpha1, Q).eta
    if beta == 0:
        beta = int(np.floor(1.0 / (fam.k * eta)))
        if beta < 1:
            log.warning("beta = floor(1/(k eta)) < 1; clamping to 1")
            beta = 1
    bound = (agent_mod.bound_value(fam.k, fam.m, cfg.horizon, alpha1, Q)
             if fam.k >= 2 else float("nan"))
    return RunParameters(eta, beta, alpha1, Q, bound, tuned)


@dataclass
class StepRecord:
    t: int
    active_set: tuple
    predictions: dict
    feedback: dict
    k_exchange: dict
    round_loss: float

    def messages_between(self, members) -> list:
        """K-vector messages (w -> v, w != v) with both endpoints in ``members``."""
        members = set(members)
        return [(w, v) for (w, v) in self.k_exchange if w != v and w in members and v in members]


@dataclass
class RegretTrace:
    root_seed: int
    params: RunParameters
    cum_loss: np.ndarray
    weighted_loss: np.ndarray
    best_fixed_loss: np.ndarray
    regret: np.ndarray
    oracle_calls_total: np.ndarray
    oracle_calls_per_agent: np.ndarray
    max_round_oracle_calls: np.ndarray
    best_action: np.ndarray
    final_cum_loss_est: np.ndarray
    losses: np.ndarray
    activations: np.ndarray
    config_echo: dict = field(default_factory=dict)
    steps: list | None = None

    @property
    def horizon(self) -> int:
        return len(self.cum_loss)

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])


def run_episode(cfg: SimConfig, root_seed: int = 0, record_steps: bool = False) -> RegretTrace:
    """Simulate ``cfg.horizon`` rounds. Deterministic given ``root_seed``."""
    from .config import config_to_dict

    params = resolve_parameters(cfg)
    g, fam, T, k = cfg.graph, cfg.family, cfg.horizon, cfg.family.k
    n = g.n_agents
    loss_seed = root_seed if cfg.loss_seed is None else cfg.loss_seed
    losses = cfg.loss.materialize(T, loss_seed)
    active_matrix = cfg.activation.materialize(T, root_seed)
    hoods = g.closed_neighborhoods if cfg.cooperate else tuple((v,) for v in range(n))
    agents = agent_mod.make_agents(fam, cfg.activation.q, params.eta, params.beta)

    cum_loss = np.zeros(T)
    weighted = np.zeros((T, k))
    calls_total = np.zeros(T, dtype=np.int64)
    max_round_calls = np.zeros(n, dtype=np.int64)
    steps = [] if record_steps else None
    running, running_w = 0.0, np.zeros(k)

    for t in range(1, T + 1):
        ell = losses[t - 1]
        active = np.flatnonzero(active_matrix[t - 1]).tolist()
        before = [a.oracle_calls for a in agents]

        preds = {w: agent_mod.predict(agents[w], derive_stream(root_seed, w, t, "prediction"))
                 for w in active}

        # feedback: each active agent's semi-bandit vector reaches its closed neighborhood
        observed, flags, feedback = {}, {}, {}
        for w in active:
            played = preds[w].astype(bool)
            for v in hoods[w]:
                if v not in observed:
                    observed[v] = np.full(k, np.nan)
                    flags[v] = np.zeros(k, dtype=bool)
                observed[v][played] = ell[played]
                flags[v] |= played
                if record_steps:
                    feedback.setdefault(v, []).append((w, np.where(played, ell, 0.0)))
        receivers = sorted(observed)

        # K-vectors, produced lazily, once per requested agent, from L_{t-1}
        producers = sorted({w for v in receivers for w in hoods[v]})
        kvec = {w: agent_mod.produce_k_vector(
                    agents[w], derive_stream(root_seed, w, t, "resample-z"), cfg.mode,
                    derive_stream(root_seed, w, t, "resample-bernoulli"))
                for w in producers}

        estimates = {}
        for v in receivers:
            est = estimate_loss(observed[v], flags[v], [kvec[w] for w in hoods[v]])
            if est.max(initial=0.0) > params.beta:
                raise ProtocolError(f"round {t}: estimate for agent {v} exceeds beta")
            estimates[v] = est
        for v, est in estimates.items():
            agent_mod.update(agents[v], est)

        round_loss = float(sum(preds[w] @ ell for w in active))
        running += round_loss
        running_w += len(active) * ell
        cum_loss[t - 1] = running
        weighted[t - 1] = running_w
        spent = [a.oracle_calls - b for a, b in zip(agents, before)]
        np.maximum(max_round_calls, spent, out=max_round_calls)
        calls_total[t - 1] = sum(a.oracle_calls for a in agents)
        if record_steps:
            steps.append(StepRecord(
                t=t, active_set=tuple(active), predictions=preds, feedback=feedback,
                k_exchange={(w, v): kvec[w] for v in receivers for w in hoods[v]},
                round_loss=round_loss))

    best_series = best_fixed_loss_series(fam, weighted)
    return RegretTrace(
        root_seed=root_seed,
        params=params,
        cum_loss=cum_loss,
        weighted_loss=weighted,
        best_fixed_loss=best_series,
        regret=cum_loss - best_series,
        oracle_calls_total=calls_total,
        oracle_calls_per_agent=np.array([a.oracle_calls for a in agents], dtype=np.int64),
        max_round_oracle_calls=max_round_calls,
        best_action=best_fixed_action(fam, weighted[-1]),
        final_cum_loss_est=np.array([a.cum_loss_est for a in agents]),
        losses=losses,
        activations=active_matrix,
        config_echo=config_to_dict(cfg),
        steps=steps,
    )


def compute_network_regret(trace: RegretTrace, fam: DecisionFamily) -> np.ndarray:
    """Cumulative loss minus the best fixed action's activation-weighted loss, per round."""
    return trace.cum_loss - best_fixed_loss_series(fam, trace.weighted_loss)


def no_cooperation_baseline(cfg: SimConfig) -> SimConfig:
    """Same run with every neighborhood shrunk to the agent itself."""
    return cfg.replace(cooperate=False)


def make_lower_bound_instance(g: Graph, q_active: float, gap: float, k: int, m: int,
                              horizon: int = 1000, alpha1: int | None = None,
                              cap: int = DEFAULT_EXACT_CAP, **overrides) -> SimConfig:
    """Hard instance: only a maximum independent set is ever active.

    The first ``m`` components have mean loss 1/2 - gap, all others 1/2.
    Passing ``alpha1`` with a graph above ``cap`` falls back to a greedy set
    of that size.
    """
    if not 0 < gap < 0.5:
        raise ValueError("gap must lie in (0, 1/2)")
    if not 0 < q_active <= 1:
        raise ValueError("q_active must lie in (0, 1]")
    try:
        members = maximum_independent_set(g, cap).members
    except GraphTooLargeError:
        if alpha1 is None:
            raise
        members = greedy_independent_set(g).members
        if len(members) != alpha1:
            raise ValueError(f"greedy set has size {len(members)}, not the given alpha1 "
                             f"{alpha1}") from None
    q = np.zeros(g.n_agents)
    q[sorted(members)] = q_active
    means = np.full(k, 0.5)
    means[:m] = 0.5 - gap
    return SimConfig(graph=g, family=DecisionFamily(EXACTLY_M, k, m),
                     loss=LossModel(IID_BERNOULLI, means=tuple(means)),
                     activation=ActivationModel(q), horizon=horizon,
                     alpha1=len(members), exact_cap=cap, **overrides)
