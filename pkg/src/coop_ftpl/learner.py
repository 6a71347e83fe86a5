"""scikit-learn style front end for a Coop-FTPL network.

``CoopFTPL.fit(L)`` plays the protocol against the oblivious loss matrix
``L`` (one row per round, one column per component) and keeps the learned
per-agent state, so that ``predict`` draws what each agent would play next::

    >>> import numpy as np
    >>> from coop_ftpl.learner import CoopFTPL
    >>> L = (np.random.default_rng(0).random((200, 4)) < [0.2, 0.5, 0.5, 0.5]).astype(float)
    >>> est = CoopFTPL(m=1, graph="complete", n_agents=3, activation=0.5).fit(L)
    >>> est.predict([0, 1]).shape
    (2, 4)
"""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import agent as agent_mod
from .actions import KINDS, DecisionFamily
from .graph import Graph, complete_graph, cycle_graph, empty_graph, path_graph
from .network import (FROM_FILE, ActivationModel, LossModel, RegretTrace, SimConfig,
                      run_episode)
from .resampling import MODES, estimate_mean_action
from .rng import derive_stream

_NAMED_GRAPHS = {"complete": complete_graph, "empty": empty_graph,
                 "path": path_graph, "cycle": cycle_graph}


def check_loss_matrix(X) -> np.ndarray:
    """2-d float array of losses in [0, 1]."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.min() < 0 or X.max() > 1:
        raise ValueError("losses must lie in [0, 1]")
    return X


def check_probabilities(q, n: int, name: str = "activation") -> np.ndarray:
    if isinstance(q, numbers.Real):
        q = np.full(n, float(q))
    q = np.asarray(q, dtype=float)
    if q.shape != (n,):
        raise ValueError(f"{name} must be a scalar or a length-{n} vector, got shape {q.shape}")
    if np.any((q < 0) | (q > 1)) or np.isnan(q).any():
        raise ValueError(f"{name} probabilities must lie in [0, 1]")
    return q


class CoopFTPL(BaseEstimator):
    """Cooperative follow-the-perturbed-leader on a communication graph.

    Parameters
    ----------
    m : int
        Maximum (or exact, see ``action_kind``) number of components per action.
    action_kind : {"exactly_m", "at_most_m"}
    graph : Graph or {"complete", "empty", "path", "cycle"}
        Communication network; named graphs use ``n_agents`` nodes.
    n_agents : int
        Only used with a named graph.
    activation : float or array-like
        Activation probability of every agent, or one per agent.
    eta, beta : float, int or "auto"
        Learning rate and resampling truncation. ``"auto"`` tunes them for the
        horizon seen by ``fit``.
    mode : {"independent", "shared"}
        Resampling loop layout.
    alpha1 : int or None
        Independence number override.
    cooperate : bool
        If False, agents only use their own feedback.
    random_state : int
        Root seed of all agent streams.
    """

    def __init__(self, m=1, action_kind="exactly_m", graph="complete", n_agents=1,
                 activation=1.0, eta="auto", beta="auto", mode="independent",
                 alpha1=None, cooperate=True, random_state=0):
        self.m = m
        self.action_kind = action_kind
        self.graph = graph
        self.n_agents = n_agents
        self.activation = activation
        self.eta = eta
        self.beta = beta
        self.mode = mode
        self.alpha1 = alpha1
        self.cooperate = cooperate
        self.random_state = random_state

    def _graph(self) -> Graph:
        if isinstance(self.graph, Graph):
            return self.graph
        if self.graph not in _NAMED_GRAPHS:
            raise ValueError(f"graph must be a Graph or one of {sorted(_NAMED_GRAPHS)}")
        return _NAMED_GRAPHS[self.graph](int(self.n_agents))

    def _config(self, X) -> SimConfig:
        if self.action_kind not in KINDS[:2]:
            raise ValueError("action_kind must be 'exactly_m' or 'at_most_m'")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        g = self._graph()
        T, k = X.shape
        return SimConfig(
            graph=g,
            family=DecisionFamily(self.action_kind, k, int(self.m)),
            loss=LossModel(FROM_FILE, matrix=X),
            activation=ActivationModel(check_probabilities(self.activation, g.n_agents)),
            horizon=T,
            eta=0.0 if self.eta == "auto" else float(self.eta),
            beta=0 if self.beta == "auto" else int(self.beta),
            mode=self.mode,
            alpha1=self.alpha1,
            cooperate=bool(self.cooperate),
        )

    def fit(self, X, y=None):
        """Play all rounds of the loss matrix ``X`` (shape ``(T, k)``)."""
        X = check_loss_matrix(X)
        cfg = self._config(X)
        trace = run_episode(cfg, int(self.random_state))
        self.config_ = cfg
        self.trace_: RegretTrace = trace
        self.n_features_in_ = X.shape[1]
        self.family_ = cfg.family
        self.eta_ = trace.params.eta
        self.beta_ = trace.params.beta
        self.alpha1_ = trace.params.alpha1
        self.cum_loss_est_ = trace.final_cum_loss_est.copy()
        self.regret_ = trace.regret
        self.n_rounds_ = X.shape[0]
        return self

    def _agents(self):
        check_is_fitted(self, "cum_loss_est_")
        return [agent_mod.AgentState(v, self.family_, self.eta_, self.beta_, float(qv),
                                     self.cum_loss_est_[v])
                for v, qv in enumerate(self.config_.activation.q)]

    def predict(self, X):
        """Next-round action of each agent id in ``X`` (one row per id)."""
        agents = self._agents()
        ids = np.asarray(X).reshape(-1).astype(int)
        if ids.size and (ids.min() < 0 or ids.max() >= len(agents)):
            raise ValueError("agent id out of range")
        t = self.n_rounds_ + 1
        seed = int(self.random_state)
        rows = []
        for j, v in enumerate(ids):
            # repeated ids get distinct draws
            stream = derive_stream(seed, int(v), t + j * (1 << 32), "prediction")
            rows.append(agent_mod.predict(agents[v], stream))
        return np.array(rows, dtype=np.int8).reshape(len(ids), self.n_features_in_)

    def mean_action(self, agent: int = 0, n_samples: int = 100_000):
        """Monte Carlo estimate (mean, stderr) of an agent's next-round action."""
        check_is_fitted(self, "cum_loss_est_")
        stream = derive_stream(int(self.random_state), agent, self.n_rounds_ + 1, "prediction")
        return estimate_mean_action(self.cum_loss_est_[agent], self.family_, self.eta_,
                                    n_samples, stream)

    def score(self, X=None, y=None):
        """Negative final network regret of the fitted run (higher is better)."""
        check_is_fitted(self, "regret_")
        return -float(self.regret_[-1])
