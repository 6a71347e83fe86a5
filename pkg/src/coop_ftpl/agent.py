"""A single Coop-FTPL agent and the horizon-dependent parameter tuning."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .actions import DecisionFamily, oracle_argmax
from .resampling import INDEPENDENT, coop_gr, resample_oracle_calls
from .rng import RngStream, sample_laplace_vector

log = logging.getLogger(__name__)


@dataclass
class AgentState:
    id: int
    family: DecisionFamily
    eta: float
    beta: int
    q_self: float
    cum_loss_est: np.ndarray = None
    oracle_calls: int = 0

    def __post_init__(self):
        if self.cum_loss_est is None:
            self.cum_loss_est = np.zeros(self.family.k)
        else:
            self.cum_loss_est = np.array(self.cum_loss_est, dtype=float)
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if int(self.beta) < 1:
            raise ValueError("beta must be >= 1")
        if not 0.0 <= self.q_self <= 1.0:
            raise ValueError("q_self must be a probability")


@dataclass(frozen=True)
class TuningResult:
    eta: float
    beta: int
    Q: float
    alpha1: int
    clamped: bool = field(default=False, compare=False)


def predict(state: AgentState, stream: RngStream) -> np.ndarray:
    """Perturbed-leader action; consumes k uniforms and one oracle call."""
    z = sample_laplace_vector(stream, state.family.k)
    state.oracle_calls += 1
    return oracle_argmax(state.family, z - state.eta * state.cum_loss_est)


def produce_k_vector(state: AgentState, stream: RngStream, mode: str = INDEPENDENT,
                     bernoulli_stream: RngStream | None = None) -> np.ndarray:
    """Answer a neighbor's request using this agent's previous cumulative estimate."""
    kv = coop_gr(state.cum_loss_est, state.family, state.eta, state.q_self, state.beta,
                 stream, mode, bernoulli_stream)
    state.oracle_calls += resample_oracle_calls(kv, mode)
    return kv


def update(state: AgentState, est) -> AgentState:
    est = np.asarray(est, dtype=float)
    if est.shape != state.cum_loss_est.shape:
        raise ValueError(f"estimate has shape {est.shape}, state has {state.cum_loss_est.shape}")
    state.cum_loss_est += est
    return state


def _check_tuning_args(k, m, T, alpha1, Q):
    if k < 2:
        raise ValueError("tuning needs k >= 2 (log k vanishes at k = 1)")
    if not 1 <= m <= k:
        raise ValueError("need 1 <= m <= k")
    if T < 1:
        raise ValueError("horizon T must be >= 1")
    if alpha1 < 1:
        raise ValueError("alpha1 must be >= 1")
    if not Q > 0:
        raise ValueError("activation mass Q must be positive")


def tune_parameters(k: int, m: int, T: int, alpha1: int, Q: float) -> TuningResult:
    """Learning rate and truncation for a known horizon (natural log)."""
    _check_tuning_args(k, m, T, alpha1, Q)
    eta = math.sqrt(3 * m * math.log(k) / (5 * k * T * (k * alpha1 / Q + m)))
    beta = math.floor(1.0 / (k * eta))
    clamped = beta < 1
    if clamped:
        log.warning("tuned beta = %d < 1 (eta = %.4g); clamping to 1", beta, eta)
        beta = 1
    return TuningResult(eta=eta, beta=beta, Q=float(Q), alpha1=int(alpha1), clamped=clamped)


def bound_value(k: int, m: int, T: int, alpha1: int, Q: float) -> float:
    """Expected network-regret upper bound under the tuned parameters."""
    _check_tuning_args(k, m, T, alpha1, Q)
    return 2 * Q * math.sqrt(15 * m * k * T * math.log(k) * (k * alpha1 / Q + m))


def make_agents(family: DecisionFamily, q, eta: float, beta: int) -> list:
    return [AgentState(v, family, eta, int(beta), float(qv)) for v, qv in enumerate(q)]

