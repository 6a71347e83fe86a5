"""Cooperative geometric resampling and the resulting loss estimator.

An agent ``w`` answers a neighbor's request with a vector ``K(w)`` whose
entry ``i`` is the first round ``s`` at which a fresh perturbed-leader draw
plays component ``i`` *and* a Bernoulli(q(w)) coin fires, truncated at
``beta``. The requesting agent ``v`` multiplies the observed loss by the
smallest ``K(i, w)`` over its closed neighborhood.
"""
from __future__ import annotations

import numpy as np

from .actions import DecisionFamily, oracle_argmax_batch, oracle_plays_batch
from .rng import RngStream, derive_stream

INDEPENDENT = "independent"
SHARED = "shared"
MODES = (INDEPENDENT, SHARED)

_FIRST_CHUNK = 256


class ProtocolError(RuntimeError):
    pass


def coop_gr(cum_loss_est, fam: DecisionFamily, eta: float, q_w: float, beta: int,
            stream: RngStream, mode: str = INDEPENDENT,
            bernoulli_stream: RngStream | None = None) -> np.ndarray:
    """Truncated geometric resampling for every component.

    ``stream`` supplies the perturbations; the Bernoulli coins come from
    ``bernoulli_stream`` (by default the sibling ``resample-bernoulli``
    lineage of ``stream``).

    In ``independent`` mode each component gets its own resampling loop. In
    ``shared`` mode one sequence of perturbations (with a separate coin per
    component) serves all components.

    Returns an int array with entries in ``[1, beta]``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown resampling mode {mode!r}")
    beta = int(beta)
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if not 0.0 <= q_w <= 1.0:
        raise ValueError("q_w must be a probability")
    k = fam.k
    if beta == 1:
        return np.ones(k, dtype=np.int64)
    if q_w == 0.0:
        return np.full(k, beta, dtype=np.int64)
    if bernoulli_stream is None:
        bernoulli_stream = derive_stream(stream.root_seed, stream.agent, stream.t,
                                         "resample-bernoulli")
    shift = eta * np.asarray(cum_loss_est, dtype=float)
    if mode == INDEPENDENT:
        return _independent(shift, fam, q_w, beta, stream, bernoulli_stream)
    return _shared(shift, fam, q_w, beta, stream, bernoulli_stream)


def _independent(shift, fam, q_w, beta, zs, ys):
    k = fam.k
    out = np.full(k, beta, dtype=np.int64)
    pending = np.arange(k)
    start, chunk = 0, min(beta, _FIRST_CHUNK)
    while pending.size and start < beta:
        c = min(chunk, beta - start)
        z = zs.laplace((pending.size, c, k))
        z -= shift
        hit = oracle_plays_batch(fam, z, pending[:, None])
        hit &= ys.uniform((pending.size, c)) < q_w
        found = hit.any(axis=1)
        out[pending[found]] = np.minimum(start + 1 + hit[found].argmax(axis=1), beta)
        pending = pending[~found]
        start += c
        chunk *= 2
    return out


def _shared(shift, fam, q_w, beta, zs, ys):
    k = fam.k
    out = np.full(k, beta, dtype=np.int64)
    pending = np.ones(k, dtype=bool)
    start, chunk = 0, min(beta, _FIRST_CHUNK)
    while pending.any() and start < beta:
        c = min(chunk, beta - start)
        played = oracle_argmax_batch(fam, zs.laplace((c, k)) - shift).astype(bool)
        hit = played & (ys.uniform((c, k)) < q_w)
        found = pending & hit.any(axis=0)
        out[found] = np.minimum(start + 1 + hit[:, found].argmax(axis=0), beta)
        pending &= ~found
        start += c
        chunk *= 2
    return out


def resample_oracle_calls(k_vector, mode: str = INDEPENDENT) -> int:
    """Oracle invocations the resampling loop(s) performed to produce ``k_vector``."""
    k_vector = np.asarray(k_vector)
    if mode == INDEPENDENT:
        return int(k_vector.sum())
    return int(k_vector.max())


def min_geometric_param(p_list) -> float:
    """Parameter of the minimum of independent geometrics with parameters ``p_list``."""
    p = np.asarray(p_list, dtype=float)
    if p.size == 0:
        raise ValueError("need at least one geometric parameter")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("geometric parameters must lie in [0, 1]")
    return float(1.0 - np.prod(1.0 - p))


def truncated_geometric_mean(q: float, beta: int) -> float:
    """E[min(G, beta)] for G ~ Geometric(q) on {1, 2, ...}.

    At ``q = 0`` the variable is always truncated, so the mean is ``beta``.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must be a probability")
    if q == 0.0:
        return float(beta)
    return (1.0 - (1.0 - q) ** beta) / q


def observation_flags(predictions, active_neighbors) -> np.ndarray:
    """B(i) = 1 iff an active neighbor played component i."""
    flags = None
    for w in active_neighbors:
        x = np.asarray(predictions[w], dtype=bool)
        flags = x.copy() if flags is None else flags | x
    return flags


def estimate_loss(observed_loss, flags, k_vectors) -> np.ndarray:
    """Loss estimate ``loss(i) * B(i) * min_w K(i, w)``.

    ``observed_loss`` holds the semi-bandit feedback, NaN where nothing was
    observed. ``k_vectors`` has one row per member of the closed neighborhood.
    """
    flags = np.asarray(flags, dtype=bool)
    observed = np.asarray(observed_loss, dtype=float)
    kv = np.atleast_2d(np.asarray(k_vectors))
    if kv.shape[0] == 0:
        raise ProtocolError("no K-vectors: the closed neighborhood contains the agent itself")
    if observed.shape != flags.shape or kv.shape[1] != flags.shape[0]:
        raise ValueError("dimension mismatch between losses, flags and K-vectors")
    if np.isnan(observed[flags]).any():
        missing = np.flatnonzero(flags & np.isnan(observed)).tolist()
        raise ProtocolError(f"components {missing} flagged as observed but no loss received")
    est = np.zeros(flags.shape[0])
    est[flags] = observed[flags] * kv.min(axis=0)[flags]
    return est


def expected_estimate_closed_form(xbar, q, beta: int, loss: float) -> float:
    """Conditional mean of the estimate for one component.

    ``xbar`` and ``q`` run over the closed neighborhood of the estimating agent.
    """
    xq = np.asarray(xbar, dtype=float) * np.asarray(q, dtype=float)
    return float(loss * (1.0 - np.prod(1.0 - xq) ** beta))


def estimate_mean_action(cum_loss_est, fam: DecisionFamily, eta: float,
                         n_samples: int, stream: RngStream, batch: int = 100_000):
    """Monte Carlo mean of the perturbed-leader action.

    Returns ``(mean, stderr)``, both of length k.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    shift = eta * np.asarray(cum_loss_est, dtype=float)
    total = np.zeros(fam.k)
    done = 0
    while done < n_samples:
        c = min(batch, n_samples - done)
        total += oracle_argmax_batch(fam, stream.laplace((c, fam.k)) - shift).sum(axis=0)
        done += c
    mean = total / n_samples
    # actions are 0/1, so the per-coordinate variance is mean * (1 - mean)
    stderr = np.sqrt(mean * (1.0 - mean) / n_samples)
    return mean, stderr
