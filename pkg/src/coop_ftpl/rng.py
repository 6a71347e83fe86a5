"""Replayable random streams and Laplace perturbations.

Every random quantity in a simulation comes from a stream keyed by
``(root_seed, agent, t, purpose)``. The key is hashed into a Philox key, so
streams can be created in any order (or in parallel workers) and always
reproduce the same draws.
"""
from __future__ import annotations

import hashlib
import struct

import numpy as np

PURPOSES = (
    "prediction",
    "resample-z",
    "resample-bernoulli",
    "activation",
    "adversary",
)

# Agent id used for environment-level streams (activations, losses).
ENVIRONMENT = -1

_HALF_ULP = 2.0 ** -54


class RngStream:
    """A counter-based random stream with an auditable draw counter.

    ``draws`` counts logical uniform draws consumed so far. Every Laplace
    coordinate and every Bernoulli costs exactly one uniform.
    """

    __slots__ = ("root_seed", "agent", "t", "purpose", "draws", "_gen")

    def __init__(self, root_seed: int, agent: int, t: int, purpose: str):
        if purpose not in PURPOSES:
            raise ValueError(f"unknown stream purpose {purpose!r}")
        self.root_seed = int(root_seed)
        self.agent = int(agent)
        self.t = int(t)
        self.purpose = purpose
        self.draws = 0
        self._gen = np.random.Generator(np.random.Philox(key=_lineage_key(
            self.root_seed, self.agent, self.t, purpose)))

    @property
    def lineage(self) -> tuple:
        return (self.agent, self.t, self.purpose, self.draws)

    def uniform(self, size) -> np.ndarray:
        """Uniforms in the open interval (0, 1)."""
        out = self._gen.random(size)
        out += _HALF_ULP
        self.draws += out.size
        return out

    def laplace(self, size) -> np.ndarray:
        """Standard Laplace draws by inverse CDF, one uniform per draw."""
        return laplace_inverse_cdf(self.uniform(size))

    def bernoulli(self, p: float, size) -> np.ndarray:
        return self.uniform(size) < p

    def __repr__(self):
        return (f"RngStream(root_seed={self.root_seed}, agent={self.agent}, "
                f"t={self.t}, purpose={self.purpose!r}, draws={self.draws})")


def _lineage_key(root_seed: int, agent: int, t: int, purpose: str) -> np.ndarray:
    payload = struct.pack("<QqqB", root_seed & 0xFFFFFFFFFFFFFFFF, agent, t,
                          PURPOSES.index(purpose))
    digest = hashlib.blake2b(payload, digest_size=16, person=b"coop-ftpl").digest()
    return np.frombuffer(digest, dtype=np.uint64).copy()


def derive_stream(root_seed: int, agent: int, t: int, purpose: str) -> RngStream:
    """Child stream for one (agent, round, purpose) lineage."""
    return RngStream(root_seed, agent, t, purpose)


def laplace_inverse_cdf(u: np.ndarray) -> np.ndarray:
    d = np.asarray(u, dtype=float) - 0.5
    mag = np.abs(d)
    mag *= -2.0
    mag += 1.0
    np.log(mag, out=mag)
    return np.copysign(mag, d, out=mag)


def laplace_cdf(z):
    z = np.asarray(z, dtype=float)
    return np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0.0)),
                    1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))


def sample_laplace_vector(stream: RngStream, k: int) -> np.ndarray:
    """k i.i.d. standard Laplace coordinates (density 2^-k exp(-||z||_1))."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return stream.laplace(k)
