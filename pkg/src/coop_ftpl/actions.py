"""Combinatorial decision sets and their linear-optimization oracle."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

AT_MOST_M = "at_most_m"
EXACTLY_M = "exactly_m"
EXPLICIT = "explicit"
KINDS = (AT_MOST_M, EXACTLY_M, EXPLICIT)

DEFAULT_ENUM_CAP = 10 ** 6


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DecisionFamily:
    """A set of binary actions in {0,1}^k with at most m ones each.

    ``explicit_actions`` is a ``(n_actions, k)`` 0/1 array, only for the
    ``explicit`` kind.
    """

    kind: str
    k: int
    m: int
    explicit_actions: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}; expected one of {KINDS}")
        if self.k < 1 or not 1 <= self.m <= self.k:
            raise ValueError(f"need k >= 1 and 1 <= m <= k, got k={self.k}, m={self.m}")
        if self.kind == EXPLICIT:
            acts = self.explicit_actions
            if acts is None or len(acts) == 0:
                raise ValueError("explicit family needs a nonempty action list")
            acts = np.asarray(acts)
            if acts.ndim != 2 or acts.shape[1] != self.k or not np.isin(acts, (0, 1)).all():
                raise ValueError(f"explicit actions must be 0/1 vectors of length {self.k}")
            if (acts.sum(axis=1) > self.m).any():
                raise ValueError(f"explicit action has more than m={self.m} ones")
            _, first = np.unique(acts, axis=0, return_index=True)
            acts = acts[np.sort(first)].astype(np.int8)
            acts.setflags(write=False)
            object.__setattr__(self, "explicit_actions", acts)
        elif self.explicit_actions is not None:
            raise ValueError("explicit_actions only allowed for the explicit kind")

    @classmethod
    def at_most(cls, k, m):
        return cls(AT_MOST_M, k, m)

    @classmethod
    def exactly(cls, k, m):
        return cls(EXACTLY_M, k, m)

    @classmethod
    def explicit(cls, actions, m=None):
        acts = np.asarray(actions, dtype=np.int8)
        if acts.ndim != 2:
            raise ValueError("explicit actions must be a 2-d array")
        if m is None:
            m = max(1, int(acts.sum(axis=1).max()))
        return cls(EXPLICIT, acts.shape[1], m, acts)

    @property
    def size(self) -> int:
        if self.kind == EXACTLY_M:
            return comb(self.k, self.m)
        if self.kind == AT_MOST_M:
            return sum(comb(self.k, j) for j in range(self.m + 1))
        return len(self.explicit_actions)

    def contains(self, a) -> bool:
        a = np.asarray(a)
        if a.shape != (self.k,) or not np.isin(a, (0, 1)).all():
            return False
        ones = int(a.sum())
        if self.kind == EXACTLY_M:
            return ones == self.m
        if self.kind == AT_MOST_M:
            return ones <= self.m
        return bool((self.explicit_actions == a).all(axis=1).any())

    def __eq__(self, other):
        if not isinstance(other, DecisionFamily):
            return NotImplemented
        if (self.kind, self.k, self.m) != (other.kind, other.k, other.m):
            return False
        if self.kind == EXPLICIT:
            return np.array_equal(self.explicit_actions, other.explicit_actions)
        return True

    def __hash__(self):
        return hash((self.kind, self.k, self.m))

    def __repr__(self):
        extra = f", n_actions={self.size}" if self.kind == EXPLICIT else ""
        return f"DecisionFamily({self.kind!r}, k={self.k}, m={self.m}{extra})"


def read_actions_file(path) -> np.ndarray:
    """One binary string per line, e.g. ``01101``; ``#`` comments allowed."""
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if set(line) - {"0", "1"}:
                raise ValueError(f"{path}:{lineno}: not a binary string: {line!r}")
            rows.append([int(c) for c in line])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: need a nonempty list of equal-length binary strings")
    return np.array(rows, dtype=np.int8)


def oracle_argmax_batch(fam: DecisionFamily, y: np.ndarray) -> np.ndarray:
    """Row-wise maximizer of <a, y> over the family for ``y`` of shape (..., k).

    Ties go to the lowest coordinate index (lowest listed action for the
    explicit kind). Returns an int8 array of the same shape as ``y``.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != fam.k:
        raise ValueError(f"score vector has length {y.shape[-1]}, family has k={fam.k}")
    if fam.kind == EXPLICIT:
        idx = np.argmax(y @ fam.explicit_actions.T.astype(float), axis=-1)
        return fam.explicit_actions[idx]
    out = np.zeros(y.shape, dtype=np.int8)
    if fam.m == 1:
        top = np.argmax(y, axis=-1)[..., None]
    elif fam.m == fam.k:
        top = np.broadcast_to(np.arange(fam.k), y.shape)
    else:
        top = np.argsort(-y, axis=-1, kind="stable")[..., :fam.m]
    if fam.kind == EXACTLY_M:
        np.put_along_axis(out, top, 1, axis=-1)
    else:
        positive = (np.take_along_axis(y, top, axis=-1) > 0).astype(np.int8)
        np.put_along_axis(out, top, positive, axis=-1)
    return out


def oracle_argmax(fam: DecisionFamily, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (fam.k,):
        raise ValueError(f"score vector has shape {y.shape}, expected ({fam.k},)")
    return oracle_argmax_batch(fam, y)


def enumerate_actions(fam: DecisionFamily, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """All members as rows of an int8 array, in a fixed order."""
    if fam.size > cap:
        raise EnumerationCapError(f"family has {fam.size} actions > cap {cap}")
    if fam.kind == EXPLICIT:
        return fam.explicit_actions.copy()
    sizes = [fam.m] if fam.kind == EXACTLY_M else range(fam.m + 1)
    rows = []
    for j in sizes:
        for support in combinations(range(fam.k), j):
            a = np.zeros(fam.k, dtype=np.int8)
            a[list(support)] = 1
            rows.append(a)
    return np.array(rows, dtype=np.int8)


def best_fixed_action(fam: DecisionFamily, weighted_loss) -> np.ndarray:
    """Minimizer of <a, weighted_loss>, the comparator in network regret."""
    return oracle_argmax(fam, -np.asarray(weighted_loss, dtype=float))


def best_fixed_loss_series(fam: DecisionFamily, weighted_losses: np.ndarray) -> np.ndarray:
    """min_a <a, W_t> for every row W_t."""
    w = np.asarray(weighted_losses, dtype=float)
    return np.einsum("tk,tk->t", oracle_argmax_batch(fam, -w).astype(float), w)


def oracle_plays_batch(fam: DecisionFamily, y: np.ndarray, component) -> np.ndarray:
    """Whether the maximizer of each score row plays ``component``.

    Same tie-breaking as :func:`oracle_argmax_batch`, without building the
    full action. ``component`` broadcasts against ``y.shape[:-1]``.
    """
    y = np.asarray(y, dtype=float)
    comp = np.broadcast_to(np.asarray(component), y.shape[:-1])
    if fam.kind == EXPLICIT:
        played = oracle_argmax_batch(fam, y)
        return np.take_along_axis(played, comp[..., None], axis=-1)[..., 0].astype(bool)
    own = np.take_along_axis(y, comp[..., None], axis=-1)
    if fam.m == 1:
        hit = np.argmax(y, axis=-1) == comp
    else:
        # rank of the component under (value desc, index asc)
        before = (y > own) | ((y == own) & (np.arange(fam.k) < comp[..., None]))
        hit = before.sum(axis=-1) < fam.m
    if fam.kind == AT_MOST_M:
        hit &= own[..., 0] > 0
    return hit
