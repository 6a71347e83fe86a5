"""Communication networks, closed neighborhoods and independence numbers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable

import numpy as np

DEFAULT_EXACT_CAP = 24


class GraphParseError(ValueError):
    pass


class GraphTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected graph on agents ``0..n_agents-1`` without self-loops.

    Edges are stored once as ``(u, v)`` with ``u < v``.
    """

    n_agents: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("a graph needs at least one agent")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on agent {u}")
            if not (0 <= u < self.n_agents and 0 <= v < self.n_agents):
                raise ValueError(f"edge ({u}, {v}) out of range for N={self.n_agents}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n_agents, self.n_agents), dtype=bool)
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = True
        return adj

    @cached_property
    def closed_neighborhoods(self) -> tuple:
        adj = self.adjacency
        return tuple(
            tuple(sorted({v, *np.flatnonzero(adj[v]).tolist()}))
            for v in range(self.n_agents)
        )

    @cached_property
    def _masks(self) -> tuple:
        return tuple(sum(1 << w for w in nb) for nb in self.closed_neighborhoods)

    def neighbors(self, v: int) -> tuple:
        """Closed neighborhood of ``v`` as a sorted tuple."""
        self._check(v)
        return self.closed_neighborhoods[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v)) - 1

    def is_independent(self, members: Iterable[int]) -> bool:
        members = list(members)
        return not any(self.adjacency[u, v] for u, v in combinations(members, 2))

    def edge_list_text(self) -> str:
        return "\n".join(f"{u} {v}" for u, v in sorted(self.edges))

    def _check(self, v):
        if not 0 <= v < self.n_agents:
            raise IndexError(f"agent {v} out of range for N={self.n_agents}")


@dataclass(frozen=True)
class IndependentSet:
    members: frozenset

    def __len__(self):
        return len(self.members)


def load_graph(edge_list_text: str, n_agents: int | None = None) -> Graph:
    """Parse ``"u v"`` lines (``#`` starts a comment).

    Without ``n_agents`` the graph has ``max id + 1`` nodes.
    """
    edges = []
    for lineno, raw in enumerate(edge_list_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"line {lineno}: non-integer id in {raw!r}") from None
        if u < 0 or v < 0 or (n_agents is not None and max(u, v) >= n_agents):
            raise GraphParseError(f"line {lineno}: agent id out of range in {raw!r}")
        if u == v:
            raise GraphParseError(f"line {lineno}: self-loop on agent {u}")
        edges.append((u, v))
    if n_agents is None:
        if not edges:
            raise GraphParseError("empty edge list needs an explicit number of agents")
        n_agents = 1 + max(max(e) for e in edges)
    return Graph(n_agents, frozenset(edges))


def read_graph_file(path, n_agents: int | None = None) -> Graph:
    with open(path) as fh:
        return load_graph(fh.read(), n_agents)


def neighborhood(g: Graph, v: int) -> set:
    return set(g.neighbors(v))


# -- small graph families used by experiments and tests ---------------------

def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset(combinations(range(n), 2)))


def empty_graph(n: int) -> Graph:
    return Graph(n)


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 nodes")
    return Graph(n, frozenset((i, (i + 1) % n) for i in range(n)))


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, frozenset(outer + spokes + inner))


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi G(n, p)."""
    upper = rng.random((n, n)) < p
    return Graph(n, frozenset((u, v) for u, v in combinations(range(n), 2) if upper[u, v]))


# -- independence number ------------------------------------------------------

def greedy_independent_set(g: Graph, weights=None) -> IndependentSet:
    """Peel off the vertex of smallest neighborhood weight, then its neighborhood.

    ``weights`` defaults to all ones, in which case the neighborhood weight is
    the closed degree. Ties go to the lowest id.
    """
    q = np.ones(g.n_agents) if weights is None else np.asarray(weights, dtype=float)
    nbw = np.array([q[list(nb)].sum() for nb in g.closed_neighborhoods])
    remaining = set(range(g.n_agents))
    chosen = []
    while remaining:
        w = min(remaining, key=lambda u: (nbw[u], u))
        chosen.append(w)
        remaining -= set(g.closed_neighborhoods[w])
    return IndependentSet(frozenset(chosen))


def independence_number_exact(g: Graph, cap: int = DEFAULT_EXACT_CAP) -> int:
    return len(maximum_independent_set(g, cap))


def maximum_independent_set(g: Graph, cap: int = DEFAULT_EXACT_CAP) -> IndependentSet:
    """Exact maximum independent set by branch and bound on bitmasks.

    Raises GraphTooLargeError above ``cap`` agents; use
    :func:`greedy_independent_set` as a lower bound there.
    """
    n = g.n_agents
    if n > cap:
        raise GraphTooLargeError(
            f"graph has {n} agents > exact cap {cap}; use greedy bound or pass alpha1")
    nb = g._masks
    best = sorted(greedy_independent_set(g).members)
    best_mask = sum(1 << v for v in best)
    best_size = len(best)

    def popcount(x):
        return bin(x).count("1")

    def search(cand: int, size: int, chosen: int):
        nonlocal best_size, best_mask
        if cand == 0:
            if size > best_size:
                best_size, best_mask = size, chosen
            return
        if size + popcount(cand) <= best_size:
            return
        # vertices with no remaining neighbor can always be taken
        v_max, d_max = -1, -1
        bits = cand
        while bits:
            low = bits & -bits
            v = low.bit_length() - 1
            bits ^= low
            d = popcount(nb[v] & cand) - 1
            if d == 0:
                search(cand & ~low, size + 1, chosen | low)
                return
            if d > d_max:
                v_max, d_max = v, d
        low = 1 << v_max
        search(cand & ~nb[v_max], size + 1, chosen | low)
        search(cand & ~low, size, chosen)

    search((1 << n) - 1, 0, 0)
    return IndependentSet(frozenset(v for v in range(n) if best_mask >> v & 1))


def independence_number_bruteforce(g: Graph) -> int:
    """Exhaustive check over all 2^N subsets (test oracle, small N only)."""
    n = g.n_agents
    nb = g._masks
    best = 0
    for mask in range(1 << n):
        ok = True
        bits = mask
        while bits:
            low = bits & -bits
            v = low.bit_length() - 1
            if (nb[v] & ~low) & mask:
                ok = False
                break
            bits ^= low
        if ok:
            best = max(best, bin(mask).count("1"))
    return best


# -- weight sums bounded by the independence number ------------------------

def weight_ratio_sum(g: Graph, q) -> float:
    """Sum over agents of q(v) / Q(v) with Q(v) the weight of N(v).

    Agents with q(v) = 0 contribute nothing.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (g.n_agents,) or np.any(q < 0):
        raise ValueError("q must be a nonnegative vector with one entry per agent")
    total = 0.0
    for v, nb in enumerate(g.closed_neighborhoods):
        if q[v] == 0:
            continue
        big_q = q[list(nb)].sum()
        assert big_q > 0
        total += q[v] / big_q
    return total


def observation_ratio_sum(g: Graph, p) -> float:
    """Sum over agents of p(v) / (1 - prod_{w in N(v)} (1 - p(w))), 0/0 terms dropped."""
    p = np.asarray(p, dtype=float)
    if p.shape != (g.n_agents,) or np.any((p < 0) | (p > 1)):
        raise ValueError("p must be a probability vector with one entry per agent")
    total = 0.0
    for v, nb in enumerate(g.closed_neighborhoods):
        if p[v] == 0:
            continue
        with np.errstate(divide="ignore"):
            obs = -math.expm1(float(np.log1p(-p[list(nb)]).sum()))
        total += p[v] / obs
    return total


def observation_ratio_bound(alpha1: int, p) -> float:
    return (alpha1 + float(np.sum(p))) / (1.0 - math.exp(-1.0))
