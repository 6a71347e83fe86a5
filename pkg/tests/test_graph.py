from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coop_ftpl.graph import (Graph, GraphParseError, GraphTooLargeError, complete_graph,
                             cycle_graph, empty_graph, greedy_independent_set,
                             independence_number_bruteforce, independence_number_exact,
                             load_graph, maximum_independent_set, neighborhood,
                             observation_ratio_bound, observation_ratio_sum, path_graph,
                             petersen_graph, random_graph, weight_ratio_sum)


def test_load_path():
    g = load_graph("0 1\n1 2")
    assert g.n_agents == 3
    assert g.edges == {(0, 1), (1, 2)}


def test_load_empty_with_declared_size():
    g = load_graph("", n_agents=1)
    assert g.n_agents == 1 and not g.edges


def test_load_deduplicates_reversed_edges():
    g = load_graph("0 1\n1 0\n# comment\n\n0 1  # again")
    assert g.edges == {(0, 1)}


@pytest.mark.parametrize("text, line", [
    ("0 1\n1 x", 2), ("0 1 2", 1), ("0 0", 1), ("0 5", 1), ("-1 2", 1),
])
def test_load_errors_name_line(text, line):
    with pytest.raises(GraphParseError, match=f"line {line}"):
        load_graph(text, n_agents=3)


def test_empty_text_needs_size():
    with pytest.raises(GraphParseError):
        load_graph("# nothing")


def test_adjacency_symmetric_without_loops():
    g = random_graph(12, 0.4, np.random.default_rng(0))
    assert (g.adjacency == g.adjacency.T).all()
    assert not g.adjacency.diagonal().any()


def test_neighborhoods():
    g = path_graph(3)
    assert neighborhood(g, 1) == {0, 1, 2}
    assert neighborhood(g, 0) == {0, 1}
    assert neighborhood(empty_graph(4), 2) == {2}
    with pytest.raises(IndexError):
        g.neighbors(3)


@pytest.mark.parametrize("g, alpha", [
    (complete_graph(5), 1), (path_graph(3), 2), (cycle_graph(5), 2),
    (empty_graph(4), 4), (petersen_graph(), 4), (Graph(1), 1),
])
def test_independence_number_known(g, alpha):
    assert independence_number_bruteforce(g) == alpha
    assert independence_number_exact(g) == alpha
    mis = maximum_independent_set(g)
    assert len(mis) == alpha and g.is_independent(mis.members)


def test_exact_matches_bruteforce_on_random_graphs():
    rng = np.random.default_rng(1)
    for _ in range(60):
        g = random_graph(int(rng.integers(1, 14)), float(rng.uniform(0.1, 0.9)), rng)
        assert independence_number_exact(g) == independence_number_bruteforce(g)


def test_exact_cap():
    g = empty_graph(25)
    with pytest.raises(GraphTooLargeError, match="greedy"):
        independence_number_exact(g)
    assert independence_number_exact(g, cap=25) == 25


def test_exact_at_default_cap_is_fast():
    g = random_graph(24, 0.3, np.random.default_rng(2))
    assert independence_number_exact(g) >= len(greedy_independent_set(g))


def test_greedy_examples():
    assert len(greedy_independent_set(complete_graph(5))) == 1
    assert greedy_independent_set(empty_graph(4)).members == {0, 1, 2, 3}
    pet = greedy_independent_set(petersen_graph())
    assert petersen_graph().is_independent(pet.members)
    assert 3 <= len(pet) <= 4


def test_greedy_valid_and_below_alpha():
    rng = np.random.default_rng(3)
    for _ in range(100):
        g = random_graph(int(rng.integers(1, 13)), float(rng.uniform(0.05, 0.9)), rng)
        s = greedy_independent_set(g)
        assert g.is_independent(s.members)
        assert len(s) <= independence_number_exact(g)


def test_weight_ratio_examples():
    assert weight_ratio_sum(complete_graph(3), [1, 1, 1]) == pytest.approx(1.0)
    assert weight_ratio_sum(empty_graph(3), [1, 1, 1]) == pytest.approx(3.0)
    # zero weights are skipped even when the whole neighborhood is zero
    assert weight_ratio_sum(path_graph(3), [0, 0, 1]) == pytest.approx(1.0)


def test_weight_ratio_c5():
    rng = np.random.default_rng(4)
    g = cycle_graph(5)
    alpha = independence_number_bruteforce(g)
    for _ in range(50):
        q = 1 - rng.random(5)  # (0, 1]
        assert weight_ratio_sum(g, q) <= alpha + 1e-12


def test_weight_ratio_is_bounded_by_peeling_steps():
    # the weighted peeling picks a set whose size already bounds the sum
    rng = np.random.default_rng(5)
    for _ in range(100):
        g = random_graph(int(rng.integers(1, 15)), float(rng.uniform(0.05, 0.9)), rng)
        q = 1 - rng.random(g.n_agents)
        steps = len(greedy_independent_set(g, weights=q))
        assert weight_ratio_sum(g, q) <= steps + 1e-12


def test_observation_ratio_examples():
    # single isolated agent: p / p = 1
    assert observation_ratio_sum(Graph(1), [0.3]) == pytest.approx(1.0)
    assert observation_ratio_sum(empty_graph(3), [0, 0, 0]) == 0.0
    assert observation_ratio_bound(1, [0.5]) == pytest.approx(1.5 / (1 - np.exp(-1)))


graphs = st.integers(1, 16).flatmap(lambda n: st.tuples(
    st.just(n),
    st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(
        lambda e: e[0] != e[1]), max_size=n * (n - 1) // 2),
))


@settings(max_examples=200, deadline=None)
@given(graphs, st.data())
def test_weight_ratio_below_independence_number(gdata, data):
    n, edges = gdata
    g = Graph(n, frozenset(edges))
    q = np.array(data.draw(st.lists(st.floats(1e-3, 1.0), min_size=n, max_size=n)))
    assert weight_ratio_sum(g, q) <= independence_number_exact(g) * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(graphs, st.data())
def test_observation_ratio_bound_holds(gdata, data):
    n, edges = gdata
    g = Graph(n, frozenset(edges))
    p = np.array(data.draw(st.lists(
        st.one_of(st.just(0.0), st.floats(0.0, 1.0)), min_size=n, max_size=n)))
    alpha = independence_number_exact(g)
    assert observation_ratio_sum(g, p) <= observation_ratio_bound(alpha, p) * (1 + 1e-12)


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(0)
    with pytest.raises(ValueError):
        Graph(2, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        Graph(2, frozenset({(0, 2)}))
    assert complete_graph(4).edges == set(combinations(range(4), 2))
