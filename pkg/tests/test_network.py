from types import SimpleNamespace

import numpy as np
import pytest

from coop_ftpl.actions import DecisionFamily
from coop_ftpl.graph import Graph, complete_graph, cycle_graph, empty_graph
from coop_ftpl.network import (ActivationModel, LossModel, compute_network_regret,
                               make_lower_bound_instance, no_cooperation_baseline,
                               resolve_parameters, run_episode)
from coop_ftpl.resampling import SHARED, estimate_loss

from conftest import bernoulli_config


def test_nobody_active_means_nothing_happens():
    cfg = bernoulli_config(complete_graph(3), 4, 2, [0.5] * 4, 0.0, 50)
    tr = run_episode(cfg, 0)
    assert tr.final_regret == 0 and tr.cum_loss[-1] == 0
    assert tr.oracle_calls_total[-1] == 0
    assert not tr.activations.any()


def test_single_agent_zero_losses():
    cfg = bernoulli_config(Graph(1), 3, 1, [0.0] * 3, 1.0, 100)
    tr = run_episode(cfg, 4)
    assert np.all(tr.regret == 0)
    assert np.all(tr.final_cum_loss_est == 0)


def test_determinism(clique_cfg):
    a, b = run_episode(clique_cfg, 11), run_episode(clique_cfg, 11)
    assert np.array_equal(a.regret, b.regret)
    assert np.array_equal(a.oracle_calls_total, b.oracle_calls_total)
    assert np.array_equal(a.final_cum_loss_est, b.final_cum_loss_est)
    c = run_episode(clique_cfg, 12)
    assert not np.array_equal(a.final_cum_loss_est, c.final_cum_loss_est)


def test_losses_fixed_before_play(clique_cfg):
    # with the loss seed pinned, learner randomness cannot move the loss sequence
    cfg = clique_cfg.replace(loss_seed=99)
    a = run_episode(cfg, 1)
    b = run_episode(cfg.replace(eta=0.5, beta=3), 2)
    assert np.array_equal(a.losses, b.losses)
    assert np.array_equal(a.losses, cfg.loss.materialize(cfg.horizon, 99))


def test_feedback_locality_reconstruction():
    g = Graph(5, [(0, 1), (1, 2), (2, 3)])
    cfg = bernoulli_config(g, 4, 2, [0.2, 0.4, 0.6, 0.8], [0.9, 0.5, 0.3, 0.7, 0.0], 60)
    tr = run_episode(cfg, 3, record_steps=True)
    k = cfg.family.k
    shadow = np.zeros((g.n_agents, k))
    for step in tr.steps:
        for v, msgs in step.feedback.items():
            observed, flags = np.full(k, np.nan), np.zeros(k, dtype=bool)
            for w, vec in msgs:
                assert v in g.closed_neighborhoods[w]
                played = step.predictions[w].astype(bool)
                observed[played] = vec[played]
                flags |= played
            ks = [K for (w, dest), K in step.k_exchange.items() if dest == v]
            shadow[v] += estimate_loss(observed, flags, ks)
        for (w, v) in step.k_exchange:
            assert w in g.closed_neighborhoods[v]
    assert np.allclose(shadow, tr.final_cum_loss_est, rtol=0, atol=1e-9)
    assert np.all(shadow[4] == 0)


@pytest.mark.parametrize("mode", ["independent", SHARED])
def test_oracle_budget(clique_cfg, mode):
    cfg = clique_cfg.replace(mode=mode, beta=20, eta=0.05)
    tr = run_episode(cfg, 0)
    k, beta = cfg.family.k, tr.params.beta
    limit = 1 + k * beta if mode == "independent" else 1 + beta
    assert tr.max_round_oracle_calls.max() <= limit
    assert np.all(np.diff(tr.oracle_calls_total) >= 0)
    assert tr.oracle_calls_total[-1] == tr.oracle_calls_per_agent.sum()


@pytest.mark.parametrize("graph, alpha1", [(complete_graph(5), 1), (empty_graph(4), 4),
                                           (cycle_graph(5), 2)])
def test_lower_bound_instance(graph, alpha1):
    cfg = make_lower_bound_instance(graph, 0.8, 0.1, k=4, m=2, horizon=200)
    members = np.flatnonzero(cfg.activation.q)
    assert len(members) == alpha1 == cfg.alpha1
    assert graph.is_independent(members)
    assert cfg.loss.means == (0.4, 0.4, 0.5, 0.5)
    tr = run_episode(cfg, 0)
    assert not tr.activations[:, cfg.activation.q == 0].any()
    assert resolve_parameters(cfg).Q == pytest.approx(0.8 * alpha1)


def test_lower_bound_validation():
    with pytest.raises(ValueError):
        make_lower_bound_instance(cycle_graph(5), 0.5, 0.5, 3, 1)
    with pytest.raises(ValueError):
        make_lower_bound_instance(cycle_graph(5), 0.0, 0.1, 3, 1)


def test_no_cooperation_single_agent_identical(single_agent_cfg):
    a = run_episode(single_agent_cfg, 5)
    b = run_episode(no_cooperation_baseline(single_agent_cfg), 5)
    assert np.array_equal(a.regret, b.regret)


def test_no_cooperation_edgeless_identical():
    cfg = bernoulli_config(empty_graph(3), 4, 1, [0.3, 0.5, 0.5, 0.5], 0.6, 80)
    a, b = run_episode(cfg, 2), run_episode(no_cooperation_baseline(cfg), 2)
    assert np.array_equal(a.final_cum_loss_est, b.final_cum_loss_est)
    assert np.array_equal(a.regret, b.regret)


def test_no_cooperation_sees_less():
    cfg = bernoulli_config(complete_graph(4), 4, 1, [0.3, 0.5, 0.5, 0.5], 0.3, 200)
    coop = run_episode(cfg, 1, record_steps=True)
    solo = run_episode(no_cooperation_baseline(cfg), 1, record_steps=True)
    informed_coop = sum(len(s.feedback) for s in coop.steps)
    informed_solo = sum(len(s.feedback) for s in solo.steps)
    assert informed_solo < informed_coop
    for s in solo.steps:
        assert set(s.feedback) == set(s.active_set)
        assert all(w == v for (w, v) in s.k_exchange)


def test_compute_network_regret_by_hand():
    fam = DecisionFamily.exactly(2, 1)
    trace = SimpleNamespace(cum_loss=np.array([1.0, 2.0, 3.0]),
                            weighted_loss=np.array([[1.0, 0.0], [1.0, 1.0], [2.0, 1.0]]))
    assert compute_network_regret(trace, fam).tolist() == [1.0, 1.0, 2.0]


def test_regret_uses_activation_weights():
    cfg = bernoulli_config(complete_graph(3), 3, 1, [0.2, 0.5, 0.9], 0.7, 40)
    tr = run_episode(cfg, 8)
    counts = tr.activations.sum(axis=1)
    assert np.allclose(tr.weighted_loss[-1], (counts[:, None] * tr.losses).sum(axis=0))
    assert np.allclose(tr.regret, compute_network_regret(tr, cfg.family))


def test_piecewise_loss_model():
    lm = LossModel("piecewise", segments=((1.0, 0.0), (0.0, 1.0)))
    mat = lm.materialize(10, 0)
    assert mat[:5].tolist() == [[1.0, 0.0]] * 5
    assert mat[5:].tolist() == [[0.0, 1.0]] * 5
    with pytest.raises(ValueError):
        LossModel("piecewise", segments=((0.5,), (0.5, 0.5)))


def test_file_loss_model():
    mat = np.array([[0.0, 1.0], [0.25, 0.75], [1.0, 0.0]])
    lm = LossModel("file", matrix=mat)
    assert np.array_equal(lm.materialize(2, 7), mat[:2])
    with pytest.raises(ValueError):
        lm.materialize(4, 0)
    with pytest.raises(ValueError):
        LossModel("file", matrix=[[1.5, 0.0]])


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ActivationModel([0.5, 1.2])
    with pytest.raises(ValueError):
        LossModel("iid_bernoulli", means=(0.5, -0.1))
    with pytest.raises(ValueError):
        LossModel("gaussian")


def test_resolve_parameters_tuned(clique_cfg):
    p = resolve_parameters(clique_cfg)
    assert p.alpha1 == 1 and p.Q == pytest.approx(3.0)
    assert p.tuned and p.beta == int(np.floor(1 / (8 * p.eta)))
    fixed = resolve_parameters(clique_cfg.replace(eta=0.1, beta=4))
    assert (fixed.eta, fixed.beta, fixed.tuned) == (0.1, 4, False)
