import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coop_ftpl.actions import DecisionFamily
from coop_ftpl.agent import (AgentState, bound_value, predict, produce_k_vector,
                             tune_parameters, update)
from coop_ftpl.rng import RngStream

FAM2 = DecisionFamily.exactly(2, 1)


def mp_eta(k, m, T, alpha1, Q):
    mpmath.mp.dps = 50
    k, m, T, alpha1, Q = map(mpmath.mpf, (k, m, T, alpha1, Q))
    return mpmath.sqrt(3 * m * mpmath.log(k) / (5 * k * T * (k * alpha1 / Q + m)))


def mp_bound(k, m, T, alpha1, Q):
    mpmath.mp.dps = 50
    k, m, T, alpha1, Q = map(mpmath.mpf, (k, m, T, alpha1, Q))
    return 2 * Q * mpmath.sqrt(15 * m * k * T * mpmath.log(k) * (k * alpha1 / Q + m))


def test_predict_symmetric_frequencies():
    state = AgentState(0, FAM2, 1.0, 5, 1.0)
    s = RngStream(0, 0, 1, "prediction")
    picks = np.array([predict(state, s) for _ in range(100_000)])
    assert picks[:, 0].mean() == pytest.approx(0.5, abs=0.01)
    assert state.oracle_calls == 100_000
    assert s.draws == 2 * 100_000


def test_predict_zero_eta_ignores_estimates():
    a = AgentState(0, FAM2, 0.0, 5, 1.0, cum_loss_est=[100.0, 0.0])
    b = AgentState(0, FAM2, 0.0, 5, 1.0)
    for t in range(50):
        assert (predict(a, RngStream(1, 0, t, "prediction"))
                == predict(b, RngStream(1, 0, t, "prediction"))).all()


def test_predict_avoids_heavily_penalized_component():
    fam = DecisionFamily.exactly(4, 1)
    state = AgentState(0, fam, 1.0, 5, 1.0, cum_loss_est=[0, 0, 0, 1e4])
    s = RngStream(2, 0, 1, "prediction")
    picks = np.array([predict(state, s) for _ in range(20_000)])
    assert picks[:, 3].mean() < 0.01


def test_produce_k_vector_examples():
    s = RngStream(0, 0, 0, "resample-z")
    assert produce_k_vector(AgentState(0, FAM2, 1.0, 1, 0.7), s).tolist() == [1, 1]
    assert produce_k_vector(AgentState(0, FAM2, 1.0, 6, 0.0), s).tolist() == [6, 6]


def test_produce_k_vector_mean_and_counter():
    state = AgentState(0, FAM2, 1.0, 5, 1.0)
    z, y = RngStream(3, 0, 0, "resample-z"), RngStream(3, 0, 0, "resample-bernoulli")
    ks = np.array([produce_k_vector(state, z, bernoulli_stream=y) for _ in range(100_000)])
    assert ks[:, 0].mean() == pytest.approx(1.9375, abs=0.015)
    assert state.oracle_calls == ks.sum()


def test_update_examples():
    state = AgentState(0, FAM2, 1.0, 5, 1.0, cum_loss_est=[0.3, 0.7])
    update(state, [0.0, 0.0])
    assert state.cum_loss_est.tolist() == [0.3, 0.7]
    update(state, [1.2, 0.0])
    assert state.cum_loss_est.tolist() == pytest.approx([1.5, 0.7])
    with pytest.raises(ValueError):
        update(state, [1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 50), min_size=3, max_size=3),
       st.lists(st.floats(0, 50), min_size=3, max_size=3))
def test_update_associative(e1, e2):
    fam = DecisionFamily.exactly(3, 1)
    a = AgentState(0, fam, 1.0, 2, 1.0)
    b = AgentState(0, fam, 1.0, 2, 1.0)
    update(update(a, e1), e2)
    update(b, np.add(e1, e2))
    assert np.allclose(a.cum_loss_est, b.cum_loss_est, rtol=1e-12, atol=1e-12)


def test_tuning_example():
    res = tune_parameters(10, 2, 10 ** 4, 3, 2)
    exact = mp_eta(10, 2, 10 ** 4, 3, 2)
    assert abs(res.eta - float(exact)) / float(exact) < 1e-6
    assert res.eta == pytest.approx(1.2749e-3, rel=1e-4)
    assert res.beta == math.floor(1 / (10 * res.eta)) == 78
    assert res.beta * 10 * res.eta <= 1


def test_tuning_scaling():
    a = tune_parameters(6, 2, 1000, 2, 1.5)
    b = tune_parameters(6, 2, 4000, 2, 1.5)
    assert b.eta == pytest.approx(a.eta / 2, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 40), st.data())
def test_tuned_beta_bracket(k, data):
    m = data.draw(st.integers(1, k))
    T = data.draw(st.integers(1, 10 ** 7))
    n = data.draw(st.integers(1, 50))
    alpha1 = data.draw(st.integers(1, n))
    Q = data.draw(st.floats(0.01, n))
    res = tune_parameters(k, m, T, alpha1, Q)
    ratio = 1 / (k * res.eta)
    if ratio >= 1:
        assert not res.clamped
        assert res.beta <= ratio
        assert res.beta >= ratio / 2
    else:
        assert res.clamped and res.beta == 1


def test_tuning_rejects_k_one():
    with pytest.raises(ValueError, match="k >= 2"):
        tune_parameters(1, 1, 100, 1, 1.0)
    with pytest.raises(ValueError):
        tune_parameters(3, 4, 100, 1, 1.0)
    with pytest.raises(ValueError):
        tune_parameters(3, 1, 100, 1, 0.0)


def test_beta_clamp_logged(caplog):
    res = tune_parameters(3, 3, 1, 1, 100.0)
    assert res.beta == 1 and res.clamped
    assert "clamping" in caplog.text


def test_bound_example():
    value = bound_value(10, 2, 10 ** 4, 3, 2)
    assert value == pytest.approx(float(mp_bound(10, 2, 10 ** 4, 3, 2)), rel=1e-12)
    assert value == pytest.approx(43_350, rel=1e-3)


def test_bound_scaling_in_q():
    base = bound_value(10, 2, 1000, 3, 1.0)
    scaled = bound_value(10, 2, 1000, 3, 4.0)
    expected = 4 * math.sqrt((10 * 3 / 4 + 2) / (10 * 3 + 2))
    assert scaled / base == pytest.approx(expected, rel=1e-12)
    assert scaled / base < 4


def test_bound_full_support_limit():
    # with m = k and alpha1/Q -> 0 the bound tends to 2 Q k^1.5 sqrt(15 T log k)
    k, T, Q = 6, 500, 1e9
    value = bound_value(k, k, T, 1, Q)
    assert value == pytest.approx(2 * Q * k ** 1.5 * math.sqrt(15 * T * math.log(k)), rel=1e-6)


def test_agent_state_validation():
    with pytest.raises(ValueError):
        AgentState(0, FAM2, -1.0, 2, 0.5)
    with pytest.raises(ValueError):
        AgentState(0, FAM2, 1.0, 0, 0.5)
    with pytest.raises(ValueError):
        AgentState(0, FAM2, 1.0, 2, 1.5)
