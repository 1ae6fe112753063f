import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onoff_sensing.channel import (ChannelModel, ChannelRealization, observe,
                                   sample_realization, state_at, transition_prob)
from onoff_sensing.schedules import uniform_schedule
from onoff_sensing.types import SampleSchedule


def test_model_utilization():
    m = ChannelModel.exponential(mean_off=2.0, mean_on=1.0)
    assert m.theta0 == pytest.approx(0.5)
    assert m.theta1 == pytest.approx(1.0)
    assert m.u == pytest.approx(m.theta0 / (m.theta0 + m.theta1))
    assert m.u == pytest.approx(1 / 3)
    g = ChannelModel.gamma(mean_off=20.0, mean_on=10.0, shape_off=2, shape_on=2)
    assert g.lambda0 == pytest.approx(10.0)
    assert g.u == pytest.approx(1 / 3)


@pytest.mark.parametrize("kwargs", [
    dict(kind="exponential", theta0=0.0, theta1=1.0),
    dict(kind="exponential", theta0=1.0, theta1=-1.0),
    dict(kind="gamma", k0=2, k1=2, lambda0=1, lambda1=float("nan")),
    dict(kind="weibull", theta0=1.0, theta1=1.0),
])
def test_model_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        ChannelModel(**kwargs)


def test_realization_determinism():
    m = ChannelModel.exponential(2.0, 1.0)
    a = sample_realization(m, 500.0, seed=42)
    b = sample_realization(m, 500.0, seed=42)
    assert a.initial_state == b.initial_state
    np.testing.assert_array_equal(a.sojourns, b.sojourns)
    c = sample_realization(m, 500.0, seed=43)
    assert not np.array_equal(a.sojourns, c.sojourns)


@pytest.mark.parametrize("horizon", [0.0, -1.0, float("inf"), float("nan")])
def test_realization_rejects_bad_horizon(horizon):
    with pytest.raises(ValueError):
        sample_realization(ChannelModel.exponential(2, 1), horizon, seed=0)


@pytest.mark.parametrize("model", [
    ChannelModel.exponential(2.0, 1.0),
    ChannelModel.gamma(20.0, 10.0, 2, 2),
])
@pytest.mark.parametrize("seed", range(5))
def test_realization_covers_horizon(model, seed):
    real = sample_realization(model, 1000.0, seed)
    assert real.sojourns.sum() >= 1000.0
    assert np.all(real.sojourns > 0)
    # dropping the last sojourn must leave the horizon uncovered
    assert real.sojourns[:-1].sum() < 1000.0


@pytest.mark.parametrize("model, horizon", [
    (ChannelModel.exponential(2.0, 1.0), 5000.0),
    (ChannelModel.gamma(20.0, 10.0, 2, 2), 50000.0),
])
def test_busy_fraction_matches_utilization(model, horizon):
    fractions = [sample_realization(model, horizon, s).busy_time() / horizon for s in range(40)]
    mean = np.mean(fractions)
    sem = np.std(fractions, ddof=1) / math.sqrt(len(fractions))
    assert abs(mean - 1 / 3) < 3 * sem + 1e-3


def test_unit_grid_fraction_converges_to_u():
    model = ChannelModel.exponential(2.0, 1.0)
    grid = uniform_schedule(2000.0, 2001)
    fractions = [observe(sample_realization(model, 2000.0, s), grid).states.mean()
                 for s in range(60)]
    sem = np.std(fractions, ddof=1) / math.sqrt(len(fractions))
    assert abs(np.mean(fractions) - model.u) < 3 * sem


def test_quantized_sojourns_are_integers():
    real = sample_realization(ChannelModel.exponential(2.0, 1.0), 300.0, seed=3, quantize=True)
    np.testing.assert_array_equal(real.sojourns, np.round(real.sojourns))
    assert np.all(real.sojourns >= 1)


def test_state_at_alternation_and_boundaries():
    real = ChannelRealization(initial_state=0, sojourns=[3.0, 2.0], horizon=5.0)
    assert state_at(real, 0.0) == 0
    assert state_at(real, 2.999) == 0
    assert state_at(real, 3.0) == 1  # a transition instant belongs to the new sojourn
    assert state_at(real, 4.0) == 1
    assert state_at(real, 4.999) == 1
    assert state_at(real, 5.0) == 0  # the path ends exactly here, so the next sojourn begins
    with pytest.raises(ValueError):
        state_at(real, 5.01)
    with pytest.raises(ValueError):
        state_at(real, -0.1)


def test_realization_must_cover_horizon():
    with pytest.raises(ValueError):
        ChannelRealization(initial_state=1, sojourns=[1.0, 1.0], horizon=3.0)


def _walk_state(initial, sojourns, t):
    state, edge = initial, 0.0
    for d in sojourns:
        edge += d
        if t < edge:
            return state
        state ^= 1
    return state


def test_observe_dense_grid_matches_path_walk():
    real = sample_realization(ChannelModel.exponential(2.0, 1.0), 200.0, seed=9, quantize=True)
    sched = uniform_schedule(200.0, 201)
    trace = observe(real, sched)
    expected = [_walk_state(real.initial_state, real.sojourns, t) for t in sched.times]
    np.testing.assert_array_equal(trace.states, expected)


def test_observe_empty_and_single():
    real = sample_realization(ChannelModel.exponential(2.0, 1.0), 50.0, seed=1)
    assert len(observe(real, SampleSchedule([], 50.0))) == 0
    tr = observe(real, SampleSchedule([7.5], 50.0))
    assert tr.times.tolist() == [7.5]
    assert tr.states[0] == state_at(real, 7.5)


def test_observe_rejects_out_of_range_schedule():
    real = sample_realization(ChannelModel.exponential(2.0, 1.0), 50.0, seed=1)
    with pytest.raises(ValueError):
        observe(real, SampleSchedule([0.0, 60.0], 100.0))


def test_transition_prob_at_zero_and_infinity():
    assert transition_prob(0.5, 1 / 3, 0, 0, 0.0) == 1.0
    assert transition_prob(0.5, 1 / 3, 0, 1, 0.0) == 0.0
    assert transition_prob(0.5, 1 / 3, 1, 1, 0.0) == 1.0
    assert transition_prob(0.5, 1 / 3, 0, 1, 1e4) == pytest.approx(1 / 3, abs=1e-15)
    assert transition_prob(0.5, 1 / 3, 1, 0, 1e4) == pytest.approx(2 / 3, abs=1e-15)


def test_transition_prob_known_value():
    # u = 1/3, theta0 = 0.5, dt = 2: exponent theta0 dt / u = 3
    expected = 1 / 3 - math.exp(-3.0) / 3
    assert transition_prob(0.5, 1 / 3, 0, 1, 2.0) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.2, 1.5])
def test_transition_prob_rejects_bad_u(u):
    with pytest.raises(ValueError):
        transition_prob(0.5, u, 0, 1, 1.0)


@settings(max_examples=300, deadline=None)
@given(u=st.floats(1e-4, 1 - 1e-4), theta0=st.floats(1e-4, 1e3),
       dt=st.floats(0.0, 1e4), i=st.integers(0, 1))
def test_transition_prob_rows_are_stochastic(u, theta0, dt, i):
    p0 = transition_prob(theta0, u, i, 0, dt)
    p1 = transition_prob(theta0, u, i, 1, dt)
    assert 0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0
    assert abs(p0 + p1 - 1.0) < 1e-12
