import numpy as np
import pytest
from hypothesis import given, strategies as st

from rumorlab.dynamics import (DEFAULT_SEED, DivergenceError, PartisanState, PrevalenceState,
                               aggregate, derivatives, integrate, integrate_partisan,
                               partisan_derivatives)
from rumorlab.model import ModelParams
from rumorlab.steady import partisan_steady_prevalence, steady_prevalence

rate = st.floats(0.0, 1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        PrevalenceState(0.1, 0.7, 0.5)
    with pytest.raises(ValueError):
        PrevalenceState(-0.1, 0.0, 0.0)
    with pytest.raises(ValueError):
        PrevalenceState(float("nan"), 0.0, 0.0)


def test_zero_state_is_fixed():
    assert derivatives(PrevalenceState(0, 0, 0), ModelParams(), 0.3, 0.6) == (0.0, 0.0, 0.0)


def test_rates_must_be_probabilities():
    with pytest.raises(ValueError):
        derivatives(DEFAULT_SEED, ModelParams(), 1.5, 0.2)


def test_steady_state_has_zero_derivative():
    p = ModelParams(k=1, nu=0.2, delta=0.1, beta=0.6)
    ss = steady_prevalence(0.2, 0.5, p)
    assert max(map(abs, derivatives(ss.state, p, 0.2, 0.5))) < 1e-15


@given(st.floats(0.05, 0.95), rate, rate, st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.floats(0.0, 1.0))
def test_group_one_informed_share_ignores_rates(beta, l, h, a, b, c):
    # the informed share of group 1 evolves identically for any (l, h)
    s = PrevalenceState(a, b * (1 - c), c * (1 - b) * 0.5)
    p = ModelParams(beta=beta)
    d1 = derivatives(s, p, l, h)
    d2 = derivatives(s, p, 0.0, 0.0)
    assert d1[0] == d2[0]
    assert d1[1] + d1[2] == pytest.approx(d2[1] + d2[2], abs=1e-15)


def test_integration_reaches_closed_form():
    p = ModelParams(k=1, nu=0.2, delta=0.1, beta=0.6)
    traj = integrate(DEFAULT_SEED, p, 0.2, 0.5, horizon=3000)
    assert traj.converged
    ss = steady_prevalence(0.2, 0.5, p)
    rho0, rho1, iota = aggregate(traj.final)
    assert rho0 == pytest.approx(ss.rho0, abs=1e-7)
    assert rho1 == pytest.approx(ss.rho1, abs=1e-7)
    assert iota == pytest.approx(0.5, abs=1e-7)
    assert traj.t[-1] < 3000


def test_integration_bounds_and_rejects_big_steps():
    p = ModelParams()
    traj = integrate(DEFAULT_SEED, p, 0.1, 0.4, horizon=50, dt=1.0, record_every=5)
    assert np.all(traj.states >= 0) and np.all(traj.states <= 1)
    assert traj.t[-1] == pytest.approx(50.0)
    with pytest.raises(ValueError):
        integrate(DEFAULT_SEED, p, 0.1, 0.4, dt=10.0)


def test_subcritical_dies_out():
    p = ModelParams(k=2, nu=0.04, delta=0.1)
    traj = integrate(DEFAULT_SEED, p, 0.0, 0.0, horizon=3000)
    assert max(traj.states[-1]) < 1e-8


def test_partisan_reduces_to_baseline_at_zero_gamma():
    p = ModelParams(beta=0.7)
    s = PrevalenceState(0.3, 0.2, 0.1)
    ps = PartisanState(0.3, 0.3, 0.2, 0.1)
    base = derivatives(s, p, 0.2, 0.5)
    part = partisan_derivatives(ps, p, 0.2, 0.5)
    assert part[0] == pytest.approx(base[0])
    assert part[2] == pytest.approx(base[1])
    assert part[3] == pytest.approx(base[2])


def test_partisan_integration_matches_closed_form():
    p = ModelParams(beta=0.6, gamma=0.3)
    s0 = PartisanState(0.01, 0.01, 0.005, 0.005)
    traj = integrate_partisan(s0, p, 0.2, 0.5, horizon=4000)
    ss = partisan_steady_prevalence(0.2, 0.5, p)
    rho0, rho1, _ = aggregate(traj.final, p.gamma)
    assert rho0 == pytest.approx(ss.rho0, abs=1e-6)
    assert rho1 == pytest.approx(ss.rho1, abs=1e-6)
    np.testing.assert_allclose(traj.final.as_array(), ss.state.as_array(), atol=1e-6)


def test_divergence_guard():
    from rumorlab.dynamics import _project
    with pytest.raises(DivergenceError):
        _project((0.5, 1.2, 0.0), (1, 2))
