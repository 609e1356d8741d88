import numpy as np
import pytest

from conftest import LinearModel
from robnav.filtering import (
    FilterDivergence,
    FilterEstimate,
    GammaInfeasible,
    RobustConfig,
    RobustFilter,
    check_feasibility,
    cost_j,
    propagate,
    select_gamma,
    update_ehf,
    update_ekf,
)


def _est(x, P):
    return FilterEstimate(np.atleast_1d(np.asarray(x, float)), np.atleast_2d(np.asarray(P, float)))


def test_propagate_random_walk(scalar_model):
    pred = propagate(scalar_model, _est(0.0, 1.0), None, 1.0)
    assert pred.estimate.P[0, 0] == pytest.approx(1.04)
    assert pred.estimate.k == 1


def test_propagate_noiseless_identity():
    model = LinearModel(np.eye(3), np.eye(3), np.zeros((3, 3)), np.eye(3), np.eye(3))
    P = np.diag([1.0, 2.0, 3.0])
    pred = propagate(model, _est(np.ones(3), P), None, 0.1)
    np.testing.assert_array_equal(pred.estimate.P, P)


def test_propagate_rejects_bad_dt(scalar_model):
    with pytest.raises(ValueError):
        propagate(scalar_model, _est(0.0, 1.0), None, 0.0)


def test_propagate_nonfinite_state():
    model = LinearModel(np.inf, 1.0, 0.0, 1.0, 1.0)
    with pytest.raises(FilterDivergence, match="filter divergence"):
        propagate(model, _est(1.0, 1.0), None, 1.0)


def test_ekf_scalar(scalar_model):
    corr = update_ekf(scalar_model, _est(0.0, 1.0), 2.0)
    assert corr.K[0, 0] == pytest.approx(0.5)
    assert corr.estimate.P[0, 0] == pytest.approx(0.5)
    assert corr.estimate.x[0] == pytest.approx(1.0)


def test_ekf_uninformative_measurement():
    model = LinearModel(1.0, 1.0, 0.0, 0.0, 1.0)
    corr = update_ekf(model, _est(3.0, 2.0), 10.0)
    assert corr.estimate.x[0] == 3.0
    assert corr.estimate.P[0, 0] == 2.0


def test_ekf_nonfinite_innovation(scalar_model):
    with pytest.raises(FilterDivergence, match="filter divergence"):
        update_ekf(scalar_model, _est(0.0, 1.0), np.nan)


def test_ehf_scalar(scalar_model):
    corr = update_ehf(scalar_model, _est(0.0, 1.0), 2.0, gamma=10.0, L=np.eye(1))
    assert corr.estimate.P[0, 0] == pytest.approx(1 / 1.9)
    assert corr.K[0, 0] == pytest.approx(1 / 1.9)


def test_ehf_gain_exceeds_ekf(scalar_model):
    k_ehf = update_ehf(scalar_model, _est(0.0, 1.0), 2.0, gamma=10.0).K[0, 0]
    k_ekf = update_ekf(scalar_model, _est(0.0, 1.0), 2.0).K[0, 0]
    assert k_ehf > k_ekf == pytest.approx(0.5)


def test_ehf_infinite_gamma_is_ekf():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(4, 4))
    model = LinearModel(np.eye(4), np.eye(4), np.eye(4), rng.normal(size=(3, 4)), np.diag([1.0, 2.0, 0.5]))
    est = _est(rng.normal(size=4), A @ A.T + np.eye(4))
    z = rng.normal(size=3)
    a = update_ehf(model, est, z, gamma=np.inf)
    b = update_ekf(model, est, z)
    np.testing.assert_allclose(a.estimate.P, b.estimate.P, atol=1e-12)
    np.testing.assert_allclose(a.estimate.x, b.estimate.x, atol=1e-12)


def test_ehf_infeasible_gamma(scalar_model):
    with pytest.raises(GammaInfeasible, match="gamma infeasible at epoch 0"):
        update_ehf(scalar_model, _est(0.0, 1.0), 0.0, gamma=0.4)


@pytest.mark.parametrize("gamma, ok", [(0.4, False), (10.0, True), (0.5 + 1e-9, True)])
def test_feasibility_scalar(gamma, ok):
    one = np.eye(1)
    assert check_feasibility(one, one, one, one, gamma) is ok


def test_feasibility_zero_l():
    one = np.eye(1)
    assert check_feasibility(one, one, one, np.zeros((1, 1)), 1e-9)


def test_select_gamma_scalar():
    one = np.eye(1)
    g = select_gamma(one, one, one, one, safety=1.5)
    assert g == pytest.approx(0.75, rel=1e-9)
    assert check_feasibility(one, one, one, one, g)


def test_select_gamma_zero_l_hits_bracket():
    one = np.eye(1)
    assert select_gamma(one, one, one, np.zeros((1, 1)), safety=2.0) == pytest.approx(2e-6)


def test_select_gamma_exhausted():
    one = np.eye(1)
    with pytest.raises(GammaInfeasible, match="feasibility bracket exhausted"):
        select_gamma(one, one, one, 1e6 * one, bracket=(1e-6, 1e-3))


def test_cost_j_zero_errors():
    assert cost_j([np.zeros(1)] * 3, [np.ones(1)] * 3, [np.ones(1)] * 3, np.ones(1), np.eye(1), np.eye(1), np.eye(1)) == 0.0


def test_cost_j_single_epoch():
    assert cost_j([np.ones(1)], [], [], np.ones(1), np.eye(1), np.eye(1), np.eye(1), L=np.eye(1)) == 1.0


def test_cost_j_degenerate():
    with pytest.raises(ValueError, match="degenerate cost"):
        cost_j([np.ones(1)], [], [], np.zeros(1), np.eye(1), np.eye(1), np.eye(1))


def test_ehf_cost_bounded_by_gamma():
    # the H-infinity bound caps the worst-case energy ratio; random disturbances are well below it
    rng = np.random.default_rng(8)
    model = LinearModel(1.0, 1.0, 0.04, 1.0, 1.0)
    filt = RobustFilter(model, _est(0.0, 1.0), RobustConfig(mode="ehf", gamma=5.0))
    x, x0 = 0.7, 0.7
    errors, ws, vs = [], [], []
    for _ in range(100):
        w = rng.normal(scale=0.2)
        v = rng.normal()
        x += w
        filt.propagate(None, 1.0)
        filt.update(x + v)
        errors.append(np.atleast_1d(x - filt.estimate.x[0]))
        ws.append(np.atleast_1d(w))
        vs.append(np.atleast_1d(v))
    J = cost_j(errors, ws, vs, np.atleast_1d(x0), np.eye(1), np.atleast_2d(0.04), np.eye(1))
    assert J < filt.gamma


def test_robust_filter_fixed_policy_doubles():
    model = LinearModel(1.0, 1.0, 0.0, 1.0, 1.0)
    filt = RobustFilter(model, _est(0.0, 1.0), RobustConfig(gamma=0.4))
    filt.update(0.0)
    assert filt.gamma == pytest.approx(0.8)
    assert not filt.last_feasible
    assert filt.events and "doubled" in filt.events[0][1]


def test_robust_filter_epoch_policy_reselects():
    model = LinearModel(1.0, 1.0, 0.5, 1.0, 1.0)
    filt = RobustFilter(model, _est(0.0, 1.0), RobustConfig(safety=2.0, gamma_policy="epoch"))
    filt.update(0.0)
    g1 = filt.gamma
    filt.propagate(None, 1.0)
    filt.update(0.0)
    assert g1 == pytest.approx(1.0, rel=1e-9)
    assert filt.gamma != g1


@pytest.mark.parametrize(
    "kwargs",
    [{"mode": "ukf"}, {"gamma": -1.0}, {"safety": 1.0}, {"gamma_policy": "sometimes"}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RobustConfig(**kwargs)
