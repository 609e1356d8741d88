import numpy as np
import pytest

from robnav.protection import (
    ErrorZonotope,
    PlConfig,
    ZonotopeBounder,
    initial_error_zonotope,
    noise_zonotopes,
    propagate_error_zonotope,
    protection_level,
    update_error_zonotope,
)
from robnav.nav.params import InitialSigma
from robnav.zonotope import Zonotope


def test_noise_zonotopes_three_sigma():
    W, V = noise_zonotopes(np.diag([0.01, 0.04]), np.diag([0.25]), 3.0)
    np.testing.assert_allclose(W.generators, np.diag([0.3, 0.6]))
    np.testing.assert_allclose(V.generators, [[1.5]])
    np.testing.assert_array_equal(W.center, 0.0)


def test_noise_zonotope_zero_is_point():
    W, _ = noise_zonotopes(np.zeros((3, 3)), np.eye(1), 3.0)
    assert np.all(W.radius() == 0.0)


def test_noise_zonotope_hull_random():
    rng = np.random.default_rng(0)
    sig = rng.uniform(0.01, 2.0, 6)
    W, _ = noise_zonotopes(np.diag(sig**2), np.eye(1), 3.0)
    np.testing.assert_allclose(W.radius(), 3 * sig)


def test_noise_zonotope_negative_variance():
    with pytest.raises(ValueError):
        noise_zonotopes(np.diag([-1.0, 1.0]), np.eye(1), 3.0)


def test_propagate_identity_point_noise():
    E = ErrorZonotope(np.array([[1.0, 2.0], [0.5, -1.0]]))
    out = propagate_error_zonotope(E, np.eye(2), np.eye(2), Zonotope(np.zeros(2), np.zeros((2, 2))), q=10)
    np.testing.assert_allclose(out.radius(), E.radius())


def test_propagate_identity_adds_half_widths():
    E = ErrorZonotope.diagonal([1.0, 2.0, 3.0])
    W = Zonotope(np.zeros(3), np.diag([0.1, 0.2, 0.3]))
    out = propagate_error_zonotope(E, np.eye(3), np.eye(3), W, q=6)
    np.testing.assert_allclose(out.radius(), [1.1, 2.2, 3.3])


def test_propagate_identity_never_shrinks():
    rng = np.random.default_rng(1)
    E = ErrorZonotope(rng.normal(size=(4, 8)))
    for _ in range(20):
        W = Zonotope(np.zeros(4), rng.normal(size=(4, 3)))
        out = propagate_error_zonotope(E, np.eye(4), np.eye(4), W, q=10)
        assert np.all(out.radius() >= E.radius() - 1e-12)
        E = out


def test_update_zero_gain():
    E = ErrorZonotope(np.array([[1.0, 0.5]]))
    out = update_error_zonotope(E, np.zeros((1, 1)), np.eye(1), Zonotope([0.0], [[1.0]]), q=5)
    np.testing.assert_allclose(out.radius(), E.radius())


def test_update_scalar():
    out = update_error_zonotope(ErrorZonotope([[2.0]]), np.array([[0.5]]), np.eye(1), Zonotope([0.0], [[1.0]]), q=5)
    np.testing.assert_allclose(out.E, [[1.0, 0.5]])
    assert out.radius()[0] == pytest.approx(1.5)


def test_scalar_monte_carlo_containment():
    # x+ = x + w, z = x + v with bounded noises; error follows the filter's own linear dynamics
    rng = np.random.default_rng(2)
    cfg = PlConfig(q=20, n_sigma_z=3.0)
    sq, sr = 0.2, 1.0
    bounder = ZonotopeBounder(ErrorZonotope.diagonal([1.0]), cfg)
    errors = rng.uniform(-1.0, 1.0, 2000)
    P = 1.0
    for _ in range(100):
        F = np.eye(1)
        P = P + sq**2
        bounder.propagate(F, np.eye(1), np.diag([sq**2]))
        errors = errors + rng.uniform(-3 * sq, 3 * sq, errors.size)
        assert np.all(np.abs(errors) <= bounder.pl((0,))[0] + 1e-12)
        K = P / (P + sr**2)
        P = (1 - K) * P
        bounder.update(np.array([[K]]), np.eye(1), np.diag([sr**2]))
        errors = (1 - K) * errors - K * rng.uniform(-3 * sr, 3 * sr, errors.size)
        assert np.all(np.abs(errors) <= bounder.pl((0,))[0] + 1e-12)


def test_protection_level_diagonal():
    pl = protection_level(ErrorZonotope.diagonal([1.0, 2.0, 3.0]))
    assert [(iv.lo, iv.hi) for iv in pl] == [(-1, 1), (-2, 2), (-3, 3)]
    sel = protection_level(ErrorZonotope.diagonal([1.0, 2.0, 3.0]), selector=[2])
    assert (sel[0].lo, sel[0].hi) == (-3, 3)


def test_initial_position_bound():
    cfg = PlConfig()
    E0 = initial_error_zonotope(InitialSigma().main_vector(), cfg)
    pl = protection_level(E0, (0, 1, 2))
    assert [iv.hi for iv in pl] == [10.0, 10.0, 20.0]
    assert E0.radius()[3] == pytest.approx(3 * InitialSigma().vel)


def test_bounder_center_zero_and_order_cap():
    rng = np.random.default_rng(3)
    n, q = 5, 12
    bounder = ZonotopeBounder(ErrorZonotope.diagonal(np.ones(n)), PlConfig(q=q))
    for k in range(30):
        F = np.eye(n) + 0.05 * rng.normal(size=(n, n))
        bounder.propagate(F, np.eye(n), np.eye(n) * 0.01)
        assert bounder.E.order <= q
        if k % 3 == 0:
            K = 0.2 * rng.normal(size=(n, 2))
            bounder.update(K, rng.normal(size=(2, n)), np.eye(2))
            assert bounder.E.order <= q
        np.testing.assert_array_equal(bounder.E.center, 0.0)


def test_bounder_output_follows_last_step():
    bounder = ZonotopeBounder(ErrorZonotope.diagonal([2.0]), PlConfig(q=4))
    prior = bounder.propagate(np.eye(1), np.eye(1), np.eye(1) * 0.01)
    assert bounder.output() is prior
    same = bounder.update(np.zeros((1, 0)), np.zeros((0, 1)), np.zeros((0, 0)))
    assert same is prior
    post = bounder.update(np.array([[0.5]]), np.eye(1), np.eye(1))
    assert bounder.output() is post


def test_bounder_sigma_monotone():
    rng = np.random.default_rng(4)
    n = 4
    seq = [(np.eye(n) + 0.1 * rng.normal(size=(n, n)), 0.3 * rng.normal(size=(n, 2)), rng.normal(size=(2, n))) for _ in range(20)]
    pls = []
    for ns in (1.0, 3.0):
        b = ZonotopeBounder(ErrorZonotope.diagonal(np.ones(n)), PlConfig(q=10, n_sigma_z=ns))
        out = []
        for F, K, H in seq:
            b.propagate(F, np.eye(n), np.eye(n) * 0.04)
            b.update(K, H, np.eye(2))
            out.append(b.pl(range(n)))
        pls.append(np.array(out))
    assert np.all(pls[1] >= pls[0] - 1e-12)


def test_bounder_order_monotone():
    rng = np.random.default_rng(5)
    n = 4
    seq = [(np.eye(n) + 0.1 * rng.normal(size=(n, n)), 0.3 * rng.normal(size=(n, 2)), rng.normal(size=(2, n))) for _ in range(40)]
    pls = {}
    for q in (8, 16, 32, 64):
        b = ZonotopeBounder(ErrorZonotope.diagonal(np.ones(n)), PlConfig(q=q))
        out = []
        for F, K, H in seq:
            b.propagate(F, np.eye(n), np.eye(n) * 0.04)
            b.update(K, H, np.eye(2))
            out.append(b.pl(range(n)))
        pls[q] = np.array(out)
    for small, large in ((8, 16), (16, 32), (32, 64)):
        assert np.all(pls[large] <= pls[small] * (1 + 1e-12))


@pytest.mark.parametrize("kwargs", [{"q": 0}, {"n_sigma_z": 0.0}])
def test_pl_config_validation(kwargs):
    with pytest.raises(ValueError):
        PlConfig(**kwargs)


def test_bounder_rejects_small_q():
    with pytest.raises(ValueError):
        ZonotopeBounder(ErrorZonotope.diagonal(np.ones(17)), PlConfig(q=10))
