import math

import numpy as np
import pytest

from belldist import DomainError
from belldist.losses import (
    LN4,
    LossConfig,
    l_loss,
    l_loss_grad,
    mse_loss,
    softmax_policy,
    taylor_gap,
)


def test_mse_values():
    assert mse_loss(np.zeros(3)) == 0.0
    assert mse_loss(np.array([2.0])) == 2.0
    assert mse_loss(np.array([1.0, -1.0, 3.0])) == pytest.approx(11.0 / 6.0, rel=1e-15)


def test_lloss_at_zero_is_ln4():
    assert l_loss(np.array([0.0])) == pytest.approx(LN4, rel=1e-15)


def test_lloss_even_in_each_error():
    cfg = LossConfig(sigma=0.7)
    for c in (0.3, 1.7, 42.0):
        assert l_loss(np.array([c, -c]), cfg) == l_loss(np.array([-c, c]), cfg)
        assert l_loss(np.array([c]), cfg) == pytest.approx(l_loss(np.array([-c]), cfg), rel=1e-15)


def test_lloss_large_argument_no_overflow():
    assert l_loss(np.array([1000.0])) == pytest.approx(1000.0, abs=1e-9)
    assert l_loss(np.array([-1000.0])) == pytest.approx(1000.0, abs=1e-9)
    assert math.isfinite(l_loss(np.array([1e12])))


def test_grad_zero_at_origin():
    assert l_loss_grad(np.array([0.0]))[0] == 0.0


def test_grad_bounded_asymptote():
    cfg = LossConfig(sigma=2.0)
    errs = np.array([1e9, -1e9, 0.5])
    grads = l_loss_grad(errs, cfg)
    bound = 1.0 / (errs.size * cfg.sigma)
    assert grads[0] == pytest.approx(bound, rel=1e-12)
    assert grads[1] == pytest.approx(-bound, rel=1e-12)
    assert np.all(np.abs(grads) <= bound + 1e-15)
    # mse gradient is unbounded by contrast
    assert abs(-1e6 / 1.0) > bound


@pytest.mark.parametrize("sigma", [0.5, 1.0, 10.0])
@pytest.mark.parametrize("eps", [-2.0, -0.5, 0.1, 3.0])
def test_grad_matches_finite_differences(sigma, eps):
    cfg = LossConfig(sigma=sigma)
    errs = np.array([eps, 0.7, -1.1])
    h = 1e-6
    for i in range(errs.size):
        up, dn = errs.copy(), errs.copy()
        up[i] += h
        dn[i] -= h
        numeric = (l_loss(up, cfg) - l_loss(dn, cfg)) / (2.0 * h)
        assert abs(numeric - l_loss_grad(errs, cfg)[i]) < 1e-7


def test_taylor_gap_values():
    assert taylor_gap(0.0) == 0.0
    # quartic remainder: next term after ln4 + t^2/4 is -t^4/96
    assert taylor_gap(0.1) <= (1.0 / 96.0 + 2e-3) * 0.1**4


def test_taylor_gap_quartic_ratio_sweep():
    ts = np.linspace(-0.5, 0.5, 401)
    ts = ts[ts != 0.0]
    ratios = [taylor_gap(float(t)) / t**4 for t in ts]
    assert max(ratios) <= 0.011


def test_batch_level_quartic_bound():
    cfg = LossConfig(sigma=1.3)
    rng = np.random.Generator(np.random.Philox(key=5))
    errs = cfg.sigma * (rng.random(512) - 0.5)  # |eps/sigma| <= 0.5
    gap = abs(l_loss(errs, cfg) - (LN4 + 0.5 * mse_loss(errs / cfg.sigma)))
    assert gap <= 0.011 * float(np.mean((errs / cfg.sigma) ** 4))


def test_convexity_second_differences():
    cfg = LossConfig(sigma=1.0)
    grid = np.linspace(-6.0, 6.0, 121)
    vals = np.array([l_loss(np.array([t]), cfg) for t in grid])
    second = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
    assert np.all(second > -1e-12)


def test_minimum_at_zero():
    cfg = LossConfig(sigma=1.0)
    for t in (-3.0, -0.2, 0.4, 2.5):
        assert l_loss(np.array([t]), cfg) > LN4


def test_loss_config_validation():
    with pytest.raises(DomainError):
        LossConfig(sigma=0.0)
    with pytest.raises(DomainError):
        l_loss(np.array([]))


def test_softmax_uniform_symmetry():
    out = softmax_policy(np.zeros(4), np.full(4, 0.25), zeta=1.0)
    assert np.allclose(out, 0.25, atol=1e-15)
    assert abs(out.sum() - 1.0) < 1e-12


def test_softmax_concentrates_at_small_zeta():
    q = np.array([0.0, 1.0, 3.0])
    out = softmax_policy(q, np.full(3, 1.0 / 3.0), zeta=0.01)
    assert out[2] > 0.99


def test_softmax_shift_invariance():
    q = np.array([0.4, -1.0, 2.2])
    mu = np.array([0.5, 0.2, 0.3])
    a = softmax_policy(q, mu, zeta=0.7)
    b = softmax_policy(q + 123.4, mu, zeta=0.7)
    assert np.allclose(a, b, atol=1e-12)


def test_softmax_zero_mu_entries_keep_zero_mass():
    out = softmax_policy(np.array([5.0, 1.0]), np.array([0.0, 1.0]), zeta=1.0)
    assert out[0] == 0.0 and out[1] == pytest.approx(1.0)


def test_softmax_domain():
    with pytest.raises(DomainError):
        softmax_policy(np.zeros(2), np.zeros(2), zeta=1.0)
    with pytest.raises(DomainError):
        softmax_policy(np.zeros(2), np.full(2, 0.5), zeta=0.0)
    with pytest.raises(DomainError):
        softmax_policy(np.zeros(2), np.array([0.9, 0.3]), zeta=1.0)
