"""Loss values and exact gradients (checked against finite differences)."""

import numpy as np
import pytest

from nalmlab.losses import compute_loss, pcc_is_degenerate


def _fd_grad(kind, y_hat, y, step=1e-7):
    g = np.zeros_like(y_hat)
    for i in range(y_hat.size):
        hi = y_hat.copy()
        lo = y_hat.copy()
        hi[i] += step
        lo[i] -= step
        g[i] = (compute_loss(kind, hi, y)[0] - compute_loss(kind, lo, y)[0]) / (2 * step)
    return g


def test_mse_exact_fit_is_zero():
    y = np.array([1.0, -2.0, 3.0])
    loss, grad = compute_loss("mse", y, y)
    assert loss == 0.0
    assert np.all(grad == 0.0)


def test_mse_value_and_grad():
    loss, grad = compute_loss("mse", np.array([2.0, 0.0]), np.array([0.0, 0.0]))
    assert loss == 2.0
    assert np.allclose(grad, [2.0, 0.0])


def test_pcc_perfect_correlation_is_zero():
    y = np.array([1.0, 2.0, 5.0, -1.0])
    loss, _ = compute_loss("pcc", y, y)
    assert loss == pytest.approx(0.0, abs=1e-6)


def test_pcc_anticorrelation_near_two():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    loss, _ = compute_loss("pcc", -y, y)
    assert loss == pytest.approx(2.0, abs=1e-6)


def test_pcc_degenerate_target_clamped():
    y = np.full(4, 3.0)
    y_hat = np.array([1.0, 2.0, 3.0, 4.0])
    assert pcc_is_degenerate(y)
    loss, grad = compute_loss("pcc", y_hat, y)
    assert np.isfinite(loss) and np.all(np.isfinite(grad))


def test_mape_example():
    loss, _ = compute_loss("mape", np.array([2.0, 3.0]), np.array([4.0, 3.0]))
    assert loss == pytest.approx(0.25, abs=1e-15)


def test_mape_negative_targets_use_magnitude():
    loss, _ = compute_loss("mape", np.array([-2.0]), np.array([-4.0]))
    assert loss == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("kind", ["mse", "pcc", "mape"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(13)
    for _ in range(10):
        n = int(rng.integers(2, 9))
        y = rng.uniform(0.5, 4.0, n) * rng.choice([-1.0, 1.0], n)
        y_hat = y + rng.normal(0, 0.5, n)
        _, grad = compute_loss(kind, y_hat, y)
        fd = _fd_grad(kind, y_hat, y)
        assert np.max(np.abs(grad - fd)) < 1e-6, kind


def test_pcc_needs_two_samples():
    with pytest.raises(ValueError):
        compute_loss("pcc", np.array([1.0]), np.array([1.0]))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        compute_loss("huber", np.array([1.0]), np.array([1.0]))
