"""Training losses (MSE, PCC, MAPE) with exact analytic gradients."""

from __future__ import annotations

import numpy as np

# Stability constant of the correlation loss; also the clamp floor applied
# to the batch variances before the square root.
PCC_EPS = 1e-8

LOSS_KINDS = ("mse", "pcc", "mape")


def compute_loss(kind: str, y_hat, y):
    """Return (loss, grad) where grad is d loss / d y_hat, shape (N,)."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.shape != y.shape or y_hat.ndim != 1:
        raise ValueError("y_hat and y must be 1-D vectors of equal length")
    n = y_hat.shape[0]
    if n < 1:
        raise ValueError("empty batch")

    if kind == "mse":
        diff = y_hat - y
        loss = float(np.mean(diff * diff))
        return loss, 2.0 * diff / n

    if kind == "mape":
        absy = np.abs(y)
        diff = y - y_hat
        loss = float(np.mean(np.abs(diff) / absy))
        grad = -np.sign(diff) / (n * absy)
        return loss, grad

    if kind == "pcc":
        if n < 2:
            raise ValueError("pcc needs a batch of at least 2")
        u = y_hat - np.mean(y_hat)
        vy = y - np.mean(y)
        var_x = float(np.mean(u * u))
        var_y = float(np.mean(vy * vy))
        sx = np.sqrt(max(var_x, PCC_EPS))
        sy = np.sqrt(max(var_y, PCC_EPS))
        c = vy / (sy + PCC_EPS)
        s = sx + PCC_EPS
        a = float(np.sum(u * c))
        r = a / (n * s)
        grad_r = (c - np.mean(c)) / (n * s)
        if var_x > PCC_EPS:
            grad_r = grad_r - a * u / (n * n * s * s * sx)
        return 1.0 - r, -grad_r

    raise ValueError(f"unknown loss kind {kind!r}")


def pcc_is_degenerate(y) -> bool:
    """True when the target batch is (numerically) constant, which forces the
    variance clamp of the correlation loss to kick in."""
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean((y - np.mean(y)) ** 2)) <= PCC_EPS


def mse(y_hat, y) -> float:
    d = np.asarray(y_hat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.mean(d * d))
