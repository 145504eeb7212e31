"""Optimizer steps and gradient-norm clipping."""

import numpy as np
import pytest

from nalmlab import ModuleKind, ModuleParams, ParamGrads
from nalmlab.optim import Adam, SGD, clip_grad_norm, make_optimizer


def _params(w):
    return ModuleParams(ModuleKind.NRU, np.array(w, dtype=np.float64))


def test_sgd_step():
    p = _params([[1.0]])
    SGD(p, lr=0.1).step(p, ParamGrads(w_re=np.array([[2.0]])))
    assert p.w_re[0, 0] == pytest.approx(0.8, abs=1e-15)


def test_adam_zero_gradient_keeps_params():
    p = _params([[0.3], [-0.7]])
    opt = Adam(p, lr=0.5)
    before = p.w_re.copy()
    for _ in range(10):
        opt.step(p, ParamGrads(w_re=np.zeros_like(p.w_re)))
    assert np.array_equal(p.w_re, before)


def test_adam_first_step_size_is_lr():
    # bias-corrected first step: -lr * g / (|g| + eps), i.e. ~lr in magnitude
    for g in (1e-6, 1.0, 1e6):
        p = _params([[0.0]])
        Adam(p, lr=0.01).step(p, ParamGrads(w_re=np.array([[g]])))
        assert p.w_re[0, 0] == pytest.approx(-0.01 * g / (g + 1e-8), rel=1e-12)


def test_adam_descends_quadratic():
    p = _params([[4.0]])
    opt = Adam(p, lr=0.1)
    for _ in range(500):
        opt.step(p, ParamGrads(w_re=2.0 * p.w_re))
    assert abs(p.w_re[0, 0]) < 1e-3


def test_clip_grad_norm_rescales_to_max():
    g = ParamGrads(w_re=np.array([[3.0], [4.0]]))
    total = clip_grad_norm(g, 1.0)
    assert total == pytest.approx(5.0, abs=1e-12)
    assert float(np.sqrt(np.sum(g.w_re ** 2))) == pytest.approx(1.0, abs=1e-12)


def test_clip_grad_norm_leaves_small_gradients():
    g = ParamGrads(w_re=np.array([[0.3]]))
    clip_grad_norm(g, 1.0)
    assert g.w_re[0, 0] == 0.3


def test_clip_grad_norm_spans_all_arrays():
    g = ParamGrads(w_re=np.array([[3.0]]), g=np.array([4.0]))
    clip_grad_norm(g, 1.0)
    total = np.sqrt(g.w_re[0, 0] ** 2 + g.g[0] ** 2)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_make_optimizer():
    p = _params([[0.0]])
    assert isinstance(make_optimizer("adam", p, 0.1), Adam)
    assert isinstance(make_optimizer("sgd", p, 0.1), SGD)
    with pytest.raises(ValueError):
        make_optimizer("rmsprop", p, 0.1)
