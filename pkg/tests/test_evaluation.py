"""Metrics, thresholds, confidence intervals, and the sign-oracle
equivalence over all discrete configurations."""

import itertools

import numpy as np
import pytest

from nalmlab import (ModuleKind, ModuleParams, RangeSpec, TaskSpec,
                     build_batch, compute_threshold, confidence_interval,
                     forward, sign_oracle, sparsity_error)
from nalmlab.evaluation import FLOAT32_EPS, Z95, wilson_interval


class TestSparsityError:
    def test_examples(self):
        p = ModuleParams(ModuleKind.NMU, np.array([[0.2], [0.9]]))
        assert sparsity_error(p) == 0.2
        p = ModuleParams(ModuleKind.NRU, np.array([[-1.0], [0.0], [1.0]]))
        assert sparsity_error(p) == 0.0
        p = ModuleParams(ModuleKind.NMU, np.array([[0.5]]))
        assert sparsity_error(p) == 0.5

    def test_covers_gates(self):
        p = ModuleParams(ModuleKind.REAL_NPU, np.array([[1.0]]),
                         g=np.array([0.7]))
        assert sparsity_error(p) == pytest.approx(0.3, abs=1e-15)

    def test_permutation_and_sign_invariance(self):
        rng = np.random.default_rng(0)
        w = rng.uniform(-1, 1, (5, 1))
        base = sparsity_error(ModuleParams(ModuleKind.NRU, w))
        perm = sparsity_error(ModuleParams(ModuleKind.NRU, w[::-1].copy()))
        flip = sparsity_error(ModuleParams(ModuleKind.NRU, -w))
        assert base == perm == flip


class TestThresholds:
    def test_fixed(self):
        task = TaskSpec.make("divide", 2, RangeSpec.uniform(1, 2),
                             RangeSpec.uniform(2, 6))
        thr = compute_threshold(task, ModuleKind.NRU, "fixed", np.zeros((1, 2)))
        assert thr.value == 1e-5 and thr.source == "fixed_1e-5"

    def test_golden_exact_set_gives_machine_epsilon(self):
        # Powers of two divide exactly in float32: the golden MSE is 0 and
        # the threshold collapses to the float32 epsilon.
        task = TaskSpec.make("divide", 2, RangeSpec.uniform(1, 2),
                             RangeSpec.uniform(2, 6))
        x = np.array([[2.0, 4.0], [8.0, 2.0], [0.5, 0.25], [64.0, 8.0]])
        thr = compute_threshold(task, ModuleKind.NRU, "golden", x, eps=0.0)
        assert thr.value == FLOAT32_EPS

    def test_realnpu_epsilon_dominates_nru(self):
        task = TaskSpec.make("reciprocal", 1, RangeSpec.uniform(0, 1),
                             RangeSpec.uniform(0, 1), relevant_indices=(0,))
        x, _ = build_batch(task, "test", 2000, np.random.default_rng(1))
        nru = compute_threshold(task, ModuleKind.NRU, "golden", x)
        rnpu = compute_threshold(task, ModuleKind.REAL_NPU, "golden", x, eps=1e-7)
        assert rnpu.value > nru.value

    def test_monotone_as_bound_shrinks(self):
        for kind in (ModuleKind.NRU, ModuleKind.REAL_NPU):
            prev = 0.0
            for ub in (1.0, 1e-1, 1e-2, 1e-3, 1e-4):
                task = TaskSpec.make("reciprocal", 1, RangeSpec.uniform(0, ub),
                                     RangeSpec.uniform(0, ub),
                                     relevant_indices=(0,))
                x, _ = build_batch(task, "test", 10000,
                                   np.random.default_rng(2))
                thr = compute_threshold(task, kind, "golden", x,
                                        eps=1e-7 if kind is ModuleKind.REAL_NPU
                                        else None)
                assert thr.value > prev, (kind, ub)
                prev = thr.value

    def test_unknown_mode(self):
        task = TaskSpec.make("divide", 2, RangeSpec.uniform(1, 2),
                             RangeSpec.uniform(2, 6))
        with pytest.raises(ValueError):
            compute_threshold(task, ModuleKind.NRU, "simulated", np.zeros((1, 2)))


class TestConfidenceIntervals:
    def test_wilson_full_success(self):
        lo, hi = confidence_interval("success_rate", [1.0] * 25)
        assert hi == pytest.approx(1.0, abs=1e-12)
        # algebraic form at p=1: lower = 1 / (1 + z^2/n)
        assert lo == pytest.approx(1.0 / (1.0 + Z95**2 / 25), abs=1e-12)
        assert lo == pytest.approx(0.8668, abs=5e-4)

    def test_wilson_full_failure_symmetry(self):
        lo, hi = confidence_interval("success_rate", [0.0] * 25)
        assert lo == 0.0
        assert hi == pytest.approx(1.0 - 1.0 / (1.0 + Z95**2 / 25), abs=1e-12)

    def test_wilson_interval_contains_rate(self):
        lo, hi = wilson_interval(18, 25)
        assert lo < 18 / 25 < hi

    def test_degenerate_samples_point_interval(self):
        assert confidence_interval("sparsity", [0.1] * 8) == (0.1, 0.1)
        assert confidence_interval("convergence", [4000.0] * 5) == (4000.0, 4000.0)

    def test_gamma_interval_brackets_mean(self):
        rng = np.random.default_rng(3)
        samples = rng.gamma(9.0, 2000.0, size=25)
        lo, hi = confidence_interval("convergence", samples)
        assert lo < samples.mean() < hi
        assert (hi - lo) < samples.mean()  # sane width at n=25

    def test_beta_interval_brackets_mean(self):
        rng = np.random.default_rng(4)
        samples = rng.beta(2.0, 8.0, size=25) / 2.0  # sparsity-style values
        lo, hi = confidence_interval("sparsity", samples)
        assert 0.0 <= lo < samples.mean() < hi <= 0.5

    def test_deterministic(self):
        samples = list(np.random.default_rng(5).gamma(4, 1000, 25))
        a = confidence_interval("convergence", samples)
        b = confidence_interval("convergence", samples)
        assert a == b

    def test_errors(self):
        with pytest.raises(ValueError):
            confidence_interval("success_rate", [])
        with pytest.raises(ValueError):
            confidence_interval("speed", [1.0, 2.0])


class TestSignOracle:
    def test_spec_examples(self):
        assert sign_oracle(ModuleKind.REAL_NPU, [1, -1], [-1, 1],
                           gates=[1, 1]) == -1
        assert sign_oracle(ModuleKind.NMRU, [0, 0, 0, 0], [-1, -1, -1, -1]) == 1
        assert sign_oracle(ModuleKind.REAL_NPU, [1], [-1], gates=[0]) == 1

    def test_rejects_non_discrete(self):
        with pytest.raises(ValueError):
            sign_oracle(ModuleKind.REAL_NPU, [0.5], [1], gates=[1])
        with pytest.raises(ValueError):
            sign_oracle(ModuleKind.NMRU, [-1], [1])
        with pytest.raises(ValueError):
            sign_oracle(ModuleKind.NMRU, [1], [0])

    def _assert_realnpu_matches(self, i_size):
        mag = 2.0
        for signs in itertools.product((-1.0, 1.0), repeat=i_size):
            x = mag * np.array([signs])
            for weights in itertools.product((-1.0, 0.0, 1.0), repeat=i_size):
                w = np.array(weights).reshape(-1, 1)
                for gates in itertools.product((0.0, 1.0), repeat=i_size):
                    p = ModuleParams(ModuleKind.REAL_NPU, w,
                                     g=np.array(gates), eps=0.0)
                    y, _ = forward(p, x, "eval")
                    val = y[0, 0]
                    if val == 0.0 or not np.isfinite(val):
                        continue
                    want = sign_oracle(ModuleKind.REAL_NPU, weights, signs,
                                       gates=gates)
                    assert np.sign(val) == want, (signs, weights, gates)

    def _assert_nmru_matches(self, i_size):
        mag = 2.0
        for signs in itertools.product((-1.0, 1.0), repeat=i_size):
            x = mag * np.array([signs])
            aug_signs = list(signs) + list(signs)  # 1/x keeps the sign
            for weights in itertools.product((0.0, 1.0), repeat=2 * i_size):
                w = np.array(weights).reshape(-1, 1)
                p = ModuleParams(ModuleKind.NMRU, w, eps=0.0)
                y, _ = forward(p, x, "eval")
                val = y[0, 0]
                if val == 0.0 or not np.isfinite(val):
                    continue
                want = sign_oracle(ModuleKind.NMRU, weights, aug_signs)
                assert np.sign(val) == want, (signs, weights)

    @pytest.mark.parametrize("i_size", [1, 2, 3])
    def test_realnpu_forward_sign_equals_oracle(self, i_size):
        self._assert_realnpu_matches(i_size)

    @pytest.mark.parametrize("i_size", [1, 2, 3])
    def test_nmru_forward_sign_equals_oracle(self, i_size):
        self._assert_nmru_matches(i_size)
