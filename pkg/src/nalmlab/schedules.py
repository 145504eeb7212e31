"""Regularization schedules: the growing L1/L2 weight and the ramped
discretization penalty, each returning both the scalar penalty and its
gradient with respect to the module parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinds import ModuleKind
from .params import ModuleParams, ParamGrads

SCHEDULE_KINDS = ("l1", "l2", "discretization", "none")


@dataclass(frozen=True)
class RegSchedule:
    kind: str
    # L1 / L2: weight beta grows by beta_growth every beta_step iterations.
    beta_start: float = 0.0
    beta_end: float = 0.0
    beta_growth: float = 10.0
    beta_step: int = 10000
    # discretization: ramp from 0 to lam_hat between lam_start and lam_end.
    lam_hat: float = 0.0
    lam_start: int = 0
    lam_end: int = 1
    # When true, 0 is not an acceptable discrete value: entries are pushed
    # towards {-1, 1} instead of {-1, 0, 1}.
    penalize_zero: bool = False
    # App-style NPU variant: L1 also covers the imaginary weight matrix.
    include_imag: bool = False

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind in ("l1", "l2"):
            if not (0.0 <= self.beta_start <= self.beta_end):
                raise ValueError("need 0 <= beta_start <= beta_end")
            if self.beta_step < 1 or self.beta_growth < 0:
                raise ValueError("bad beta schedule")
        if self.kind == "discretization":
            if self.lam_hat < 0 or self.lam_start >= self.lam_end:
                raise ValueError("need lam_hat >= 0 and lam_start < lam_end")

    @staticmethod
    def l1(beta_start, beta_end, growth=10.0, step=10000, include_imag=False):
        return RegSchedule("l1", beta_start=beta_start, beta_end=beta_end,
                           beta_growth=growth, beta_step=step,
                           include_imag=include_imag)

    @staticmethod
    def l2(beta_start, beta_end, growth=10.0, step=10000):
        return RegSchedule("l2", beta_start=beta_start, beta_end=beta_end,
                           beta_growth=growth, beta_step=step)

    @staticmethod
    def discretization(lam_hat, lam_start, lam_end, penalize_zero=False):
        return RegSchedule("discretization", lam_hat=lam_hat,
                           lam_start=lam_start, lam_end=lam_end,
                           penalize_zero=penalize_zero)

    def beta_at(self, iteration: int) -> float:
        """min(beta_end, beta_start * growth^floor(it / step)).

        The saturation step is found in log space so that exact decimal
        configurations hit beta_end exactly.
        """
        bs, be, g = self.beta_start, self.beta_end, self.beta_growth
        if bs <= 0.0:
            return 0.0
        k = iteration // self.beta_step
        if g > 1.0 and be > bs:
            k_sat = math.ceil(math.log(be / bs) / math.log(g) - 1e-9)
            if k >= k_sat:
                return be
        try:
            return min(be, bs * g ** k)
        except OverflowError:
            return be

    def lambda_at(self, iteration: int) -> float:
        frac = (iteration - self.lam_start) / (self.lam_end - self.lam_start)
        return self.lam_hat * max(min(frac, 1.0), 0.0)


def l_penalty(schedule: RegSchedule, params: ModuleParams, iteration: int):
    """Growing L1/L2 penalty over the weight matrix (optionally the imaginary
    matrix as well); returns (penalty, ParamGrads)."""
    if schedule.kind not in ("l1", "l2"):
        raise ValueError("l_penalty needs an l1/l2 schedule")
    beta = schedule.beta_at(iteration)
    grads = ParamGrads.zeros_like(params)
    mats = [(params.w_re, grads.w_re)]
    if schedule.include_imag and params.w_im is not None:
        mats.append((params.w_im, grads.w_im))
    total = 0.0
    for w, gw in mats:
        if schedule.kind == "l1":
            total += float(np.sum(np.abs(w)))
            gw += beta * np.sign(w)
        else:
            total += float(np.sum(w * w))
            gw += 2.0 * beta * w
    return beta * total, grads


def _disc_entries(params: ModuleParams):
    arrays = [params.w_re]
    if params.g is not None:
        arrays.append(params.g)
    return arrays


def discretization_penalty(schedule: RegSchedule, params: ModuleParams, iteration: int):
    """Ramped penalty pushing entries to the discrete set; mean over entries.

    Weights and (when present) gate entries are covered; the imaginary
    matrix is regularised through L1, not through discretization.
    """
    if schedule.kind != "discretization":
        raise ValueError("discretization_penalty needs a discretization schedule")
    lam = schedule.lambda_at(iteration)
    arrays = _disc_entries(params)
    count = sum(a.size for a in arrays)
    grads = ParamGrads.zeros_like(params)
    targets = [grads.w_re] + ([grads.g] if params.g is not None else [])
    total = 0.0
    for w, gw in zip(arrays, targets):
        absw = np.abs(w)
        if schedule.penalize_zero:
            total += float(np.sum(1.0 - absw))
            d = -np.sign(w)
        else:
            total += float(np.sum(np.minimum(absw, 1.0 - absw)))
            d = np.where(absw <= 0.5, np.sign(w), -np.sign(w))
        gw += (lam / count) * d
    return lam * total / count, grads


def penalty(schedule: RegSchedule, params: ModuleParams, iteration: int):
    """Dispatch on the schedule kind; 'none' contributes nothing."""
    if schedule.kind == "none":
        return 0.0, ParamGrads.zeros_like(params)
    if schedule.kind == "discretization":
        return discretization_penalty(schedule, params, iteration)
    return l_penalty(schedule, params, iteration)
