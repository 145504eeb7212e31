"""Single training run: fresh batch per iteration, fixed val/test sets,
scheduled penalties, early stopping on validation loss."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import backward, forward
from .data import TaskSpec, build_batch
from .evaluation import Threshold, compute_threshold, sparsity_error
from .kinds import DEFAULT_EPS, ModuleKind
from .losses import compute_loss, mse, pcc_is_degenerate
from .optim import clip_grad_norm, make_optimizer
from .params import ModuleParams, clip_params, init_params
from .schedules import RegSchedule, penalty


@dataclass(frozen=True)
class TrainConfig:
    kind: ModuleKind
    task: TaskSpec
    iterations: int
    learning_rate: float
    batch_size: int = 128
    optimizer: str = "adam"
    loss: str = "mse"
    reg: tuple = ()
    grad_norm_clip: Optional[float] = None
    eval_every: int = 1000
    seed: int = 0
    eps: float = DEFAULT_EPS
    clip_after_step: bool = True
    constrained_init: bool = False
    nmru_gate: bool = False
    nmru_use_sign: bool = True
    threshold_mode: str = "fixed"
    val_size: int = 10000
    test_size: int = 10000

    def __post_init__(self):
        if self.iterations < 0 or self.batch_size < 1:
            raise ValueError("bad iterations/batch_size")
        if self.iterations > 0 and self.iterations % self.eval_every != 0:
            raise ValueError("eval_every must divide iterations")
        if self.loss == "pcc" and self.batch_size < 2:
            raise ValueError("pcc needs batch_size >= 2")
        for r in self.reg:
            if not isinstance(r, RegSchedule):
                raise TypeError("reg entries must be RegSchedule")


@dataclass
class EvalPoint:
    iteration: int
    train_loss: float
    val_loss: float
    extrap_mse: float


@dataclass
class RunRecord:
    config: TrainConfig
    threshold: Threshold
    status: str  # "ok" or "failed_nonfinite"
    best_val_loss: float
    best_iteration: int
    extrapolation_mse_at_best: float
    solved_at_iter: Optional[int]
    sparsity_error: float
    params: ModuleParams  # best-validation checkpoint
    trace: list = field(default_factory=list)
    wall_secs: float = 0.0
    n_pcc_degenerate: int = 0

    @property
    def success(self) -> bool:
        return (
            self.status == "ok"
            and np.isfinite(self.extrapolation_mse_at_best)
            and self.extrapolation_mse_at_best < self.threshold.value
        )

    def summary_line(self) -> str:
        solved = self.solved_at_iter if self.solved_at_iter is not None else "-"
        return (
            f"{self.config.kind} {self.config.task.label()} seed={self.config.seed} "
            f"status={self.status} success={self.success} "
            f"extrap_mse={self.extrapolation_mse_at_best:.3e} "
            f"solved_at={solved} sparsity={self.sparsity_error:.3e} "
            f"wall={self.wall_secs:.1f}s"
        )


def write_trace_csv(record: RunRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("iteration,train_loss,val_loss,extrap_mse\n")
        for p in record.trace:
            fh.write(
                f"{p.iteration},{p.train_loss!r},{p.val_loss!r},{p.extrap_mse!r}\n"
            )


def _finite_or_inf(v: float) -> float:
    return v if np.isfinite(v) else float("inf")


def train_run(config: TrainConfig) -> RunRecord:
    """Train one module on one task and report early-stopped metrics."""
    t0 = time.perf_counter()
    task = config.task

    ss = np.random.SeedSequence(config.seed)
    val_ss, test_ss, train_ss = ss.spawn(3)
    val_x, val_y = build_batch(task, "val", config.val_size, np.random.default_rng(val_ss))
    test_x, test_y = build_batch(task, "test", config.test_size, np.random.default_rng(test_ss))
    train_rng = np.random.default_rng(train_ss)

    threshold = compute_threshold(
        task, config.kind, config.threshold_mode, test_x, eps=config.eps
    )

    params = init_params(
        config.kind,
        task.input_size,
        1,
        config.seed,
        constrained=config.constrained_init,
        eps=config.eps,
        nmru_gate=config.nmru_gate,
        nmru_use_sign=config.nmru_use_sign,
    )
    opt = make_optimizer(config.optimizer, params, config.learning_rate)

    trace: list[EvalPoint] = []
    best_val = float("inf")
    best_iter = 0
    best_params = params.copy()
    best_extrap = float("inf")
    n_degenerate = 0
    status = "ok"
    last_train_loss = float("nan")

    def evaluate(iteration: int) -> None:
        nonlocal best_val, best_iter, best_params, best_extrap
        try:
            val_pred, _ = forward(params, val_x, mode="eval")
            val_loss = compute_loss(config.loss, val_pred[:, 0], val_y)[0]
        except (ValueError, FloatingPointError):
            val_loss = float("inf")
        try:
            test_pred, _ = forward(params, test_x, mode="eval")
            extrap = mse(test_pred[:, 0], test_y)
        except (ValueError, FloatingPointError):
            extrap = float("inf")
        val_cmp = _finite_or_inf(val_loss)
        if val_cmp < best_val:
            best_val = val_cmp
            best_iter = iteration
            best_params = params.copy()
            best_extrap = extrap
        trace.append(EvalPoint(iteration, last_train_loss, val_loss, extrap))

    evaluate(0)

    for it in range(1, config.iterations + 1):
        x, y = build_batch(task, "train", config.batch_size, train_rng)
        try:
            y_pred, cache = forward(params, x, mode="training")
        except ValueError:
            status = "failed_nonfinite"
            break
        loss, grad_loss = compute_loss(config.loss, y_pred[:, 0], y)
        last_train_loss = loss
        if config.loss == "pcc" and pcc_is_degenerate(y):
            n_degenerate += 1
        if not np.isfinite(loss):
            status = "failed_nonfinite"
            break
        grads, _ = backward(params, cache, grad_loss[:, None])
        for sched in config.reg:
            _, pgrads = penalty(sched, params, it)
            grads.add_(pgrads)
        if not all(np.all(np.isfinite(a)) for a in grads.arrays()):
            status = "failed_nonfinite"
            break
        if config.grad_norm_clip is not None:
            clip_grad_norm(grads, config.grad_norm_clip)
        opt.step(params, grads)
        if config.clip_after_step:
            params = clip_params(params)
        if it % config.eval_every == 0:
            evaluate(it)

    solved_at = None
    for p in trace:
        if np.isfinite(p.extrap_mse) and p.extrap_mse < threshold.value:
            solved_at = p.iteration
            break

    return RunRecord(
        config=config,
        threshold=threshold,
        status=status,
        best_val_loss=best_val,
        best_iteration=best_iter,
        extrapolation_mse_at_best=best_extrap,
        solved_at_iter=solved_at,
        sparsity_error=sparsity_error(best_params),
        params=best_params,
        trace=trace,
        wall_secs=time.perf_counter() - t0,
        n_pcc_degenerate=n_degenerate,
    )
