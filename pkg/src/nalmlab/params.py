"""Learnable state of one arithmetic module: init, clipping, golden solutions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .kinds import DEFAULT_EPS, GATE_RANGE, WEIGHT_RANGE, ModuleKind, has_gate


@dataclass
class ModuleParams:
    """Weights (and optional gate / imaginary matrix) of one module.

    `w_re` has shape (I, O), or (2I, O) for the NMRU whose input is augmented
    with reciprocals. `g` has length I for the (Real) NPU and, when the
    ablation gate is enabled, length 2I for the NMRU.
    """

    kind: ModuleKind
    w_re: np.ndarray
    w_im: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    eps: float = DEFAULT_EPS
    nmru_use_sign: bool = True

    @property
    def in_size(self) -> int:
        rows = self.w_re.shape[0]
        return rows // 2 if self.kind is ModuleKind.NMRU else rows

    @property
    def out_size(self) -> int:
        return self.w_re.shape[1]

    def copy(self) -> "ModuleParams":
        return replace(
            self,
            w_re=self.w_re.copy(),
            w_im=None if self.w_im is None else self.w_im.copy(),
            g=None if self.g is None else self.g.copy(),
        )

    def learnable_arrays(self) -> list[np.ndarray]:
        out = [self.w_re]
        if self.w_im is not None:
            out.append(self.w_im)
        if self.g is not None:
            out.append(self.g)
        return out


@dataclass
class ParamGrads:
    """Gradients mirroring ModuleParams (None where the field is absent)."""

    w_re: np.ndarray
    w_im: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None

    def arrays(self) -> list[np.ndarray]:
        out = [self.w_re]
        if self.w_im is not None:
            out.append(self.w_im)
        if self.g is not None:
            out.append(self.g)
        return out

    @staticmethod
    def zeros_like(params: ModuleParams) -> "ParamGrads":
        return ParamGrads(
            w_re=np.zeros_like(params.w_re),
            w_im=None if params.w_im is None else np.zeros_like(params.w_im),
            g=None if params.g is None else np.zeros_like(params.g),
        )

    def add_(self, other: "ParamGrads") -> "ParamGrads":
        self.w_re += other.w_re
        if self.w_im is not None and other.w_im is not None:
            self.w_im += other.w_im
        if self.g is not None and other.g is not None:
            self.g += other.g
        return self


def _xavier_bound(fan_in: int, fan_out: int) -> float:
    fan_avg = (fan_in + fan_out) / 2.0
    return float(np.sqrt(3.0 / fan_avg))


def init_params(
    kind: ModuleKind,
    in_size: int,
    out_size: int,
    rng_seed: int,
    *,
    constrained: bool = False,
    eps: float = DEFAULT_EPS,
    nmru_gate: bool = False,
    nmru_use_sign: bool = True,
) -> ModuleParams:
    """Initialise a module deterministically from a seed.

    Real NPU / NPU: Xavier-uniform weights (bound capped at 0.5 when
    `constrained`), gate at 0.5, imaginary matrix at 0. NRU / NAU:
    Xavier-uniform capped at 0.5. NMRU / NMU: uniform around 0.5 with
    half-width capped at 0.25.
    """
    if in_size < 1 or out_size < 1:
        raise ValueError("in_size and out_size must be >= 1")
    rng = np.random.default_rng(rng_seed)
    rows = 2 * in_size if kind is ModuleKind.NMRU else in_size
    bound = _xavier_bound(rows, out_size)

    if kind in (ModuleKind.REAL_NPU, ModuleKind.NPU):
        b = min(bound, 0.5) if constrained else bound
        w = rng.uniform(-b, b, size=(rows, out_size))
        g = np.full(in_size, 0.5)
        w_im = np.zeros((rows, out_size)) if kind is ModuleKind.NPU else None
        return ModuleParams(kind, w, w_im=w_im, g=g, eps=eps)

    if kind in (ModuleKind.NRU, ModuleKind.NRU_SEP_SIGN, ModuleKind.NAU):
        b = min(bound, 0.5)
        w = rng.uniform(-b, b, size=(rows, out_size))
        return ModuleParams(kind, w, eps=eps)

    if kind in (ModuleKind.NMU, ModuleKind.NMRU):
        half = min(bound / 2.0, 0.25)
        w = rng.uniform(0.5 - half, 0.5 + half, size=(rows, out_size))
        g = np.full(rows, 0.5) if (kind is ModuleKind.NMRU and nmru_gate) else None
        return ModuleParams(kind, w, g=g, eps=eps, nmru_use_sign=nmru_use_sign)

    raise ValueError(f"unhandled kind {kind}")


def clip_params(params: ModuleParams) -> ModuleParams:
    """Clamp every learnable entry to its kind's legal range (idempotent)."""
    lo, hi = WEIGHT_RANGE[params.kind]
    out = params.copy()
    np.clip(out.w_re, lo, hi, out=out.w_re)
    if out.w_im is not None:
        np.clip(out.w_im, -1.0, 1.0, out=out.w_im)
    if out.g is not None:
        np.clip(out.g, GATE_RANGE[0], GATE_RANGE[1], out=out.g)
    return out


def golden_params(kind: ModuleKind, task) -> ModuleParams:
    """The hand-written discrete solution of a synthetic task.

    Supports divide / reciprocal for the division modules and multiply for
    the NMU. Redundant positions get weight 0 (gate 0 for the Real NPU).
    """
    from .data import TaskSpec  # local import to avoid a cycle

    if not isinstance(task, TaskSpec):
        raise TypeError("task must be a TaskSpec")
    i_size = task.input_size
    op = task.operation

    def base(rows):
        return np.zeros((rows, 1))

    if kind in (ModuleKind.NRU, ModuleKind.NRU_SEP_SIGN):
        w = base(i_size)
        if op == "divide":
            i, j = task.relevant_indices
            w[i, 0], w[j, 0] = 1.0, -1.0
        elif op == "reciprocal":
            w[task.relevant_indices[0], 0] = -1.0
        elif op == "multiply":
            i, j = task.relevant_indices
            w[i, 0] = w[j, 0] = 1.0
        else:
            raise ValueError(f"no golden {kind} solution for {op!r}")
        return ModuleParams(kind, w)

    if kind in (ModuleKind.REAL_NPU, ModuleKind.NPU):
        w = base(i_size)
        g = np.zeros(i_size)
        if op == "divide":
            i, j = task.relevant_indices
            w[i, 0], w[j, 0] = 1.0, -1.0
            g[i] = g[j] = 1.0
        elif op == "reciprocal":
            i = task.relevant_indices[0]
            w[i, 0] = -1.0
            g[i] = 1.0
        elif op == "multiply":
            i, j = task.relevant_indices
            w[i, 0] = w[j, 0] = 1.0
            g[i] = g[j] = 1.0
        else:
            raise ValueError(f"no golden {kind} solution for {op!r}")
        w_im = np.zeros_like(w) if kind is ModuleKind.NPU else None
        return ModuleParams(kind, w, w_im=w_im, g=g)

    if kind is ModuleKind.NMRU:
        w = base(2 * i_size)
        if op == "divide":
            i, j = task.relevant_indices
            w[i, 0] = 1.0
            w[i_size + j, 0] = 1.0
        elif op == "reciprocal":
            w[i_size + task.relevant_indices[0], 0] = 1.0
        elif op == "multiply":
            i, j = task.relevant_indices
            w[i, 0] = w[j, 0] = 1.0
        else:
            raise ValueError(f"no golden {kind} solution for {op!r}")
        return ModuleParams(kind, w)

    if kind is ModuleKind.NMU:
        if op != "multiply":
            raise ValueError("the NMU can only express multiplication")
        w = base(i_size)
        i, j = task.relevant_indices
        w[i, 0] = w[j, 0] = 1.0
        return ModuleParams(kind, w)

    if kind is ModuleKind.NAU:
        raise ValueError("no golden NAU solution for multiplicative tasks")

    raise ValueError(f"unhandled kind {kind}")
