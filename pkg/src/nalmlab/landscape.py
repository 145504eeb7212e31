"""RMSE surfaces of a two-parameter stacked adder-then-multiplier network.

The probe problem is (x1+x2) * (x1+x2+x3+x4) at x = (1, 1.2, 1.8, 2); the
adder's weights are tied to w1, the second layer's to w2. Surfaces are
evaluated in eval mode (exact absolute for the NRU): the object of study is
the loss itself, not a training trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .core import forward
from .kinds import DEFAULT_EPS, ModuleKind
from .params import ModuleParams

PROBE_X = (1.0, 1.2, 1.8, 2.0)
# Surface epsilon of the published Real NPU panel.
REALNPU_SURFACE_EPS = 1e-5

_SURFACE_KINDS = (ModuleKind.REAL_NPU, ModuleKind.NRU, ModuleKind.NMRU)


def probe_target() -> float:
    x1, x2, x3, x4 = PROBE_X
    return (x1 + x2) * (x1 + x2 + x3 + x4)


def default_w2_range(kind: ModuleKind):
    """Second-layer axis spans the module's legal weight range."""
    return (0.0, 1.0) if kind is ModuleKind.NMRU else (-1.0, 1.0)


@dataclass(frozen=True)
class SurfaceSpec:
    kind: ModuleKind
    w1_lo: float = -1.0
    w1_hi: float = 1.0
    w2_lo: float = None  # type: ignore[assignment]
    w2_hi: float = None  # type: ignore[assignment]
    resolution: int = 401
    eps: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.kind not in _SURFACE_KINDS:
            raise ValueError(f"no surface defined for {self.kind}")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        lo, hi = default_w2_range(self.kind)
        if self.w2_lo is None:
            object.__setattr__(self, "w2_lo", lo)
        if self.w2_hi is None:
            object.__setattr__(self, "w2_hi", hi)
        if self.eps is None:
            eps = REALNPU_SURFACE_EPS if self.kind is ModuleKind.REAL_NPU else DEFAULT_EPS
            object.__setattr__(self, "eps", eps)


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    # lo + (hi-lo) * i/(n-1): shared nodes of refined grids match exactly.
    i = np.arange(n, dtype=np.float64)
    return lo + (hi - lo) * (i / (n - 1))


def stacked_prediction(kind: ModuleKind, w1: float, w2: float,
                       eps: float = None) -> float:
    """Prediction of the stacked network at one (w1, w2), via the real
    forward passes (adder layer then the division module)."""
    if eps is None:
        eps = REALNPU_SURFACE_EPS if kind is ModuleKind.REAL_NPU else DEFAULT_EPS
    x = np.array([PROBE_X])
    w1_mat = np.array(
        [[w1, w1], [w1, w1], [0.0, w1], [0.0, w1]], dtype=np.float64
    )
    nau = ModuleParams(ModuleKind.NAU, w1_mat)
    hidden, _ = forward(nau, x, mode="eval")

    if kind is ModuleKind.NRU:
        second = ModuleParams(ModuleKind.NRU, np.array([[w2], [w2]]))
    elif kind is ModuleKind.REAL_NPU:
        second = ModuleParams(
            ModuleKind.REAL_NPU,
            np.array([[w2], [w2]]),
            g=np.array([1.0, 1.0]),
            eps=eps,
        )
    elif kind is ModuleKind.NMRU:
        second = ModuleParams(
            ModuleKind.NMRU,
            np.array([[w2], [w2], [0.0], [0.0]]),
            eps=eps,
        )
    else:
        raise ValueError(f"no surface defined for {kind}")
    y, _ = forward(second, hidden, mode="eval")
    return float(y[0, 0])


def rmse_surface(spec: SurfaceSpec):
    """Dense RMSE grid; returns (w1_axis, w2_axis, rmse[len(w1), len(w2)]).

    Vectorised closed forms of the same eval-mode passes; non-finite cells
    are reported as inf (that blow-up is the phenomenon under study).
    """
    w1 = _axis(spec.w1_lo, spec.w1_hi, spec.resolution)
    w2 = _axis(spec.w2_lo, spec.w2_hi, spec.resolution)
    target = probe_target()
    x1, x2, x3, x4 = PROBE_X
    h1 = (x1 + x2) * w1[:, None]
    h2 = (x1 + x2 + x3 + x4) * w1[:, None]
    w2g = w2[None, :]

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if spec.kind is ModuleKind.NRU:
            pred = _nru_factor(h1, w2g) * _nru_factor(h2, w2g)
        elif spec.kind is ModuleKind.REAL_NPU:
            r1 = np.abs(h1) + spec.eps
            r2 = np.abs(h2) + spec.eps
            mag = np.exp(w2g * (np.log(r1) + np.log(r2)))
            k = np.pi * ((h1 < 0).astype(np.float64) + (h2 < 0).astype(np.float64))
            pred = mag * np.cos(w2g * k)
        else:  # NMRU: reciprocal entries carry weight 0 and contribute 1.
            f1 = w2g * np.abs(h1) + 1.0 - w2g
            f2 = w2g * np.abs(h2) + 1.0 - w2g
            k = np.pi * ((h1 < 0).astype(np.float64) + (h2 < 0).astype(np.float64))
            pred = f1 * f2 * np.cos(w2g * k)
        rmse = np.abs(pred - target)
    rmse[np.isnan(rmse)] = np.inf
    return w1, w2, rmse


def _nru_factor(h, w):
    a = np.abs(w)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f = np.sign(h) * np.abs(h) ** w * a + 1.0 - a
    zero = np.broadcast_to(h == 0.0, f.shape)
    if np.any(zero):
        wb = np.broadcast_to(w, f.shape)
        ab = np.broadcast_to(a, f.shape)
        f = np.where(zero, np.where(wb < 0.0, np.inf, 1.0 - ab), f)
    return f


def write_surface_csv(path, w1: np.ndarray, w2: np.ndarray, rmse: np.ndarray) -> None:
    """Row-major CSV (w1 outer, w2 inner); infinities serialised as 'inf'."""
    with open(path, "w", newline="") as fh:
        fh.write("w1,w2,rmse\n")
        for i, a in enumerate(w1):
            for j, b in enumerate(w2):
                v = rmse[i, j]
                sv = "inf" if math.isinf(v) else repr(float(v))
                fh.write(f"{float(a)!r},{float(b)!r},{sv}\n")
