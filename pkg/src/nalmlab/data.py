"""Sampling distributions and synthetic task batches.

Range labels follow the notation of the experiment tables, e.g. "U[-2,2)",
"TN(1,3)[-10,5)", "B[10,100)" and the union form "U[[-6,-2),[2,6)]".
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DISTRIBUTIONS = ("uniform", "union", "truncnormal", "benford")
OPERATIONS = ("divide", "reciprocal", "multiply")

# Abort rejection sampling when almost nothing lands inside the bounds.
MIN_ACCEPTANCE = 1e-6


@dataclass(frozen=True)
class RangeSpec:
    dist: str
    lo: float = 0.0
    hi: float = 0.0
    segments: tuple = ()
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.dist not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.dist!r}")
        if self.dist == "union":
            if not self.segments:
                raise ValueError("union range needs segments")
            for a, b in self.segments:
                if not a < b:
                    raise ValueError(f"bad segment [{a},{b})")
        else:
            if not self.lo < self.hi:
                raise ValueError(f"need lo < hi, got [{self.lo},{self.hi})")
        if self.dist == "truncnormal" and self.sd <= 0:
            raise ValueError("truncated normal needs sd > 0")
        if self.dist == "benford" and self.lo <= 0:
            raise ValueError("benford bounds must be strictly positive")

    @staticmethod
    def uniform(lo, hi) -> "RangeSpec":
        return RangeSpec("uniform", lo=float(lo), hi=float(hi))

    @staticmethod
    def union(segments) -> "RangeSpec":
        segs = tuple((float(a), float(b)) for a, b in segments)
        return RangeSpec("union", segments=segs)

    @staticmethod
    def truncnormal(mean, sd, lo, hi) -> "RangeSpec":
        return RangeSpec("truncnormal", lo=float(lo), hi=float(hi),
                         mean=float(mean), sd=float(sd))

    @staticmethod
    def benford(lo, hi) -> "RangeSpec":
        return RangeSpec("benford", lo=float(lo), hi=float(hi))

    def label(self) -> str:
        if self.dist == "uniform":
            return f"U[{_fmt(self.lo)},{_fmt(self.hi)})"
        if self.dist == "union":
            inner = ",".join(f"[{_fmt(a)},{_fmt(b)})" for a, b in self.segments)
            return f"U[{inner}]"
        if self.dist == "truncnormal":
            return (f"TN({_fmt(self.mean)},{_fmt(self.sd)})"
                    f"[{_fmt(self.lo)},{_fmt(self.hi)})")
        return f"B[{_fmt(self.lo)},{_fmt(self.hi)})"


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_SEG = rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*\)"


def parse_range_label(label: str) -> RangeSpec:
    """Parse the table notation used throughout the experiment configs."""
    s = label.strip()
    m = re.fullmatch(rf"U\[\s*((?:{_SEG}\s*,?\s*)+)\]", s)
    if m and s.count("[") > 1:
        segs = [(float(a), float(b)) for a, b in re.findall(_SEG, m.group(1))]
        return RangeSpec.union(segs)
    m = re.fullmatch(rf"U{_SEG}", s)
    if m:
        return RangeSpec.uniform(float(m.group(1)), float(m.group(2)))
    m = re.fullmatch(rf"TN\(\s*({_NUM})\s*,\s*({_NUM})\s*\){_SEG}", s)
    if m:
        return RangeSpec.truncnormal(float(m.group(1)), float(m.group(2)),
                                     float(m.group(3)), float(m.group(4)))
    m = re.fullmatch(rf"B{_SEG}", s)
    if m:
        return RangeSpec.benford(float(m.group(1)), float(m.group(2)))
    raise ValueError(f"cannot parse range label {label!r}")


def _normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def sample(spec: RangeSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n values from the range's distribution (half-open bounds)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if spec.dist == "uniform":
        out = spec.lo + (spec.hi - spec.lo) * rng.random(n)
        if spec.lo == 0.0:
            # Bounds open at zero: resample exact zeros.
            while True:
                zero = out == 0.0
                if not np.any(zero):
                    break
                out[zero] = spec.lo + (spec.hi - spec.lo) * rng.random(int(zero.sum()))
        return out
    if spec.dist == "union":
        lows = np.array([a for a, _ in spec.segments])
        widths = np.array([b - a for a, b in spec.segments])
        p = widths / widths.sum()
        idx = rng.choice(len(spec.segments), size=n, p=p)
        return lows[idx] + widths[idx] * rng.random(n)
    if spec.dist == "truncnormal":
        acc = _normal_cdf((spec.hi - spec.mean) / spec.sd) - _normal_cdf(
            (spec.lo - spec.mean) / spec.sd
        )
        if acc < MIN_ACCEPTANCE:
            raise ValueError(
                f"truncated normal acceptance {acc:.2e} below {MIN_ACCEPTANCE}: "
                f"{spec.label()}"
            )
        out = np.empty(n)
        filled = 0
        while filled < n:
            need = n - filled
            draw = rng.normal(spec.mean, spec.sd, size=int(need / max(acc, 1e-3)) + 16)
            keep = draw[(draw >= spec.lo) & (draw < spec.hi)][:need]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return out
    # Benford: log-uniform, which gives Benford-distributed leading digits.
    lo, hi = math.log(spec.lo), math.log(spec.hi)
    out = np.exp(lo + (hi - lo) * rng.random(n))
    while True:
        bad = (out < spec.lo) | (out >= spec.hi)
        if not np.any(bad):
            return out
        out[bad] = np.exp(lo + (hi - lo) * rng.random(int(bad.sum())))


@dataclass(frozen=True)
class TaskSpec:
    """One synthetic regression task over an I-wide input vector."""

    input_size: int
    relevant_indices: tuple
    operation: str
    interp: tuple  # one RangeSpec per input element
    extrap: tuple

    def __post_init__(self):
        if self.operation not in OPERATIONS:
            raise ValueError(f"unknown operation {self.operation!r}")
        need = 1 if self.operation == "reciprocal" else 2
        if len(self.relevant_indices) != need:
            raise ValueError(f"{self.operation} needs {need} relevant indices")
        if any(i >= self.input_size or i < 0 for i in self.relevant_indices):
            raise ValueError("relevant index out of range")
        for ranges in (self.interp, self.extrap):
            if len(ranges) != self.input_size:
                raise ValueError("need one RangeSpec per input element")

    @staticmethod
    def make(operation, input_size, interp, extrap,
             relevant_indices: Optional[Sequence[int]] = None) -> "TaskSpec":
        """Build a task; a single RangeSpec is shared across all elements."""
        if isinstance(interp, RangeSpec):
            interp = (interp,) * input_size
        if isinstance(extrap, RangeSpec):
            extrap = (extrap,) * input_size
        if relevant_indices is None:
            relevant_indices = (0,) if operation == "reciprocal" else (0, 1)
        return TaskSpec(input_size, tuple(relevant_indices), operation,
                        tuple(interp), tuple(extrap))

    def target(self, x: np.ndarray) -> np.ndarray:
        if self.operation == "divide":
            i, j = self.relevant_indices
            return x[:, i] / x[:, j]
        if self.operation == "reciprocal":
            return 1.0 / x[:, self.relevant_indices[0]]
        i, j = self.relevant_indices
        return x[:, i] * x[:, j]

    def denominator_index(self) -> Optional[int]:
        if self.operation == "divide":
            return self.relevant_indices[1]
        if self.operation == "reciprocal":
            return self.relevant_indices[0]
        return None

    def label(self) -> str:
        parts = {r.label() for r in self.interp}
        rng = self.interp[0].label() if len(parts) == 1 else "|".join(
            r.label() for r in self.interp
        )
        return f"{self.operation}/I{self.input_size}/{rng}"

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "relevant_indices": list(self.relevant_indices),
            "operation": self.operation,
            "interp": [r.label() for r in self.interp],
            "extrap": [r.label() for r in self.extrap],
        }


def build_batch(task: TaskSpec, split: str, n: int, rng: np.random.Generator):
    """Sample a batch; train/val use interpolation ranges, test extrapolation.

    Rows whose denominator is exactly zero are resampled.
    """
    if split not in ("train", "val", "test"):
        raise ValueError(f"split must be train/val/test, got {split!r}")
    ranges = task.interp if split in ("train", "val") else task.extrap
    x = np.column_stack([sample(r, n, rng) for r in ranges])
    den = task.denominator_index()
    if den is not None:
        while True:
            bad = x[:, den] == 0.0
            if not np.any(bad):
                break
            k = int(bad.sum())
            x[bad] = np.column_stack([sample(r, k, rng) for r in ranges])
    y = task.target(x)
    return x, y


def export_csv(x: np.ndarray, y: np.ndarray, path) -> None:
    """Debug dump with header x_0..x_{I-1},y."""
    cols = [f"x_{i}" for i in range(x.shape[1])] + ["y"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row, target in zip(x, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{float(target)!r}\n")
