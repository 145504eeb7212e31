"""nalmlab: neural arithmetic logic modules for division.

Implements the Real NPU (with robustness modifications), NPU, NRU (joint and
separate-sign), NMRU and the NAU/NMU support units with exact analytic
gradients, the synthetic division benchmarks with their evaluation protocol,
and the stacked-layer RMSE loss surfaces.
"""

from ._backend import BACKEND
from .core import ForwardCache, backward, forward, nru_weight_grad_closed_form
from .data import RangeSpec, TaskSpec, build_batch, parse_range_label, sample
from .evaluation import (Threshold, compute_threshold, confidence_interval,
                         sign_oracle, sparsity_error)
from .kinds import DEFAULT_EPS, TANH_SCALE, ModuleKind, parse_kind
from .landscape import SurfaceSpec, rmse_surface, stacked_prediction
from .losses import compute_loss
from .optim import Adam, SGD, clip_grad_norm
from .params import (ModuleParams, ParamGrads, clip_params, golden_params,
                     init_params)
from .schedules import RegSchedule, discretization_penalty, l_penalty
from .sweep import (PRESETS, VARIANTS, SweepSpec, SweepSummary, aggregate,
                    make_train_config, run_sweep)
from .train import RunRecord, TrainConfig, train_run, write_trace_csv

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ForwardCache", "backward", "forward",
    "nru_weight_grad_closed_form", "RangeSpec", "TaskSpec", "build_batch",
    "parse_range_label", "sample", "Threshold", "compute_threshold",
    "confidence_interval", "sign_oracle", "sparsity_error", "DEFAULT_EPS",
    "TANH_SCALE", "ModuleKind", "parse_kind", "SurfaceSpec", "rmse_surface",
    "stacked_prediction", "compute_loss", "Adam", "SGD", "clip_grad_norm",
    "ModuleParams", "ParamGrads", "clip_params", "golden_params",
    "init_params", "RegSchedule", "discretization_penalty", "l_penalty",
    "PRESETS", "VARIANTS", "SweepSpec", "SweepSummary", "aggregate",
    "make_train_config", "run_sweep", "RunRecord", "TrainConfig", "train_run",
    "write_trace_csv", "__version__",
]
