"""Module kinds and their static properties (legal weight ranges, gating)."""

from __future__ import annotations

import enum


class ModuleKind(enum.Enum):
    REAL_NPU = "realnpu"
    NPU = "npu"
    NRU = "nru"
    NRU_SEP_SIGN = "nru_sep"
    NMRU = "nmru"
    NAU = "nau"
    NMU = "nmu"

    def __str__(self) -> str:
        return self.value


# Scale of the tanh approximation to |w| used by the NRU family while training.
TANH_SCALE = 1000.0

# Default epsilon added to |x| (Real NPU / NPU relevance gate) and to the
# denominator of the NMRU's reciprocal augmentation.
DEFAULT_EPS = 1e-7

# Legal (min, max) range of the weight matrix per kind; enforced by clip_params.
WEIGHT_RANGE = {
    ModuleKind.REAL_NPU: (-1.0, 1.0),
    ModuleKind.NPU: (-1.0, 1.0),
    ModuleKind.NRU: (-1.0, 1.0),
    ModuleKind.NRU_SEP_SIGN: (-1.0, 1.0),
    ModuleKind.NMRU: (0.0, 1.0),
    ModuleKind.NAU: (-1.0, 1.0),
    ModuleKind.NMU: (0.0, 1.0),
}

# Gate vectors (where present) always live in [0, 1].
GATE_RANGE = (0.0, 1.0)


def has_gate(kind: ModuleKind) -> bool:
    """True for kinds that carry a gate vector by default."""
    return kind in (ModuleKind.REAL_NPU, ModuleKind.NPU)


def parse_kind(name: str) -> ModuleKind:
    """Parse a kind name as used on the CLI (case-insensitive)."""
    key = name.strip().lower().replace("-", "_")
    aliases = {
        "realnpu": ModuleKind.REAL_NPU,
        "real_npu": ModuleKind.REAL_NPU,
        "npu": ModuleKind.NPU,
        "nru": ModuleKind.NRU,
        "nru_sep": ModuleKind.NRU_SEP_SIGN,
        "nru_sep_sign": ModuleKind.NRU_SEP_SIGN,
        "nmru": ModuleKind.NMRU,
        "nau": ModuleKind.NAU,
        "nmu": ModuleKind.NMU,
    }
    if key not in aliases:
        raise ValueError(f"unknown module kind: {name!r}")
    return aliases[key]
