"""Output-weight block: binary-weighted current splitter and weight codes.

An N-stage splitter ladder hands ``I_in / 2**k`` to stage ``k`` (k = 1 is the
MSB) and terminates with one more ``I_in / 2**N`` branch, so the branches sum
to ``I_in``. Each stage switch routes its branch either to ``I_good`` (summed
into the output neuron) or to ``I_dump`` (ground). The terminating branch is
always dumped.

Trained weights are signed; the ladder only produces non-negative fractions.
A sign bit selects whether ``I_good`` lands on the excitatory or inhibitory
summing node, and one global scale per output absorbs the weight magnitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SplitterCode",
    "QuantizedWeight",
    "QuantizedWeightVector",
    "splitter_fraction",
    "stage_currents",
    "route_current",
    "quantize",
    "dequantize",
    "quantize_vector",
]

MAX_WIDTH = 24
DEFAULT_WIDTH = 13


@dataclass(frozen=True)
class SplitterCode:
    bits: int
    width: int = DEFAULT_WIDTH

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"splitter width must be in [1, {MAX_WIDTH}], got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"code {self.bits} does not fit in {self.width} bits")

    def stage_bits(self) -> list[int]:
        """Switch states, MSB (stage 1) first."""
        return [(self.bits >> (self.width - k)) & 1 for k in range(1, self.width + 1)]


@dataclass(frozen=True)
class QuantizedWeight:
    sign: int
    code: SplitterCode

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def value(self) -> float:
        return self.sign * splitter_fraction(self.code)


@dataclass(frozen=True)
class QuantizedWeightVector:
    """Quantized output weights of one output neuron plus their global scale."""

    weights: tuple[QuantizedWeight, ...]
    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if len(self.weights) == 0:
            raise ValueError("weight vector is empty")

    def __len__(self):
        return len(self.weights)

    @property
    def width(self) -> int:
        return self.weights[0].code.width

    def values(self) -> np.ndarray:
        """Effective real weights ``scale * sign * fraction``."""
        return self.scale * np.array([w.value for w in self.weights])


def splitter_fraction(code: SplitterCode) -> float:
    # sum of 2**-k over set stages equals bits / 2**N, exact in binary floating point
    return code.bits / float(1 << code.width)


def stage_currents(I_in: float, width: int = DEFAULT_WIDTH) -> np.ndarray:
    """Branch currents of the ladder: ``width`` stages then the terminator."""
    k = np.arange(1, width + 1)
    return np.append(I_in * np.ldexp(1.0, -k), I_in * math.ldexp(1.0, -width))


def route_current(I_in: float, code: SplitterCode) -> tuple[float, float]:
    """Split ``I_in`` into ``(I_good, I_dump)`` according to the switch code."""
    if not I_in >= 0:
        raise ValueError(f"input current must be >= 0, got {I_in}")
    I_good = I_in * splitter_fraction(code)
    # dumped share is the complementary dyadic fraction, terminator included
    I_dump = I_in * ((1 << code.width) - code.bits) / float(1 << code.width)
    return I_good, I_dump


def quantize(w: float, width: int = DEFAULT_WIDTH) -> QuantizedWeight:
    """Nearest signed splitter code for ``w`` in [-1, 1].

    Magnitudes round half away from zero and saturate at the all-ones code.
    """
    if not math.isfinite(w) or abs(w) > 1:
        raise ValueError(f"weight must lie in [-1, 1] before quantization, got {w}")
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"splitter width must be in [1, {MAX_WIDTH}], got {width}")
    full = 1 << width
    bits = min(math.floor(abs(w) * full + 0.5), full - 1)
    return QuantizedWeight(sign=-1 if w < 0 else 1, code=SplitterCode(bits, width))


def dequantize(q: QuantizedWeight) -> float:
    return q.value


def quantize_vector(w: Sequence[float], width: int = DEFAULT_WIDTH) -> QuantizedWeightVector:
    """Normalize by ``max|w|`` and quantize every entry.

    An all-zero vector keeps scale 1 so the result stays valid.
    """
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a non-empty finite vector")
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        scale = 1.0
    # clip guards the one-ulp overshoot of w / scale at the extreme entry
    normed = np.clip(w / scale, -1.0, 1.0)
    return QuantizedWeightVector(tuple(quantize(float(x), width) for x in normed), scale)
