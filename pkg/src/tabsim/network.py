"""Three-layer TAB network: input map, hidden population, linear outputs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .device import NeuronParams, PhysicalConstants, population_arrays
from .splitter import QuantizedWeightVector

__all__ = ["InputMap", "Dataset", "TabNetwork", "build_hidden_matrix", "forward"]

# inputs may land this far (volts) outside the declared swing before we refuse them
_VOLTAGE_MARGIN = 1.0


@dataclass(frozen=True)
class InputMap:
    """Affine map from task inputs ``[x_lo, x_hi]`` onto gate voltages ``[v_lo, v_hi]``."""

    x_lo: float = -1.0
    x_hi: float = 1.0
    v_lo: float = 0.3
    v_hi: float = 0.9

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError(f"input domain needs x_lo < x_hi, got {self.x_lo}, {self.x_hi}")
        if self.v_lo == self.v_hi:
            raise ValueError("input map gain must be nonzero")

    @property
    def gain(self) -> float:
        return (self.v_hi - self.v_lo) / (self.x_hi - self.x_lo)

    def __call__(self, x):
        return self.v_lo + self.gain * (np.asarray(x, dtype=float) - self.x_lo)

    def inverse(self, v):
        return self.x_lo + (np.asarray(v, dtype=float) - self.v_lo) / self.gain

    def voltage_bounds(self) -> tuple[float, float]:
        lo, hi = sorted((self.v_lo, self.v_hi))
        return lo - _VOLTAGE_MARGIN, hi + _VOLTAGE_MARGIN


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = _as_2d(self.inputs)
        y = _as_2d(self.targets)
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"{x.shape[0]} inputs but {y.shape[0]} targets")
        if np.isnan(x).any() or np.isnan(y).any():
            raise ValueError("dataset contains NaN")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    @property
    def C(self) -> int:
        return self.inputs.shape[0]


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return a.reshape(1, 1)
    if a.ndim == 1:
        return a[:, None]
    return a


@dataclass
class TabNetwork:
    """A hidden population plus output weights.

    ``weights`` is either a real ``(L, K)`` array or a list of ``K``
    :class:`QuantizedWeightVector`. Set it once with :meth:`set_weights`
    before sharing the network between threads.
    """

    population: Sequence[NeuronParams]
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    input_map: InputMap = field(default_factory=InputMap)
    I_b_nominal: float | None = None
    weights: np.ndarray | list[QuantizedWeightVector] | None = None

    def __post_init__(self):
        self.population = tuple(self.population)
        if len(self.population) < 1:
            raise ValueError("network needs at least one hidden neuron")
        if self.I_b_nominal is None:
            self.I_b_nominal = float(np.median([p.I_b for p in self.population]))
        if not self.I_b_nominal > 0:
            raise ValueError("nominal bias current must be > 0")
        self._cols = population_arrays(self.population)
        if self.weights is not None:
            self.set_weights(self.weights)

    @property
    def L(self) -> int:
        return len(self.population)

    @property
    def K(self) -> int:
        return self.weight_matrix().shape[1]

    def set_weights(self, weights) -> None:
        if isinstance(weights, QuantizedWeightVector):
            weights = [weights]
        if isinstance(weights, (list, tuple)) and weights and isinstance(weights[0], QuantizedWeightVector):
            for q in weights:
                if len(q) != self.L:
                    raise ValueError(f"quantized weight vector has {len(q)} entries, network has {self.L} neurons")
            self.weights = list(weights)
            return
        w = np.asarray(weights, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        if w.ndim != 2 or w.shape[0] != self.L:
            raise ValueError(f"weights of shape {np.shape(weights)} do not match {self.L} neurons")
        self.weights = w

    def weight_matrix(self) -> np.ndarray:
        """Effective real ``(L, K)`` weights, dequantizing if needed."""
        if self.weights is None:
            raise ValueError("network has no output weights yet")
        if isinstance(self.weights, list):
            return np.column_stack([q.values() for q in self.weights])
        return self.weights

    def activations(self, v: np.ndarray) -> np.ndarray:
        """Normalized mirrored currents for gate voltages ``v``, shape (C, L)."""
        c = self._cols
        z = (v[:, None] + c["dV_os"] - c["V_ref"]) / (c["n"] * self.constants.U_T)
        return (c["g_mirror"] * c["I_b"] / self.I_b_nominal) * expit(z)


def _siso_inputs(inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError(f"only single-input networks are modeled, got m = {x.shape[1]}")
        x = x[:, 0]
    return np.atleast_1d(x)


def build_hidden_matrix(net: TabNetwork, inputs) -> np.ndarray:
    """Hidden activation matrix ``H`` of shape (C, L).

    Entry ``(n, i)`` is neuron ``i``'s mirrored current at input ``x_n``
    divided by the nominal bias current, so entries are O(1).
    """
    x = _siso_inputs(inputs)
    if not np.all(np.isfinite(x)):
        raise ValueError("inputs must be finite")
    v = net.input_map(x)
    lo, hi = net.input_map.voltage_bounds()
    if np.any((v < lo) | (v > hi)):
        raise ValueError(f"inputs map outside the sane voltage range [{lo}, {hi}] V")
    return net.activations(v)


def forward(net: TabNetwork, x) -> np.ndarray:
    """Network output ``sum_i w_ji h_i(x)``.

    A scalar input gives a length-K vector; a batch of C inputs gives (C, K).
    """
    W = net.weight_matrix()
    single = np.ndim(x) == 0
    H = build_hidden_matrix(net, x)
    y = H @ W
    return y[0] if single else y
