"""Hidden-neuron differential pair in weak inversion.

Each hidden neuron is a differential pair (M1, M2) biased by a tail current
``I_b``. In subthreshold the tail current is shared between the two branches
as a logistic function of the differential gate voltage; the branch current
``I_1`` is copied by a current mirror and becomes the neuron's activation.

How the circuit realizes the generic random-projection hidden unit
``g(w * x + b + o)``:

* ``w = 1 / (n * U_T)``       input gain, random through slope-factor mismatch
* ``b = dV_os / (n * U_T)``   random bias, from input-referred offset mismatch
* ``o = -V_ref / (n * U_T)``  systematic offset, one reference voltage per neuron
* ``g``                       the logistic, scaled by ``g_mirror * I_b``

where the argument is expressed in volts at the gate (the task-space input is
mapped to volts by :class:`tabsim.network.InputMap`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "PhysicalConstants",
    "NeuronParams",
    "MismatchSpec",
    "OffsetScheme",
    "TuningCurve",
    "diff_pair_currents",
    "neuron_response",
    "sample_population",
    "tuning_curve",
    "population_arrays",
    "projection_coordinates",
]

# smallest allowed multiplicative factor for relative mismatch draws
_REL_FLOOR = 0.01
N_MIN, N_MAX = 1.0, 2.0


class InvalidParameterError(ValueError):
    """A device parameter violates its physical range."""


@dataclass(frozen=True)
class PhysicalConstants:
    U_T: float = 0.02585  # thermal voltage at 300 K

    def __post_init__(self):
        if not np.isfinite(self.U_T) or self.U_T <= 0:
            raise InvalidParameterError(f"U_T must be > 0, got {self.U_T}")


@dataclass(frozen=True)
class NeuronParams:
    """Physical parameters of one hidden neuron.

    ``dV_os`` and ``g_mirror`` are the sampled mismatch terms; ``I_b`` and ``n``
    also carry mismatch once drawn by :func:`sample_population`.
    """

    I_b: float = 2e-9
    n: float = 1.3
    V_ref: float = 0.6
    dV_os: float = 0.0
    g_mirror: float = 1.0

    def __post_init__(self):
        vals = (self.I_b, self.n, self.V_ref, self.dV_os, self.g_mirror)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidParameterError(f"non-finite neuron parameter in {self}")
        if self.I_b <= 0:
            raise InvalidParameterError(f"I_b must be > 0, got {self.I_b}")
        if not N_MIN <= self.n <= N_MAX:
            raise InvalidParameterError(f"slope factor n must lie in [1, 2], got {self.n}")
        if self.g_mirror <= 0:
            raise InvalidParameterError(f"g_mirror must be > 0, got {self.g_mirror}")

    def replace(self, **changes) -> "NeuronParams":
        return NeuronParams(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class MismatchSpec:
    """Standard deviations of the independent Gaussian mismatch draws."""

    sigma_Vos: float = 5e-3
    sigma_Ib_rel: float = 0.05
    sigma_mirror_rel: float = 0.02
    sigma_n: float = 0.02

    def __post_init__(self):
        for name in ("sigma_Vos", "sigma_Ib_rel", "sigma_mirror_rel", "sigma_n"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidParameterError(f"{name} must be >= 0, got {v}")

    @classmethod
    def ideal(cls) -> "MismatchSpec":
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def is_ideal(self) -> bool:
        return not any((self.sigma_Vos, self.sigma_Ib_rel, self.sigma_mirror_rel, self.sigma_n))


@dataclass(frozen=True)
class OffsetScheme:
    """How the systematic reference voltages are assigned across neurons.

    Build with :meth:`uniform_span`, :meth:`explicit` or :meth:`constant`.
    ``explicit`` lists are cycled when the population is larger than the list.
    """

    kind: str
    v_min: float | None = None
    v_max: float | None = None
    values: tuple[float, ...] = field(default_factory=tuple)
    v: float | None = None

    KINDS = ("uniform_span", "explicit_list", "constant")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidParameterError(f"unknown offset scheme {self.kind!r}")
        if self.kind == "uniform_span":
            if self.v_min is None or self.v_max is None or not self.v_min < self.v_max:
                raise InvalidParameterError(
                    f"uniform_span needs v_min < v_max, got {self.v_min}, {self.v_max}"
                )
        elif self.kind == "explicit_list":
            if len(self.values) == 0:
                raise InvalidParameterError("explicit_list needs at least one value")
        elif self.v is None:
            raise InvalidParameterError("constant scheme needs a value")

    @classmethod
    def uniform_span(cls, v_min: float, v_max: float) -> "OffsetScheme":
        return cls("uniform_span", v_min=float(v_min), v_max=float(v_max))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "OffsetScheme":
        return cls("explicit_list", values=tuple(float(x) for x in values))

    @classmethod
    def constant(cls, v: float) -> "OffsetScheme":
        return cls("constant", v=float(v))

    def reference_voltages(self, L: int) -> np.ndarray:
        if L < 1:
            raise ValueError(f"population size must be >= 1, got {L}")
        if self.kind == "uniform_span":
            if L == 1:
                return np.array([0.5 * (self.v_min + self.v_max)])
            return np.linspace(self.v_min, self.v_max, L)
        if self.kind == "explicit_list":
            return np.resize(np.asarray(self.values, dtype=float), L)
        return np.full(L, self.v)

    def to_dict(self) -> dict:
        if self.kind == "uniform_span":
            return {"kind": self.kind, "v_min": self.v_min, "v_max": self.v_max}
        if self.kind == "explicit_list":
            return {"kind": self.kind, "values": list(self.values)}
        return {"kind": self.kind, "v": self.v}

    @classmethod
    def from_dict(cls, d: dict) -> "OffsetScheme":
        kind = d.get("kind")
        if kind == "uniform_span":
            return cls.uniform_span(d["v_min"], d["v_max"])
        if kind == "explicit_list":
            return cls.explicit(d["values"])
        if kind == "constant":
            return cls.constant(d["v"])
        raise InvalidParameterError(f"unknown offset scheme {kind!r}")


@dataclass(frozen=True)
class TuningCurve:
    v_grid: np.ndarray
    i_out: np.ndarray

    def __len__(self):
        return len(self.v_grid)


def _logistic_arg(v_in, p: NeuronParams, c: PhysicalConstants):
    return (np.asarray(v_in, dtype=float) + p.dV_os - p.V_ref) / (p.n * c.U_T)


def diff_pair_currents(v_in, p: NeuronParams, c: PhysicalConstants = PhysicalConstants()):
    """Branch currents ``(I_1, I_2)`` of the differential pair.

    The exponential ratio is evaluated as a logistic, so differential inputs of
    many volts neither overflow nor lose the complementary branch. Works on
    scalars or arrays of ``v_in``.
    """
    z = _logistic_arg(v_in, p, c)
    return p.I_b * expit(z), p.I_b * expit(-z)


def neuron_response(v_in, p: NeuronParams, c: PhysicalConstants = PhysicalConstants()):
    """Mirrored output current ``g_mirror * I_1``: the neuron's activation."""
    i1, _ = diff_pair_currents(v_in, p, c)
    return p.g_mirror * i1


def tuning_curve(
    p: NeuronParams, v_grid: Sequence[float], c: PhysicalConstants = PhysicalConstants()
) -> TuningCurve:
    v = np.asarray(v_grid, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("voltage grid is empty")
    if np.any(np.diff(v) <= 0):
        raise ValueError("voltage grid must be strictly increasing")
    return TuningCurve(v_grid=v, i_out=np.asarray(neuron_response(v, p, c), dtype=float))


def sample_population(
    L: int,
    mismatch: MismatchSpec = MismatchSpec(),
    offsets: OffsetScheme = OffsetScheme.uniform_span(0.3, 0.9),
    nominal: NeuronParams = NeuronParams(),
    seed: int = 0,
) -> list[NeuronParams]:
    """Draw ``L`` neurons around ``nominal`` with systematic offsets and mismatch.

    Every draw comes from a generator seeded by ``seed`` alone, and the four
    mismatch vectors are always drawn in the same order, so the population is
    a pure function of the arguments.
    """
    if int(L) != L or L < 1:
        raise ValueError(f"population size must be a positive integer, got {L}")
    L = int(L)
    v_ref = offsets.reference_voltages(L)
    rng = np.random.default_rng(seed)
    z_vos = rng.standard_normal(L)
    z_ib = rng.standard_normal(L)
    z_mirror = rng.standard_normal(L)
    z_n = rng.standard_normal(L)

    dv_os = mismatch.sigma_Vos * z_vos
    i_b = nominal.I_b * np.maximum(1.0 + mismatch.sigma_Ib_rel * z_ib, _REL_FLOOR)
    g = nominal.g_mirror * np.maximum(1.0 + mismatch.sigma_mirror_rel * z_mirror, _REL_FLOOR)
    n = np.clip(nominal.n + mismatch.sigma_n * z_n, N_MIN, N_MAX)

    return [
        NeuronParams(
            I_b=float(i_b[k]),
            n=float(n[k]),
            V_ref=float(v_ref[k]),
            dV_os=float(dv_os[k]) + nominal.dV_os,
            g_mirror=float(g[k]),
        )
        for k in range(L)
    ]


def population_arrays(population: Sequence[NeuronParams]) -> dict[str, np.ndarray]:
    """Column arrays of a population, for vectorized evaluation."""
    return {
        name: np.array([getattr(p, name) for p in population], dtype=float)
        for name in ("I_b", "n", "V_ref", "dV_os", "g_mirror")
    }


def projection_coordinates(p: NeuronParams, c: PhysicalConstants = PhysicalConstants()):
    """``(w, b, o)`` of the hidden unit ``g(w * v + b + o)`` this neuron realizes."""
    scale = 1.0 / (p.n * c.U_T)
    return scale, p.dV_os * scale, -p.V_ref * scale
