"""Desk-scale experiments: regression, heterogeneity, bit depth, mismatch Monte Carlo.

Every experiment is a pure function of its :class:`ExperimentConfig`; files are
written only after all numbers are computed, so a failing run leaves no
partial output. Report JSON stores file names relative to ``output_dir``.
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .device import MismatchSpec, NeuronParams, OffsetScheme, PhysicalConstants, sample_population
from .learning import condition_diagnostics, nrmse, train
from .network import InputMap, TabNetwork, build_hidden_matrix
from .splitter import MAX_WIDTH

__all__ = [
    "TaskSpec",
    "ExperimentConfig",
    "ExperimentReport",
    "run_regression",
    "heterogeneity_study",
    "bitdepth_sweep",
    "mismatch_mc",
    "load_config",
]

THREADS_ENV = "TAB_SIM_THREADS"


def _sinc8(x):
    # np.sinc(t) = sin(pi t) / (pi t) with value 1 at t = 0
    return np.sinc(8.0 * x)


TASKS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": lambda x: np.sin(np.pi * x),
    "cube": lambda x: x**3,
    "sinc": _sinc8,
}


@dataclass(frozen=True)
class TaskSpec:
    """Regression target on ``[x_lo, x_hi]``.

    ``custom`` tasks need ``fn``; they cannot be loaded from JSON.
    """

    name: str = "sin"
    x_lo: float = -1.0
    x_hi: float = 1.0
    n_train: int = 256
    n_test: int = 255
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.name not in (*TASKS, "custom"):
            raise ValueError(f"unknown task {self.name!r}; choose from {sorted(TASKS)} or custom")
        if self.name == "custom" and self.fn is None:
            raise ValueError("custom task needs a target function")
        if not self.x_lo < self.x_hi:
            raise ValueError(f"task domain needs x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]")
        if self.n_train < 2 or self.n_test < 2:
            raise ValueError("n_train and n_test must both be >= 2")

    def target(self, x):
        f = self.fn if self.name == "custom" else TASKS[self.name]
        return np.asarray(f(np.asarray(x, dtype=float)), dtype=float)

    def train_inputs(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n_train)

    def test_inputs(self) -> np.ndarray:
        """Midpoints of an ``n_test + 1`` grid; the default sizes interleave with training."""
        g = np.linspace(self.x_lo, self.x_hi, self.n_test + 1)
        x = 0.5 * (g[:-1] + g[1:])
        step = (self.x_hi - self.x_lo) / (self.n_train - 1)
        gap = np.abs(np.subtract.outer(x, self.train_inputs())).min()
        if gap < 1e-9 * step:
            raise ValueError(f"test grid of {self.n_test} points overlaps the training grid")
        return x

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("name", "x_lo", "x_hi", "n_train", "n_test")}


@dataclass(frozen=True)
class ExperimentConfig:
    task: TaskSpec = field(default_factory=TaskSpec)
    L: int = 34
    offsets: OffsetScheme = field(default_factory=lambda: OffsetScheme.uniform_span(0.3, 0.9))
    mismatch: MismatchSpec = field(default_factory=MismatchSpec)
    quant_bits: int | None = None
    seed: int = 0
    output_dir: str = "out"
    nominal: NeuronParams = field(default_factory=NeuronParams)
    input_map: InputMap = field(default_factory=InputMap)
    U_T: float = PhysicalConstants.U_T
    ridge: float = 0.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        if self.quant_bits is not None and not 1 <= self.quant_bits <= MAX_WIDTH:
            raise ValueError(f"quant_bits must be in [1, {MAX_WIDTH}], got {self.quant_bits}")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        if (self.task.x_lo, self.task.x_hi) != (self.input_map.x_lo, self.input_map.x_hi):
            object.__setattr__(
                self, "input_map", replace(self.input_map, x_lo=self.task.x_lo, x_hi=self.task.x_hi)
            )

    def to_dict(self) -> dict:
        return {
            "task": self.task.to_dict(),
            "L": self.L,
            "offsets": self.offsets.to_dict(),
            "mismatch": asdict(self.mismatch),
            "quant_bits": self.quant_bits,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "nominal": asdict(self.nominal),
            "input_map": {"v_lo": self.input_map.v_lo, "v_hi": self.input_map.v_hi},
            "U_T": self.U_T,
            "ridge": self.ridge,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(d)
        if "task" in kw:
            kw["task"] = TaskSpec(**kw["task"])
        if "offsets" in kw:
            kw["offsets"] = OffsetScheme.from_dict(kw["offsets"])
        if "mismatch" in kw:
            kw["mismatch"] = MismatchSpec(**kw["mismatch"])
        if "nominal" in kw:
            kw["nominal"] = NeuronParams(**kw["nominal"])
        if "input_map" in kw:
            kw["input_map"] = InputMap(**kw["input_map"])
        return cls(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class ExperimentReport:
    """Metrics and emitted files of one experiment.

    ``wall_seconds`` is kept out of the JSON unless asked for, so reruns are
    byte-identical.
    """

    experiment: str
    config: dict
    train_nrmse: float
    test_nrmse: float
    capacity: int
    rank: int
    condition_number: float
    files: dict[str, str] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    wall_seconds: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_seconds")
        return d

    def path(self, key: str) -> Path:
        return Path(self.config["output_dir"]) / self.files[key]


# ---------------------------------------------------------------------------
# core


@dataclass
class _Fit:
    train_nrmse: float
    test_nrmse: float
    capacity: int
    rank: int
    condition_number: float
    x_test: np.ndarray
    y_test: np.ndarray
    y_hat: np.ndarray
    real_train_nrmse: float
    real_test_nrmse: float
    H_train: np.ndarray
    H_test: np.ndarray
    W_real: np.ndarray


def _network(cfg: ExperimentConfig, seed: int, offsets=None, mismatch=None) -> TabNetwork:
    pop = sample_population(
        cfg.L,
        cfg.mismatch if mismatch is None else mismatch,
        cfg.offsets if offsets is None else offsets,
        cfg.nominal,
        seed,
    )
    return TabNetwork(pop, PhysicalConstants(cfg.U_T), cfg.input_map, I_b_nominal=cfg.nominal.I_b)


def _fit(cfg: ExperimentConfig, seed: int | None = None, offsets=None, mismatch=None) -> _Fit:
    net = _network(cfg, cfg.seed if seed is None else seed, offsets, mismatch)
    task = cfg.task
    x_tr, x_te = task.train_inputs(), task.test_inputs()
    y_tr, y_te = task.target(x_tr), task.target(x_te)
    H_tr = build_hidden_matrix(net, x_tr)
    H_te = build_hidden_matrix(net, x_te)
    rep = train(H_tr, y_tr, cfg.quant_bits, ridge=cfg.ridge)
    diag = condition_diagnostics(H_tr)
    W = rep.W2_effective
    y_hat = (H_te @ W)[:, 0]
    real_test = nrmse(y_te, H_te @ rep.W2_real)
    return _Fit(
        train_nrmse=rep.train_nrmse if rep.quant_nrmse is None else rep.quant_nrmse,
        test_nrmse=nrmse(y_te, y_hat),
        capacity=rep.capacity,
        rank=diag.rank,
        condition_number=diag.condition_number,
        x_test=x_te,
        y_test=y_te,
        y_hat=y_hat,
        real_train_nrmse=rep.train_nrmse,
        real_test_nrmse=real_test,
        H_train=H_tr,
        H_test=H_te,
        W_real=rep.W2_real,
    )


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_report(report: ExperimentReport, name: str, timing: bool) -> Path:
    out = Path(report.config["output_dir"])
    report.files["report"] = name
    with open(out / name, "w", newline="\n") as fh:
        json.dump(report.to_dict(timing), fh, indent=2)
        fh.write("\n")
    return out / name


def _prepare_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _max_workers() -> int | None:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return None
    n = int(raw)
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n or None


# ---------------------------------------------------------------------------
# experiments


def run_regression(cfg: ExperimentConfig, timing: bool = False) -> ExperimentReport:
    """Train one chip on the configured task and write its curve and report."""
    t0 = time.perf_counter()
    fit = _fit(cfg)
    name = cfg.task.name
    report = ExperimentReport(
        experiment="regress",
        config=cfg.to_dict(),
        train_nrmse=fit.train_nrmse,
        test_nrmse=fit.test_nrmse,
        capacity=fit.capacity,
        rank=fit.rank,
        condition_number=fit.condition_number,
        extra={"real_train_nrmse": fit.real_train_nrmse, "real_test_nrmse": fit.real_test_nrmse},
    )
    out = _prepare_dir(cfg)
    curve = f"{name}_curve.csv"
    _write_csv(out / curve, ("x", "y_target", "y_hat"), zip(fit.x_test, fit.y_test, fit.y_hat))
    report.files["curve"] = curve
    report.wall_seconds = time.perf_counter() - t0
    _write_report(report, f"{name}_regress.json", timing)
    return report


def _single_sigmoid_baselines(cfg: ExperimentConfig) -> tuple[float, float]:
    """Test NRMSE of the best ``b * h(x)`` and ``a + b * h(x)`` fits.

    ``h`` is one ideal neuron at the homogeneous arm's reference voltage. A
    population of identical neurons spans exactly the first function class.
    """
    net = _network(replace(cfg, L=1), cfg.seed, _homogeneous_offsets(cfg), MismatchSpec.ideal())
    x_tr, x_te = cfg.task.train_inputs(), cfg.task.test_inputs()
    y_tr, y_te = cfg.task.target(x_tr), cfg.task.target(x_te)
    h_tr = build_hidden_matrix(net, x_tr)[:, 0]
    h_te = build_hidden_matrix(net, x_te)[:, 0]
    out = []
    for cols_tr, cols_te in (([h_tr], [h_te]), ([np.ones_like(h_tr), h_tr], [np.ones_like(h_te), h_te])):
        coef, *_ = np.linalg.lstsq(np.column_stack(cols_tr), y_tr, rcond=None)
        out.append(nrmse(y_te, np.column_stack(cols_te) @ coef))
    return out[0], out[1]


def _homogeneous_offsets(cfg: ExperimentConfig) -> OffsetScheme:
    return OffsetScheme.constant(float(np.mean(cfg.offsets.reference_voltages(cfg.L))))


def _spread_offsets(cfg: ExperimentConfig) -> OffsetScheme:
    if cfg.offsets.kind == "uniform_span":
        return cfg.offsets
    return OffsetScheme.uniform_span(*sorted((cfg.input_map.v_lo, cfg.input_map.v_hi)))


def heterogeneity_study(cfg: ExperimentConfig, timing: bool = False) -> ExperimentReport:
    """Compare identical, mismatch-only and systematically offset populations.

    Arms: ``homogeneous`` (one reference voltage, ideal devices),
    ``mismatch_only`` (one reference voltage, ``cfg.mismatch``) and
    ``uniform_span`` (spread reference voltages, ideal devices).
    """
    t0 = time.perf_counter()
    homog = _homogeneous_offsets(cfg)
    arms = {
        "homogeneous": _fit(cfg, offsets=homog, mismatch=MismatchSpec.ideal()),
        "mismatch_only": _fit(cfg, offsets=homog, mismatch=cfg.mismatch),
        "uniform_span": _fit(cfg, offsets=_spread_offsets(cfg), mismatch=MismatchSpec.ideal()),
    }
    scaled, shifted = _single_sigmoid_baselines(cfg)
    h, m, u = (arms[k].test_nrmse for k in ("homogeneous", "mismatch_only", "uniform_span"))
    best = arms["uniform_span"]
    report = ExperimentReport(
        experiment="hetero",
        config=cfg.to_dict(),
        train_nrmse=best.train_nrmse,
        test_nrmse=best.test_nrmse,
        capacity=best.capacity,
        rank=best.rank,
        condition_number=best.condition_number,
        extra={
            "arms": {
                k: {
                    "rank": a.rank,
                    "capacity": a.capacity,
                    "condition_number": a.condition_number,
                    "train_nrmse": a.train_nrmse,
                    "test_nrmse": a.test_nrmse,
                }
                for k, a in arms.items()
            },
            "baseline_sigmoid_test_nrmse": scaled,
            "baseline_const_sigmoid_test_nrmse": shifted,
            "homogeneous_over_uniform": h / u if u > 0 else float("inf"),
            "mismatch_between_arms": bool(u <= m <= h),
        },
    )
    out = _prepare_dir(cfg)
    table = f"{cfg.task.name}_hetero.csv"
    _write_csv(
        out / table,
        ("arm", "rank", "capacity", "condition_number", "train_nrmse", "test_nrmse"),
        [(k, a.rank, a.capacity, a.condition_number, a.train_nrmse, a.test_nrmse) for k, a in arms.items()],
    )
    report.files["arms"] = table
    report.wall_seconds = time.perf_counter() - t0
    _write_report(report, f"{cfg.task.name}_hetero.json", timing)
    return report


def bitdepth_sweep(cfg: ExperimentConfig, bits_list: Sequence[int], timing: bool = False) -> ExperimentReport:
    """Train once with real weights, then quantize to each width in ``bits_list``."""
    t0 = time.perf_counter()
    bits_list = [int(b) for b in bits_list]
    if not bits_list:
        raise ValueError("bits_list is empty")
    for b in bits_list:
        if not 1 <= b <= MAX_WIDTH:
            raise ValueError(f"bit width {b} outside [1, {MAX_WIDTH}]")
    base = replace(cfg, quant_bits=None)
    fit = _fit(base)
    y_tr = cfg.task.target(cfg.task.train_inputs())
    rows = []
    for b in bits_list:
        q = train(fit.H_train, y_tr, b, ridge=cfg.ridge)
        W = q.W2_effective
        rows.append((b, nrmse(y_tr, fit.H_train @ W), nrmse(fit.y_test, fit.H_test @ W)))
    report = ExperimentReport(
        experiment="bits",
        config=cfg.to_dict(),
        train_nrmse=fit.real_train_nrmse,
        test_nrmse=fit.real_test_nrmse,
        capacity=fit.capacity,
        rank=fit.rank,
        condition_number=fit.condition_number,
        extra={
            "bits": {str(b): {"train_nrmse": tr, "test_nrmse": te} for b, tr, te in rows},
            "max_abs_weight": float(np.abs(fit.W_real).max()),
        },
    )
    out = _prepare_dir(cfg)
    table = f"{cfg.task.name}_bits.csv"
    _write_csv(out / table, ("bits", "train_nrmse", "test_nrmse"), rows)
    report.files["table"] = table
    report.wall_seconds = time.perf_counter() - t0
    _write_report(report, f"{cfg.task.name}_bits.json", timing)
    return report


def _stats(v: np.ndarray) -> dict:
    return {
        "mean": float(np.mean(v)),
        "median": float(np.median(v)),
        "p95": float(np.percentile(v, 95)),
        "std": float(np.std(v)),
        "min": float(np.min(v)),
        "max": float(np.max(v)),
    }


def mismatch_mc(cfg: ExperimentConfig, n_chips: int, timing: bool = False) -> ExperimentReport:
    """Repeat the regression on ``n_chips`` chips with seeds ``seed, seed+1, ...``."""
    t0 = time.perf_counter()
    if int(n_chips) != n_chips or n_chips < 1:
        raise ValueError(f"n_chips must be a positive integer, got {n_chips}")
    seeds = [cfg.seed + k for k in range(int(n_chips))]
    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        fits = list(pool.map(lambda s: _fit(cfg, seed=s), seeds))
    test = np.array([f.test_nrmse for f in fits])
    report = ExperimentReport(
        experiment="mc",
        config=cfg.to_dict(),
        train_nrmse=float(np.mean([f.train_nrmse for f in fits])),
        test_nrmse=float(np.mean(test)),
        capacity=int(np.min([f.capacity for f in fits])),
        rank=int(np.min([f.rank for f in fits])),
        condition_number=float(np.max([f.condition_number for f in fits])),
        extra={
            "n_chips": int(n_chips),
            "test_nrmse": _stats(test),
            "train_nrmse": _stats(np.array([f.train_nrmse for f in fits])),
            "capacity": _stats(np.array([f.capacity for f in fits], dtype=float)),
            "rank": _stats(np.array([f.rank for f in fits], dtype=float)),
        },
    )
    out = _prepare_dir(cfg)
    table = f"{cfg.task.name}_mc.csv"
    _write_csv(
        out / table,
        ("chip", "seed", "train_nrmse", "test_nrmse", "capacity", "rank", "condition_number"),
        [(k, s, f.train_nrmse, f.test_nrmse, f.capacity, f.rank, f.condition_number) for k, (s, f) in enumerate(zip(seeds, fits))],
    )
    report.files["chips"] = table
    report.wall_seconds = time.perf_counter() - t0
    _write_report(report, f"{cfg.task.name}_mc.json", timing)
    return report
