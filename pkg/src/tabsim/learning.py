"""Offline output-weight training and hidden-layer diversity diagnostics.

Training is one shot: ``W = H^+ Y`` with ``H^+`` the Moore-Penrose
pseudoinverse of the hidden activation matrix, optionally followed by
quantization of each output's weights onto splitter codes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .splitter import QuantizedWeightVector, quantize_vector

__all__ = [
    "PseudoinverseResult",
    "TrainReport",
    "Diagnostics",
    "pseudoinverse",
    "train",
    "encoding_capacity",
    "condition_diagnostics",
    "rmse",
    "nrmse",
]

DEFAULT_CAPACITY_TOL = 1e-6


@dataclass(frozen=True)
class PseudoinverseResult:
    H_plus: np.ndarray
    effective_rank: int
    tolerance_used: float
    singular_values: np.ndarray


class Diagnostics(NamedTuple):
    rank: int
    condition_number: float
    min_sv: float


@dataclass
class TrainReport:
    W2_real: np.ndarray
    train_rmse: float
    train_nrmse: float
    capacity: int
    effective_rank: int
    W2_quantized: list[QuantizedWeightVector] | None = None
    quant_rmse: float | None = None
    quant_nrmse: float | None = None
    ridge: float = 0.0

    @property
    def W2_effective(self) -> np.ndarray:
        """Weights the hardware would apply: quantized when available."""
        if self.W2_quantized is None:
            return self.W2_real
        return np.column_stack([q.values() for q in self.W2_quantized])


def _check_matrix(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if H.ndim != 2 or H.size == 0:
        raise ValueError(f"hidden matrix must be a non-empty 2-D array, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("hidden matrix has non-finite entries")
    return H


def _auto_tol(H: np.ndarray) -> float:
    return max(H.shape) * np.finfo(float).eps


def _svd(H, tol):
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    tol = _auto_tol(H) if tol is None else float(tol)
    keep = s > tol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    return U, s, Vt, keep, tol


def pseudoinverse(H, tol: float | None = None) -> PseudoinverseResult:
    """SVD pseudoinverse; singular values below ``tol * s_max`` count as zero.

    ``tol=None`` uses ``max(C, L) * eps``.
    """
    H = _check_matrix(H)
    U, s, Vt, keep, tol = _svd(H, tol)
    r = int(keep.sum())
    H_plus = (Vt[:r].T / s[:r]) @ U[:, :r].T
    return PseudoinverseResult(H_plus, r, tol, s)


def rmse(Y, Y_hat) -> float:
    return float(np.sqrt(np.mean((np.asarray(Y) - np.asarray(Y_hat)) ** 2)))


def nrmse(Y, Y_hat) -> float:
    """RMSE over the target's standard deviation, averaged over outputs.

    A constant target column falls back to plain RMSE for that output.
    """
    Y = np.asarray(Y, dtype=float)
    Y_hat = np.asarray(Y_hat, dtype=float)
    if Y.ndim == 1:
        Y, Y_hat = Y[:, None], Y_hat.reshape(-1, 1)
    err = np.sqrt(np.mean((Y - Y_hat) ** 2, axis=0))
    sd = np.std(Y, axis=0)
    out = np.where(sd > 0, err / np.where(sd > 0, sd, 1.0), err)
    return float(np.mean(out))


def train(
    H,
    Y,
    quant_bits: int | None = None,
    *,
    tol: float | None = None,
    ridge: float = 0.0,
    capacity_tol: float = DEFAULT_CAPACITY_TOL,
) -> TrainReport:
    """Solve ``H W = Y`` in the least-squares sense.

    Parameters
    ----------
    H : (C, L) array
        Hidden activations.
    Y : (C,) or (C, K) array
        Targets.
    quant_bits : int, optional
        If given, each output column is normalized by its max-abs weight and
        quantized to this many splitter bits after the real solve.
    tol : float, optional
        Relative singular-value cutoff, see :func:`pseudoinverse`.
    ridge : float
        Tikhonov term added to ``H^T H``. Off by default; the plain
        pseudoinverse is the reference method.
    """
    H = _check_matrix(H)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != H.shape[0]:
        raise ValueError(f"H has {H.shape[0]} rows but Y has {Y.shape[0]}")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")

    U, s, Vt, keep, _ = _svd(H, tol)
    r = int(keep.sum())
    if ridge > 0:
        filt = s[:r] / (s[:r] ** 2 + ridge)
    else:
        filt = 1.0 / s[:r]
    W = Vt[:r].T @ (filt[:, None] * (U[:, :r].T @ Y))

    P = U[:, :r] @ U[:, :r].T
    report = TrainReport(
        W2_real=W,
        train_rmse=rmse(Y, H @ W),
        train_nrmse=nrmse(Y, H @ W),
        capacity=_count_identity_rows(P, capacity_tol),
        effective_rank=r,
        ridge=float(ridge),
    )
    if quant_bits is not None:
        qs = [quantize_vector(W[:, j], quant_bits) for j in range(W.shape[1])]
        Wq = np.column_stack([q.values() for q in qs])
        report.W2_quantized = qs
        report.quant_rmse = rmse(Y, H @ Wq)
        report.quant_nrmse = nrmse(Y, H @ Wq)
    return report


def _count_identity_rows(P: np.ndarray, tol: float) -> int:
    dev = np.abs(P - np.eye(P.shape[0]))
    return int(np.sum(dev.max(axis=1) <= tol))


def encoding_capacity(H, tol: float = DEFAULT_CAPACITY_TOL, pinv_tol: float | None = None) -> tuple[int, bool]:
    """Number of rows of ``H H^+`` that match the identity to within ``tol``.

    Returns ``(capacity, full)`` with ``full`` true when every training input
    is perfectly encoded.
    """
    H = _check_matrix(H)
    P = H @ pseudoinverse(H, pinv_tol).H_plus
    cap = _count_identity_rows(P, tol)
    return cap, cap == H.shape[0]


def condition_diagnostics(H, tol: float | None = None) -> Diagnostics:
    H = _check_matrix(H)
    _, s, _, keep, _ = _svd(H, tol)
    kept = s[keep]
    if kept.size == 0:
        return Diagnostics(0, float("inf"), 0.0)
    return Diagnostics(int(kept.size), float(kept[0] / kept[-1]), float(kept[-1]))
