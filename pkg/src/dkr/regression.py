"""Kernel ridge regression and its bias-corrected variant.

All fits solve the representer system ``(lam * N * I + K) c = y`` by a
Cholesky factorization of the shifted Gram matrix.  The bias-corrected
estimator is available in three algebraically equivalent forms:

* ``fit_bckrr_twostep``: KRR, then a second KRR fit to the residuals.
* ``fit_bckrr_recentered``: penalize ``||f - f_krr||_K`` instead of ``||f||_K``.
* ``fit_bckrr_closedform``: ``c + lam * N * (lam * N * I + K)^{-1} c``.

``fit_bckrr`` is the recentered form, which reuses one factorization.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as la

from . import kernels as kern
from .kernels import Kernel

log = logging.getLogger(__name__)

_JITTER_START = 1e-12
_JITTER_MAX = 1e-6


class NotPositiveDefinite(la.LinAlgError):
    pass


class DegenerateHatMatrix(ValueError):
    pass


class Variant(str, enum.Enum):
    KRR = "krr"
    BCKRR = "bckrr"


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=np.float64).reshape(-1)
        ys = np.array(self.ys, dtype=np.float64).reshape(-1)
        if xs.size == 0:
            raise ValueError("empty sample")
        if xs.size != ys.size:
            raise ValueError(f"xs and ys differ in length ({xs.size} != {ys.size})")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.size

    def __len__(self):
        return self.xs.size

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.xs[idx], self.ys[idx])


@dataclass(frozen=True)
class TrainedModel:
    support: np.ndarray
    coeffs: np.ndarray
    kernel: Kernel
    lam: float
    variant: Variant

    def __post_init__(self):
        support = np.array(self.support, dtype=np.float64).reshape(-1)
        coeffs = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        if support.size != coeffs.size:
            raise ValueError("support and coeffs differ in length")
        support.flags.writeable = False
        coeffs.flags.writeable = False
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "variant", Variant(self.variant))

    def __call__(self, ts) -> np.ndarray:
        return predict(self, ts)

    def to_json(self) -> str:
        """Serialize; ``float.__repr__`` is shortest-round-trip so coefficients survive bit-exactly."""
        if self.kernel.kind is kern.KernelKind.CUSTOM:
            raise ValueError("custom kernels cannot be serialized")
        kernel = {"name": self.kernel.name}
        if self.kernel.bandwidth is not None:
            kernel["bandwidth"] = self.kernel.bandwidth
        record = {
            "kernel": kernel,
            "lambda": self.lam,
            "variant": self.variant.value,
            "support": [float(v) for v in self.support],
            "coeffs": [float(v) for v in self.coeffs],
        }
        return json.dumps(record)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        record = json.loads(text)
        spec = record["kernel"]
        if spec["name"] == kern.KernelKind.GAUSSIAN.value:
            kernel = kern.gaussian(spec.get("bandwidth", kern.GAUSSIAN_DENOMINATOR))
        else:
            kernel = kern.from_name(spec["name"])
        return cls(
            support=record["support"],
            coeffs=record["coeffs"],
            kernel=kernel,
            lam=float(record["lambda"]),
            variant=Variant(record["variant"]),
        )


class _ShiftedSolver:
    """Cholesky factor of ``base + (shift + jitter) I``; ``base`` is left untouched.

    ``jitter`` starts at zero and, on failure, at ``1e-12 * trace / n``,
    growing tenfold up to ``1e-6 * trace / n``.
    """

    def __init__(self, base: np.ndarray, shift: float = 0.0):
        n = base.shape[0]
        scale = float(np.trace(base)) / n
        if not scale > 0:
            scale = 1.0
        levels = [0.0]
        jitter = _JITTER_START * scale
        while jitter <= _JITTER_MAX * scale * (1 + 1e-9):
            levels.append(jitter)
            jitter *= 10.0
        for jitter in levels:
            work = base.copy()
            work.flat[:: n + 1] += shift + jitter
            try:
                self.factor = la.cho_factor(work, lower=True, overwrite_a=True, check_finite=False)
            except la.LinAlgError:
                continue
            self.jitter = jitter
            if jitter:
                log.debug("cholesky needed jitter %.3g", jitter)
            return
        raise NotPositiveDefinite("not positive definite")

    def solve(self, b: np.ndarray) -> np.ndarray:
        return la.cho_solve(self.factor, b, check_finite=False)


def solve_spd(A, b) -> np.ndarray:
    """Solve the symmetric positive definite system ``A x = b``.

    Falls back to adding ``1e-12 * trace(A) / n`` to the diagonal, growing
    tenfold up to ``1e-6 * trace(A) / n``, before giving up.

    Raises
    ------
    NotPositiveDefinite
        If no jitter level yields a Cholesky factorization.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if b.shape[0] != A.shape[0]:
        raise ValueError("dimension mismatch between A and b")
    return _ShiftedSolver(A).solve(b)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0 or not np.isfinite(lam):
        raise ValueError("regularization must be positive")
    return lam


def _factor_system(data: Dataset, kernel: Kernel, lam: float):
    """Gram matrix and a solver for ``lam * N * I + K``."""
    K = kern.gram(kernel, data.xs)
    return K, _ShiftedSolver(K, lam * data.n)


def fit_krr(data: Dataset, kernel: Kernel, lam: float) -> TrainedModel:
    """Kernel ridge regression with penalty ``lam * ||f||_K^2``."""
    lam = _check_lambda(lam)
    _, solver = _factor_system(data, kernel, lam)
    c = solver.solve(data.ys)
    return TrainedModel(data.xs, c, kernel, lam, Variant.KRR)


def predict(model: TrainedModel, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=np.float64).reshape(-1)
    if ts.size == 0:
        return np.zeros(0)
    return kern.cross_gram(model.kernel, model.support, ts) @ model.coeffs


def fit_bckrr_twostep(data: Dataset, kernel: Kernel, lam: float) -> TrainedModel:
    """KRR plus a KRR fit (same ``lam``) to the training residuals."""
    lam = _check_lambda(lam)
    K, solver = _factor_system(data, kernel, lam)
    c = solver.solve(data.ys)
    residual = data.ys - K @ c
    d = solver.solve(residual)
    return TrainedModel(data.xs, c + d, kernel, lam, Variant.BCKRR)


def fit_bckrr_recentered(data: Dataset, kernel: Kernel, lam: float) -> TrainedModel:
    """Minimizer of ``mean((y - f(x))^2) + lam * ||f - f_krr||_K^2``.

    In coefficients: ``(lam N I + K) c_bc = y + lam N c`` with ``c`` the KRR
    solution, so both solves share one factorization.
    """
    lam = _check_lambda(lam)
    _, solver = _factor_system(data, kernel, lam)
    c = solver.solve(data.ys)
    c_bc = solver.solve(data.ys + lam * data.n * c)
    return TrainedModel(data.xs, c_bc, kernel, lam, Variant.BCKRR)


def fit_bckrr_closedform(data: Dataset, kernel: Kernel, lam: float) -> TrainedModel:
    """``c + lam N (lam N I + K)^{-1} c`` with ``c`` the KRR coefficients."""
    lam = _check_lambda(lam)
    _, solver = _factor_system(data, kernel, lam)
    c = solver.solve(data.ys)
    c_bc = c + lam * data.n * solver.solve(c)
    return TrainedModel(data.xs, c_bc, kernel, lam, Variant.BCKRR)


fit_bckrr = fit_bckrr_recentered


def fit(data: Dataset, kernel: Kernel, lam: float, variant: Variant | str = Variant.KRR) -> TrainedModel:
    """Dispatch on ``variant``."""
    variant = Variant(variant)
    if variant is Variant.KRR:
        return fit_krr(data, kernel, lam)
    return fit_bckrr(data, kernel, lam)


def _loo_from_inverse_diag(c, g_diag, shift):
    # I - H = shift * G with G = (shift I + K)^{-1}, so e = shift * c and
    # 1 - H_ii = shift * G_ii; the ratio is c_i / G_ii.
    one_minus_h = shift * g_diag
    if np.any(one_minus_h <= 1e-12):
        raise DegenerateHatMatrix("degenerate hat matrix")
    return (shift * c) / one_minus_h


def loo_residuals(data: Dataset, kernel: Kernel, lam: float) -> np.ndarray:
    """Exact leave-one-out residuals of KRR via the hat-matrix identity.

    Returns ``e_i / (1 - H_ii)`` with ``H = K (lam N I + K)^{-1}`` and
    ``e = y - H y``.  Entry ``i`` is ``y_i - f_{-i}(x_i)``, where ``f_{-i}``
    minimizes ``sum_{j != i} (y_j - f(x_j))^2 + lam N ||f||_K^2``; i.e. the
    total penalty weight ``lam * N`` is held fixed when a point is dropped.
    """
    lam = _check_lambda(lam)
    if data.n < 2:
        raise ValueError("leave-one-out needs at least two samples")
    _, solver = _factor_system(data, kernel, lam)
    c = solver.solve(data.ys)
    g_diag = np.diag(solver.solve(np.eye(data.n))).copy()
    return _loo_from_inverse_diag(c, g_diag, lam * data.n + solver.jitter)


def loo_residual_path(data: Dataset, kernel: Kernel, lams: Sequence[float]) -> list:
    """``loo_residuals`` for many ``lam`` values from one eigendecomposition.

    Each list entry is either the residual vector or the
    ``DegenerateHatMatrix`` raised for that ``lam``.
    """
    if data.n < 2:
        raise ValueError("leave-one-out needs at least two samples")
    K = kern.gram(kernel, data.xs)
    evals, Q = la.eigh(K, check_finite=False)
    evals = np.clip(evals, 0.0, None)
    qty = Q.T @ data.ys
    Q2 = Q * Q
    out = []
    for lam in lams:
        shift = _check_lambda(lam) * data.n
        inv = 1.0 / (shift + evals)
        c = Q @ (inv * qty)
        g_diag = Q2 @ inv
        try:
            out.append(_loo_from_inverse_diag(c, g_diag, shift))
        except DegenerateHatMatrix as exc:
            out.append(exc)
    return out


def krr_objective(data: Dataset, K: np.ndarray, coeffs, lam: float, center=None) -> float:
    """``mean((y - K a)^2) + lam * (a - center)^T K (a - center)`` for ``f = sum a_i K(x_i, .)``."""
    a = np.asarray(coeffs, dtype=np.float64)
    resid = data.ys - K @ a
    delta = a if center is None else a - np.asarray(center, dtype=np.float64)
    return float(np.mean(resid * resid) + lam * delta @ (K @ delta))
