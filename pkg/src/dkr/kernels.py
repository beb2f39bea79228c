"""Mercer kernels on the real line and their Gram matrices."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Denominator of the benchmark Gaussian kernel exp(-(x - t)^2 / 0.3), taken literally.
GAUSSIAN_DENOMINATOR = 0.3

# Rows per block when filling a Gram matrix; bounds temporary memory for large N.
_BLOCK = 512


class KernelKind(str, enum.Enum):
    SOBOLEV = "sobolev"
    GAUSSIAN = "gaussian"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Kernel:
    """An immutable kernel descriptor.

    ``fn`` is only used for ``KernelKind.CUSTOM``; it must accept two
    broadcastable float arrays and return their elementwise kernel values.
    """

    kind: KernelKind
    bandwidth: Optional[float] = None
    kappa_bound: float = 1.0
    fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )

    @property
    def name(self) -> str:
        return self.kind.value

    def __call__(self, x, t):
        return _pairwise(self, np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))


def sobolev() -> Kernel:
    """``K(x, t) = 1 + min(x, t)``; sup of sqrt(K(x, x)) on [0, 1] is sqrt(2)."""
    return Kernel(KernelKind.SOBOLEV, None, math.sqrt(2.0))


def gaussian(bandwidth: float = GAUSSIAN_DENOMINATOR) -> Kernel:
    """``K(x, t) = exp(-(x - t)^2 / bandwidth)``."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    return Kernel(KernelKind.GAUSSIAN, float(bandwidth), 1.0)


def custom(fn, bandwidth=None, kappa_bound=None, n_check=1001) -> Kernel:
    """Wrap a user-supplied symmetric kernel function.

    When ``kappa_bound`` is not given it is estimated as the max of
    ``sqrt(fn(x, x))`` over an equispaced grid on [0, 1].
    """
    if kappa_bound is None:
        grid = np.linspace(0.0, 1.0, n_check)
        diag = np.asarray(fn(grid, grid), dtype=np.float64)
        if np.any(diag < 0):
            raise ValueError("kernel has negative diagonal values")
        kappa_bound = float(np.sqrt(diag.max()))
    return Kernel(KernelKind.CUSTOM, bandwidth, float(kappa_bound), fn)


def from_name(name: str) -> Kernel:
    """Resolve ``"sobolev"`` or ``"gaussian"`` to a kernel."""
    key = name.strip().lower()
    if key == KernelKind.SOBOLEV.value:
        return sobolev()
    if key == KernelKind.GAUSSIAN.value:
        return gaussian()
    raise ValueError(f"unknown kernel {name!r}; expected 'sobolev' or 'gaussian'")


def _pairwise(kernel: Kernel, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    if kernel.kind is KernelKind.SOBOLEV:
        return 1.0 + np.minimum(x, t)
    if kernel.kind is KernelKind.GAUSSIAN:
        d = x - t
        return np.exp(-(d * d) / kernel.bandwidth)
    if kernel.fn is None:
        raise ValueError("custom kernel has no function")
    return np.asarray(kernel.fn(x, t), dtype=np.float64)


def eval(kernel: Kernel, x: float, t: float) -> float:  # noqa: A001
    """Scalar kernel value ``K(x, t)``."""
    return float(_pairwise(kernel, np.float64(x), np.float64(t)))


def _as_points(xs, what="sample") -> np.ndarray:
    arr = np.asarray(xs, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"empty {what}")
    return arr


def gram(kernel: Kernel, xs) -> np.ndarray:
    """Kernel matrix ``[K(x_i, x_j)]``, exactly symmetric.

    Only the upper triangle is evaluated; the lower triangle is a mirror
    copy, so ``G[i, j] == G[j, i]`` holds bitwise even for kernels whose
    floating-point evaluation is not symmetric.
    """
    x = _as_points(xs)
    n = x.size
    G = np.empty((n, n), dtype=np.float64)
    for i0 in range(0, n, _BLOCK):
        i1 = min(i0 + _BLOCK, n)
        rows = x[i0:i1, None]
        G[i0:i1, i0:] = _pairwise(kernel, rows, x[None, i0:])
        diag = G[i0:i1, i0:i1]
        lower = np.tril_indices(i1 - i0, -1)
        diag[lower] = diag.T[lower]
        if i1 < n:
            G[i1:, i0:i1] = G[i0:i1, i1:].T
    return G


def cross_gram(kernel: Kernel, xs, ts) -> np.ndarray:
    """Matrix of shape ``(len(ts), len(xs))`` with entries ``K(ts[i], xs[j])``."""
    x = _as_points(xs)
    t = _as_points(ts, "evaluation points")
    return np.ascontiguousarray(_pairwise(kernel, t[:, None], x[None, :]))
