"""Local leave-one-out tuning followed by underregularization to the full sample size."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kernels import Kernel
from .regression import Dataset, DegenerateHatMatrix, loo_residual_path

DEFAULT_ALPHA_GRID = tuple(round(0.10 + 0.05 * k, 2) for k in range(19))


def alpha_grid(alpha_min: float = 0.10, alpha_max: float = 1.00, step: float = 0.05) -> tuple:
    """Inclusive equispaced grid, rounded to suppress accumulation error."""
    if step <= 0 or alpha_max < alpha_min:
        raise ValueError("invalid alpha grid")
    count = int(math.floor((alpha_max - alpha_min) / step + 1e-9)) + 1
    return tuple(round(alpha_min + step * k, 10) for k in range(count))


@dataclass(frozen=True)
class TuningResult:
    alpha_local: float
    lambda_local: float
    n: int
    cv_scores: dict = field(default_factory=dict)
    lambda_under: Optional[float] = None


def tune_local(subset: Dataset, kernel: Kernel, alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID) -> TuningResult:
    """Pick ``alpha`` minimizing the mean squared exact LOO residual of KRR at ``lam = n^-alpha``.

    Grid points whose hat matrix is degenerate are skipped.  Ties go to the
    smallest ``alpha``.
    """
    n = len(subset)
    if n < 2:
        raise ValueError("tuning needs at least two samples")
    grid = sorted(float(a) for a in alpha_grid)
    if not grid:
        raise ValueError("empty alpha grid")
    if grid[0] <= 0 or grid[-1] > 2:
        raise ValueError("alpha values must lie in (0, 2]")
    lams = [n ** -a for a in grid]
    paths = loo_residual_path(subset, kernel, lams)
    scores = {}
    for a, resid in zip(grid, paths):
        if isinstance(resid, DegenerateHatMatrix):
            continue
        scores[a] = float(np.mean(resid * resid))
    if not scores:
        raise DegenerateHatMatrix("degenerate hat matrix at every grid point")
    best = None
    for a in grid:
        if a in scores and (best is None or scores[a] < scores[best]):
            best = a
    return TuningResult(alpha_local=best, lambda_local=n ** -best, n=n, cv_scores=scores)


def underregularize(lambda_local: float, n: int, N: int) -> float:
    """``lambda_local ** (log N / log n)``; equals ``N^-alpha`` when ``lambda_local = n^-alpha``."""
    if not 0 < lambda_local < 1 or n < 2:
        raise ValueError("exponent undefined")
    if N < n:
        raise ValueError("global size must be at least the local size")
    if N == n:
        return float(lambda_local)
    return float(math.exp(math.log(lambda_local) * (math.log(N) / math.log(n))))


def tune_and_underregularize(subset: Dataset, kernel: Kernel, N: int, alpha_grid=DEFAULT_ALPHA_GRID) -> TuningResult:
    res = tune_local(subset, kernel, alpha_grid)
    lam = underregularize(res.lambda_local, res.n, N)
    return TuningResult(res.alpha_local, res.lambda_local, res.n, res.cv_scores, lam)
