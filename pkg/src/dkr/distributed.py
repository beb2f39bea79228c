"""Divide-and-conquer estimator: random partition, local fits, weighted average."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _rng
from .kernels import Kernel
from .regression import Dataset, TrainedModel, Variant, fit, predict

# Stream tag separating partition draws from data draws under the same seed.
_PARTITION_STREAM = 2


@dataclass(frozen=True)
class PartitionPlan:
    blocks: tuple  # tuple of index arrays, one per partition

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> list:
        return [len(b) for b in self.blocks]

    @property
    def n_total(self) -> int:
        return sum(self.sizes)


def partition(data: Dataset, m: int, seed: _rng.SeedKey = 0) -> PartitionPlan:
    """Randomly split the sample indices into ``m`` disjoint near-equal blocks.

    A seeded permutation is cut into contiguous blocks; the first ``N % m``
    blocks get ``ceil(N / m)`` indices and the rest ``floor(N / m)``.
    """
    n = len(data)
    m = int(m)
    if m < 1:
        raise ValueError("need at least one partition")
    if m > n:
        raise ValueError("more partitions than samples")
    perm = _rng.stream(seed, _PARTITION_STREAM).permutation(n)
    base, extra = divmod(n, m)
    blocks = []
    start = 0
    for ell in range(m):
        size = base + (1 if ell < extra else 0)
        block = perm[start:start + size].copy()
        block.flags.writeable = False
        blocks.append(block)
        start += size
    return PartitionPlan(tuple(blocks))


@dataclass(frozen=True)
class EnsembleModel:
    locals: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.locals) != len(self.weights):
            raise ValueError("one weight per local model is required")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")

    @property
    def m(self) -> int:
        return len(self.locals)

    def __call__(self, ts) -> np.ndarray:
        return ensemble_predict(self, ts)


def fit_distributed(
    data: Dataset,
    plan: PartitionPlan,
    kernel: Kernel,
    lam: Union[float, Sequence[float]],
    variant: Union[Variant, str] = Variant.KRR,
    workers: int = 1,
) -> EnsembleModel:
    """Fit ``variant`` on every block and weight the local models by ``n_l / N``.

    ``lam`` is normally one value shared by all blocks; a sequence supplies
    one value per block (the locally tuned policy).
    """
    if plan.n_total != len(data):
        raise ValueError(f"plan covers {plan.n_total} samples, data has {len(data)}")
    if np.ndim(lam) == 0:
        lams = [float(lam)] * plan.m
    else:
        lams = [float(v) for v in lam]
        if len(lams) != plan.m:
            raise ValueError("need one regularization value per partition")
    variant = Variant(variant)

    def local_fit(ell: int) -> TrainedModel:
        return fit(data.subset(plan.blocks[ell]), kernel, lams[ell], variant)

    if workers > 1 and plan.m > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(local_fit, range(plan.m)))
    else:
        models = [local_fit(ell) for ell in range(plan.m)]
    n = len(data)
    weights = tuple(size / n for size in plan.sizes)
    if plan.m > 1:
        # Absorb rounding so the weights sum to one within 1e-12.
        weights = weights[:-1] + (1.0 - sum(weights[:-1]),)
    return EnsembleModel(tuple(models), weights)


def ensemble_predict(ensemble: EnsembleModel, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=np.float64).reshape(-1)
    out = np.zeros(ts.size)
    for weight, model in zip(ensemble.weights, ensemble.locals):
        out += weight * predict(model, ts)
    return out
