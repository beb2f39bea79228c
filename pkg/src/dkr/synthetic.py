"""Synthetic benchmark: tent target on Uniform[0, 1] with Gaussian noise."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _rng
from .regression import Dataset

_X_STREAM = 0
_NOISE_STREAM = 1


def tent(x):
    """``min(x, 1 - x)``."""
    return np.minimum(x, 1.0 - np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class SyntheticSpec:
    target: Callable = tent
    noise_var: float = 0.2

    def __post_init__(self):
        if not self.noise_var >= 0:
            raise ValueError("noise variance must be non-negative")


def target_fn(spec: SyntheticSpec, x):
    out = spec.target(np.asarray(x, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def _box_muller(gen: np.random.Generator, n: int) -> np.ndarray:
    # Fixed transform of Philox uniforms; not numpy's ziggurat sampler.
    half = (n + 1) // 2
    u1 = 1.0 - gen.random(half)  # (0, 1]
    u2 = gen.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * half)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]


def generate(spec: SyntheticSpec, N: int, seed: _rng.SeedKey = 0) -> Dataset:
    """Draw ``N`` points ``x ~ U[0, 1]``, ``y = target(x) + eps``.

    Inputs and noise come from separate streams of the same seed, so two
    specs differing only in ``noise_var`` share their inputs.
    """
    if N < 1:
        raise ValueError("N must be positive")
    xs = _rng.stream(seed, _X_STREAM).random(N)
    ys = np.asarray(spec.target(xs), dtype=np.float64)
    if spec.noise_var > 0:
        ys = ys + math.sqrt(spec.noise_var) * _box_muller(_rng.stream(seed, _NOISE_STREAM), N)
    return Dataset(xs, ys)


@dataclass(frozen=True)
class EvalGrid:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to one")


def default_grid(size: int = 2001) -> EvalGrid:
    """Equispaced points on [0, 1] with trapezoidal weights."""
    if size < 2:
        raise ValueError("grid needs at least two points")
    points = np.linspace(0.0, 1.0, size)
    weights = np.full(size, 1.0 / (size - 1))
    weights[0] = weights[-1] = 0.5 / (size - 1)
    return EvalGrid(points, weights)


def mse_against_target(predictor, spec: SyntheticSpec, grid: Optional[EvalGrid] = None) -> float:
    """Quadrature estimate of ``||predictor - target||^2`` in L2(Uniform[0, 1]).

    ``predictor`` maps an array of points to an array of predictions.
    """
    grid = grid or default_grid()
    diff = np.asarray(predictor(grid.points), dtype=np.float64) - spec.target(grid.points)
    return float(grid.weights @ (diff * diff))


def linearity_check(fit_fn, xs, y1, y2, probe) -> float:
    """Max over ``probe`` of ``|f(y1 + y2) - f(y1) - f(y2)|``.

    ``fit_fn(xs, ys)`` returns a predictor callable on an array of points.
    """
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if y1.shape != y2.shape or y1.size != np.size(xs):
        raise ValueError("responses must match the inputs in length")
    probe = np.asarray(probe, dtype=np.float64)
    joint = fit_fn(xs, y1 + y2)(probe)
    split = fit_fn(xs, y1)(probe) + fit_fn(xs, y2)(probe)
    return float(np.max(np.abs(joint - split)))


def write_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in zip(data.xs, data.ys):
            writer.writerow([repr(float(x)), repr(float(y))])


def read_csv(path) -> Dataset:
    """Two-column ``x,y`` file; a non-numeric first row is treated as a header."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            try:
                x, y = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if i == 0:
                    continue
                raise ValueError(f"{path}: bad row {i + 1}: {row!r}")
            xs.append(x)
            ys.append(y)
    return Dataset(xs, ys)
