"""Experiment grid runner, rate estimation, CSV output and gnuplot script emission."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels as kern
from .distributed import ensemble_predict, fit_distributed, partition
from .regression import Variant
from .synthetic import SyntheticSpec, default_grid, generate, mse_against_target
from .tuning import DEFAULT_ALPHA_GRID, tune_and_underregularize

log = logging.getLogger(__name__)

FIXED = "fixed"
TUNED = "tuned"

BENCHMARK_M_GRID = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)
RATE_N_VALUES = (256, 512, 1024, 2048, 4096, 8192)

CSV_HEADER = ["kernel", "method", "N", "m", "lambda", "repetition", "mse", "wall_time_s"]


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 4098
    m_grid: tuple = BENCHMARK_M_GRID
    kernels: tuple = ("sobolev", "gaussian")
    methods: tuple = ("krr", "bckrr")
    lambda_policy: str = FIXED
    alpha: float = 2.0 / 3.0
    repetitions: int = 50
    seed: int = 0
    noise_var: float = 0.2
    r_hint: Optional[float] = None
    alpha_grid: tuple = DEFAULT_ALPHA_GRID

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not self.m_grid:
            raise ValueError("empty m grid")
        for m in self.m_grid:
            if not 1 <= m <= self.N:
                raise ValueError(f"partition count {m} outside [1, N={self.N}]")
        if self.lambda_policy not in (FIXED, TUNED):
            raise ValueError(f"unknown lambda policy {self.lambda_policy!r}")
        for k in self.kernels:
            kern.from_name(k)
        for meth in self.methods:
            Variant(meth)
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")

    def cells(self) -> list:
        return [
            (k, meth, m, rep)
            for k in self.kernels
            for meth in self.methods
            for m in self.m_grid
            for rep in range(self.repetitions)
        ]


@dataclass(frozen=True)
class ResultRecord:
    kernel: str
    method: str
    N: int
    m: int
    lambda_used: float
    repetition: int
    mse: float
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    intercept: float
    N_values: tuple
    mean_mse: tuple
    expected_exponent: Optional[float] = None


def expected_exponent(r: float, method: str = "krr", noise_free: bool = False) -> float:
    """Theoretical log-log slope of the mean squared error against N.

    Noisy: ``-min(2r / (1 + 2r), 2/3)`` for KRR; BCKRR saturates at ``r = 2``
    instead of ``r = 1``.  Noise-free (``lam = 1 / N``) is the same for both.
    """
    if r <= 0:
        raise ValueError("source index must be positive")
    if noise_free:
        if r <= 0.5:
            return -2.0 * r
        if r <= 1.0:
            return -(1.5 * r + 0.25)
        if r <= 1.5:
            return -(0.5 * r + 1.25)
        return -2.0
    r_eff = min(r, 1.0) if Variant(method) is Variant.KRR else min(r, 2.0)
    return -2.0 * r_eff / (1.0 + 2.0 * r_eff)


def _run_cell(config: ExperimentConfig, cell, grid) -> ResultRecord:
    kname, method, m, rep = cell
    start = time.monotonic()
    lam_record = math.nan
    try:
        spec = SyntheticSpec(noise_var=config.noise_var)
        data = generate(spec, config.N, (config.seed, rep))
        plan = partition(data, m, (config.seed, rep, m))
        kernel = kern.from_name(kname)
        if config.lambda_policy == FIXED:
            lam = config.N ** -config.alpha
            lam_record = lam
        else:
            lam = [
                tune_and_underregularize(data.subset(block), kernel, config.N, config.alpha_grid).lambda_under
                for block in plan.blocks
            ]
            lam_record = float(np.mean(lam))
        ensemble = fit_distributed(data, plan, kernel, lam, method)
        mse = mse_against_target(lambda t: ensemble_predict(ensemble, t), spec, grid)
        return ResultRecord(kname, method, config.N, m, lam_record, rep, mse, time.monotonic() - start)
    except Exception as exc:  # recorded as an error row
        log.error("cell %s failed: %s", cell, exc)
        return ResultRecord(
            kname, method, config.N, m, lam_record, rep, math.nan, time.monotonic() - start, f"{type(exc).__name__}: {exc}"
        )


def run_experiment(config: ExperimentConfig, workers: int = 1, progress=None) -> list:
    """Run every (kernel, method, m, repetition) cell.

    Data for repetition ``rep`` is keyed by ``(seed, rep)`` and its
    partition by ``(seed, rep, m)``, so kernels and methods are compared on
    identical samples.  The result order is the config's cell order whatever
    the worker count.
    """
    cells = config.cells()
    grid = default_grid()
    run = lambda cell: _run_cell(config, cell, grid)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = []
        for cell in cells:
            results.append(run(cell))
            if progress is not None:
                progress(len(results), len(cells))
    return results


def mean_mse_by(records: Iterable[ResultRecord], *keys: str) -> dict:
    """Mean MSE over repetitions, grouped by the named record fields; error rows excluded."""
    groups = {}
    for rec in records:
        if rec.ok:
            groups.setdefault(tuple(getattr(rec, k) for k in keys), []).append(rec.mse)
    return {k: float(np.mean(v)) for k, v in groups.items()}


def estimate_rate(records, expected: Optional[float] = None) -> RateEstimate:
    """Least-squares slope of log(mean MSE) against log(N).

    ``records`` is either a sequence of ``ResultRecord`` (averaged per N) or
    a mapping ``N -> mean MSE``.
    """
    if isinstance(records, dict):
        by_n = {int(k): float(v) for k, v in records.items()}
    else:
        by_n = {k[0]: v for k, v in mean_mse_by(records, "N").items()}
    if len(by_n) < 3:
        raise ValueError("need at least three distinct N values")
    ns = sorted(by_n)
    mse = np.array([by_n[n] for n in ns])
    if np.any(~(mse > 0)):
        raise ValueError("cannot take log of a non-positive mean MSE")
    slope, intercept = np.polyfit(np.log(ns), np.log(mse), 1)
    return RateEstimate(float(slope), float(intercept), tuple(ns), tuple(mse.tolist()), expected)


def rate_sweep(
    kernel: str = "sobolev",
    method: str = "krr",
    alpha: float = 0.5,
    noise_var: float = 0.2,
    N_values: Sequence[int] = RATE_N_VALUES,
    repetitions: int = 20,
    seed: int = 0,
    workers: int = 1,
    r_hint: Optional[float] = None,
) -> tuple:
    """Monolithic (m = 1) fits over ``N_values`` with ``lam = N^-alpha``.

    Returns ``(records, RateEstimate)``.  Cost is dominated by the O(N^3)
    Cholesky factorization of the largest N.
    """
    records = []
    for N in N_values:
        cfg = ExperimentConfig(
            N=N, m_grid=(1,), kernels=(kernel,), methods=(method,), alpha=alpha,
            repetitions=repetitions, seed=seed, noise_var=noise_var, r_hint=r_hint,
        )
        records.extend(run_experiment(cfg, workers=workers))
    expected = None if r_hint is None else expected_exponent(r_hint, method, noise_var == 0)
    return records, estimate_rate(records, expected)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(records: Sequence[ResultRecord], path, timing: bool = True) -> None:
    """CSV with a fixed header; floats use shortest round-trip ``repr``.

    ``timing=False`` leaves the wall-time column empty so that reruns are
    byte-identical.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow([
                rec.kernel, rec.method, rec.N, rec.m, _fmt(float(rec.lambda_used)), rec.repetition,
                _fmt(float(rec.mse)), _fmt(float(rec.wall_time)) if timing else "",
            ])


def read_results(path) -> list:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            mse = float(row["mse"])
            out.append(ResultRecord(
                row["kernel"], row["method"], int(row["N"]), int(row["m"]), float(row["lambda"]),
                int(row["repetition"]), mse, float(row["wall_time_s"] or "nan"),
                None if not math.isnan(mse) else "error",
            ))
    return out


_SHORT = {"sobolev": "S", "gaussian": "G"}


def curve_label(kernel: str, method: str) -> str:
    prefix = "DBCKRR" if Variant(method) is Variant.BCKRR else "DKRR"
    return f"{prefix}-{_SHORT.get(kernel, kernel)}"


def emit_plot_script(records: Sequence[ResultRecord], path, title: str = "Mean squared error vs partitions") -> None:
    """Write a self-contained gnuplot script: mean MSE against m, one curve per kernel/method."""
    means = mean_mse_by(records, "kernel", "method", "m")
    combos = []
    for kernel, method, _ in means:
        if (kernel, method) not in combos:
            combos.append((kernel, method))
    lines = [
        "# mean MSE over repetitions against number of partitions",
        "set terminal pngcairo size 800,600",
        "set output 'mse_vs_m.png'",
        f"set title \"{title}\"",
        "set xlabel 'number of partitions m'",
        "set ylabel 'mean squared error'",
        "set logscale x 2",
        "set logscale y",
        "set key top left",
        "",
    ]
    for i, (kernel, method) in enumerate(combos):
        lines.append(f"$curve{i} << EOD")
        for (k, meth, m), value in sorted(means.items(), key=lambda kv: kv[0][2]):
            if (k, meth) == (kernel, method):
                lines.append(f"{m} {value!r}")
        lines.append("EOD")
        lines.append("")
    if combos:
        parts = [
            f"$curve{i} using 1:2 with linespoints title '{curve_label(k, meth)}'"
            for i, (k, meth) in enumerate(combos)
        ]
        lines.append("plot " + ", \\\n     ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


_CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in ("N", "repetitions", "seed"):
        return int(raw)
    if key in ("noise_var", "alpha"):
        return _parse_number(raw)
    if key == "r_hint":
        return None if raw.lower() in ("", "none") else _parse_number(raw)
    if key == "m_grid":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if key == "alpha_grid":
        return tuple(_parse_number(v) for v in raw.replace(",", " ").split())
    if key in ("kernels", "methods"):
        return tuple(v.strip().lower() for v in raw.replace(",", " ").split())
    if key == "lambda_policy":
        return raw.lower()
    raise KeyError(key)


def _parse_number(raw: str) -> float:
    """Float, also accepting a simple fraction like ``2/3``."""
    if "/" in raw:
        num, den = raw.split("/", 1)
        return float(num) / float(den)
    return float(raw)


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` comments) into a config.

    ``overrides`` take precedence over the file; ``None`` values are ignored.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
