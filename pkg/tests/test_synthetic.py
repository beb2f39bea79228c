import numpy as np
import pytest
from scipy import integrate

from dkr import kernels as kern
from dkr.distributed import ensemble_predict, fit_distributed, partition
from dkr.regression import Dataset, fit_bckrr_closedform, fit_bckrr_recentered, fit_bckrr_twostep, fit_krr
from dkr.synthetic import (
    EvalGrid,
    SyntheticSpec,
    default_grid,
    generate,
    linearity_check,
    mse_against_target,
    read_csv,
    target_fn,
    write_csv,
)

SPEC = SyntheticSpec()


@pytest.mark.parametrize("x,expected", [(0.5, 0.5), (0.0, 0.0), (1.0, 0.0), (0.2, 0.2), (0.8, 0.19999999999999996)])
def test_target(x, expected):
    assert target_fn(SPEC, x) == expected


def test_noise_free_generation_is_exact():
    data = generate(SyntheticSpec(noise_var=0.0), 500, 4)
    assert np.array_equal(data.ys, np.minimum(data.xs, 1 - data.xs))
    assert data.xs.min() >= 0 and data.xs.max() < 1


def test_generation_is_deterministic():
    a, b = generate(SPEC, 300, (1, 2)), generate(SPEC, 300, (1, 2))
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
    c = generate(SPEC, 300, (1, 3))
    assert not np.array_equal(a.xs, c.xs)


def test_noise_variance_at_benchmark_size():
    inside = 0
    for seed in range(40):
        data = generate(SPEC, 4098, seed)
        v = np.var(data.ys - np.minimum(data.xs, 1 - data.xs), ddof=1)
        inside += 0.17 <= v <= 0.23
    assert inside >= 38


def test_noise_is_gaussian_shaped():
    from scipy import stats

    data = generate(SyntheticSpec(noise_var=1.0), 20000, 9)
    eps = data.ys - np.minimum(data.xs, 1 - data.xs)
    assert stats.kstest(eps, "norm").pvalue > 1e-3
    assert stats.kstest(data.xs, "uniform").pvalue > 1e-3


def test_grid_weights():
    grid = default_grid()
    assert grid.points.size == 2001
    assert abs(grid.weights.sum() - 1) <= 1e-12
    assert np.all(np.diff(grid.points) > 0) and grid.points[0] == 0 and grid.points[-1] == 1
    with pytest.raises(ValueError):
        EvalGrid(np.array([0.0, 1.0]), np.array([0.5, 0.6]))


def test_mse_examples():
    assert mse_against_target(lambda t: np.minimum(t, 1 - t), SPEC) == 0.0
    closed_form = 2 * (0.5 ** 3) / 3  # twice the integral of x^2 over [0, 1/2]
    quad, _ = integrate.quad(lambda x: min(x, 1 - x) ** 2, 0, 1, points=[0.5])
    assert quad == pytest.approx(closed_form, abs=1e-12)
    assert mse_against_target(lambda t: np.zeros_like(t), SPEC) == pytest.approx(closed_form, abs=1e-6)
    assert mse_against_target(lambda t: np.minimum(t, 1 - t) + 0.3, SPEC) == pytest.approx(0.09, rel=1e-12)


@pytest.mark.parametrize("power", [1, 2, 3, 4])
def test_grid_quadrature_of_polynomials(power):
    grid = default_grid()
    assert grid.weights @ grid.points ** power == pytest.approx(1 / (power + 1), abs=1e-6)


def _fitter(fit_fn, kernel, lam):
    def fit_predict(xs, ys):
        model = fit_fn(Dataset(xs, ys), kernel, lam)
        return lambda t: model(t)
    return fit_predict


def test_linearity_zero_second_response():
    rng = np.random.default_rng(0)
    xs, y1 = rng.uniform(size=30), rng.normal(size=30)
    dev = linearity_check(_fitter(fit_krr, kern.sobolev(), 0.01), xs, y1, np.zeros(30), np.linspace(0, 1, 11))
    assert dev <= 1e-10


@pytest.mark.parametrize("fit_fn", [fit_krr, fit_bckrr_twostep, fit_bckrr_recentered, fit_bckrr_closedform])
@pytest.mark.parametrize("name", ["sobolev", "gaussian"])
def test_linearity_monolithic(fit_fn, name):
    rng = np.random.default_rng(1)
    xs, y1, y2 = rng.uniform(size=50), rng.normal(size=50), rng.normal(size=50)
    dev = linearity_check(_fitter(fit_fn, kern.from_name(name), 50 ** -0.5), xs, y1, y2, np.linspace(0, 1, 101))
    assert dev <= 1e-8 * (1 + np.abs(y1).max() + np.abs(y2).max())


@pytest.mark.parametrize("variant", ["krr", "bckrr"])
def test_linearity_distributed(variant):
    rng = np.random.default_rng(2)
    xs, y1, y2 = rng.uniform(size=64), rng.normal(size=64), rng.normal(size=64)
    plan = partition(Dataset(xs, y1), 4, 3)

    def fit_predict(x, y):
        ens = fit_distributed(Dataset(x, y), plan, kern.sobolev(), 64 ** (-2 / 3), variant)
        return lambda t: ensemble_predict(ens, t)

    dev = linearity_check(fit_predict, xs, y1, y2, np.linspace(0, 1, 101))
    assert dev <= 1e-8 * (1 + np.abs(y1).max() + np.abs(y2).max())


def test_linearity_detects_nonlinear_fit():
    xs = np.linspace(0, 1, 10)
    y = np.ones(10)
    square = lambda x, ys: (lambda t: np.full(np.size(t), float(np.sum(ys ** 2))))  # noqa: E731
    assert linearity_check(square, xs, y, y, [0.5]) > 1.0


def test_linearity_length_check():
    with pytest.raises(ValueError):
        linearity_check(_fitter(fit_krr, kern.sobolev(), 0.1), [0.1, 0.2], [1.0], [1.0], [0.5])


def test_csv_round_trip(tmp_path):
    data = generate(SPEC, 57, 8)
    path = tmp_path / "d.csv"
    write_csv(data, path)
    back = read_csv(path)
    assert np.array_equal(back.xs, data.xs) and np.array_equal(back.ys, data.ys)
    assert path.read_text().splitlines()[0] == "x,y"


def test_csv_without_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("0.1,1.5\n0.2,2.5\n")
    data = read_csv(path)
    assert data.xs.tolist() == [0.1, 0.2] and data.ys.tolist() == [1.5, 2.5]


def test_negative_noise_rejected():
    with pytest.raises(ValueError):
        SyntheticSpec(noise_var=-0.1)
