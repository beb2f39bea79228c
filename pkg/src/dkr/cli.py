"""Command line entry point ``dkr``."""

from __future__ import annotations

import logging
import sys

import click
import numpy as np

from . import harness, kernels, synthetic, tuning
from .distributed import ensemble_predict, fit_distributed, partition

KERNEL_CHOICE = click.Choice(["sobolev", "gaussian"], case_sensitive=False)
METHOD_CHOICE = click.Choice(["krr", "bckrr"], case_sensitive=False)


def _parse_fraction(ctx, param, value):
    if value is None:
        return None
    try:
        return harness._parse_number(value)
    except ValueError:
        raise click.BadParameter(f"not a number: {value!r}")


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return tuple(int(v) for v in value.replace(",", " ").split())
    except ValueError:
        raise click.BadParameter(f"expected integers: {value!r}")


def _load_data(data_path, N, noise_var, seed):
    if data_path:
        return synthetic.read_csv(data_path)
    return synthetic.generate(synthetic.SyntheticSpec(noise_var=noise_var), N, seed)


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Distributed kernel ridge regression workbench."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True), help="x,y CSV; synthetic data if omitted.")
@click.option("--N", "N", default=1024, show_default=True, help="Synthetic sample size.")
@click.option("--noise-var", default=0.2, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--kernel", type=KERNEL_CHOICE, default="sobolev", show_default=True)
@click.option("--method", type=METHOD_CHOICE, default="krr", show_default=True)
@click.option("--alpha", default="2/3", show_default=True, callback=_parse_fraction, help="lambda = N^-alpha.")
@click.option("--lambda", "lam", default=None, type=float, help="Explicit lambda; overrides --alpha.")
@click.option("--partitions", "m", default=1, show_default=True)
@click.option("--save", type=click.Path(dir_okay=False), help="Write the model as JSON (m = 1 only).")
def fit(data_path, N, noise_var, seed, kernel, method, alpha, lam, m, save):
    """Fit one (distributed) model and summarize it."""
    data = _load_data(data_path, N, noise_var, seed)
    n = len(data)
    lam = lam if lam is not None else n ** -alpha
    plan = partition(data, m, (seed, m))
    ens = fit_distributed(data, plan, kernels.from_name(kernel), lam, method)
    train_mse = float(np.mean((ensemble_predict(ens, data.xs) - data.ys) ** 2))
    coeffs = np.concatenate([loc.coeffs for loc in ens.locals])
    click.echo(f"N={n} m={m} kernel={kernel} method={method}")
    click.echo(f"lambda={lam!r}")
    click.echo(
        f"coeffs: count={coeffs.size} min={coeffs.min():.6g} max={coeffs.max():.6g} "
        f"l2={np.linalg.norm(coeffs):.6g}"
    )
    click.echo(f"training_mse={train_mse:.6g}")
    if not data_path:
        click.echo(f"target_mse={synthetic.mse_against_target(ens, synthetic.SyntheticSpec(noise_var=noise_var)):.6g}")
    if save:
        if m != 1:
            raise click.UsageError("--save requires --partitions 1")
        with open(save, "w") as fh:
            fh.write(ens.locals[0].to_json() + "\n")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="key = value experiment file.")
@click.option("--N", "N", type=int)
@click.option("--m-grid", callback=_int_list, help="Comma-separated partition counts.")
@click.option("--partitions", "m", type=int, help="Single partition count (overrides --m-grid).")
@click.option("--kernel", "kernel_names", type=KERNEL_CHOICE, multiple=True)
@click.option("--method", "methods", type=METHOD_CHOICE, multiple=True)
@click.option("--policy", type=click.Choice([harness.FIXED, harness.TUNED]))
@click.option("--alpha", callback=_parse_fraction)
@click.option("--repetitions", type=int)
@click.option("--seed", type=int)
@click.option("--noise-var", type=float)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", default="results.csv", show_default=True, type=click.Path(dir_okay=False))
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), help="Also emit a gnuplot script.")
@click.option("--no-timing", is_flag=True, help="Leave wall_time_s empty for byte-reproducible output.")
def experiment(config_path, N, m_grid, m, kernel_names, methods, policy, alpha, repetitions, seed, noise_var,
               workers, out, plot_path, no_timing):
    """Run the MSE-versus-m study and write per-cell results."""
    text = open(config_path).read() if config_path else ""
    config = harness.parse_config(
        text, N=N, m_grid=(m,) if m else m_grid, kernels=tuple(kernel_names) or None,
        methods=tuple(methods) or None, lambda_policy=policy, alpha=alpha,
        repetitions=repetitions, seed=seed, noise_var=noise_var,
    )
    records = harness.run_experiment(config, workers=workers)
    harness.write_results(records, out, timing=not no_timing)
    if plot_path:
        harness.emit_plot_script(records, plot_path)
    for (k, meth, mm), value in harness.mean_mse_by(records, "kernel", "method", "m").items():
        click.echo(f"{harness.curve_label(k, meth):10s} m={mm:<5d} mean_mse={value:.6g}")
    failed = sum(not r.ok for r in records)
    if failed:
        click.echo(f"{failed} cell(s) failed", err=True)
        sys.exit(1)


@main.command()
@click.option("--kernel", type=KERNEL_CHOICE, default="sobolev", show_default=True)
@click.option("--method", type=METHOD_CHOICE, default="krr", show_default=True)
@click.option("--alpha", default="1/2", show_default=True, callback=_parse_fraction)
@click.option("--noise-var", default=0.2, show_default=True)
@click.option("--N-values", "N_values", default="256,512,1024,2048,4096,8192", show_default=True, callback=_int_list)
@click.option("--repetitions", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--r-hint", type=float, help="Source index r, used only to print the theoretical slope.")
@click.option("--workers", default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def rates(kernel, method, alpha, noise_var, N_values, repetitions, seed, r_hint, workers, out):
    """Sweep N with m = 1 and fit the log-log convergence slope."""
    records, est = harness.rate_sweep(kernel, method, alpha, noise_var, N_values, repetitions, seed, workers, r_hint)
    if out:
        harness.write_results(records, out)
    for n, value in zip(est.N_values, est.mean_mse):
        click.echo(f"N={n:<6d} mean_mse={value:.6g}")
    click.echo(f"slope={est.slope:.4f} intercept={est.intercept:.4f}")
    if est.expected_exponent is not None:
        click.echo(f"expected_slope={est.expected_exponent:.4f}")
    if any(not r.ok for r in records):
        sys.exit(1)


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True))
@click.option("--N", "N", default=1024, show_default=True)
@click.option("--noise-var", default=0.2, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--kernel", type=KERNEL_CHOICE, default="sobolev", show_default=True)
@click.option("--partitions", "m", default=1, show_default=True)
@click.option("--alpha-min", default=0.10, show_default=True)
@click.option("--alpha-max", default=1.00, show_default=True)
@click.option("--alpha-step", default=0.05, show_default=True)
def tune(data_path, N, noise_var, seed, kernel, m, alpha_min, alpha_max, alpha_step):
    """Local LOO tuning per partition; prints the score table as CSV."""
    data = _load_data(data_path, N, noise_var, seed)
    grid = tuning.alpha_grid(alpha_min, alpha_max, alpha_step)
    plan = partition(data, m, (seed, m))
    k = kernels.from_name(kernel)
    click.echo("partition,n,alpha,lambda_local,loo_mse,selected,lambda_under")
    for ell, block in enumerate(plan.blocks):
        res = tuning.tune_and_underregularize(data.subset(block), k, len(data), grid)
        for a, score in res.cv_scores.items():
            sel = a == res.alpha_local
            under = repr(res.lambda_under) if sel else ""
            click.echo(f"{ell},{res.n},{a!r},{res.n ** -a!r},{score!r},{int(sel)},{under}")


if __name__ == "__main__":
    main()
