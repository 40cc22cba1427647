# -*- coding: utf-8 -*-
"""Click commands."""
import os
from subprocess import call

import click

from kdgpsim.errors import KdgpError
from kdgpsim.harness.experiments import run_experiment
from kdgpsim.harness.models import ExperimentKind, resolve_config

HERE = os.path.abspath(os.path.dirname(__file__))
PROJECT_ROOT = os.path.abspath(os.path.join(HERE, os.pardir))
TEST_PATH = os.path.join(PROJECT_ROOT, "tests")
LINT_TARGETS = ("kdgpsim", "tests", "autoapp.py")


def experiment_command(kind):
    """Turn a summary reporter into the command running experiment ``kind``."""

    def decorate(report):
        @click.command(kind.value, help=report.__doc__)
        @click.option(
            "--config",
            "config_file",
            type=click.Path(exists=True, dir_okay=False),
            help="Flat JSON file of configuration keys",
        )
        @click.option("--seed", type=click.IntRange(min=0), help="Base seed; trial i uses seed + i")
        @click.option("--out", type=click.Path(file_okay=False), help="Output directory")
        @click.option("--trials", type=click.IntRange(min=1), help="Number of trials")
        @click.option(
            "--set",
            "overrides",
            multiple=True,
            metavar="KEY=VALUE",
            help="Override one configuration key; VALUE is parsed as JSON when possible",
        )
        @click.pass_obj
        def command(settings, config_file, seed, out, trials, overrides):
            try:
                cfg = resolve_config(
                    kind,
                    settings,
                    config_file=config_file,
                    overrides=overrides,
                    seed=seed,
                    out=out,
                    trials=trials,
                )
                summary = run_experiment(cfg)
            except KdgpError as exc:
                raise click.ClickException(str(exc)) from exc
            report(summary)
            click.echo(f"Results written to {cfg.out}")

        return command

    return decorate


def _mean(entry, column):
    mean = entry[column]["mean"]
    return "n/a" if mean is None else f"{mean:.6g}"


def _echo_methods(summary, metric):
    for method, entry in summary["methods"].items():
        click.echo(
            f"{method:>20}  {metric} {_mean(entry, metric)}"
            f"  iterations {_mean(entry, 'consensus_iters_mean')}"
        )


@experiment_command(ExperimentKind.CONSENSUS_BENCH)
def consensus_bench(summary):
    """Compare dual-extrema and average consensus on random topologies."""
    _echo_methods(summary, "rmse_centralized")
    rate = summary.get("dual_extrema_faster_rate")
    if rate is not None:
        click.echo(f"dual-extrema at least as fast in {100 * rate:.0f}% of trials")


@experiment_command(ExperimentKind.STATIONARY)
def stationary(summary):
    """Estimate stationary GP fields with K-DGP, MADGP and centralized references."""
    _echo_methods(summary, "rmse_field")


@experiment_command(ExperimentKind.DYNAMIC)
def dynamic(summary):
    """Track a convection-diffusion field with and without the prediction step."""
    _echo_methods(summary, "rmse_field")
    rate = summary.get("prediction_better_rate")
    if rate is not None:
        click.echo(f"prediction lowers the RMSE in {100 * rate:.0f}% of trials")


@experiment_command(ExperimentKind.KERNEL_APPROX)
def kernel_approx(summary):
    """Tabulate exact and reduced-rank kernel cross-sections."""
    for E, mse in summary["mse"].items():
        click.echo(f"E={E:>5}  MSE {mse:.6g}")


@click.command()
@click.option("--slow", is_flag=True, help="Include the experiment-scale checks")
@click.option("-k", "keyword", metavar="EXPRESSION", help="Only run tests matching EXPRESSION")
@click.argument("paths", nargs=-1, type=click.Path(exists=True))
@click.pass_context
def test(ctx, slow, keyword, paths):
    """Run the tests, skipping the slow ones unless --slow is given."""
    import pytest

    args = list(paths) or [TEST_PATH]
    if not slow:
        args += ["-m", "not slow"]
    if keyword:
        args += ["-k", keyword]
    rv = pytest.main(args + ["--verbose"])
    ctx.exit(int(rv))


@click.command()
@click.option(
    "-f",
    "--fix-imports",
    default=True,
    is_flag=True,
    help="Fix imports using isort, before linting",
)
@click.option(
    "-c",
    "--check",
    default=False,
    is_flag=True,
    help="Don't make any changes to files, just confirm they are formatted correctly",
)
@click.pass_context
def lint(ctx, fix_imports, check):
    """Lint and check code style of the package, its tests and autoapp.py."""
    targets = [name for name in LINT_TARGETS if os.path.exists(os.path.join(PROJECT_ROOT, name))]

    def execute_tool(description, *args):
        """Execute a checking tool on the lint targets."""
        command_line = list(args) + targets
        click.echo(f"{description}: {' '.join(command_line)}")
        rv = call(command_line, cwd=PROJECT_ROOT)
        if rv != 0:
            ctx.exit(rv)

    extra = ["--check"] if check else []
    if fix_imports:
        execute_tool("Fixing import order", "isort", *extra)
    execute_tool("Formatting style", "black", *extra)
    execute_tool("Checking code style", "flake8")
