"""CLI interface for the attsets-lab experiments.

Commands:
    synth           Generate multi-view and scene datasets
    gradcheck       Run the finite-difference gradient suite
    faset           Benchmark AttSets (two-stage and joint) against pooling
    bonet train     Train the toy instance-segmentation pipeline
    bonet eval      Evaluate trained checkpoints (mPrec / mRec)
    gandemo         Run the WGAN-GP toy demo

Exit codes: 0 success, 1 failed check, 2 configuration error.
"""

import logging
import sys
from pathlib import Path

import click
import numpy as np
from dotenv import load_dotenv

from src.bonet.experiment import (
    BonetExperimentError,
    acceptance_failures,
    run_bonet_evaluation,
    run_bonet_training,
)
from src.config import (
    LOG_LEVELS,
    SNAPSHOT_NAME,
    ConfigError,
    LabConfig,
    load_config,
    to_ini,
)
from src.dataset_io import generate_dataset, write_dataset
from src.faset.experiment import (
    ExperimentConfigError,
    run_faset_experiment,
    trend_failures,
)
from src.gan import run_gan_demo
from src.gradcheck_suite import SuiteError, run_gradcheck_suite
from src.reporting import (
    ArtifactError,
    ArtifactWriter,
    line_figure,
    loss_curve_figure,
    view_count_figure,
)

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2

BONET_LOSS_COLUMNS = ["sem", "bbox", "bbs", "pmask", "total"]


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
    )


def _fail(message: str, code: int) -> None:
    click.echo(f"✗ {message}", err=True)
    sys.exit(code)


def _writer(config: LabConfig, *parts: str) -> ArtifactWriter:
    """Writer for one subcommand, with the resolved config snapshot in place."""
    writer = ArtifactWriter(Path(config.run.out).joinpath(*parts))
    writer.write_text(SNAPSHOT_NAME, to_ini(config))
    return writer


def _report_checks(failures: list[str]) -> None:
    if failures:
        for failure in failures:
            click.echo(f"  - {failure}", err=True)
        _fail(f"{len(failures)} check(s) failed", EXIT_CHECK_FAILED)
    click.echo("✓ All checks passed")


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="INI file with [run], [synth], [faset], [bonet] and [gan] sections",
)
@click.option(
    "--seed", type=click.IntRange(min=0), help="Master seed for data and demos"
)
@click.option("--out", envvar="ATTSETS_OUT", help="Output directory (default: runs)")
@click.option("--jobs", type=int, help="Worker threads for independent runs")
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Override one config value (repeatable)",
)
@click.option(
    "--log-level",
    envvar="ATTSETS_LOG_LEVEL",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    help="Logging level (default: INFO)",
)
@click.pass_context
def cli(ctx, config_path, seed, out, jobs, overrides, log_level):
    """attsets-lab - set aggregation and instance segmentation experiments."""
    shortcuts = []
    if seed is not None:
        shortcuts += [f"synth.seed={seed}", f"gan.seed={seed}"]
    if out is not None:
        shortcuts.append(f"run.out={out}")
    if jobs is not None:
        shortcuts.append(f"run.jobs={jobs}")
    if log_level is not None:
        shortcuts.append(f"run.log_level={log_level.upper()}")

    try:
        config = load_config(config_path, [*shortcuts, *overrides])
    except ConfigError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG_ERROR)
    _configure_logging(config.run.log_level)
    ctx.obj = config


@cli.command()
@click.pass_obj
def synth(config: LabConfig):
    """Generate datasets and a manifest with counts and the master seed."""
    try:
        writer = _writer(config, "synth")
        dataset = generate_dataset(config.synth)
        manifest = write_dataset(dataset, config.synth, writer)
    except ArtifactError as e:
        _fail(f"Error: {e}", EXIT_CONFIG_ERROR)
    total = sum(manifest["counts"].values())
    click.echo(f"✓ Wrote {total} records to {writer.root}")


@cli.command()
@click.option("--only", multiple=True, help="Run only the named check (repeatable)")
@click.option(
    "--sign-flip",
    is_flag=True,
    help="Negate every analytic gradient (negative control, must fail)",
)
@click.pass_obj
def gradcheck(config: LabConfig, only, sign_flip):
    """Compare every gradient with central finite differences."""
    try:
        result = run_gradcheck_suite(
            seed=config.synth.seed, only=tuple(only), sign_flip=sign_flip
        )
    except SuiteError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG_ERROR)
    writer = _writer(config, "gradcheck")
    writer.write_csv("gradcheck.csv", result["report"])

    report = result["report"]
    for row in report.itertuples():
        mark = "✓" if row.passed else "✗"
        click.echo(f"{mark} {row.name:<28} max rel. error {row.max_error:.2e}")
    passed = int(report["passed"].sum())
    click.echo(f"{passed}/{len(report)} checks passed in {result['elapsed']:.1f}s")
    if result["status"] != "success":
        failed = ", ".join(result["failed"])
        _fail(f"Gradient checks failed: {failed}", EXIT_CHECK_FAILED)


@cli.command()
@click.option(
    "--check", is_flag=True, help="Exit 1 unless the seed-averaged trends hold"
)
@click.pass_obj
def faset(config: LabConfig, check):
    """Train and compare every aggregator under identical budgets."""
    try:
        result = run_faset_experiment(config.faset, config.synth, config.run.jobs)
    except ExperimentConfigError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG_ERROR)

    curves = result.curves.copy()
    curves["step"] = curves.groupby(["model", "seed"]).cumcount()
    averaged = (
        curves.groupby(["model", "step"], sort=False)["loss"].mean().reset_index()
    )

    writer = _writer(config, "faset")
    writer.write_csv("iou_records.csv", result.records)
    writer.write_csv("iou_by_views.csv", result.summary)
    writer.write_csv("loss_curves.csv", curves)
    writer.write_plot("iou_by_views.html", view_count_figure(result.summary))
    writer.write_plot(
        "loss_curves.html",
        line_figure(averaged, "step", "loss", "model", "Training loss", "step", "BCE"),
    )
    for model, group in result.summary.groupby("model", sort=False):
        best = group.loc[group["iou"].idxmax()]
        click.echo(f"✓ {model:<14} best IoU {best['iou']:.4f} at n={int(best['n'])}")
    if check:
        _report_checks(trend_failures(result.summary))


@cli.group()
def bonet():
    """Toy instance segmentation with explicit box prediction."""
    pass


@bonet.command("train")
@click.pass_obj
def bonet_train(config: LabConfig):
    """Train one model per seed and save checkpoints and loss curves."""
    writer = _writer(config, "bonet", "train")
    try:
        curves = run_bonet_training(
            config.bonet, config.synth, writer.root / "checkpoints", config.run.jobs
        )
    except BonetExperimentError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG_ERROR)
    writer.write_csv("loss_curves.csv", curves)
    writer.write_plot("loss_curves.html", loss_curve_figure(curves, BONET_LOSS_COLUMNS))
    final = curves.groupby("seed")["total"].last()
    click.echo(f"✓ Trained {len(final)} model(s), mean final loss {final.mean():.4f}")


@bonet.command("eval")
@click.option(
    "--checkpoints",
    type=click.Path(file_okay=False, path_type=Path),
    help="Checkpoint directory (default: <out>/bonet/train/checkpoints)",
)
@click.option(
    "--check", is_flag=True, help="Exit 1 unless held-out mPrec and mRec reach 0.7"
)
@click.pass_obj
def bonet_eval(config: LabConfig, checkpoints, check):
    """Report mPrec / mRec for every trained seed on train and test scenes."""
    root = checkpoints or Path(config.run.out) / "bonet" / "train" / "checkpoints"
    try:
        table = run_bonet_evaluation(config.bonet, config.synth, root)
    except BonetExperimentError as e:
        _fail(f"Error: {e}", EXIT_CONFIG_ERROR)
    writer = _writer(config, "bonet", "eval")
    writer.write_csv("metrics.csv", table)
    summary = table.groupby(["split", "mode"], sort=False)[["mprec", "mrec"]].mean()
    for (split, mode), row in summary.iterrows():
        click.echo(
            f"✓ {split:<5} ({mode}): "
            f"mPrec {row['mprec']:.3f}, mRec {row['mrec']:.3f}"
        )
    if check:
        _report_checks(acceptance_failures(table))


@cli.command()
@click.pass_obj
def gandemo(config: LabConfig):
    """Train the conditional critic and log the Wasserstein estimate and GP."""
    history = run_gan_demo(config.gan)
    writer = _writer(config, "gandemo")
    writer.write_csv("gan_history.csv", history)
    long = history.melt(
        id_vars=["step"], value_vars=["wasserstein", "penalty"], var_name="term"
    )
    writer.write_plot(
        "gan_history.html",
        line_figure(
            long, "step", "value", "term", "WGAN-GP demo", "critic step", "value"
        ),
    )
    first, last = history.iloc[0], history.iloc[-1]
    click.echo(
        f"✓ W estimate {first['wasserstein']:.4f} -> {last['wasserstein']:.4f}, "
        f"final GP {last['penalty']:.4f}"
    )
    if not np.all(np.isfinite(history["penalty"].to_numpy())):
        _fail("Gradient penalty became non-finite", EXIT_CHECK_FAILED)


def main() -> None:
    try:
        cli()
    except (ConfigError, ArtifactError) as e:
        _fail(f"Error: {e}", EXIT_CONFIG_ERROR)
    except Exception as e:
        click.echo(f"✗ Unexpected error: {str(e)}", err=True)
        raise


if __name__ == "__main__":
    main()
