"""Command-line front door: data/train pipeline, debug CFE, service, bots, analysis."""
from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import bots, cfe as cfe_mod, datagen, report, service as service_mod, tree
from .game import Condition, session_to_dict

DEFAULT_DEPTH = {1: 7, 2: 5}


@click.group()
def main() -> None:
    """Counterfactual-feedback study toolkit."""


@main.command()
@click.option("--experiment", type=click.IntRange(1, 2), required=True)
@click.option("--replicates", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--balanced/--raw", default=True, show_default=True, help="Apply label-binned oversampling.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def data(experiment: int, replicates: int, balanced: bool, seed: int, out: Path) -> None:
    """Generate a growth dataset and write it as CSV."""
    dataset = datagen.generate_grid(experiment, replicates)
    if balanced:
        dataset = datagen.smote_balance(dataset, seed=seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    datagen.write_csv(dataset, out)
    click.echo(f"wrote {len(dataset.growth)} rows ({dataset.provenance}) to {out}")


@main.command()
@click.option("--experiment", type=click.IntRange(1, 2), required=True)
@click.option("--depth", type=click.IntRange(min=1), default=None, help="Tree depth limit (default: 7 for experiment 1, 5 for experiment 2).")
@click.option("--replicates", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--min-leaf", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--test-fraction", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def train(experiment: int, depth: int | None, replicates: int, min_leaf: int, test_fraction: float, seed: int, out: Path) -> None:
    """Run the full training pipeline and save the model document."""
    if depth is None:
        depth = DEFAULT_DEPTH[experiment]
    t0 = time.perf_counter()
    dataset = datagen.generate_grid(experiment, replicates)
    balanced = datagen.smote_balance(dataset, seed=seed)
    train_set, test_set = datagen.train_test_split(balanced, test_fraction, seed=seed)
    model = tree.fit_tree(train_set, max_depth=depth, min_samples_leaf=min_leaf)
    metrics = tree.evaluate(model, test_set)
    model = tree.GrowthModel(
        nodes=model.nodes, max_depth=model.max_depth, experiment=model.experiment, metrics=metrics
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    tree.save_model(model, out)
    elapsed = time.perf_counter() - t0
    click.echo(
        f"experiment {experiment}, depth {depth}: trained on {len(train_set.growth)} rows, "
        f"test R^2 = {metrics.r_squared:.4f}, MSE = {metrics.mse:.4f} ({elapsed:.1f}s) -> {out}"
    )


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--point", required=True, help="Comma-separated plant counts, e.g. 0,5,0,1,0.")
@click.option("--mode", type=click.Choice(cfe_mod.MODES), default=cfe_mod.MODE_MAX_TARGET, show_default=True)
@click.option("--epsilon", type=float, default=0.05, show_default=True, help="Max-target slack below the best leaf.")
@click.option("--delta", type=float, default=1e-6, show_default=True, help="Required improvement in strict-improve mode.")
def cfe(model_path: Path, point: str, mode: str, epsilon: float, delta: float) -> None:
    """Print the counterfactual suggestion for one plant vector."""
    model = tree.load_model(model_path)
    try:
        x = tuple(int(part) for part in point.split(","))
    except ValueError:
        raise click.BadParameter(f"--point must be comma-separated integers, got {point!r}")
    config = cfe_mod.CfeConfig(mode=mode, epsilon=epsilon, delta_improve=delta)
    result = cfe_mod.compute_cfe(model, x, config)
    if result is None:
        click.echo("none (near-optimal)")
    else:
        click.echo(
            json.dumps(
                {
                    "suggestion": list(result.suggestion),
                    "predicted_growth": result.predicted_growth,
                    "distance": result.distance,
                }
            )
        )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--store", type=click.Path(file_okay=False, path_type=Path), required=True)
def serve(config_path: Path, store: Path) -> None:
    """Run the HTTP study service until interrupted."""
    config = service_mod.StudyConfig.from_toml(config_path)
    click.echo(f"serving on {config.bind}, store {store}")
    service_mod.serve(config, store)


@main.command()
@click.option("--policy", type=click.Choice(bots.POLICY_KINDS), required=True)
@click.option("--n", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--condition", type=click.Choice(["control", "cfe"]), default=None, help="Default: cfe for cfe-follower, control otherwise.")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
def simulate(policy: str, n: int, config_path: Path, condition: str | None, seed: int, out: Path) -> None:
    """Play a bot cohort and write session logs plus analysis-ready CSVs."""
    study = service_mod.StudyConfig.from_toml(config_path)
    if condition is None:
        condition = "cfe" if policy == "cfe-follower" else "control"
    cohort = bots.run_cohort(bots.BotPolicy(kind=policy), n, study.game_config(), Condition(condition), seed)
    out.mkdir(parents=True, exist_ok=True)
    for session in cohort:
        path = out / f"{session.id}.json"
        path.write_text(json.dumps(session_to_dict(session), sort_keys=True, indent=2), encoding="utf-8")
    (out / "long.csv").write_text(service_mod.export_long_csv(cohort), encoding="utf-8")
    (out / "survey.csv").write_text(service_mod.export_survey_csv(cohort), encoding="utf-8")
    final = [s.trials[-1].pack_after for s in cohort]
    click.echo(
        f"{n} {policy} sessions ({condition}) -> {out}; "
        f"final pack size mean {sum(final) / len(final):.1f}, range {min(final)}..{max(final)}"
    )


@main.command()
@click.option("--export", "long_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="Long-format trial CSV.")
@click.option("--survey", "survey_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="Survey CSV.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
def analyze(long_csv: Path, survey_csv: Path, out: Path) -> None:
    """Quality report, per-trial summary, tests, mixed model, and figures."""
    try:
        written = report.analyze(long_csv, survey_csv, out)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for role, path in written.items():
        click.echo(f"{role}: {path}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--store", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--format", "fmt", type=click.Choice(["long-csv", "survey-csv"]), default="long-csv", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def export(config_path: Path, store: Path, fmt: str, out: Path) -> None:
    """Rebuild service state from its event log and write one CSV export."""
    config = service_mod.StudyConfig.from_toml(config_path)
    svc = service_mod.StudyService(config, store)
    try:
        text = svc.admin_export(fmt)
    finally:
        svc.close()
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    click.echo(f"wrote {fmt} ({len(text.splitlines()) - 1} rows) to {out}")


if __name__ == "__main__":
    main()
