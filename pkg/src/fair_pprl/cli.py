"""
Command-Line Interface

fair-pprl [--config FILE] [--log-level LEVEL] COMMAND ...

Commands cover each pipeline stage on files (gen-data, encode, block, link),
the full sweep (experiment), the oracle curves (oracle-fp, oracle-fpr) and
the two optimizers (optimize-a, optimize-b). Errors of the library become
click errors with exit code 1; an experiment with failed runs exits with 2.
"""

import functools
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
import yaml
from rich.console import Console
from rich.table import Table

from .analytics.models import AnalyticsParams
from .blocking.dp_blocking import (
    Scenario,
    ScenarioConfig,
    apply_feature_level_dp,
    block_dataset,
    dummy_report,
    read_binned,
    write_binned,
)
from .config import ExperimentConfig
from .encoding.bloom_filter import encode_dataset
from .encoding.serialization import read_encoded, write_encoded
from .exceptions import ConfigurationError, PPRLError
from .experiments.harness import (
    base_rates_for,
    oracle_fp_curve,
    oracle_fpr_curve,
    prepare_data,
    run_experiment,
    write_frame,
)
from .linkage.classifiers import (
    candidate_pairs,
    classify_logistic,
    classify_threshold,
    sample_training_pairs,
    train_logistic,
)
from .linkage.evaluation import evaluate
from .optimize.search import OptimizationResult, method_a_search, method_b_allocate
from .records.dataset import load_dataset, load_ground_truth, save_dataset, save_ground_truth
from .records.synthetic import generate_synthetic
from .utils.helpers import atomic_write_text, derive_seed, parse_float_list
from .utils.log import get_logger, setup_logging

console = Console()
logger = get_logger(__name__)


def _handle_errors(command: Callable) -> Callable:
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PPRLError as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc
    return wrapper


def _config(ctx: click.Context, **overrides: Any) -> ExperimentConfig:
    try:
        return ctx.obj["config"].with_overrides(**overrides)
    except PPRLError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc


def _render(frame: pd.DataFrame, title: str, float_digits: int = 4) -> None:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column))
    for row in frame.itertuples(index=False):
        table.add_row(*[
            f"{v:.{float_digits}f}" if isinstance(v, float) else str(v) for v in row
        ])
    console.print(table)


def _per_group(values: Sequence[float], n_groups: int, name: str) -> List[float]:
    if len(values) == 1:
        return list(values) * n_groups
    if len(values) != n_groups:
        raise ConfigurationError(f"--{name} takes one value or one per group ({n_groups}), got {len(values)}")
    return list(values)


def scenario_from_flags(
    cfg: ExperimentConfig,
    scenario: str,
    eps: Sequence[float],
    flips: Sequence[float],
    seed: int,
) -> ScenarioConfig:
    """
    Build a ScenarioConfig from --scenario, --eps and --flip.

    A single --eps value is the overall budget (eps_g = G * eps); G values
    are per-group budgets. A single --flip applies to every group.
    """
    parsed = Scenario.parse(scenario)
    if not parsed.is_noisy:
        return ScenarioConfig.baseline1(cfg.threshold, seed=seed)
    n_groups = cfg.n_groups
    eps = list(eps) or [cfg.budgets[0]]
    flips = _per_group(list(flips) or [cfg.flip], n_groups, "flip")
    if len(eps) == 1:
        per_group_eps = [n_groups * eps[0]] * n_groups
    else:
        per_group_eps = _per_group(eps, n_groups, "eps")
    return ScenarioConfig(parsed, per_group_eps, flips, threshold=cfg.threshold, seed=seed)


def _float_list(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> List[float]:
    try:
        return parse_float_list(value)
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from None


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Flat YAML experiment config")
@click.option("--log-level", default=None, help="Log level (default FAIR_PPRL_LOG_LEVEL, LOG_LEVEL or INFO)")
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], log_level: Optional[str]) -> None:
    """Fairness-aware privacy-preserving record linkage experiments"""
    setup_logging(log_level)
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = ExperimentConfig.from_yaml(config_path) if config_path else ExperimentConfig()
    except PPRLError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc


@main.command("gen-data")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--seed", type=int, default=None)
@click.option("--n-records", type=int, default=None)
@click.pass_context
@_handle_errors
def gen_data(ctx: click.Context, out_dir: str, seed: Optional[int], n_records: Optional[int]) -> None:
    """Generate two synthetic parties and their ground truth"""
    cfg = _config(ctx, seed=seed, n_records=n_records)
    corruption = cfg.corruption_config() if cfg.corruption_rate > 0 or cfg.group_corruption_rates else None
    dataset_a, dataset_b, truth = generate_synthetic(
        cfg.n_records, cfg.overlap, cfg.group_proportions, cfg.seed,
        corruption=corruption, group_labels=cfg.resolved_group_labels(),
    )
    out = Path(out_dir)
    save_dataset(dataset_a, out / "party_a.csv")
    save_dataset(dataset_b, out / "party_b.csv")
    save_ground_truth(truth, out / "ground_truth.csv")
    _render(pd.DataFrame([
        {"file": "party_a.csv", "records": len(dataset_a), "groups": str(dataset_a.group_sizes())},
        {"file": "party_b.csv", "records": len(dataset_b), "groups": str(dataset_b.group_sizes())},
        {"file": "ground_truth.csv", "records": len(truth), "groups": ""},
    ]), f"Synthetic data in {out}")


@main.command()
@click.argument("dataset", type=click.Path(dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_context
@_handle_errors
def encode(ctx: click.Context, dataset: str, out_path: str) -> None:
    """Encode a dataset CSV into Bloom filters"""
    cfg = _config(ctx)
    encoding = cfg.encoding_config()
    filters = encode_dataset(load_dataset(dataset, cfg.schema()), encoding)
    write_encoded(filters, out_path, n_l=encoding.n_l)
    console.print(f"Encoded {len(filters)} records into {out_path}")


@main.command()
@click.argument("encoded", type=click.Path(dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--scenario", default="Baseline2", show_default=True)
@click.option("--eps", callback=_float_list, default=None, help="Overall budget, or one budget per group")
@click.option("--flip", callback=_float_list, default=None, help="Flip probability, or one per group")
@click.option("--fragment", type=click.Path(exists=True, dir_okay=False), default=None, help="Scenario YAML fragment")
@click.option("--seed", type=int, default=None)
@click.pass_context
@_handle_errors
def block(
    ctx: click.Context, encoded: str, out_path: str, scenario: str,
    eps: List[float], flip: List[float], fragment: Optional[str], seed: Optional[int],
) -> None:
    """Bin encoded records and inject dummies"""
    cfg = _config(ctx, seed=seed)
    if fragment:
        try:
            data = yaml.safe_load(Path(fragment).read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"Cannot parse {fragment}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{fragment} must hold a scenario mapping")
        scenario_config = ScenarioConfig.from_dict(data)
        if seed is not None:
            scenario_config = scenario_config.with_seed(seed)
    else:
        scenario_config = scenario_from_flags(cfg, scenario, eps, flip, cfg.seed)
    encoding = cfg.encoding_config()
    binned = block_dataset(read_encoded(encoded), encoding)
    perturbed = apply_feature_level_dp(binned, scenario_config)
    write_binned(perturbed, out_path, seed=derive_seed(scenario_config.seed, "release"), n_l=encoding.n_l)
    _render(dummy_report(perturbed, scenario_config), f"{scenario_config.scenario.value} dummies")


def _known_ids(cfg: ExperimentConfig, path_a: Optional[str], path_b: Optional[str]) -> Optional[frozenset]:
    """Entity ids of both parties, or None (with a warning) when a dataset is missing"""
    if not (path_a and path_b):
        logger.warning("[Linkage] Party datasets not given; entity ids of released records are not checked")
        return None
    schema = cfg.schema()
    return load_dataset(path_a, schema).ids | load_dataset(path_b, schema).ids


@main.command()
@click.argument("binned_a", type=click.Path(dir_okay=False))
@click.argument("binned_b", type=click.Path(dir_okay=False))
@click.option("--truth", type=click.Path(dir_okay=False), required=True, help="Ground-truth CSV (id_a,id_b)")
@click.option("--classifier", type=click.Choice(["threshold", "logistic"]), default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Report CSV")
@click.option("--dataset-a", type=click.Path(dir_okay=False), default=None, help="Party A records (default: config dataset_a)")
@click.option("--dataset-b", type=click.Path(dir_okay=False), default=None, help="Party B records (default: config dataset_b)")
@click.pass_context
@_handle_errors
def link(
    ctx: click.Context, binned_a: str, binned_b: str, truth: str, classifier: Optional[str],
    threshold: Optional[float], seed: Optional[int], out_path: Optional[str],
    dataset_a: Optional[str], dataset_b: Optional[str],
) -> None:
    """Compare released bins, classify pairs and evaluate per group"""
    cfg = _config(ctx, classifier=classifier, threshold=threshold, seed=seed)
    ground_truth = load_ground_truth(truth)
    known_ids = _known_ids(cfg, dataset_a or cfg.dataset_a, dataset_b or cfg.dataset_b)
    pairs = list(candidate_pairs(read_binned(binned_a), read_binned(binned_b)))
    if cfg.classifier == "logistic":
        sample = sample_training_pairs(pairs, ground_truth, derive_seed(cfg.seed, "train"), cfg.training_max_per_class)
        predictions = classify_logistic(pairs, train_logistic(sample))
    else:
        predictions = classify_threshold(pairs, cfg.threshold)
    report = evaluate(predictions, ground_truth, pairs, attribution=cfg.attribution, known_ids=known_ids)
    context = {"classifier": cfg.classifier, "threshold": cfg.threshold}
    console.print(report.to_text(context))
    if out_path:
        write_frame(pd.DataFrame(report.to_records(context)), out_path)


@main.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--scenario", "scenarios", multiple=True, help="Repeat to select scenarios")
@click.option("--eps", callback=_float_list, default=None, help="Comma-separated overall budgets")
@click.option("--flip", type=float, default=None)
@click.option("--classifier", type=click.Choice(["threshold", "logistic"]), default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--repetitions", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.pass_context
@_handle_errors
def experiment(
    ctx: click.Context, out_dir: Optional[str], seed: Optional[int], scenarios: Sequence[str],
    eps: List[float], flip: Optional[float], classifier: Optional[str], threshold: Optional[float],
    repetitions: Optional[int], workers: Optional[int],
) -> None:
    """Run the scenario sweep and write the reports"""
    cfg = _config(
        ctx, output_dir=out_dir, seed=seed, scenarios=list(scenarios) or None, budgets=eps or None,
        flip=flip, classifier=classifier, threshold=threshold, repetitions=repetitions, workers=workers,
    )
    outputs = run_experiment(cfg)
    if not outputs.summary.empty:
        columns = ["scenario", "eps", "runs", "f_star_mean", "fairness_mean", "cost_mean"]
        _render(outputs.summary[columns], f"Summary ({outputs.output_dir})")
    if outputs.n_failed:
        console.print(f"[red]{outputs.n_failed} run(s) failed; see {outputs.files['manifest']}[/red]")
        ctx.exit(2)


def _flip_values(cfg: ExperimentConfig) -> np.ndarray:
    n = int(round(cfg.oracle_flip_max / cfg.oracle_flip_step))
    return np.round(np.arange(n + 1) * cfg.oracle_flip_step, 10)


@main.command("oracle-fp")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--trials", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
@_handle_errors
def oracle_fp(ctx: click.Context, out_path: str, trials: Optional[int], threshold: Optional[float], seed: Optional[int]) -> None:
    """Closed-form FP probability against Monte-Carlo simulation"""
    cfg = _config(ctx, oracle_trials=trials, threshold=threshold, seed=seed)
    params = AnalyticsParams(n_l=cfg.n_l, threshold=cfg.threshold)
    frame = oracle_fp_curve(params, _flip_values(cfg), cfg.oracle_trials, seed=cfg.seed)
    write_frame(frame, out_path)
    gap = (frame["predicted_flip_variance"] - frame["simulated"]).abs().max()
    _render(frame, f"FP probability (max gap, flip-aware model: {gap:.4f})")


@main.command("oracle-fpr")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--eps", callback=_float_list, default=None, help="Comma-separated overall budgets")
@click.option("--repetitions", type=int, default=None)
@click.option("--flip", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
@_handle_errors
def oracle_fpr(
    ctx: click.Context, out_path: str, eps: List[float], repetitions: Optional[int],
    flip: Optional[float], seed: Optional[int],
) -> None:
    """Predicted against simulated per-group FPR along the budget grid"""
    cfg = _config(ctx, budgets=eps or None, oracle_repetitions=repetitions, flip=flip, seed=seed)
    frame = oracle_fpr_curve(cfg)
    write_frame(frame, out_path)
    _render(frame, "FPR vs budget")


def _report_optimization(result: OptimizationResult, cfg: ExperimentConfig, out_path: Optional[str]) -> None:
    fragment = result.to_scenario(cfg.threshold, seed=cfg.seed).to_dict()
    rows = [
        {"group": g, "eps": e, "flip": f}
        for g, (e, f) in enumerate(zip(fragment["per_group_eps"], fragment["per_group_flip"]), start=1)
    ]
    _render(pd.DataFrame(rows), f"{result.method.value}: model fairness loss {result.achieved_loss:.6f}", 6)
    if out_path:
        atomic_write_text(out_path, yaml.safe_dump(fragment, sort_keys=False))


def _optimizer_inputs(cfg: ExperimentConfig):
    data = prepare_data(cfg)
    return data.n_groups, base_rates_for(cfg, data), cfg.analytics_params(data.fill)


@main.command("optimize-a")
@click.option("--eps", type=float, default=None, help="Overall budget (eps_g = G * eps)")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Scenario YAML fragment")
@click.pass_context
@_handle_errors
def optimize_a(ctx: click.Context, eps: Optional[float], seed: Optional[int], out_path: Optional[str]) -> None:
    """Search per-group flip probabilities at fixed budgets (Method A)"""
    cfg = _config(ctx, seed=seed)
    overall = eps if eps is not None else cfg.budgets[0]
    n_groups, base, params = _optimizer_inputs(cfg)
    result = method_a_search(n_groups * overall, base, params, cfg.method_a_grid_step, cfg.flip)
    _report_optimization(result, cfg, out_path)


@main.command("optimize-b")
@click.option("--eps", type=float, default=None, help="Overall budget to split")
@click.option("--flip", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Scenario YAML fragment")
@click.pass_context
@_handle_errors
def optimize_b(
    ctx: click.Context, eps: Optional[float], flip: Optional[float], seed: Optional[int], out_path: Optional[str]
) -> None:
    """Split the overall budget across groups at a fixed flip (Method B)"""
    cfg = _config(ctx, flip=flip, seed=seed)
    overall = eps if eps is not None else cfg.budgets[0]
    _, base, params = _optimizer_inputs(cfg)
    result = method_b_allocate(overall, cfg.flip, base, params, tol=cfg.method_b_tol)
    _report_optimization(result, cfg, out_path)


if __name__ == "__main__":
    main()
