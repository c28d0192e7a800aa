"""
Experiment Harness

Runs the scenario sweep end to end (encode, block, perturb, link, evaluate)
and produces the theory-vs-simulation curves. The data and the noiseless
bins are prepared once per experiment; repetitions vary the perturbation
seeds, so every scenario at a given repetition sees the same records.

Use Cases:
- Four scenarios across a budget grid with repeated seeds
- Per-run, per-group and aggregated CSV reports with a run manifest
- FP-probability and FPR-vs-budget oracle curves for plotting
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from tqdm import tqdm

from ..analytics.models import AnalyticsParams, BaseRates, fp_probability, predicted_fpr
from ..analytics.sampling import estimate_base_rates
from ..analytics.simulation import simulate_fp_probability
from ..blocking.dp_blocking import BinnedDataset, Scenario, ScenarioConfig, apply_feature_level_dp, block_dataset
from ..config import ExperimentConfig
from ..encoding.bloom_filter import EncodingConfig, encode_dataset, fill_rate
from ..exceptions import DomainError, PPRLError
from ..linkage.classifiers import (
    CandidatePair,
    candidate_pairs,
    classify_logistic,
    classify_threshold,
    sample_training_pairs,
    train_logistic,
)
from ..linkage.evaluation import Attribution, LinkageReport, evaluate, same_group_cost
from ..optimize.search import method_a_search, method_b_allocate
from ..privacy.mechanisms import substream
from ..records.dataset import Dataset, GroundTruth, load_dataset, load_ground_truth
from ..records.synthetic import generate_synthetic
from ..utils.helpers import atomic_write_text, derive_seed
from ..utils.log import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.10g"
MIN_ORACLE_TRIALS = 1000
MIN_ORACLE_REPETITIONS = 50
SUMMARY_METRICS = ("precision", "recall", "f_star", "fpr", "fnr", "fairness_loss", "fairness", "cost")
RUN_FAILURES = (PPRLError, ArithmeticError, ValueError)


@dataclass
class PreparedData:
    """Both parties' records, encodings and noiseless bins"""
    dataset_a: Dataset
    dataset_b: Dataset
    ground_truth: GroundTruth
    encoding: EncodingConfig
    binned_a: BinnedDataset
    binned_b: BinnedDataset
    fill: float

    @property
    def n_groups(self) -> int:
        return self.dataset_a.schema.n_groups

    @property
    def known_ids(self) -> frozenset:
        return self.dataset_a.ids | self.dataset_b.ids


@dataclass(frozen=True)
class RunSpec:
    """One (scenario, overall budget, repetition) cell of the sweep"""
    scenario: Scenario
    eps: float
    repetition: int

    @property
    def run_id(self) -> str:
        return f"{self.scenario.value}-eps{self.eps:g}-rep{self.repetition:03d}"


@dataclass
class RunResult:
    spec: RunSpec
    scenario_config: Optional[ScenarioConfig] = None
    report: Optional[LinkageReport] = None
    same_group_cost: Dict[int, int] = field(default_factory=dict)
    dummies: Tuple[int, int] = (0, 0)
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.error is None


@dataclass
class ExperimentOutputs:
    """Frames written by run_experiment and where they went"""
    output_dir: Path
    runs: pd.DataFrame
    groups: pd.DataFrame
    summary: pd.DataFrame
    manifest: pd.DataFrame
    files: Dict[str, Path] = field(default_factory=dict)

    @property
    def n_failed(self) -> int:
        return int((self.manifest["status"] != "succeeded").sum())


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Atomic CSV export with a fixed float format"""
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n", float_format=FLOAT_FORMAT))


def _join(values: Sequence[float]) -> str:
    return "|".join(FLOAT_FORMAT % v for v in values)


def prepare_data(cfg: ExperimentConfig) -> PreparedData:
    """
    Load or generate both parties, encode them and build the noiseless bins.

    Args:
        cfg: Experiment configuration

    Returns:
        PreparedData
    """
    if cfg.uses_files:
        schema = cfg.schema()
        dataset_a = load_dataset(cfg.dataset_a, schema)
        dataset_b = load_dataset(cfg.dataset_b, schema)
        truth = load_ground_truth(cfg.ground_truth)
    else:
        corruption = None
        if cfg.corruption_rate > 0 or cfg.group_corruption_rates:
            corruption = cfg.corruption_config()
        dataset_a, dataset_b, truth = generate_synthetic(
            cfg.n_records, cfg.overlap, cfg.group_proportions, derive_seed(cfg.seed, "data"),
            corruption=corruption, group_labels=cfg.resolved_group_labels(),
        )

    encoding = cfg.encoding_config()
    filters_a = encode_dataset(dataset_a, encoding)
    filters_b = encode_dataset(dataset_b, encoding)
    data = PreparedData(
        dataset_a=dataset_a,
        dataset_b=dataset_b,
        ground_truth=truth,
        encoding=encoding,
        binned_a=block_dataset(filters_a, encoding),
        binned_b=block_dataset(filters_b, encoding),
        fill=fill_rate(filters_a + filters_b),
    )
    logger.info(
        "[Experiment] Prepared %d + %d records in %d + %d bins (fill %.3f)",
        len(dataset_a), len(dataset_b), len(data.binned_a.bins), len(data.binned_b.bins), data.fill,
    )
    return data


def base_rates_for(cfg: ExperimentConfig, data: PreparedData) -> BaseRates:
    return estimate_base_rates(
        data.binned_a, data.binned_b, data.ground_truth,
        threshold=cfg.threshold, sample_size=cfg.sample_size,
        seed=derive_seed(cfg.seed, "base-rates"), n_groups=data.n_groups,
    )


def plan_scenarios(
    cfg: ExperimentConfig, data: PreparedData
) -> Dict[Tuple[Scenario, float], Union[ScenarioConfig, str]]:
    """
    Per-group parameters of every (scenario, overall budget).

    Baseline 2 uses eps_g = G * eps and the configured flip; Method A and
    Method B run their optimizers on base rates estimated once. A failed
    optimization is returned as its error message.
    """
    scenarios = [Scenario.parse(s) for s in cfg.scenarios]
    params = cfg.analytics_params(data.fill)
    n_groups = data.n_groups
    base: Union[BaseRates, str, None] = None
    if any(s in (Scenario.METHOD_A, Scenario.METHOD_B) for s in scenarios):
        try:
            base = base_rates_for(cfg, data)
        except RUN_FAILURES as exc:
            base = f"base-rate estimation failed: {exc}"

    plan: Dict[Tuple[Scenario, float], Union[ScenarioConfig, str]] = {}
    for scenario in scenarios:
        for eps in cfg.budgets:
            try:
                if scenario is Scenario.BASELINE1:
                    plan[scenario, eps] = ScenarioConfig.baseline1(cfg.threshold)
                elif scenario is Scenario.BASELINE2:
                    plan[scenario, eps] = ScenarioConfig.uniform(scenario, eps, n_groups, cfg.flip, cfg.threshold)
                elif isinstance(base, str):
                    plan[scenario, eps] = base
                elif scenario is Scenario.METHOD_A:
                    result = method_a_search(n_groups * eps, base, params, cfg.method_a_grid_step, cfg.flip)
                    plan[scenario, eps] = result.to_scenario(cfg.threshold)
                else:
                    result = method_b_allocate(eps, cfg.flip, base, params, tol=cfg.method_b_tol)
                    plan[scenario, eps] = result.to_scenario(cfg.threshold)
            except RUN_FAILURES as exc:
                plan[scenario, eps] = f"{type(exc).__name__}: {exc}"
                logger.warning("[Experiment] %s at eps=%g has no parameters: %s", scenario.value, eps, exc)
    return plan


def _classify(cfg: ExperimentConfig, pairs: List[CandidatePair], truth: GroundTruth, seed: int) -> np.ndarray:
    if cfg.classifier == "logistic":
        sample = sample_training_pairs(pairs, truth, seed, max_per_class=cfg.training_max_per_class)
        return classify_logistic(pairs, train_logistic(sample))
    return classify_threshold(pairs, cfg.threshold)


def execute_run(
    spec: RunSpec,
    scenario_config: ScenarioConfig,
    data: PreparedData,
    cfg: ExperimentConfig,
    attribution: Union[str, Attribution, None] = None,
) -> RunResult:
    """
    Perturb both parties, link and evaluate one run.

    Each party perturbs with its own seed derived from
    (master seed, eps, repetition, party). The scenario is not part of the
    key, so scenarios at the same cell share their noise draws and an
    optimizer that keeps the uniform parameters reproduces Baseline 2.
    """
    keys = (repr(spec.eps), spec.repetition)
    perturbed_a = apply_feature_level_dp(data.binned_a, scenario_config, seed=derive_seed(cfg.seed, *keys, "A"))
    perturbed_b = apply_feature_level_dp(data.binned_b, scenario_config, seed=derive_seed(cfg.seed, *keys, "B"))
    pairs = list(candidate_pairs(perturbed_a, perturbed_b))
    predictions = _classify(cfg, pairs, data.ground_truth, derive_seed(cfg.seed, *keys, "train"))
    report = evaluate(
        predictions, data.ground_truth, pairs,
        attribution=attribution or cfg.attribution, known_ids=data.known_ids,
    )
    return RunResult(
        spec=spec,
        scenario_config=scenario_config,
        report=report,
        same_group_cost=same_group_cost(pairs),
        dummies=(perturbed_a.n_dummies(), perturbed_b.n_dummies()),
    )


def _safe_run(
    spec: RunSpec, planned: Union[ScenarioConfig, str], data: PreparedData, cfg: ExperimentConfig
) -> RunResult:
    if isinstance(planned, str):
        return RunResult(spec=spec, error=planned)
    try:
        return execute_run(spec, planned, data, cfg)
    except RUN_FAILURES as exc:
        logger.warning("[Experiment] Run %s failed: %s", spec.run_id, exc)
        return RunResult(spec=spec, scenario_config=planned, error=f"{type(exc).__name__}: {exc}")


def _context(result: RunResult, cfg: ExperimentConfig) -> Dict[str, Any]:
    spec, sc = result.spec, result.scenario_config
    return {
        "run_id": spec.run_id,
        "scenario": spec.scenario.value,
        "eps": spec.eps,
        "repetition": spec.repetition,
        "classifier": cfg.classifier,
        "overall_eps": sc.overall_eps,
        "per_group_eps": _join(sc.per_group_eps),
        "per_group_flip": _join(sc.per_group_flip),
    }


def _frames(results: List[RunResult], cfg: ExperimentConfig) -> Tuple[pd.DataFrame, ...]:
    manifest = pd.DataFrame(
        [
            {
                "run_id": r.spec.run_id,
                "scenario": r.spec.scenario.value,
                "eps": r.spec.eps,
                "repetition": r.spec.repetition,
                "status": "succeeded" if r.succeeded else "failed",
                "error": r.error or "",
            }
            for r in results
        ],
        columns=["run_id", "scenario", "eps", "repetition", "status", "error"],
    )

    run_rows, group_rows = [], []
    for r in results:
        if not r.succeeded:
            continue
        context = _context(r, cfg)
        rows = r.report.to_records(context)
        for row in rows:
            if row["group"] != "overall":
                row["same_group_cost"] = r.same_group_cost.get(row["group"], 0)
        group_rows.extend(rows)
        overall = dict(rows[-1])
        overall.pop("group")
        overall.pop("same_group_cost", None)
        overall["dummies_a"], overall["dummies_b"] = r.dummies
        for g, cost in sorted(r.same_group_cost.items()):
            overall[f"same_group_cost_g{g}"] = cost
        run_rows.append(overall)

    runs = pd.DataFrame(run_rows)
    groups = pd.DataFrame(group_rows)
    if runs.empty:
        summary = pd.DataFrame(columns=["scenario", "eps", "runs"])
    else:
        grouped = runs.groupby(["scenario", "eps"], sort=False)
        summary = grouped[list(SUMMARY_METRICS)].agg(["mean", "std"])
        summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
        summary.insert(0, "runs", grouped.size())
        summary = summary.reset_index()
    return runs, groups, summary, manifest


def run_experiment(cfg: ExperimentConfig, show_progress: bool = True) -> ExperimentOutputs:
    """
    Run the full scenario x budget x repetition sweep and write the reports.

    Files in cfg.output_dir: runs.csv, groups.csv, summary.csv, manifest.csv
    and scenarios.yaml. Rows follow the sweep order, so a fixed seed gives
    byte-identical files regardless of the worker count.

    Args:
        cfg: Experiment configuration
        show_progress: Show a tqdm progress bar

    Returns:
        ExperimentOutputs; failed runs appear in the manifest only
    """
    data = prepare_data(cfg)
    plan = plan_scenarios(cfg, data)
    specs = [
        RunSpec(Scenario.parse(s), eps, rep)
        for s in cfg.scenarios
        for eps in cfg.budgets
        for rep in range(cfg.repetitions)
    ]
    logger.info("[Experiment] %d runs on %d worker(s)", len(specs), cfg.workers)

    with tqdm(total=len(specs), desc="runs", disable=not show_progress) as progress:
        def task(spec: RunSpec) -> RunResult:
            result = _safe_run(spec, plan[spec.scenario, spec.eps], data, cfg)
            progress.update(1)
            return result

        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(task, specs))
        else:
            results = [task(spec) for spec in specs]

    runs, groups, summary, manifest = _frames(results, cfg)
    out = Path(cfg.output_dir)
    files = {
        "runs": write_frame(runs, out / "runs.csv"),
        "groups": write_frame(groups, out / "groups.csv"),
        "summary": write_frame(summary, out / "summary.csv"),
        "manifest": write_frame(manifest, out / "manifest.csv"),
    }
    fragments = []
    for (scenario, eps), planned in plan.items():
        entry: Dict[str, Any] = {"eps": eps}
        if isinstance(planned, str):
            entry.update({"scenario": scenario.value, "error": planned})
        else:
            entry.update(planned.to_dict())
        fragments.append(entry)
    files["scenarios"] = atomic_write_text(
        out / "scenarios.yaml", yaml.safe_dump({"scenarios": fragments}, sort_keys=False)
    )

    outputs = ExperimentOutputs(out, runs, groups, summary, manifest, files)
    logger.info("[Experiment] %d runs done, %d failed, reports in %s", len(specs), outputs.n_failed, out)
    return outputs


def oracle_fp_curve(
    params: AnalyticsParams,
    flips: Sequence[float],
    trials: int,
    seed: int = 0,
) -> pd.DataFrame:
    """
    Closed-form FP probability next to a Monte-Carlo estimate.

    Args:
        params: Model parameters (n_l, p, threshold)
        flips: Flip probabilities to evaluate
        trials: Monte-Carlo trials per flip (>= 1000)
        seed: Master seed; each flip draws from its own substream

    Returns:
        Frame with columns flip, predicted, predicted_flip_variance, simulated
    """
    if trials < MIN_ORACLE_TRIALS:
        raise DomainError(f"trials must be >= {MIN_ORACLE_TRIALS}, got {trials}")
    rows = []
    for flip in flips:
        flip = float(flip)
        rows.append({
            "flip": flip,
            "predicted": fp_probability(flip, params, include_flip_variance=False),
            "predicted_flip_variance": fp_probability(flip, params, include_flip_variance=True),
            "simulated": simulate_fp_probability(flip, params, trials, substream(seed, "oracle-fp", repr(flip))),
        })
    return pd.DataFrame(rows, columns=["flip", "predicted", "predicted_flip_variance", "simulated"])


def oracle_fpr_curve(
    cfg: ExperimentConfig,
    budgets: Optional[Sequence[float]] = None,
    repetitions: Optional[int] = None,
    data: Optional[PreparedData] = None,
) -> pd.DataFrame:
    """
    Predicted against simulated per-group FPR along a budget grid.

    Every repetition runs Baseline 2 (eps_g = G * eps, the configured flip)
    end to end with threshold classification; group-g pairs are the pairs
    whose two records both belong to g, as in the model. predicted_fpr uses
    the configured dummy-pair model (by default the exact expectation under
    rounding and the bin-size cap), predicted_fpr_closed_form the untruncated
    (n_a + n_b) dB / (2 eps_g) + N_bins dB^2 / (4 eps_g^2) count.

    Args:
        cfg: Experiment configuration
        budgets: Overall budgets (default cfg.budgets)
        repetitions: Seeded runs per budget (>= 50, default cfg.oracle_repetitions)
        data: Prepared data (default prepare_data(cfg))

    Returns:
        Frame with columns eps, group, predicted_fpr, predicted_fpr_closed_form,
        simulated_fpr, simulated_std
    """
    repetitions = cfg.oracle_repetitions if repetitions is None else repetitions
    if repetitions < MIN_ORACLE_REPETITIONS:
        raise DomainError(f"repetitions must be >= {MIN_ORACLE_REPETITIONS}, got {repetitions}")
    budgets = list(cfg.budgets if budgets is None else budgets)
    data = data or prepare_data(cfg)
    threshold_cfg = cfg.with_overrides(classifier="threshold")
    base = base_rates_for(cfg, data)
    params = cfg.analytics_params(data.fill)
    closed_form = replace(params, clamp_dummies=False)
    n_groups = data.n_groups

    rows = []
    for eps in budgets:
        scenario = ScenarioConfig.uniform(Scenario.BASELINE2, eps, n_groups, cfg.flip, cfg.threshold)
        observed: Dict[int, List[float]] = {g: [] for g in range(1, n_groups + 1)}
        for rep in range(repetitions):
            spec = RunSpec(Scenario.BASELINE2, eps, rep)
            report = execute_run(spec, scenario, data, threshold_cfg, attribution=Attribution.SAME).report
            for g in observed:
                if g in report.groups:
                    observed[g].append(report.groups[g].fpr)
        for g in range(1, n_groups + 1):
            eps_g = scenario.per_group_eps[g - 1]
            values = np.asarray(observed[g], dtype=float)
            rows.append({
                "eps": eps,
                "group": g,
                "predicted_fpr": predicted_fpr(g, eps_g, cfg.flip, base, params),
                "predicted_fpr_closed_form": predicted_fpr(g, eps_g, cfg.flip, base, closed_form),
                "simulated_fpr": float(values.mean()) if values.size else math.nan,
                "simulated_std": float(values.std(ddof=1)) if values.size > 1 else math.nan,
            })
    return pd.DataFrame(rows, columns=[
        "eps", "group", "predicted_fpr", "predicted_fpr_closed_form", "simulated_fpr", "simulated_std",
    ])
