"""
Unit tests for the experiment harness
"""

from pathlib import Path

import pandas as pd
import pytest
from fair_pprl.analytics import AnalyticsParams
from fair_pprl.blocking import Scenario, ScenarioConfig
from fair_pprl.config import ExperimentConfig
from fair_pprl.exceptions import DomainError
from fair_pprl.experiments import (
    RunSpec,
    execute_run,
    oracle_fp_curve,
    oracle_fpr_curve,
    plan_scenarios,
    prepare_data,
    run_experiment,
)

FAIRNESS_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "fairness.yaml"


def small_config(tmp_path, **overrides):
    """Sparse filters and a short sweep over every scenario"""
    values = dict(
        n_records=200, k=5, n_b=4, budgets=[1.0], repetitions=2,
        sample_size=100, method_a_grid_step=0.05, output_dir=str(tmp_path),
    )
    values.update(overrides)
    return ExperimentConfig(**values)


class TestRunSpec:
    """Test suite for RunSpec"""

    def test_run_id(self):
        """Test the run id layout"""
        assert RunSpec(Scenario.METHOD_B, 0.1, 7).run_id == "MethodB-eps0.1-rep007"
        assert RunSpec(Scenario.BASELINE1, 10.0, 0).run_id == "Baseline1-eps10-rep000"


class TestPlanning:
    """Test suite for data preparation and scenario planning"""

    @pytest.fixture(scope="class")
    def cfg(self, tmp_path_factory):
        """Small config shared by the class"""
        return small_config(tmp_path_factory.mktemp("plan"), budgets=[0.5, 2.0])

    @pytest.fixture(scope="class")
    def data(self, cfg):
        """Prepared data for the small config"""
        return prepare_data(cfg)

    def test_prepare_data(self, cfg, data):
        """Test that both parties are encoded and binned"""
        assert len(data.dataset_a) == len(data.dataset_b) == cfg.n_records
        assert data.n_groups == 2
        assert data.binned_a.n_dummies() == 0
        assert 0.0 < data.fill < 1.0
        assert data.known_ids == data.dataset_a.ids | data.dataset_b.ids

    def test_fairness_config_fill(self, tmp_path):
        """Test the shipped fairness setup fills about half of every filter"""
        cfg = ExperimentConfig.from_yaml(FAIRNESS_CONFIG).with_overrides(output_dir=str(tmp_path))
        assert (cfg.k, cfg.n_b) == (11, 5)
        assert cfg.group_corruption_rates == {2: 0.6}
        data = prepare_data(cfg)
        assert 0.35 < data.fill < 0.65
        assert ExperimentConfig().analytics_params(data.fill).p == 0.5

    def test_prepare_data_deterministic(self, cfg, data):
        """Test that the same seed gives the same records"""
        again = prepare_data(cfg)
        assert [r.entity_id for r in again.dataset_a] == [r.entity_id for r in data.dataset_a]
        assert again.fill == data.fill

    def test_plan_covers_every_cell(self, cfg, data):
        """Test one entry per scenario and budget"""
        plan = plan_scenarios(cfg, data)
        assert set(plan) == {(Scenario.parse(s), eps) for s in cfg.scenarios for eps in cfg.budgets}
        assert all(isinstance(v, ScenarioConfig) for v in plan.values())

    def test_plan_budgets(self, cfg, data):
        """Test the budgets each scenario receives"""
        plan = plan_scenarios(cfg, data)
        assert plan[Scenario.BASELINE1, 0.5].overall_eps == float("inf")
        uniform = plan[Scenario.BASELINE2, 0.5]
        assert uniform.per_group_eps == pytest.approx((1.0, 1.0))
        assert uniform.per_group_flip == pytest.approx((0.5, 0.5))
        method_b = plan[Scenario.METHOD_B, 2.0]
        assert method_b.per_group_flip == pytest.approx((0.5, 0.5))
        assert all(e >= 2.0 for e in method_b.per_group_eps)
        method_a = plan[Scenario.METHOD_A, 2.0]
        assert all(0.0 <= f <= 1.0 for f in method_a.per_group_flip)

    def test_plan_records_failures(self, tmp_path):
        """Test that an impossible optimization becomes an error message"""
        cfg = small_config(tmp_path, group_proportions=[1.0], scenarios=["Baseline2", "MethodA"])
        plan = plan_scenarios(cfg, prepare_data(cfg))
        assert isinstance(plan[Scenario.BASELINE2, 1.0], ScenarioConfig)
        assert "two groups" in plan[Scenario.METHOD_A, 1.0]

    def test_execute_run(self, cfg, data):
        """Test a single Baseline 2 run"""
        scenario = ScenarioConfig.uniform(Scenario.BASELINE2, 1.0, 2, 0.5, cfg.threshold)
        result = execute_run(RunSpec(Scenario.BASELINE2, 1.0, 0), scenario, data, cfg)
        assert result.succeeded
        assert set(result.report.groups) == {1, 2}
        assert sum(result.dummies) > 0
        assert set(result.same_group_cost) <= {1, 2}

    def test_execute_run_noiseless(self, cfg, data):
        """Test that Baseline 1 adds no dummies and repeats exactly"""
        scenario = ScenarioConfig.baseline1(cfg.threshold)
        first = execute_run(RunSpec(Scenario.BASELINE1, 1.0, 0), scenario, data, cfg)
        second = execute_run(RunSpec(Scenario.BASELINE1, 1.0, 1), scenario, data, cfg)
        assert first.dummies == (0, 0)
        assert first.report.group_cost == second.report.group_cost
        assert first.report.overall.to_dict()["tp"] == second.report.overall.to_dict()["tp"]
        assert first.report.overall.to_dict()["fp"] == second.report.overall.to_dict()["fp"]


class TestRunExperiment:
    """Test suite for run_experiment"""

    @pytest.fixture(scope="class")
    def outputs(self, tmp_path_factory):
        """One sweep over all scenarios"""
        return run_experiment(small_config(tmp_path_factory.mktemp("sweep")), show_progress=False)

    def test_files(self, outputs):
        """Test that every report file is written"""
        for name in ("runs.csv", "groups.csv", "summary.csv", "manifest.csv", "scenarios.yaml"):
            assert (outputs.output_dir / name).is_file()
        assert set(outputs.files) == {"runs", "groups", "summary", "manifest", "scenarios"}

    def test_manifest(self, outputs):
        """Test that the manifest lists every run in sweep order"""
        manifest = pd.read_csv(outputs.files["manifest"])
        assert len(manifest) == 4 * 2
        expected = [s for s in ("Baseline1", "Baseline2", "MethodA", "MethodB") for _ in range(2)]
        assert list(manifest["scenario"]) == expected
        assert outputs.n_failed == 0
        assert set(manifest["status"]) == {"succeeded"}

    def test_runs_and_groups(self, outputs):
        """Test per-run and per-group rows"""
        runs = outputs.runs
        assert len(runs) == 8
        assert {"run_id", "f_star", "fairness_loss", "cost", "dummies_a", "dummies_b"} <= set(runs.columns)
        baseline1 = runs[runs["scenario"] == "Baseline1"]
        assert (baseline1["dummies_a"] == 0).all() and (baseline1["dummies_b"] == 0).all()
        noisy = runs[runs["scenario"] == "Baseline2"]
        assert (noisy["dummies_a"] + noisy["dummies_b"] > 0).all()
        assert len(outputs.groups) == 8 * 3

    def test_summary(self, outputs):
        """Test one summary row per scenario and budget"""
        summary = outputs.summary
        assert list(summary["scenario"]) == ["Baseline1", "Baseline2", "MethodA", "MethodB"]
        assert (summary["runs"] == 2).all()
        assert {"f_star_mean", "f_star_std", "fairness_loss_mean", "cost_mean"} <= set(summary.columns)

    def test_deterministic_across_workers(self, outputs, tmp_path):
        """Test byte-identical reports for the same seed with more workers"""
        again = run_experiment(small_config(tmp_path, workers=2), show_progress=False)
        for name in ("runs", "groups", "summary", "manifest", "scenarios"):
            assert again.files[name].read_bytes() == outputs.files[name].read_bytes()

    def test_seed_changes_output(self, outputs, tmp_path):
        """Test that another seed perturbs differently"""
        other = run_experiment(small_config(tmp_path, seed=1, scenarios=["Baseline2"]), show_progress=False)
        ours = outputs.runs[outputs.runs["scenario"] == "Baseline2"]
        columns = ["dummies_a", "dummies_b", "cost"]
        assert other.runs[columns].values.tolist() != ours[columns].values.tolist()

    def test_failed_runs(self, tmp_path):
        """Test that failed cells show up in the manifest only"""
        cfg = small_config(tmp_path, group_proportions=[1.0], scenarios=["Baseline2", "MethodA"])
        outputs = run_experiment(cfg, show_progress=False)
        assert outputs.n_failed == 2
        failed = outputs.manifest[outputs.manifest["status"] == "failed"]
        assert set(failed["scenario"]) == {"MethodA"}
        assert set(outputs.runs["scenario"]) == {"Baseline2"}

    def test_logistic_classifier(self, tmp_path):
        """Test a sweep with the logistic classifier"""
        cfg = small_config(tmp_path, classifier="logistic", scenarios=["Baseline1", "Baseline2"])
        outputs = run_experiment(cfg, show_progress=False)
        assert outputs.n_failed == 0
        assert set(outputs.runs["classifier"]) == {"logistic"}


class TestOracles:
    """Test suite for the theory-vs-simulation curves"""

    def test_fp_curve(self):
        """Test the FP-probability curve at its extremes"""
        frame = oracle_fp_curve(AnalyticsParams(), [0.0, 0.5], trials=1000, seed=0)
        assert list(frame.columns) == ["flip", "predicted", "predicted_flip_variance", "simulated"]
        first, last = frame.iloc[0], frame.iloc[1]
        assert first["predicted"] == pytest.approx(1.0)
        assert first["simulated"] == pytest.approx(1.0)
        assert last["predicted"] < 0.01
        assert last["simulated"] < 0.01

    def test_fp_curve_needs_trials(self):
        """Test the minimum trial count"""
        with pytest.raises(DomainError):
            oracle_fp_curve(AnalyticsParams(), [0.1], trials=999)

    def test_fpr_curve_needs_repetitions(self, tmp_path):
        """Test the minimum repetition count"""
        with pytest.raises(DomainError):
            oracle_fpr_curve(small_config(tmp_path), repetitions=49)

    @pytest.mark.slow
    def test_fpr_curve(self, tmp_path):
        """Test that predicted and simulated per-group FPR agree"""
        cfg = small_config(tmp_path, n_records=120)
        frame = oracle_fpr_curve(cfg, budgets=[1.0], repetitions=50)
        assert list(frame.columns) == [
            "eps", "group", "predicted_fpr", "predicted_fpr_closed_form", "simulated_fpr", "simulated_std",
        ]
        assert list(frame["group"]) == [1, 2]
        for _, row in frame.iterrows():
            assert abs(row["predicted_fpr"] - row["simulated_fpr"]) <= 0.05
            assert 0.0 <= row["predicted_fpr_closed_form"] <= 1.0


@pytest.mark.slow
class TestFairnessSetup:
    """Test suite for the optimizers and models on the half-full fairness setup"""

    @pytest.fixture(scope="class")
    def cfg(self, tmp_path_factory):
        """Two groups of 500 records, group 2 corrupted twice as often"""
        return ExperimentConfig.from_yaml(FAIRNESS_CONFIG).with_overrides(
            output_dir=str(tmp_path_factory.mktemp("fairness")),
            scenarios=["Baseline2", "MethodA", "MethodB"],
        )

    @pytest.fixture(scope="class")
    def outputs(self, cfg):
        """Twenty repetitions per scenario and budget"""
        return run_experiment(cfg, show_progress=False)

    def test_optimizers_not_less_fair(self, cfg, outputs):
        """Test Method A and Method B are on average at least as fair as Baseline 2"""
        assert outputs.n_failed == 0
        summary = outputs.summary.set_index(["scenario", "eps"])
        for eps in cfg.budgets:
            reference = summary.loc[("Baseline2", eps), "fairness_mean"]
            assert summary.loc[("MethodA", eps), "fairness_mean"] >= reference - 1e-12
            assert summary.loc[("MethodB", eps), "fairness_mean"] >= reference - 1e-12

    def test_method_b_moves_cost_between_groups(self, cfg, outputs):
        """Test the budget split lowers one group's pair count and raises the other's"""
        runs = outputs.runs
        shifted = 0
        for eps in cfg.budgets:
            uniform = runs[(runs["scenario"] == "Baseline2") & (runs["eps"] == eps)]
            split = runs[(runs["scenario"] == "MethodB") & (runs["eps"] == eps)]
            assert split["overall_eps"].to_numpy() == pytest.approx(uniform["overall_eps"].to_numpy(), rel=1e-9)
            diffs = [
                split[f"same_group_cost_g{g}"].mean() - uniform[f"same_group_cost_g{g}"].mean() for g in (1, 2)
            ]
            assert min(diffs) <= 0 <= max(diffs)
            shifted += min(diffs) < 0 < max(diffs)
        assert shifted >= 1

    def test_predicted_fpr_tracks_simulation(self, cfg):
        """Test the model FPR within 0.05 of 50 runs and FPR rising with the budget"""
        frame = oracle_fpr_curve(cfg, budgets=[0.1, 1.0, 10.0], repetitions=50)
        assert (frame["predicted_fpr"] - frame["simulated_fpr"]).abs().max() <= 0.05
        for _, curve in frame.groupby("group"):
            simulated = curve.sort_values("eps")["simulated_fpr"].to_numpy()
            assert all(later >= earlier for earlier, later in zip(simulated, simulated[1:]))
