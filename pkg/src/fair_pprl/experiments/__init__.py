"""Experiments Module for scenario sweeps and theory-vs-simulation curves"""

from .harness import (
    ExperimentOutputs,
    PreparedData,
    RunResult,
    RunSpec,
    base_rates_for,
    execute_run,
    oracle_fp_curve,
    oracle_fpr_curve,
    plan_scenarios,
    prepare_data,
    run_experiment,
    write_frame,
)

__all__ = [
    'ExperimentOutputs', 'PreparedData', 'RunResult', 'RunSpec', 'prepare_data',
    'base_rates_for', 'plan_scenarios', 'execute_run', 'run_experiment',
    'oracle_fp_curve', 'oracle_fpr_curve', 'write_frame',
]
