"""
Noise-Parameter Optimizers

Method A fixes the per-group budgets and searches a grid of per-group flip
probabilities; Method B fixes one flip probability and splits the overall
budget across groups. Both minimise the model's Equalized-Odds loss.

Use Cases:
- Pick flip probabilities that equalise predicted FPRs (Method A)
- Split a fixed overall budget so groups link equally well (Method B)
- Feed the chosen parameters back into a ScenarioConfig
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Sequence, Tuple

import numpy as np

from ..analytics.models import AnalyticsParams, BaseRates, model_fairness_loss, predicted_fpr
from ..blocking.dp_blocking import Scenario, ScenarioConfig
from ..exceptions import ConvergenceError, DomainError
from ..privacy.mechanisms import compose_budget
from ..utils.log import get_logger

logger = get_logger(__name__)

TIE_TOLERANCE = 1e-12
MAX_GRID_POINTS = 20_000_000
LOG_GRID_POINTS = 200
BRACKET = (1.001, 1000.0)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OptimizationResult:
    """
    Chosen per-group parameters with the loss the model predicts for them.

    Args:
        method: Scenario.METHOD_A (values are flips) or Scenario.METHOD_B (values are budgets)
        per_group_values: Optimised flip_g or eps_g, g = 1..G
        achieved_loss: Model fairness loss at per_group_values
        fixed_values: The parameters held fixed (eps_g for A, flip_g for B)
        diagnostics: Evaluation counts and reference losses
    """
    method: Scenario
    per_group_values: Tuple[float, ...]
    achieved_loss: float
    fixed_values: Tuple[float, ...]
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def overall_eps(self) -> float:
        eps = self.per_group_values if self.method is Scenario.METHOD_B else self.fixed_values
        return compose_budget(eps)

    def to_scenario(self, threshold: float = 0.8, seed: int = 0) -> ScenarioConfig:
        if self.method is Scenario.METHOD_A:
            eps, flips = self.fixed_values, self.per_group_values
        else:
            eps, flips = self.per_group_values, self.fixed_values
        return ScenarioConfig(
            self.method, eps, flips, overall_eps=self.overall_eps, threshold=threshold, seed=seed,
        )


def flip_grid(step: float = 0.01) -> np.ndarray:
    """Flip probabilities 0, step, ..., 1"""
    if not 0.0 < step <= 0.1:
        raise DomainError(f"grid_step must be in (0, 0.1], got {step}")
    n = int(round(1.0 / step))
    if abs(n * step - 1.0) > 1e-9:
        raise DomainError(f"grid_step must divide 1, got {step}")
    return np.arange(n + 1) / n


def golden_section_search(
    objective: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> Tuple[float, float, int]:
    """
    Minimise a unimodal function on [lo, hi].

    Shrinks the bracket by 1/phi per step until it is narrower than tol.
    Ties keep the left part of the bracket.

    Args:
        objective: Function of one variable
        lo: Left end of the bracket
        hi: Right end of the bracket
        tol: Final bracket width
        max_iter: Step limit

    Returns:
        (x, objective(x), iterations)
    """
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    iterations = 0
    while b - a > tol:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"Golden-section search did not reach width {tol} in {max_iter} steps (width {b - a})"
            )
        iterations += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = objective(d)
    if fc <= fd:
        return c, fc, iterations
    return d, fd, iterations


def _group_fpr_curve(group: int, eps_g: float, flips: np.ndarray, base: BaseRates, params: AnalyticsParams) -> np.ndarray:
    return np.asarray(predicted_fpr(group, eps_g, flips, base, params), dtype=float)


def _pick_flip_indices(loss: np.ndarray) -> Tuple[int, ...]:
    """Argmin with ties broken toward the largest flip sum, then the lexicographic max"""
    candidates = np.argwhere(loss <= loss.min() + TIE_TOLERANCE)
    sums = candidates.sum(axis=1)
    candidates = candidates[sums == sums.max()]
    return max(tuple(int(i) for i in row) for row in candidates)


def method_a_search(
    eps: float,
    base: BaseRates,
    params: AnalyticsParams,
    grid_step: float = 0.01,
    reference_flip: float = 0.5,
) -> OptimizationResult:
    """
    Exhaustive grid search over per-group flip probabilities.

    Every group uses the same budget eps. The FNR term of the loss does not
    depend on the flips, so only the FPR curves are tabulated per group and
    combined by broadcasting.

    Args:
        eps: Per-group budget eps_g (equal for all groups)
        base: Base rates for every group
        params: Model parameters
        grid_step: Flip grid resolution, in (0, 0.1]
        reference_flip: Uniform flip reported as the Baseline-2 reference

    Returns:
        OptimizationResult with flips in per_group_values
    """
    n_groups = base.n_groups
    if n_groups < 2:
        raise DomainError("Method A needs at least two groups")
    grid = flip_grid(grid_step)
    if grid.size ** n_groups > MAX_GRID_POINTS:
        raise DomainError(f"A {grid.size}^{n_groups} grid is too large; use a coarser grid_step")
    groups = sorted(base.groups)
    eps_values = tuple(float(eps) for _ in groups)

    curves = [_group_fpr_curve(g, eps, grid, base, params) for g in groups]
    fnrs = [base.group(g).fnr for g in groups]
    fnr_loss = max(abs(x - y) for i, x in enumerate(fnrs) for y in fnrs[i + 1:])

    loss = np.full((grid.size,) * n_groups, fnr_loss)
    for i in range(n_groups):
        for j in range(i + 1, n_groups):
            shape_i = [1] * n_groups
            shape_j = [1] * n_groups
            shape_i[i] = shape_j[j] = grid.size
            loss = np.maximum(loss, np.abs(curves[i].reshape(shape_i) - curves[j].reshape(shape_j)))

    best = _pick_flip_indices(loss)
    flips = tuple(float(grid[i]) for i in best)
    achieved = float(loss[best])
    reference = model_fairness_loss([reference_flip] * n_groups, eps_values, base, params)
    logger.info("[MethodA] eps_g=%s flips=%s loss=%.6f (uniform flip %.2f: %.6f)", eps, flips, achieved, reference_flip, reference)
    return OptimizationResult(
        method=Scenario.METHOD_A,
        per_group_values=flips,
        achieved_loss=achieved,
        fixed_values=eps_values,
        diagnostics={
            "grid_points": int(loss.size),
            "grid_step": grid_step,
            "fnr_loss": fnr_loss,
            "baseline2_loss": reference,
        },
    )


def _complete_budgets(overall_eps: float, free: Sequence[float]) -> Tuple[float, ...]:
    """Append the last group's budget so the composition equals overall_eps"""
    remainder = 1.0 / overall_eps - math.fsum(1.0 / e for e in free)
    if remainder <= 0:
        raise DomainError("Free budgets already exhaust the overall budget")
    return tuple(free) + (1.0 / remainder,)


def _line_search(
    objective: Callable[[float], float], lo: float, hi: float, tol: float, max_iter: int, prefer: float
) -> Tuple[float, float, int]:
    """
    Log-spaced scan to bracket the minimum, then golden-section refinement.

    Grid points within TIE_TOLERANCE of the best value tie; the one nearest
    prefer brackets the refinement and is kept unless the refinement is
    strictly better.
    """
    xs = np.linspace(lo, hi, LOG_GRID_POINTS)
    values = np.array([objective(float(x)) for x in xs])
    tied = np.flatnonzero(values <= values.min() + TIE_TOLERANCE)
    i = int(tied[np.argmin(np.abs(xs[tied] - prefer))])
    x, fx, iterations = golden_section_search(
        objective, float(xs[max(i - 1, 0)]), float(xs[min(i + 1, len(xs) - 1)]), tol, max_iter
    )
    if values[i] <= fx + TIE_TOLERANCE:
        return float(xs[i]), float(values[i]), iterations
    return x, fx, iterations


def method_b_allocate(
    overall_eps: float,
    fixed_flip: float,
    base: BaseRates,
    params: AnalyticsParams,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> OptimizationResult:
    """
    Split overall_eps across groups to minimise the model fairness loss.

    Budgets satisfy (sum_g 1/eps_g)^-1 = overall_eps, so only G - 1 of them
    are free. Each free budget is searched in log space over
    (1.001, 1000) times its lower bound; with more than two groups the free
    budgets are improved one at a time until a sweep changes nothing. The
    uniform allocation G * overall_eps wins ties; on a loss plateau that
    excludes it, the plateau point nearest to it in log space wins.

    Args:
        overall_eps: Overall budget
        fixed_flip: Flip probability shared by all groups
        base: Base rates for every group
        params: Model parameters
        tol: Bracket width in log-budget space and minimum sweep improvement
        max_iter: Golden-section step limit (and sweep limit)

    Returns:
        OptimizationResult with budgets in per_group_values
    """
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if not overall_eps > 0 or math.isinf(overall_eps):
        raise DomainError(f"Overall budget must be a finite value > 0, got {overall_eps}")
    n_groups = base.n_groups
    if n_groups < 2:
        raise DomainError("Method B needs at least two groups")
    flips = [float(fixed_flip)] * n_groups

    def loss_of(eps_values: Sequence[float]) -> float:
        return model_fairness_loss(flips, eps_values, base, params)

    uniform = tuple([n_groups * overall_eps] * n_groups)
    uniform_loss = loss_of(uniform)

    free = list(uniform[:-1])
    best_loss = uniform_loss
    evaluations = 0
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        improved = False
        for g in range(n_groups - 1):
            others = free[:g] + free[g + 1:]
            lower = 1.0 / (1.0 / overall_eps - math.fsum(1.0 / e for e in others))

            def objective(log_eps: float) -> float:
                candidate = others[:g] + [math.exp(log_eps)] + others[g:]
                return loss_of(_complete_budgets(overall_eps, candidate))

            x, fx, iterations = _line_search(
                objective, math.log(BRACKET[0] * lower), math.log(BRACKET[1] * lower), tol, max_iter,
                prefer=math.log(uniform[g]),
            )
            evaluations += LOG_GRID_POINTS + iterations + 2
            if fx < best_loss - tol or (fx < best_loss and n_groups == 2):
                free[g] = math.exp(x)
                best_loss = fx
                improved = True
        if not improved or n_groups == 2:
            break
    else:
        raise ConvergenceError(f"Coordinate descent still improving after {max_iter} sweeps")

    eps_values = _complete_budgets(overall_eps, free)
    if uniform_loss <= best_loss + TIE_TOLERANCE:
        eps_values, best_loss = uniform, uniform_loss

    logger.info(
        "[MethodB] eps=%s flip=%.2f allocation=%s loss=%.6f (uniform: %.6f)",
        overall_eps, fixed_flip, eps_values, best_loss, uniform_loss,
    )
    return OptimizationResult(
        method=Scenario.METHOD_B,
        per_group_values=tuple(float(e) for e in eps_values),
        achieved_loss=float(best_loss),
        fixed_values=tuple(flips),
        diagnostics={
            "sweeps": sweeps,
            "evaluations": evaluations,
            "uniform_loss": uniform_loss,
            "composed_eps": compose_budget(eps_values),
        },
    )
