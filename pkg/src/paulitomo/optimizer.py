"""Multi-start projected gradient ascent over measurement configurations.

Numerically verifies the axis-aligned optima of the determinant and
per-parameter Fisher objectives: each configuration column lives in the
l1 ball of c-vectors, ascent is projected gradient with backtracking, and
saddle points (such as the all-zero c-matrix) are escaped through small
seeded perturbations before a start is declared converged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularInformationError
from .fisher import ConfigurationSet, MeasurementConfiguration

_ESCAPE_SCALES = (1e-3, 1e-2, 1e-1)
_ESCAPE_TRIES = 4
_MAX_ESCAPE_ROUNDS = 40
_MIN_STEP = 1e-15


@dataclass(frozen=True)
class OptimizerSettings:
    """Hyperparameters of the gradient search.

    The grid seeds one start per point of a grid_points_per_axis^3 lattice
    over [-1, 1]^3 (reported in result metadata; the choice is ours, the
    procedure being reproduced never states one).
    """

    grid_points_per_axis: int = 5
    max_iterations: int = 10_000
    step_size: float = 0.1
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.grid_points_per_axis < 2:
            raise ValueError("grid_points_per_axis must be at least 2")


@dataclass(frozen=True, eq=False)
class StartOutcome:
    """Endpoint of one ascent start."""

    c_matrix: np.ndarray
    value: float
    converged: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    best_set: ConfigurationSet
    best_value: float
    converged: bool
    starts_agreeing: int
    starts: tuple[StartOutcome, ...]
    settings: OptimizerSettings


def project_l1_ball(v, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the l1 ball via sorted simplex projection."""
    v = np.asarray(v, dtype=float)
    magnitudes = np.abs(v)
    total = magnitudes.sum()
    if total <= radius:
        return v.copy()
    u = np.sort(magnitudes)[::-1]
    cumulative = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (cumulative - radius))[0][-1]
    shift = (cumulative[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.clip(magnitudes - shift, 0.0, None)


def _ascend(objective, gradient, x0, project, settings: OptimizerSettings):
    """Projected gradient ascent with backtracking; returns (x, value, converged, evals)."""
    x = project(np.asarray(x0, dtype=float))
    value = objective(x)
    step = settings.step_size
    evals = 1
    converged = False
    while evals < settings.max_iterations:
        grad = gradient(x)
        moved = False
        while step >= _MIN_STEP:
            candidate = project(x + step * grad)
            cand_value = objective(candidate)
            evals += 1
            if cand_value > value:
                displacement = np.abs(candidate - x).max()
                x, value = candidate, cand_value
                step = min(step * 1.5, 1.0)
                moved = True
                if displacement < settings.tolerance:
                    converged = True
                break
            step *= 0.5
            if evals >= settings.max_iterations:
                break
        if converged or not moved:
            converged = converged or step < _MIN_STEP
            break
        if step < _MIN_STEP:
            converged = True
            break
    return x, value, converged, evals


def _ascend_with_escapes(objective, gradient, x0, project, settings, rng):
    """Ascent that retries from perturbed points until no perturbation improves."""
    x, value, converged, evals = _ascend(objective, gradient, x0, project, settings)
    for _ in range(_MAX_ESCAPE_ROUNDS):
        escaped = False
        for scale in _ESCAPE_SCALES:
            for _ in range(_ESCAPE_TRIES):
                candidate = project(x + scale * rng.normal(size=x.shape))
                if objective(candidate) > value + settings.tolerance:
                    x, value, converged, extra = _ascend(
                        objective, gradient, candidate, project, settings
                    )
                    evals += extra
                    escaped = True
                    break
            if escaped:
                break
        if not escaped:
            return x, value, converged, evals
    return x, value, False, evals


def _det_objective(lambdas):
    def objective(c_matrix):
        det = float(np.linalg.det(c_matrix))
        overlaps = lambdas @ c_matrix
        denominators = 1.0 - overlaps**2
        if np.any(denominators < 1e-15):
            return np.inf
        return det * det / float(np.prod(denominators))

    def gradient(c_matrix):
        det = float(np.linalg.det(c_matrix))
        overlaps = lambdas @ c_matrix
        denominators = 1.0 - overlaps**2
        product = float(np.prod(denominators))
        # adjugate keeps the determinant term defined at singular C
        adjugate_t = _adjugate(c_matrix).T
        value = det * det / product
        grad = 2.0 * det * adjugate_t / product
        grad += value * (2.0 * overlaps / denominators) * lambdas[:, None]
        return grad

    return objective, gradient


def _adjugate(matrix3) -> np.ndarray:
    m = matrix3
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            cof[i, j] = ((-1) ** (i + j)) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return cof.T


def _grid_points(per_axis: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, per_axis)
    return np.array(np.meshgrid(axis, axis, axis, indexing="ij")).reshape(3, -1).T


def _grid_starts(per_axis: int) -> list[np.ndarray]:
    """One start per grid point: the point and its two component rolls as columns."""
    starts = []
    seen = set()
    for point in _grid_points(per_axis):
        columns = np.column_stack([np.roll(point, shift) for shift in range(3)])
        projected = np.column_stack([project_l1_ball(columns[:, j]) for j in range(3)])
        key = tuple(np.round(projected.ravel(), 12))
        if key not in seen:
            seen.add(key)
            starts.append(projected)
    return starts


def maximize_det_fisher(lambdas, settings: OptimizerSettings | None = None) -> OptimizationResult:
    """Maximize the total Fisher determinant over three c-vector columns.

    Every grid start ascends independently; the result records each
    endpoint, the count of starts agreeing with the best value, and the
    settings used (so runs are reproducible).  Convergence of a start means
    first-order stationarity under the l1 projection with no improving
    perturbation left.
    """
    settings = settings or OptimizerSettings()
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (3,):
        raise ValueError("lambdas must be a 3-vector")
    if np.abs(lambdas).max() >= 1.0:
        raise SingularInformationError(
            "the determinant objective is unbounded when some |lambda| reaches 1"
        )
    magnitudes = np.abs(lambdas)
    if not (magnitudes[0] > magnitudes[1] > magnitudes[2]):
        warnings.warn(
            "contraction magnitudes are not strictly ordered; "
            "the optimal configuration is degenerate",
            stacklevel=2,
        )

    objective, gradient = _det_objective(lambdas)

    def project(c_matrix):
        return np.column_stack([project_l1_ball(c_matrix[:, j]) for j in range(3)])

    outcomes = []
    for index, start in enumerate(_grid_starts(settings.grid_points_per_axis)):
        rng = np.random.default_rng((settings.seed, index))
        x, value, converged, evals = _ascend_with_escapes(
            objective, gradient, start, project, settings, rng
        )
        outcomes.append(
            StartOutcome(c_matrix=x, value=value, converged=converged, iterations=evals)
        )

    best = max(outcomes, key=lambda o: (o.value, tuple(-o.c_matrix.ravel())))
    agreement = 100.0 * settings.tolerance * max(1.0, abs(best.value))
    agreeing = sum(1 for o in outcomes if best.value - o.value <= agreement)
    best_set = ConfigurationSet(
        configs=tuple(
            MeasurementConfiguration.from_qubit_c(best.c_matrix[:, j]) for j in range(3)
        )
    )
    return OptimizationResult(
        best_set=best_set,
        best_value=best.value,
        converged=all(o.converged for o in outcomes),
        starts_agreeing=agreeing,
        starts=tuple(outcomes),
        settings=settings,
    )


def maximize_block_fisher(
    contraction: float, length: int, settings: OptimizerSettings | None = None
) -> tuple[np.ndarray, float]:
    """Maximize one diagonal Fisher entry over a c-vector of given length.

    The target parameter sits at the last component; the remaining
    components carry contraction magnitude 1, the worst case the axis
    bound must beat.  Any length reproduces the same optimum shape
    |c_last| = 1 with value 1/(1 - contraction^2).
    """
    settings = settings or OptimizerSettings()
    lam = float(contraction)
    if abs(lam) >= 1.0:
        raise SingularInformationError("|contraction| must be below 1")
    if length < 1:
        raise ValueError("length must be at least 1")
    weights = np.ones(length)
    weights[-1] = lam

    def objective(c):
        overlap = float(weights @ c)
        denominator = 1.0 - overlap * overlap
        if denominator < 1e-15:
            # reachable only with c_last -> 0, where the information vanishes
            return 0.0
        return c[-1] * c[-1] / denominator

    def gradient(c):
        overlap = float(weights @ c)
        denominator = 1.0 - overlap * overlap
        if denominator < 1e-15:
            return np.zeros(length)
        grad = (2.0 * c[-1] * c[-1] * overlap / denominator**2) * weights
        grad[-1] += 2.0 * c[-1] / denominator
        return grad

    best_c, best_value = None, -np.inf
    axis = np.linspace(-1.0, 1.0, settings.grid_points_per_axis)
    starts = [np.full(length, a) for a in axis]
    starts += [np.concatenate([np.zeros(length - 1), [a]]) for a in axis]
    for index, start in enumerate(starts):
        rng = np.random.default_rng((settings.seed, 7_000_000 + index))
        x, value, _, _ = _ascend_with_escapes(
            objective, gradient, project_l1_ball(start), project_l1_ball, settings, rng
        )
        if value > best_value:
            best_c, best_value = x, value
    return best_c, best_value


def greedy_sequential_configuration(
    lambdas, settings: OptimizerSettings | None = None
) -> ConfigurationSet:
    """Build the three configurations one at a time, largest magnitude first.

    Each step maximizes the trace of the Fisher information restricted to
    the axes not yet used, then fixes the winning axis; the result matches
    the joint optimum up to signs.
    """
    settings = settings or OptimizerSettings()
    lambdas = np.asarray(lambdas, dtype=float)
    magnitudes = np.abs(lambdas)
    if not (magnitudes[0] > magnitudes[1] > magnitudes[2] or len(set(magnitudes)) == 3):
        warnings.warn("ties in |lambda| make the greedy order ambiguous", stacklevel=2)

    remaining = list(range(3))
    chosen = []
    for step in range(3):
        sub_lambdas = lambdas[remaining]

        def objective(c):
            overlap = float(sub_lambdas @ c)
            denominator = 1.0 - overlap * overlap
            if denominator < 1e-15:
                return np.inf
            return float(c @ c) / denominator

        def gradient(c):
            overlap = float(sub_lambdas @ c)
            denominator = 1.0 - overlap * overlap
            grad = 2.0 * c / denominator
            grad += (2.0 * float(c @ c) * overlap / denominator**2) * sub_lambdas
            return grad

        best_c, best_value = None, -np.inf
        for index, point in enumerate(_grid_points(settings.grid_points_per_axis)[:, : len(remaining)]):
            rng = np.random.default_rng((settings.seed, 9_000_000 + 100 * step + index))
            x, value, _, _ = _ascend_with_escapes(
                objective, gradient, project_l1_ball(point), project_l1_ball, settings, rng
            )
            if value > best_value:
                best_c, best_value = x, value
        winner = remaining[int(np.argmax(np.abs(best_c)))]
        chosen.append(winner)
        remaining.remove(winner)

    axes = np.eye(3)
    return ConfigurationSet(
        configs=tuple(MeasurementConfiguration.qubit(axes[j], axes[j]) for j in chosen)
    )
