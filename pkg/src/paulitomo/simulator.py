"""Seeded Monte Carlo harness for the unknown-direction estimation pipeline.

Trial t draws its binomial outcome counts from an independent stream keyed
by (master seed, t), so serial and parallel execution sample identical
numbers and every report is bit-reproducible.  The two sweeps reproduce the
orthogonality study (error versus det of the input triple) and the shot
scaling study (N times the weighted error versus N).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import QubitPauliChannel, qubit_affine_matrix
from .errors import InvalidModelError, PauliTomoError
from .estimator import BlochTriple, FrequencyMatrix, full_direction_estimate

PROBABILITY_SLACK = 1e-12
MAX_FAILURE_FRACTION = 0.01
SKIP_DET_TOL = 1e-6
_TRIPLE_DRAW_SALT = 2**62 + 1


@dataclass(frozen=True)
class OrthogonalitySweep:
    """Pairwise-angle grid (degrees) for the input-triple orthogonality study."""

    angles_deg: tuple[float, ...]


@dataclass(frozen=True)
class ScalingSweep:
    """Shot counts and error weights for the 1/N scaling study."""

    shots: tuple[int, ...]
    weights: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Everything a Monte Carlo run needs, including the master seed.

    ``weight`` balances the two error sums in the reported objective:
    0 scores only the contraction magnitudes, 1 only the axis angles.
    """

    truth: QubitPauliChannel
    input_triple: BlochTriple
    measurement_triple: BlochTriple
    shots_per_cell: int
    repetitions: int
    weight: float
    seed: int
    sweep: OrthogonalitySweep | ScalingSweep | None = None

    def __post_init__(self):
        if self.shots_per_cell < 1:
            raise ValueError("shots_per_cell must be at least 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class MseReport:
    """Per-parameter empirical mean square errors and their weighted sum."""

    lambda_mse: np.ndarray
    angle_mse: np.ndarray
    objective_v: float
    n_times_v: float
    failed_trials: int

    def as_row(self) -> dict:
        return {
            "mse_lambda_1": float(self.lambda_mse[0]),
            "mse_lambda_2": float(self.lambda_mse[1]),
            "mse_lambda_3": float(self.lambda_mse[2]),
            "mse_angle_1": float(self.angle_mse[0]),
            "mse_angle_2": float(self.angle_mse[1]),
            "mse_angle_3": float(self.angle_mse[2]),
            "objective_v": self.objective_v,
            "n_times_v": self.n_times_v,
            "failed_trials": self.failed_trials,
        }


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from (seed, trial)."""
    return np.random.default_rng((seed, trial))


def outcome_probabilities(
    truth: QubitPauliChannel, input_triple: BlochTriple, m_triple: BlochTriple
) -> np.ndarray:
    """Cellwise outcome probabilities (1 + M^T A theta)/2 of the first effect."""
    a = qubit_affine_matrix(truth).entries
    p = (1.0 + m_triple.matrix.T @ (a @ input_triple.matrix)) / 2.0
    if p.min() < -PROBABILITY_SLACK or p.max() > 1.0 + PROBABILITY_SLACK:
        raise InvalidModelError(
            f"model probabilities outside [0, 1]: range [{p.min():.6g}, {p.max():.6g}]"
        )
    return np.clip(p, 0.0, 1.0)


def sample_frequencies(
    truth: QubitPauliChannel,
    input_triple: BlochTriple,
    m_triple: BlochTriple,
    shots: int,
    rng: np.random.Generator,
) -> FrequencyMatrix:
    """Binomial relative frequencies nu[i, j] ~ B(shots, P[i, j]) / shots."""
    p = outcome_probabilities(truth, input_triple, m_triple)
    successes = rng.binomial(shots, p)
    return FrequencyMatrix.from_counts(successes, np.full((3, 3), shots))


def _squared_errors(spec: ExperimentSpec, trial: int) -> np.ndarray | None:
    rng = trial_rng(spec.seed, trial)
    freq = sample_frequencies(
        spec.truth, spec.input_triple, spec.measurement_triple, spec.shots_per_cell, rng
    )
    try:
        estimate = full_direction_estimate(spec.input_triple, spec.measurement_triple, freq)
    except (PauliTomoError, np.linalg.LinAlgError):
        return None
    truth_lambdas = np.sort(spec.truth.lambdas)[::-1]
    lambda_sq = (estimate.lambdas - truth_lambdas) ** 2
    angle_sq = (estimate.angles - spec.truth.angles) ** 2
    return np.concatenate([lambda_sq, angle_sq])


def run_monte_carlo(spec: ExperimentSpec, workers: int = 1) -> MseReport:
    """Repeat the pipeline over seeded trials and average the squared errors.

    Contraction estimates are compared against the descending-sorted truth
    (estimates are reported sorted).  Failing trials are skipped and
    counted; more than 1% of them aborts the run.
    """
    trials = range(spec.repetitions)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _squared_errors(spec, t), trials))
    else:
        results = [_squared_errors(spec, t) for t in trials]

    failed = sum(1 for r in results if r is None)
    if failed > MAX_FAILURE_FRACTION * spec.repetitions:
        raise PauliTomoError(
            f"{failed} of {spec.repetitions} trials failed, exceeding the 1% budget"
        )
    stacked = np.array([r for r in results if r is not None])
    mse = stacked.mean(axis=0)
    objective = float((1.0 - spec.weight) * mse[:3].sum() + spec.weight * mse[3:].sum())
    return MseReport(
        lambda_mse=mse[:3],
        angle_mse=mse[3:],
        objective_v=objective,
        n_times_v=spec.shots_per_cell * objective,
        failed_trials=failed,
    )


def cone_state_triple(alpha_deg: float) -> BlochTriple:
    """Three pure states at pairwise angle alpha, symmetric about the z axis.

    The cone half-angle follows from sin^2(psi) = 2(1 - cos alpha)/3; at
    alpha = 90 degrees the triple is orthonormal with determinant 1, and the
    determinant shrinks to 0 as the triple closes up.
    """
    alpha = math.radians(alpha_deg)
    sin_sq = 2.0 * (1.0 - math.cos(alpha)) / 3.0
    if not 0.0 <= sin_sq <= 1.0:
        raise ValueError(f"pairwise angle {alpha_deg} deg is not realizable on a cone")
    sin_psi = math.sqrt(sin_sq)
    cos_psi = math.sqrt(1.0 - sin_sq)
    azimuths = [0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0]
    columns = [
        np.array([sin_psi * math.cos(a), sin_psi * math.sin(a), cos_psi]) for a in azimuths
    ]
    return BlochTriple.from_columns(*columns)


def haar_rotation_triple(rng: np.random.Generator) -> BlochTriple:
    """Haar-uniform rotation of the identity triple (det +1)."""
    raw = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(raw)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return BlochTriple(matrix=q)


@dataclass(frozen=True, eq=False)
class OrthogonalityRow:
    alpha_deg: float
    det_input: float
    report: MseReport


@dataclass(frozen=True, eq=False)
class OrthogonalitySweepResult:
    rows: tuple[OrthogonalityRow, ...]
    skipped: tuple[float, ...]
    measurement_triple: BlochTriple


def sweep_orthogonality(
    spec: ExperimentSpec, angles_deg, workers: int = 1
) -> OrthogonalitySweepResult:
    """Error versus input-triple orthogonality at a fixed random measurement.

    The measurement triple is drawn once (Haar) from the master seed; each
    grid angle builds the cone input triple, near-singular triples are
    skipped with notice, and the remaining points each run the full
    Monte Carlo study.
    """
    m_triple = haar_rotation_triple(np.random.default_rng((spec.seed, _TRIPLE_DRAW_SALT)))
    rows = []
    skipped = []
    for alpha in angles_deg:
        alpha = float(alpha)
        sin_sq = 2.0 * (1.0 - math.cos(math.radians(alpha))) / 3.0
        det = 1.5 * math.sqrt(3.0) * sin_sq * math.sqrt(max(0.0, 1.0 - sin_sq))
        if abs(det) < SKIP_DET_TOL:
            skipped.append(alpha)
            continue
        input_triple = cone_state_triple(alpha)
        point_spec = replace(spec, input_triple=input_triple, measurement_triple=m_triple)
        report = run_monte_carlo(point_spec, workers=workers)
        rows.append(
            OrthogonalityRow(alpha_deg=alpha, det_input=input_triple.det, report=report)
        )
    return OrthogonalitySweepResult(
        rows=tuple(rows), skipped=tuple(skipped), measurement_triple=m_triple
    )


@dataclass(frozen=True, eq=False)
class ScalingRow:
    weight: float
    shots: int
    report: MseReport


def sweep_scaling(spec: ExperimentSpec, shots_list, weights_list, workers: int = 1):
    """Monte Carlo study for every (weight, shot count) pair.

    Sampling depends only on (seed, trial, shots), so rows sharing a shot
    count see identical trials and differ purely in the error weighting.
    """
    shots_list = [int(n) for n in shots_list]
    if any(b < a for a, b in zip(shots_list, shots_list[1:])):
        raise ValueError("shot counts must be ascending")
    rows = []
    for weight in weights_list:
        for shots in shots_list:
            point_spec = replace(spec, shots_per_cell=shots, weight=float(weight))
            report = run_monte_carlo(point_spec, workers=workers)
            rows.append(ScalingRow(weight=float(weight), shots=shots, report=report))
    return tuple(rows)
