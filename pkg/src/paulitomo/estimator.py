"""Channel parameter estimators from measured relative frequencies.

Two paths: a linear solver for the contraction magnitudes when the channel
axes are known, and the full pipeline recovering both magnitudes and axis
angles from a 3x3 table of frequencies via linear inversion, symmetrization
and a symmetric eigendecomposition with Euler-angle extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import compose_rotation
from .errors import DimensionMismatchError, SingularInformationError, UnidentifiableError

TRIPLE_DET_TOL = 1e-9
DEGENERACY_THRESHOLD = 1e-6
GIMBAL_TOL = 1e-9
RECONSTRUCTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BlochTriple:
    """Three Bloch vectors stacked as matrix columns; used for both the
    input-state triple and the measurement-direction triple."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.shape != (3, 3):
            raise DimensionMismatchError("a triple is a 3x3 matrix of column vectors")
        norms = np.linalg.norm(matrix, axis=0)
        if norms.max() > 1.0 + 1e-9:
            raise ValueError(f"column norms must not exceed 1, got {norms}")
        det = float(np.linalg.det(matrix))
        if abs(det) <= TRIPLE_DET_TOL:
            raise ValueError(f"columns must be linearly independent, |det| = {abs(det):.3g}")
        matrix = np.array(matrix)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls) -> "BlochTriple":
        return cls(matrix=np.eye(3))

    @classmethod
    def from_columns(cls, *columns) -> "BlochTriple":
        return cls(matrix=np.column_stack([np.asarray(c, dtype=float) for c in columns]))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    """Relative frequencies nu[i, j] of effect i firing on input j, with the
    per-cell measurement counts."""

    nu: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        counts = np.asarray(self.counts, dtype=int)
        if nu.shape != (3, 3) or counts.shape != (3, 3):
            raise DimensionMismatchError("frequencies and counts must both be 3x3")
        if nu.min() < 0.0 or nu.max() > 1.0:
            raise ValueError("relative frequencies must lie in [0, 1]")
        if np.min(counts) < 1:
            raise ValueError("counts must be positive")
        successes = nu * counts
        if np.abs(successes - np.round(successes)).max() > 1e-9:
            raise ValueError("nu * counts must be integer success counts")
        nu = np.array(nu)
        nu.setflags(write=False)
        counts = np.array(counts)
        counts.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, successes, totals) -> "FrequencyMatrix":
        successes = np.asarray(successes, dtype=float)
        totals = np.asarray(totals, dtype=int)
        return cls(nu=successes / totals, counts=totals)


def estimate_lambda_known_directions(configs, frequencies) -> np.ndarray:
    """Solve the linear system nu_k = m0/sqrt(n) + sum_i lambda_i c_i^(k).

    ``configs`` holds one configuration per unknown contraction, the k-th
    designated for parameter k; a configuration with vanishing overlap in
    its own block cannot identify it and raises.  The estimate is linear in
    the frequencies, hence unbiased when they are.
    """
    configs = list(configs)
    frequencies = np.asarray(frequencies, dtype=float)
    if frequencies.shape != (len(configs),):
        raise DimensionMismatchError("one frequency per configuration required")
    if not configs:
        raise ValueError("at least one configuration required")
    n_blocks = configs[0].decomposition.n_blocks
    if len(configs) != n_blocks:
        raise DimensionMismatchError(
            f"need one configuration per block ({n_blocks}), got {len(configs)}"
        )
    coefficients = np.zeros((n_blocks, n_blocks))
    offsets = np.zeros(n_blocks)
    for k, cfg in enumerate(configs):
        coefficients[k] = cfg.c_vector()
        offsets[k] = cfg.m0 / math.sqrt(cfg.decomposition.dim)
        if abs(coefficients[k, k]) < 1e-12:
            raise UnidentifiableError(
                f"configuration {k} has zero overlap with block {k}"
            )
    try:
        return np.linalg.solve(coefficients, frequencies - offsets)
    except np.linalg.LinAlgError as exc:
        raise UnidentifiableError("the configuration coefficients are singular") from exc


def estimate_output_states(m_triple: BlochTriple, freq: FrequencyMatrix) -> np.ndarray:
    """Unbiased linear estimate (M^T)^{-1}(2 nu - 1) of the output Bloch triple."""
    return np.linalg.solve(m_triple.matrix.T, 2.0 * freq.nu - 1.0)


def estimate_channel_matrix(theta_hat_star, input_triple: BlochTriple) -> np.ndarray:
    """Channel matrix estimate from estimated outputs: theta_hat_star theta^-1."""
    theta_hat_star = np.asarray(theta_hat_star, dtype=float)
    if theta_hat_star.shape != (3, 3):
        raise DimensionMismatchError("estimated output triple must be 3x3")
    return np.linalg.solve(input_triple.matrix.T, theta_hat_star.T).T


@dataclass(frozen=True, eq=False)
class DecomposedChannel:
    """Contractions sorted descending plus the extracted axis angles."""

    lambdas: np.ndarray
    angles: np.ndarray
    rotation: np.ndarray
    residual: float
    degenerate: bool
    gimbal_locked: bool


def decompose_channel_matrix(
    a_sym, *, degeneracy_threshold: float = DEGENERACY_THRESHOLD
) -> DecomposedChannel:
    """Split a symmetric channel matrix into contractions and axis angles.

    The matrix equals R diag(lambda) R^T, so a symmetric eigendecomposition
    solves it exactly: eigenvalues sorted descending give the contractions,
    the eigenvector matrix (signs fixed so each column's largest component
    is positive, then the last column flipped if needed for det +1) gives
    the rotation, and the angles follow from its closed-form entries.
    Near-degenerate eigenvalues leave the angles unidentifiable and set the
    ``degenerate`` flag; at gimbal lock the third angle is set to zero.
    """
    a_sym = np.asarray(a_sym, dtype=float)
    if a_sym.shape != (3, 3):
        raise DimensionMismatchError("channel matrix must be 3x3")
    if np.abs(a_sym - a_sym.T).max() > 1e-9:
        raise ValueError("matrix must be symmetric; symmetrize the raw estimate first")

    eigenvalues, eigenvectors = np.linalg.eigh(a_sym)
    order = np.argsort(eigenvalues)[::-1]
    lambdas = eigenvalues[order]
    rotation = eigenvectors[:, order]
    for j in range(3):
        if rotation[np.argmax(np.abs(rotation[:, j])), j] < 0:
            rotation[:, j] = -rotation[:, j]
    if np.linalg.det(rotation) < 0:
        rotation[:, 2] = -rotation[:, 2]

    # rotation = R_z(a1) R_y(a2) R_x(a3): row 3 holds (sin a2, cos a2 sin a3,
    # cos a2 cos a3), column 1 holds (cos a1 cos a2, sin a1 cos a2, sin a2).
    cos_a2 = math.hypot(rotation[2, 1], rotation[2, 2])
    a2 = math.atan2(rotation[2, 0], cos_a2)
    gimbal_locked = cos_a2 < GIMBAL_TOL
    if gimbal_locked:
        a3 = 0.0
        a1 = math.atan2(-rotation[0, 1], rotation[1, 1])
    else:
        a3 = math.atan2(rotation[2, 1], rotation[2, 2])
        a1 = math.atan2(rotation[1, 0], rotation[0, 0])
    angles = np.array([a1, a2, a3])

    rebuilt = compose_rotation(angles) @ np.diag(lambdas) @ compose_rotation(angles).T
    residual = float(np.abs(rebuilt - a_sym).max())
    if residual > RECONSTRUCTION_TOL:
        raise SingularInformationError(
            f"angle extraction failed to reproduce the matrix (residual {residual:.3g})"
        )
    degenerate = bool(np.min(np.diff(lambdas[::-1])) < degeneracy_threshold)
    if degenerate and np.allclose(a_sym, a_sym[0, 0] * np.eye(3), atol=1e-12):
        angles = np.zeros(3)  # isotropic case: any rotation fits, report none
    return DecomposedChannel(
        lambdas=lambdas,
        angles=angles,
        rotation=rotation,
        residual=residual,
        degenerate=degenerate,
        gimbal_locked=gimbal_locked,
    )


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    """Result of the full unknown-direction estimation pipeline."""

    lambdas: np.ndarray
    angles: np.ndarray
    raw_a: np.ndarray
    symmetrized_a: np.ndarray
    degenerate: bool
    gimbal_locked: bool


def full_direction_estimate(
    input_triple: BlochTriple, m_triple: BlochTriple, freq: FrequencyMatrix
) -> ChannelEstimate:
    """Frequencies to channel estimate: invert, symmetrize, decompose."""
    theta_hat_star = estimate_output_states(m_triple, freq)
    raw_a = estimate_channel_matrix(theta_hat_star, input_triple)
    symmetrized = (raw_a + raw_a.T) / 2.0
    decomposed = decompose_channel_matrix(symmetrized)
    return ChannelEstimate(
        lambdas=decomposed.lambdas,
        angles=decomposed.angles,
        raw_a=raw_a,
        symmetrized_a=symmetrized,
        degenerate=decomposed.degenerate,
        gimbal_locked=decomposed.gimbal_locked,
    )
