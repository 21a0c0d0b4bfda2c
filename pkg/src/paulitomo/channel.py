"""Qubit Pauli channels with rotated axes and generalized Pauli channels.

A qubit channel is parametrized by three contraction magnitudes and three
rotation angles; its action on Bloch vectors is the symmetric matrix
A = R_z R_y R_x diag(lambda) R_x^-1 R_y^-1 R_z^-1.  Generalized channels
contract the blocks of a subalgebra decomposition instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import (
    CoefficientVector,
    OperatorBasis,
    SubalgebraDecomposition,
    canonical_basis,
    state_vector,
)
from .errors import DimensionMismatchError, InvalidStateError

SYMMETRY_TOL = 1e-12
CPTP_TOL = 1e-12


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def compose_rotation(angles) -> np.ndarray:
    """R_z(a1) R_y(a2) R_x(a3) in this package's axis conventions."""
    a1, a2, a3 = (float(a) for a in angles)
    return rotation_z(a1) @ rotation_y(a2) @ rotation_x(a3)


@dataclass(frozen=True, eq=False)
class QubitPauliChannel:
    """Qubit channel contracting three rotated orthogonal axes.

    ``lambdas`` are the contraction magnitudes along the channel axes and
    ``angles`` the rotation taking the Pauli axes onto them.  Any real
    angles are accepted; physicality of ``lambdas`` is checked separately
    by :func:`validate_cptp`.
    """

    lambdas: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=float)
        angles = np.asarray(self.angles, dtype=float)
        if lambdas.shape != (3,) or angles.shape != (3,):
            raise DimensionMismatchError("lambdas and angles must be 3-vectors")
        if np.abs(lambdas).max() > 1.0 + CPTP_TOL:
            raise ValueError(f"contraction magnitudes must satisfy |lambda| <= 1, got {lambdas}")
        lambdas = np.array(lambdas)
        lambdas.setflags(write=False)
        angles = np.array(angles)
        angles.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "angles", angles)

    @classmethod
    def diagonal(cls, lambdas) -> "QubitPauliChannel":
        return cls(lambdas=lambdas, angles=(0.0, 0.0, 0.0))


@dataclass(frozen=True, eq=False)
class AffineChannelMatrix:
    """Symmetric 3x3 Bloch-space action of a rotated qubit Pauli channel."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (3, 3):
            raise DimensionMismatchError("affine channel matrix must be 3x3")
        if np.abs(entries - entries.T).max() > SYMMETRY_TOL:
            raise ValueError("affine channel matrix must be symmetric")
        entries = np.array(entries)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


def qubit_affine_matrix(ch: QubitPauliChannel) -> AffineChannelMatrix:
    """Bloch-space matrix R diag(lambda) R^T of the channel."""
    rot = compose_rotation(ch.angles)
    entries = rot @ np.diag(ch.lambdas) @ rot.T
    # conjugation by an orthogonal matrix; symmetrize away roundoff
    return AffineChannelMatrix(entries=(entries + entries.T) / 2.0)


def apply_qubit(ch: QubitPauliChannel, theta) -> np.ndarray:
    """Image A theta of a Bloch vector under the channel."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (3,):
        raise DimensionMismatchError("theta must be a 3-vector")
    if float(theta @ theta) > 1.0 + 1e-12:
        raise InvalidStateError("input Bloch vector lies outside the unit ball")
    return qubit_affine_matrix(ch).entries @ theta


@dataclass(frozen=True)
class CptpReport:
    valid: bool
    violations: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()


def validate_cptp(lambdas, dim: int, *, notes: tuple[str, ...] = ()) -> CptpReport:
    """Check the complete-positivity inequalities for contraction magnitudes.

    The conditions are 1 + n lambda_i >= sum_j lambda_j for every i,
    sum_j lambda_j >= -1/(n-1), and |lambda_i| <= 1; exact evaluations up
    to 1e-12 slack, reporting each violated inequality.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise DimensionMismatchError("lambdas must be a non-empty vector")
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    total = float(lambdas.sum())
    violations = []
    for i, lam in enumerate(lambdas):
        lhs = 1.0 + dim * float(lam)
        if lhs < total - CPTP_TOL:
            violations.append(f"1 + {dim}*lambda_{i + 1} = {lhs:.12g} < sum(lambda) = {total:.12g}")
    lower = -1.0 / (dim - 1)
    if total < lower - CPTP_TOL:
        violations.append(f"sum(lambda) = {total:.12g} < -1/(n-1) = {lower:.12g}")
    for i, lam in enumerate(lambdas):
        if abs(float(lam)) > 1.0 + CPTP_TOL:
            violations.append(f"|lambda_{i + 1}| = {abs(float(lam)):.12g} > 1")
    return CptpReport(valid=not violations, violations=tuple(violations), notes=tuple(notes))


@dataclass(frozen=True, eq=False)
class GeneralizedPauliChannel:
    """Channel contracting each subalgebra block by its own magnitude."""

    decomposition: SubalgebraDecomposition
    lambdas: np.ndarray

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=float)
        if lambdas.shape != (self.decomposition.n_blocks,):
            raise DimensionMismatchError(
                f"need one contraction per block "
                f"({self.decomposition.n_blocks}), got {lambdas.shape}"
            )
        lambdas = np.array(lambdas)
        lambdas.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)

    @property
    def dim(self) -> int:
        return self.decomposition.dim

    def validate(self) -> CptpReport:
        """CPTP report; flags the caveat for non-uniform block dimensions.

        The inequality set is stated for decompositions whose blocks all
        share one dimension; for mixed block sizes it is applied as written
        and the report carries a note to that effect.
        """
        notes = ()
        if len({len(block) for block in self.decomposition.blocks}) > 1:
            notes = (
                "blocks have unequal dimensions; the CPTP inequality set is "
                "applied as written, which is only established for uniform blocks",
            )
        return validate_cptp(self.lambdas, self.dim, notes=notes)


def conditional_expectation(
    d: SubalgebraDecomposition,
    block_index: int,
    matrix,
    basis: OperatorBasis | None = None,
) -> np.ndarray:
    """Trace-preserving projection of a matrix onto one subalgebra block.

    E_i(M) = (Tr M / n) I + sum_{l in block i} Tr(M v_l) v_l; idempotent and
    trace preserving by construction.
    """
    if not 0 <= block_index < d.n_blocks:
        raise IndexError(f"block index {block_index} out of range 0..{d.n_blocks - 1}")
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (d.dim, d.dim):
        raise DimensionMismatchError(f"matrix must be {d.dim}x{d.dim}")
    if basis is None:
        basis = canonical_basis(d.dim)
    out = (np.trace(matrix) / d.dim) * np.eye(d.dim, dtype=complex)
    for l in d.blocks[block_index]:
        out += np.trace(matrix @ basis.elements[l]) * basis.elements[l]
    return out


def apply_generalized(ch: GeneralizedPauliChannel, matrix, basis: OperatorBasis | None = None) -> np.ndarray:
    """Channel output (1 - sum lambda_i)(Tr M / n) I + sum_i lambda_i E_i(M)."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (ch.dim, ch.dim):
        raise DimensionMismatchError(f"matrix must be {ch.dim}x{ch.dim}")
    if basis is None:
        basis = canonical_basis(ch.dim)
    out = (1.0 - ch.lambdas.sum()) * (np.trace(matrix) / ch.dim) * np.eye(ch.dim, dtype=complex)
    for i in range(ch.decomposition.n_blocks):
        out += ch.lambdas[i] * conditional_expectation(ch.decomposition, i, matrix, basis)
    return out


def apply_generalized_coeffs(ch: GeneralizedPauliChannel, state: CoefficientVector) -> CoefficientVector:
    """Coefficientwise channel action theta_i -> lambda_{pi(i)} theta_i."""
    if state.kind != "state":
        raise InvalidStateError("apply_generalized_coeffs expects a state vector")
    if state.dim != ch.dim:
        raise DimensionMismatchError(f"state dim {state.dim} != channel dim {ch.dim}")
    assignments = ch.decomposition.block_assignments()
    coeffs = np.array(state.coeffs)
    coeffs[1:] *= ch.lambdas[assignments[1:]]
    return state_vector(coeffs, dim=state.dim)


def output_probability(ch, state: CoefficientVector, effect: CoefficientVector) -> float:
    """Probability of the effect outcome on the channel output state.

    Accepts either channel type: p = m0/sqrt(n) + sum_i lambda_{pi(i)} m_i theta_i
    for generalized channels, and the rotated-axis analogue for qubit channels.
    """
    if state.kind != "state" or effect.kind != "effect":
        raise ValueError("expected a state and an effect, in that order")
    if state.dim != effect.dim:
        raise DimensionMismatchError("state and effect dimensions differ")
    if isinstance(ch, GeneralizedPauliChannel):
        if state.dim != ch.dim:
            raise DimensionMismatchError("state dimension does not match the channel")
        assignments = ch.decomposition.block_assignments()
        scaled = state.traceless * ch.lambdas[assignments[1:]]
        return float(state.m0 * effect.m0 + effect.traceless @ scaled)
    if isinstance(ch, QubitPauliChannel):
        if state.dim != 2:
            raise DimensionMismatchError("qubit channel needs dim-2 state and effect")
        moved = qubit_affine_matrix(ch).entries @ state.traceless
        return float(state.m0 * effect.m0 + effect.traceless @ moved)
    raise TypeError(f"unsupported channel type {type(ch).__name__}")
