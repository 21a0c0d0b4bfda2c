"""Fisher information of two-outcome measurement configurations.

Covers the closed-form qubit Fisher matrix, determinant/trace objectives
over three-configuration sets, the block-diagonal Fisher information of
generalized channels, its closed-form maximum in terms of the state
multiplicity inside a block, and the construction that attains it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import (
    EFFECT,
    CoefficientVector,
    OperatorBasis,
    SubalgebraDecomposition,
    bloch_qubit_effect,
    bloch_qubit_state,
    canonical_basis,
    effect_vector,
    qubit_decomposition,
    state_vector,
)
from .channel import GeneralizedPauliChannel
from .errors import (
    BlockStructureError,
    DimensionMismatchError,
    InvalidEffectError,
    SingularInformationError,
)

SINGULAR_TOL = 1e-12
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class MeasurementConfiguration:
    """One input state paired with one POVM effect over a block decomposition.

    ``c_vector`` collects, per block, the overlap sum of the traceless state
    and effect coefficients; for the qubit axis decomposition with a von
    Neumann effect the equivalent conventional-Bloch products are exposed by
    :meth:`bloch_c`.
    """

    state: CoefficientVector
    effect: CoefficientVector
    decomposition: SubalgebraDecomposition

    def __post_init__(self):
        if self.state.kind != "state" or self.effect.kind != "effect":
            raise ValueError("configuration needs a state and an effect")
        if not (self.state.dim == self.effect.dim == self.decomposition.dim):
            raise DimensionMismatchError("state, effect and decomposition dimensions differ")

    @classmethod
    def qubit(cls, theta, m) -> "MeasurementConfiguration":
        """Configuration from conventional qubit Bloch vectors."""
        return cls(
            state=bloch_qubit_state(theta),
            effect=bloch_qubit_effect(m),
            decomposition=qubit_decomposition(),
        )

    @classmethod
    def from_qubit_c(cls, c) -> "MeasurementConfiguration":
        """Realize a qubit c-vector (l1 norm <= 1) as a von Neumann pair.

        Splits each component as m_i = sign(c_i) sqrt(|c_i|/s) and
        theta_i = sqrt(|c_i| s) with s = |c|_1, so m is a unit vector,
        theta stays inside the Bloch ball, and m_i theta_i = c_i.
        """
        c = np.asarray(c, dtype=float)
        if c.shape != (3,):
            raise DimensionMismatchError("c must be a 3-vector")
        scale = float(np.abs(c).sum())
        if scale > 1.0 + 1e-9:
            raise ValueError(f"|c|_1 = {scale:.6g} exceeds 1")
        if scale < 1e-15:
            return cls.qubit(np.zeros(3), np.array([1.0, 0.0, 0.0]))
        m = np.sign(c) * np.sqrt(np.abs(c) / scale)
        theta = np.sqrt(np.abs(c) * scale)
        return cls.qubit(theta, m)

    @property
    def m0(self) -> float:
        return self.effect.m0

    @property
    def d(self) -> float:
        """Traceless overlap sum of state and effect coefficients."""
        return float(self.effect.traceless @ self.state.traceless)

    def c_vector(self) -> np.ndarray:
        """Per-block overlap c_i = sum over block indices of theta_l m_l."""
        products = self.state.traceless * self.effect.traceless
        assignments = self.decomposition.block_assignments()[1:]
        out = np.zeros(self.decomposition.n_blocks)
        np.add.at(out, assignments, products)
        return out

    def bloch_c(self) -> np.ndarray:
        """Conventional qubit c-vector m_i theta_i from Bloch components."""
        if self.state.dim != 2:
            raise DimensionMismatchError("bloch_c is defined for qubit configurations")
        return self.state.bloch() * self.effect.bloch()


@dataclass(frozen=True, eq=False)
class ConfigurationSet:
    """Three qubit configurations and their stacked 3x3 c-matrix."""

    configs: tuple[MeasurementConfiguration, ...]

    def __post_init__(self):
        configs = tuple(self.configs)
        if len(configs) != 3:
            raise ValueError("a configuration set holds exactly three configurations")
        for cfg in configs:
            if np.abs(cfg.bloch_c()).sum() > 1.0 + 1e-9:
                raise ValueError("configuration violates the l1 constraint |c|_1 <= 1")
        object.__setattr__(self, "configs", configs)

    def c_matrix(self) -> np.ndarray:
        """Matrix with column j holding the c-vector of configuration j."""
        return np.column_stack([cfg.bloch_c() for cfg in self.configs])


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """Symmetric positive-semidefinite Fisher information matrix."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionMismatchError("Fisher matrix must be square")
        if np.abs(entries - entries.T).max() > 1e-12:
            raise ValueError("Fisher matrix must be symmetric")
        if np.linalg.eigvalsh(entries)[0] < -1e-10:
            raise ValueError("Fisher matrix must be positive semidefinite")
        entries = np.array(entries)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


def fisher_from_model(prob_fn, lambdas, step: float = FD_STEP) -> FisherMatrix:
    """Finite-difference Fisher matrix of a two-outcome probability model.

    ``prob_fn`` maps a parameter vector to the probability of the first
    outcome; the distribution is {p, 1-p}.  Central differences of width
    ``step`` approximate the derivatives.  This is the oracle every closed
    form in this module is checked against.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    p = float(prob_fn(lambdas))
    if p < SINGULAR_TOL or p > 1.0 - SINGULAR_TOL:
        raise SingularInformationError(
            f"outcome probability {p:.6g} sits at the boundary of [0, 1]"
        )
    gradient = np.empty(lambdas.size)
    for i in range(lambdas.size):
        shift = np.zeros(lambdas.size)
        shift[i] = step
        gradient[i] = (float(prob_fn(lambdas + shift)) - float(prob_fn(lambdas - shift))) / (
            2.0 * step
        )
    weight = 1.0 / p + 1.0 / (1.0 - p)
    return FisherMatrix(entries=weight * np.outer(gradient, gradient))


def _checked_qubit_c(lambdas, cfg: MeasurementConfiguration) -> tuple[np.ndarray, float]:
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (3,):
        raise DimensionMismatchError("lambdas must be a 3-vector")
    m = cfg.effect.bloch()
    if abs(float(m @ m) - 1.0) > 1e-9 or abs(cfg.m0 - 1.0 / math.sqrt(2.0)) > 1e-9:
        raise InvalidEffectError("the closed form requires a von Neumann effect (|m| = 1)")
    c = cfg.bloch_c()
    s = float(lambdas @ c)
    if 1.0 - s * s < SINGULAR_TOL:
        raise SingularInformationError(
            f"|lambda . c| = {abs(s):.12g} makes the information diverge"
        )
    return c, s


def qubit_fisher_matrix(lambdas, cfg: MeasurementConfiguration) -> FisherMatrix:
    """Closed-form rank-one qubit Fisher matrix c c^T / (1 - (lambda.c)^2)."""
    c, s = _checked_qubit_c(lambdas, cfg)
    return FisherMatrix(entries=np.outer(c, c) / (1.0 - s * s))


def total_fisher_trace(lambdas, cfg: MeasurementConfiguration) -> float:
    """Trace of the qubit Fisher matrix, (sum c_i^2) / (1 - (lambda.c)^2)."""
    c, s = _checked_qubit_c(lambdas, cfg)
    return float(c @ c) / (1.0 - s * s)


def total_fisher_det(lambdas, config_set: ConfigurationSet) -> float:
    """det of the summed Fisher information, det(C)^2 / prod_j (1-(lambda.c_j)^2)."""
    lambdas = np.asarray(lambdas, dtype=float)
    c_matrix = config_set.c_matrix()
    denominator = 1.0
    for j in range(3):
        s = float(lambdas @ c_matrix[:, j])
        if 1.0 - s * s < SINGULAR_TOL:
            raise SingularInformationError(
                f"configuration {j} has |lambda . c| = {abs(s):.12g}"
            )
        denominator *= 1.0 - s * s
    return float(np.linalg.det(c_matrix)) ** 2 / denominator


def optimal_qubit_configuration() -> ConfigurationSet:
    """Axis-aligned optimum: state and effect along e_j for j = 1, 2, 3."""
    axes = np.eye(3)
    return ConfigurationSet(
        configs=tuple(MeasurementConfiguration.qubit(axes[j], axes[j]) for j in range(3))
    )


def block_fisher_diag(
    ch: GeneralizedPauliChannel, cfg: MeasurementConfiguration, block_index: int
) -> float:
    """Diagonal Fisher entry of a configuration supported in a single block.

    F_jj = d^2 / [(m0/sqrt(n) + lambda_j d)(1 - m0/sqrt(n) - lambda_j d)]
    where d is the configuration's overlap inside block j.
    """
    if cfg.decomposition is not ch.decomposition and cfg.decomposition.blocks != ch.decomposition.blocks:
        raise DimensionMismatchError("configuration and channel use different decompositions")
    c = cfg.c_vector()
    off_block = np.abs(np.delete(c, block_index)).max() if c.size > 1 else 0.0
    if off_block > 1e-9:
        raise ValueError(
            f"configuration leaks outside block {block_index} (max |c_i| = {off_block:.3g})"
        )
    d = float(c[block_index])
    p = cfg.m0 / math.sqrt(cfg.decomposition.dim) + float(ch.lambdas[block_index]) * d
    if p < SINGULAR_TOL or 1.0 - p < SINGULAR_TOL:
        raise SingularInformationError(
            f"outcome probability {p:.12g} makes the information singular"
        )
    return d * d / (p * (1.0 - p))


def max_fisher_info(dim: int, multiplicity: int, contraction: float) -> float:
    """Largest Fisher information attainable inside a block, per the closed form
    1 / [(1 - lambda)(K/(n-K) + lambda)] with state multiplicity K."""
    if not 1 <= multiplicity < dim:
        raise ValueError(f"multiplicity must satisfy 1 <= K < n, got K={multiplicity}, n={dim}")
    lam = float(contraction)
    lower = -1.0 / (dim - 1)
    if lam > 1.0 + SINGULAR_TOL or lam < lower - SINGULAR_TOL:
        raise ValueError(f"contraction {lam:.6g} outside [{lower:.6g}, 1]")
    ratio = multiplicity / (dim - multiplicity)
    if abs(1.0 - lam) < SINGULAR_TOL or abs(ratio + lam) < SINGULAR_TOL:
        raise SingularInformationError(
            f"contraction {lam:.6g} is a pole of the maximal information"
        )
    return 1.0 / ((1.0 - lam) * (ratio + lam))


def _generic_block_element(
    d: SubalgebraDecomposition, block_index: int, basis: OperatorBasis, rng
) -> np.ndarray:
    weights = rng.normal(size=len(d.blocks[block_index]))
    return np.tensordot(weights, basis.elements[list(d.blocks[block_index])], axes=1)


def optimal_block_config(
    d: SubalgebraDecomposition,
    block_index: int,
    basis: OperatorBasis | None = None,
) -> MeasurementConfiguration:
    """Information-maximizing configuration inside one subalgebra block.

    The effect is a minimal-rank von Neumann projection P found by
    eigendecomposing generic elements of the block (smallest top-eigenspace
    over a few seeded draws); the state is P / Tr(P).  The achieved overlap
    is d = (n - K)/n for projection rank K.
    """
    if not 0 <= block_index < d.n_blocks:
        raise IndexError(f"block index {block_index} out of range 0..{d.n_blocks - 1}")
    if basis is None:
        basis = canonical_basis(d.dim)
    n = d.dim
    rng = np.random.default_rng(0x5EED + block_index)

    best_projection = None
    for _ in range(8):
        element = _generic_block_element(d, block_index, basis, rng)
        eigenvalues, eigenvectors = np.linalg.eigh(element)
        scale = max(1.0, float(np.abs(eigenvalues).max()))
        top = eigenvalues >= eigenvalues[-1] - 1e-7 * scale
        vectors = eigenvectors[:, top]
        projection = vectors @ vectors.conj().T
        if best_projection is None or int(top.sum()) < best_projection[0]:
            best_projection = (int(top.sum()), projection)
    rank, projection = best_projection

    if np.abs(projection @ projection - projection).max() > 1e-9:
        raise BlockStructureError("candidate eigenprojection is not idempotent")
    coeffs = np.einsum("kab,ba->k", basis.elements, projection)
    if np.abs(coeffs.imag).max() > 1e-9:
        raise BlockStructureError("projection coefficients are not real")
    coeffs = coeffs.real
    member_indices = [0, *d.blocks[block_index]]
    outside = np.delete(coeffs, member_indices)
    if outside.size and np.abs(outside).max() > 1e-9:
        raise BlockStructureError(
            f"no projection found inside block {block_index}; "
            f"leakage {np.abs(outside).max():.3g}"
        )
    clean = np.zeros(n * n)
    clean[member_indices] = coeffs[member_indices]
    effect = effect_vector(clean, dim=n)
    state = state_vector(clean / rank, dim=n)
    return MeasurementConfiguration(state=state, effect=effect, decomposition=d)


@dataclass(frozen=True, eq=False)
class CramerRaoBound:
    """Inverse Fisher matrix, or the null directions when it does not exist."""

    covariance: np.ndarray | None
    null_directions: np.ndarray

    @property
    def bounded(self) -> bool:
        return self.covariance is not None


def cramer_rao_bound(fisher) -> CramerRaoBound:
    """Covariance lower bound F^{-1}; singular F yields its null directions."""
    entries = fisher.entries if isinstance(fisher, FisherMatrix) else np.asarray(fisher, float)
    eigenvalues, eigenvectors = np.linalg.eigh(entries)
    threshold = 1e-10 * max(1.0, float(eigenvalues[-1]))
    null = eigenvalues <= threshold
    if null.any():
        return CramerRaoBound(covariance=None, null_directions=eigenvectors[:, null].T.copy())
    return CramerRaoBound(
        covariance=np.linalg.inv(entries), null_directions=np.empty((0, entries.shape[0]))
    )
