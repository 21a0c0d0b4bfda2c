"""Orthonormal Hermitian operator bases and coefficient-vector state algebra.

States and two-outcome POVM effects are stored as real coefficient vectors
in an orthonormal Hermitian basis whose zeroth element is I/sqrt(n); the
measurement probability is then the plain dot product of the two vectors.
Every :class:`CoefficientVector` in this package refers to the canonical
tensor-Pauli basis of its dimension unless an explicit basis is passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import (
    BasisSizeError,
    DimensionMismatchError,
    InvalidStateError,
)

ORTHONORMALITY_TOL = 1e-12
HERMITICITY_TOL = 1e-12
POSITIVITY_TOL = 1e-9
VON_NEUMANN_TOL = 1e-9
CLOSURE_TOL = 1e-9

#: Largest number of tensor factors build_tensor_pauli_basis accepts; a basis
#: with k factors stores 4^k matrices of size 2^k x 2^k (k=6 is ~270 MB).
MAX_TENSOR_FACTORS = 6

PAULI_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

STATE = "state"
EFFECT = "effect"


def _readonly(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Orthonormal basis of Hermitian matrices with leading element I/sqrt(n).

    Parameters
    ----------
    dim : int
        Hilbert-space dimension n; the basis holds n^2 matrices.
    elements : ndarray, shape (n^2, n, n)
        Hermitian matrices, pairwise orthonormal under Tr(v_i v_j).
    """

    dim: int
    elements: np.ndarray

    def __post_init__(self):
        elements = np.asarray(self.elements, dtype=complex)
        n = int(self.dim)
        if n < 1 or elements.shape != (n * n, n, n):
            raise DimensionMismatchError(
                f"expected {n * n} matrices of shape ({n}, {n}), got {elements.shape}"
            )
        if np.abs(elements - elements.conj().transpose(0, 2, 1)).max() > HERMITICITY_TOL:
            raise ValueError("basis elements must be Hermitian")
        if np.abs(elements[0] - np.eye(n) / math.sqrt(n)).max() > ORTHONORMALITY_TOL:
            raise ValueError("leading basis element must be I/sqrt(n)")
        # Gram matrix of Tr(v_i v_j) through one BLAS product.
        rows = elements.reshape(n * n, n * n)
        cols = elements.transpose(0, 2, 1).reshape(n * n, n * n)
        gram = (rows @ cols.T).real
        if np.abs(gram - np.eye(n * n)).max() > ORTHONORMALITY_TOL:
            raise ValueError("basis elements are not orthonormal")
        frozen = np.array(elements)
        frozen.setflags(write=False)
        object.__setattr__(self, "elements", frozen)
        object.__setattr__(self, "dim", n)

    @property
    def size(self) -> int:
        return self.dim * self.dim


@lru_cache(maxsize=None)
def build_pauli_basis() -> OperatorBasis:
    """Qubit basis {I, sigma_x, sigma_y, sigma_z} / sqrt(2)."""
    return OperatorBasis(dim=2, elements=PAULI_MATRICES / math.sqrt(2.0))


@lru_cache(maxsize=None)
def build_tensor_pauli_basis(factors: int) -> OperatorBasis:
    """Basis of n = 2^k dimensional space from k-fold tensor products of Paulis.

    Element index encodes the factor labels base 4, so index 0 is I/sqrt(n)
    and ``factors=1`` reproduces :func:`build_pauli_basis`.
    """
    if factors < 1:
        raise ValueError("factors must be >= 1")
    if factors > MAX_TENSOR_FACTORS:
        raise BasisSizeError(
            f"{factors} tensor factors need {16 ** factors // 2 ** 26} GiB; "
            f"limit is MAX_TENSOR_FACTORS={MAX_TENSOR_FACTORS}"
        )
    n = 2**factors
    elements = np.empty((n * n, n, n), dtype=complex)
    for idx, labels in enumerate(product(range(4), repeat=factors)):
        mat = PAULI_MATRICES[labels[0]]
        for label in labels[1:]:
            mat = np.kron(mat, PAULI_MATRICES[label])
        elements[idx] = mat / math.sqrt(n)
    return OperatorBasis(dim=n, elements=elements)


def canonical_basis(dim: int) -> OperatorBasis:
    """Tensor-Pauli basis for a power-of-two dimension."""
    factors = int(round(math.log2(dim)))
    if 2**factors != dim:
        raise DimensionMismatchError(
            f"canonical basis exists only for power-of-two dimensions, got {dim}"
        )
    return build_tensor_pauli_basis(factors)


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Real coefficients of a state or POVM effect in an orthonormal basis.

    ``kind`` is ``"state"`` or ``"effect"``. For states the leading
    coefficient is 1/sqrt(n); for effects it is Tr(M)/sqrt(n) and may reach
    sqrt(n) (the identity effect). Physicality is checked by
    :func:`validate_state` / :func:`validate_effect`, not on construction,
    so invalid vectors can be built and then reported on.
    """

    kind: str
    coeffs: np.ndarray
    dim: int

    def __post_init__(self):
        if self.kind not in (STATE, EFFECT):
            raise ValueError(f"kind must be 'state' or 'effect', got {self.kind!r}")
        coeffs = np.asarray(self.coeffs, dtype=float)
        n = int(self.dim)
        if coeffs.shape != (n * n,):
            raise DimensionMismatchError(
                f"expected {n * n} coefficients for dim {n}, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", _readonly(coeffs))
        object.__setattr__(self, "dim", n)

    @property
    def traceless(self) -> np.ndarray:
        """Coefficients on the traceless basis elements (index >= 1)."""
        return self.coeffs[1:]

    @property
    def m0(self) -> float:
        return float(self.coeffs[0])

    def bloch(self) -> np.ndarray:
        """Conventional qubit Bloch 3-vector (factor-1/2 Pauli expansion)."""
        if self.dim != 2:
            raise DimensionMismatchError("bloch() is defined for dim-2 vectors only")
        return self.coeffs[1:] * math.sqrt(2.0)

    def effect_direction(self) -> np.ndarray:
        """Rescaled traceless part m_i / (m0 sqrt(n)) of an effect.

        Derived view only: with this scaling the effect reads
        m0 sqrt(n) (I/n + sum_i dir_i v_i), mirroring how states are
        parametrized. Nothing in the package consumes it.
        """
        if self.kind != EFFECT:
            raise ValueError("effect_direction() applies to effect vectors")
        if abs(self.m0) < 1e-15:
            raise ZeroDivisionError("effect has vanishing trace, direction undefined")
        return self.coeffs[1:] / (self.m0 * math.sqrt(self.dim))


def state_vector(coeffs, dim: int) -> CoefficientVector:
    return CoefficientVector(kind=STATE, coeffs=coeffs, dim=dim)


def effect_vector(coeffs, dim: int) -> CoefficientVector:
    return CoefficientVector(kind=EFFECT, coeffs=coeffs, dim=dim)


def bloch_qubit_state(theta) -> CoefficientVector:
    """Qubit state (I + theta . sigma)/2 from a Bloch 3-vector."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (3,):
        raise DimensionMismatchError("theta must be a 3-vector")
    norm_sq = float(theta @ theta)
    if norm_sq > 1.0 + 1e-12:
        raise InvalidStateError(f"Bloch norm^2 = {norm_sq:.6g} exceeds 1")
    coeffs = np.concatenate(([1.0], theta)) / math.sqrt(2.0)
    return CoefficientVector(kind=STATE, coeffs=coeffs, dim=2)


def bloch_qubit_effect(m) -> CoefficientVector:
    """Qubit effect (I + m . sigma)/2; von Neumann exactly when |m| = 1."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise DimensionMismatchError("m must be a 3-vector")
    if float(m @ m) > 1.0 + 1e-9:
        raise InvalidStateError(f"effect direction norm {np.linalg.norm(m):.6g} exceeds 1")
    coeffs = np.concatenate(([1.0], m)) / math.sqrt(2.0)
    return CoefficientVector(kind=EFFECT, coeffs=coeffs, dim=2)


def reconstruct_matrix(c: CoefficientVector, basis: OperatorBasis | None = None) -> np.ndarray:
    """Hermitian matrix sum_i c_i v_i."""
    if basis is None:
        basis = canonical_basis(c.dim)
    if basis.dim != c.dim:
        raise DimensionMismatchError(
            f"coefficient dim {c.dim} does not match basis dim {basis.dim}"
        )
    return np.tensordot(c.coeffs, basis.elements, axes=1)


def project_coefficients(
    matrix, basis: OperatorBasis | None = None, *, kind: str = STATE
) -> CoefficientVector:
    """Coefficients c_i = Tr(M v_i) of a Hermitian matrix; inverse of
    :func:`reconstruct_matrix` on the round trip."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError("matrix must be square")
    n = matrix.shape[0]
    scale = max(1.0, float(np.abs(matrix).max()))
    if np.abs(matrix - matrix.conj().T).max() > 1e-9 * scale:
        raise ValueError("matrix must be Hermitian")
    if basis is None:
        basis = canonical_basis(n)
    if basis.dim != n:
        raise DimensionMismatchError(f"matrix dim {n} does not match basis dim {basis.dim}")
    coeffs = np.einsum("kab,ba->k", basis.elements, matrix).real
    return CoefficientVector(kind=kind, coeffs=coeffs, dim=n)


def measurement_probability(state: CoefficientVector, effect: CoefficientVector) -> float:
    """Outcome probability p = sum_i m_i theta_i = m0/sqrt(n) + d."""
    if state.kind != STATE or effect.kind != EFFECT:
        raise ValueError("expected a state and an effect, in that order")
    if state.dim != effect.dim:
        raise DimensionMismatchError(
            f"state dim {state.dim} does not match effect dim {effect.dim}"
        )
    return float(state.coeffs @ effect.coeffs)


def complement_effect(effect: CoefficientVector) -> CoefficientVector:
    """The other POVM element I - M, with coefficients (sqrt(n) - m0, -m_i)."""
    if effect.kind != EFFECT:
        raise ValueError("complement_effect applies to effect vectors")
    coeffs = -np.asarray(effect.coeffs)
    coeffs[0] += math.sqrt(effect.dim)
    return CoefficientVector(kind=EFFECT, coeffs=coeffs, dim=effect.dim)


@dataclass(frozen=True)
class StateValidity:
    valid: bool
    min_eigenvalue: float
    trace_error: float
    messages: tuple[str, ...] = ()


@dataclass(frozen=True)
class EffectValidity:
    valid: bool
    min_eigenvalue: float
    max_eigenvalue: float
    von_neumann: bool
    rank: int | None
    messages: tuple[str, ...] = ()


def validate_state(c: CoefficientVector, basis: OperatorBasis | None = None) -> StateValidity:
    """Report positivity and normalization of the reconstructed matrix."""
    matrix = reconstruct_matrix(c, basis)
    eigenvalues = np.linalg.eigvalsh(matrix)
    trace_error = abs(float(eigenvalues.sum()) - 1.0)
    messages = []
    if c.kind != STATE:
        messages.append(f"vector is tagged {c.kind!r}, not 'state'")
    if abs(c.m0 - 1.0 / math.sqrt(c.dim)) > 1e-12:
        messages.append(f"leading coefficient {c.m0:.12g} != 1/sqrt({c.dim})")
    if trace_error > 1e-12:
        messages.append(f"trace differs from 1 by {trace_error:.3g}")
    min_eig = float(eigenvalues[0])
    if min_eig < -POSITIVITY_TOL:
        messages.append(f"minimum eigenvalue {min_eig:.6g} is negative")
    return StateValidity(
        valid=not messages,
        min_eigenvalue=min_eig,
        trace_error=trace_error,
        messages=tuple(messages),
    )


def validate_effect(c: CoefficientVector, basis: OperatorBasis | None = None) -> EffectValidity:
    """Report the eigenvalue range of an effect and flag von Neumann projections."""
    matrix = reconstruct_matrix(c, basis)
    eigenvalues = np.linalg.eigvalsh(matrix)
    min_eig = float(eigenvalues[0])
    max_eig = float(eigenvalues[-1])
    messages = []
    if c.kind != EFFECT:
        messages.append(f"vector is tagged {c.kind!r}, not 'effect'")
    if min_eig < -POSITIVITY_TOL:
        messages.append(f"minimum eigenvalue {min_eig:.6g} below 0")
    if max_eig > 1.0 + POSITIVITY_TOL:
        messages.append(f"maximum eigenvalue {max_eig:.6g} above 1")
    near_binary = np.minimum(np.abs(eigenvalues), np.abs(eigenvalues - 1.0))
    von_neumann = bool(near_binary.max() <= VON_NEUMANN_TOL)
    rank = int(np.sum(eigenvalues > 0.5)) if von_neumann else None
    return EffectValidity(
        valid=not messages,
        min_eigenvalue=min_eig,
        max_eigenvalue=max_eig,
        von_neumann=von_neumann and not messages,
        rank=rank if not messages else rank,
        messages=tuple(messages),
    )


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    """Purity and eigenvalue multiplicity of a state.

    ``min_multiplicity`` is the number of nonzero eigenvalues for a spectrum
    that is flat on its support, and the multiplicity of the largest
    eigenvalue otherwise (the flat case coincides with that reading).
    """

    purity: float
    min_multiplicity: int
    eigenvalues: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))


def spectral_summary(state: CoefficientVector, basis: OperatorBasis | None = None) -> SpectralSummary:
    """Purity sum(mu^2) and the multiplicity governing the information bound."""
    report = validate_state(state, basis)
    if not report.valid:
        raise InvalidStateError("; ".join(report.messages))
    eigenvalues = np.linalg.eigvalsh(reconstruct_matrix(state, basis))[::-1]
    purity = float(eigenvalues @ eigenvalues)
    multiplicity = int(np.sum(eigenvalues > eigenvalues[0] - POSITIVITY_TOL))
    if purity > 1.0 / multiplicity + POSITIVITY_TOL:
        raise InvalidStateError(
            f"purity {purity:.12g} exceeds 1/K = {1.0 / multiplicity:.12g}"
        )
    return SpectralSummary(
        purity=purity, min_multiplicity=multiplicity, eigenvalues=eigenvalues
    )


# --- subalgebra decompositions ---------------------------------------------

#: Known block kind tags.  "Ck" marks a commutative block whose subalgebra is
#: isomorphic to C^k, "Mm" a full matrix algebra M_m; the tag fixes the
#: subalgebra dimension s (k resp. m^2) and the state multiplicity n/k resp.
#: n/m inside the block.
def _kind_dimension(kind: str) -> int:
    family, size = kind[0], int(kind[1:])
    if family == "C":
        return size
    if family == "M":
        return size * size
    raise ValueError(f"unknown block kind {kind!r}; use e.g. 'C2' or 'M2'")


@dataclass(frozen=True, eq=False)
class SubalgebraDecomposition:
    """Partition of the traceless basis indices into complementary subalgebras.

    Each block, together with index 0, spans one subalgebra; blocks of a
    valid decomposition are disjoint, jointly cover 1..n^2-1, and each span
    is closed under matrix multiplication (checked numerically by
    :func:`validate_decomposition`, not on construction).
    """

    dim: int
    blocks: tuple[tuple[int, ...], ...]
    kinds: tuple[str | None, ...] | None = None

    def __post_init__(self):
        blocks = tuple(tuple(int(i) for i in block) for block in self.blocks)
        if not blocks:
            raise ValueError("decomposition needs at least one block")
        kinds = self.kinds
        if kinds is None:
            kinds = (None,) * len(blocks)
        kinds = tuple(kinds)
        if len(kinds) != len(blocks):
            raise ValueError("one kind tag (or None) per block required")
        for kind in kinds:
            if kind is not None:
                _kind_dimension(kind)
        size = self.dim * self.dim
        seen = set()
        for block in blocks:
            if not block:
                raise ValueError("blocks must be non-empty")
            for idx in block:
                if not 1 <= idx < size:
                    raise ValueError(f"index {idx} outside 1..{size - 1}")
                if idx in seen:
                    raise ValueError(f"index {idx} appears in more than one block")
                seen.add(idx)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "kinds", kinds)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_assignments(self) -> np.ndarray:
        """Array mapping basis index i >= 1 to its block; entry 0 is -1."""
        assignments = np.full(self.dim * self.dim, -1, dtype=int)
        for b, block in enumerate(self.blocks):
            assignments[list(block)] = b
        return assignments


def qubit_decomposition() -> SubalgebraDecomposition:
    """The three single-axis blocks of the qubit Pauli basis."""
    return SubalgebraDecomposition(dim=2, blocks=((1,), (2,), (3,)), kinds=("C2",) * 3)


def singleton_decomposition(dim: int) -> SubalgebraDecomposition:
    """One block per traceless basis element; every subalgebra is a C^2 copy."""
    size = dim * dim
    return SubalgebraDecomposition(
        dim=dim,
        blocks=tuple((i,) for i in range(1, size)),
        kinds=("C2",) * (size - 1),
    )


def m4_mixed_decomposition() -> SubalgebraDecomposition:
    """Five-block split of the two-qubit basis: two M2 and three C^4 algebras.

    Tensor factor labels (a, b) map to index 4a + b; the first two blocks
    hold the single-factor Paulis, the other three the diagonal pairings.
    """
    return SubalgebraDecomposition(
        dim=4,
        blocks=(
            (1, 2, 3),      # sigma_0 x sigma_i
            (4, 8, 12),     # sigma_i x sigma_0
            (5, 10, 15),    # sigma_i x sigma_i
            (6, 11, 13),    # sigma_1 x sigma_2, sigma_2 x sigma_3, sigma_3 x sigma_1
            (7, 9, 14),     # sigma_1 x sigma_3, sigma_2 x sigma_1, sigma_3 x sigma_2
        ),
        kinds=("M2", "M2", "C4", "C4", "C4"),
    )


@dataclass(frozen=True)
class DecompositionValidity:
    valid: bool
    disjoint: bool
    covers: bool
    orthogonal: bool
    closed: bool
    counting_ok: bool
    uniform_dim: int | None
    messages: tuple[str, ...] = ()


def validate_decomposition(
    d: SubalgebraDecomposition, basis: OperatorBasis | None = None
) -> DecompositionValidity:
    """Check disjointness, coverage, cross-block orthogonality, closure of each
    block-plus-identity span under products, and the dimension count
    (s-1) N_s = n^2 - 1 when all subalgebras share dimension s."""
    if basis is None:
        basis = canonical_basis(d.dim)
    if basis.dim != d.dim:
        raise DimensionMismatchError("decomposition and basis dimensions differ")
    n = d.dim
    size = n * n
    messages = []

    flat = [idx for block in d.blocks for idx in block]
    disjoint = len(flat) == len(set(flat))
    if not disjoint:
        messages.append("blocks overlap")
    covers = set(flat) == set(range(1, size))
    if not covers:
        missing = sorted(set(range(1, size)) - set(flat))
        messages.append(f"indices not covered by any block: {missing}")

    # Traceless parts of distinct blocks must be orthogonal under Tr(A B).
    orthogonal = True
    for b1 in range(d.n_blocks):
        for b2 in range(b1 + 1, d.n_blocks):
            for i in d.blocks[b1]:
                for j in d.blocks[b2]:
                    overlap = np.trace(basis.elements[i] @ basis.elements[j]).real
                    if abs(overlap) > CLOSURE_TOL:
                        orthogonal = False
    if not orthogonal:
        messages.append("traceless parts of distinct blocks are not orthogonal")

    # Each block + identity must span an algebra: pairwise products project
    # back into the span (complex coefficients) with small residual.
    closed = True
    for block in d.blocks:
        span = basis.elements[[0, *block]]
        for a in span:
            for b in span:
                prod = a @ b
                coeffs = np.einsum("kab,ba->k", span, prod)
                residual = prod - np.tensordot(coeffs, span, axes=1)
                if np.abs(residual).max() > CLOSURE_TOL:
                    closed = False
    if not closed:
        messages.append("some block span is not closed under matrix products")

    sizes = {len(block) for block in d.blocks}
    uniform_dim = (sizes.pop() + 1) if len(sizes) == 1 else None
    counting_ok = True
    if uniform_dim is not None:
        counting_ok = (uniform_dim - 1) * d.n_blocks == size - 1
        if not counting_ok:
            messages.append(
                f"(s-1) N_s = {(uniform_dim - 1) * d.n_blocks} != n^2-1 = {size - 1}"
            )

    if d.kinds is not None:
        for b, kind in enumerate(d.kinds):
            if kind is not None and _kind_dimension(kind) != len(d.blocks[b]) + 1:
                messages.append(
                    f"block {b} tagged {kind} but spans dimension {len(d.blocks[b]) + 1}"
                )

    return DecompositionValidity(
        valid=not messages,
        disjoint=disjoint,
        covers=covers,
        orthogonal=orthogonal,
        closed=closed,
        counting_ok=counting_ok,
        uniform_dim=uniform_dim,
        messages=tuple(messages),
    )
