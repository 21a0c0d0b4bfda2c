import math

import numpy as np
import pytest

from paulitomo import basis, channel
from paulitomo.errors import DimensionMismatchError, InvalidStateError


def random_cptp_lambdas(rng):
    """Rejection-sample qubit contraction vectors satisfying the CP inequalities."""
    while True:
        lam = rng.uniform(-1, 1, size=3)
        if channel.validate_cptp(lam, 2).valid:
            return lam


def test_affine_matrix_diagonal_for_zero_angles():
    ch = channel.QubitPauliChannel.diagonal([0.75, 0.5, 0.25])
    np.testing.assert_allclose(
        channel.qubit_affine_matrix(ch).entries, np.diag([0.75, 0.5, 0.25]), atol=1e-15
    )


def test_affine_matrix_isotropic_commutes_with_rotation():
    ch = channel.QubitPauliChannel(lambdas=[0.3, 0.3, 0.3], angles=[0.7, -1.1, 0.4])
    np.testing.assert_allclose(
        channel.qubit_affine_matrix(ch).entries, 0.3 * np.eye(3), atol=1e-12
    )


def test_affine_matrix_identity_channel():
    ch = channel.QubitPauliChannel(lambdas=[1.0, 1.0, 1.0], angles=[0.2, 0.9, -0.5])
    np.testing.assert_allclose(channel.qubit_affine_matrix(ch).entries, np.eye(3), atol=1e-12)


def test_affine_matrix_symmetric_with_lambda_spectrum():
    rng = np.random.default_rng(21)
    for _ in range(50):
        lam = np.sort(rng.uniform(-1, 1, size=3))[::-1]
        ch = channel.QubitPauliChannel(lambdas=lam, angles=rng.uniform(-np.pi, np.pi, size=3))
        a = channel.qubit_affine_matrix(ch).entries
        np.testing.assert_allclose(a, a.T, atol=1e-12)
        np.testing.assert_allclose(np.linalg.eigvalsh(a)[::-1], lam, atol=1e-12)


def test_apply_qubit_cases():
    identity = channel.QubitPauliChannel.diagonal([1.0, 1.0, 1.0])
    theta = np.array([0.2, -0.4, 0.5])
    np.testing.assert_allclose(channel.apply_qubit(identity, theta), theta, atol=1e-15)

    ch = channel.QubitPauliChannel.diagonal([0.75, 0.5, 0.25])
    theta = np.ones(3) / math.sqrt(3)
    np.testing.assert_allclose(
        channel.apply_qubit(ch, theta), np.array([0.75, 0.5, 0.25]) / math.sqrt(3), atol=1e-15
    )

    depolarizing = channel.QubitPauliChannel.diagonal([0.0, 0.0, 0.0])
    np.testing.assert_allclose(channel.apply_qubit(depolarizing, theta), np.zeros(3), atol=1e-15)

    with pytest.raises(InvalidStateError):
        channel.apply_qubit(identity, [1.2, 0.0, 0.0])


def test_physical_channels_contract():
    rng = np.random.default_rng(9)
    lam = random_cptp_lambdas(rng)
    ch = channel.QubitPauliChannel(lambdas=lam, angles=rng.uniform(-np.pi, np.pi, size=3))
    a = channel.qubit_affine_matrix(ch).entries
    for _ in range(1000):
        theta = rng.normal(size=3)
        theta *= rng.uniform(0, 1) / np.linalg.norm(theta)
        assert np.linalg.norm(a @ theta) <= np.linalg.norm(theta) + 1e-12


def test_validate_cptp_identity():
    assert channel.validate_cptp([1.0, 1.0, 1.0], 2).valid


def test_validate_cptp_transpose_like_map_invalid():
    report = channel.validate_cptp([1.0, 1.0, -1.0], 2)
    assert not report.valid
    assert any("< sum(lambda)" in v for v in report.violations)


def test_validate_cptp_boundary_case():
    # 1 + 2*(1/4) = 1.5 equals sum(lambda): on the CP boundary, still valid.
    assert channel.validate_cptp([0.75, 0.5, 0.25], 2).valid
    assert not channel.validate_cptp([0.75, 0.5, 0.25 - 1e-9], 2).valid


def test_conditional_expectation_fixes_block_members():
    d = basis.m4_mixed_decomposition()
    b = basis.build_tensor_pauli_basis(2)
    member = b.elements[5] + 2.0 * b.elements[10]
    np.testing.assert_allclose(
        channel.conditional_expectation(d, 2, member, b), member, atol=1e-12
    )


def test_conditional_expectation_kills_other_blocks():
    d = basis.m4_mixed_decomposition()
    b = basis.build_tensor_pauli_basis(2)
    foreign = b.elements[4]  # lives in block 1
    np.testing.assert_allclose(
        channel.conditional_expectation(d, 0, foreign, b), np.zeros((4, 4)), atol=1e-12
    )


def test_conditional_expectation_idempotent_and_trace_preserving():
    rng = np.random.default_rng(2)
    d = basis.m4_mixed_decomposition()
    b = basis.build_tensor_pauli_basis(2)
    for _ in range(10):
        raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        matrix = raw + raw.conj().T
        for i in range(d.n_blocks):
            once = channel.conditional_expectation(d, i, matrix, b)
            twice = channel.conditional_expectation(d, i, once, b)
            np.testing.assert_allclose(twice, once, atol=1e-12)
            assert np.trace(once).real == pytest.approx(np.trace(matrix).real, abs=1e-12)


def test_conditional_expectation_block_range():
    d = basis.qubit_decomposition()
    with pytest.raises(IndexError):
        channel.conditional_expectation(d, 3, np.eye(2))


@pytest.mark.parametrize(
    "decomposition", [basis.singleton_decomposition(4), basis.m4_mixed_decomposition()]
)
def test_generalized_channel_identity_and_depolarizing(decomposition):
    rng = np.random.default_rng(4)
    raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    matrix = raw + raw.conj().T

    identity = channel.GeneralizedPauliChannel(
        decomposition=decomposition, lambdas=np.ones(decomposition.n_blocks)
    )
    np.testing.assert_allclose(channel.apply_generalized(identity, matrix), matrix, atol=1e-12)

    depolarizing = channel.GeneralizedPauliChannel(
        decomposition=decomposition, lambdas=np.zeros(decomposition.n_blocks)
    )
    np.testing.assert_allclose(
        channel.apply_generalized(depolarizing, matrix),
        (np.trace(matrix) / 4) * np.eye(4),
        atol=1e-12,
    )


@pytest.mark.parametrize(
    "decomposition", [basis.singleton_decomposition(4), basis.m4_mixed_decomposition()]
)
def test_matrix_and_coefficient_actions_agree(decomposition):
    rng = np.random.default_rng(6)
    b = basis.build_tensor_pauli_basis(2)
    for _ in range(10):
        lam = rng.uniform(0, 1, size=decomposition.n_blocks)
        ch = channel.GeneralizedPauliChannel(decomposition=decomposition, lambdas=lam)
        weights = rng.dirichlet(np.ones(4))
        raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, _ = np.linalg.qr(raw)
        rho = q @ np.diag(weights) @ q.conj().T
        state = basis.project_coefficients(rho, b)

        via_matrix = channel.apply_generalized(ch, rho, b)
        via_coeffs = basis.reconstruct_matrix(channel.apply_generalized_coeffs(ch, state), b)
        np.testing.assert_allclose(via_matrix, via_coeffs, atol=1e-12)
        assert np.trace(via_matrix).real == pytest.approx(1.0, abs=1e-12)


def test_apply_generalized_coeffs_examples():
    d = basis.singleton_decomposition(4)
    rng = np.random.default_rng(8)
    coeffs = np.concatenate(([1.0 / 2.0], rng.uniform(-0.1, 0.1, size=15)))
    state = basis.state_vector(coeffs, dim=4)

    halved = channel.apply_generalized_coeffs(
        channel.GeneralizedPauliChannel(decomposition=d, lambdas=np.full(15, 0.5)), state
    )
    np.testing.assert_allclose(halved.traceless, state.traceless * 0.5, atol=1e-15)
    assert halved.m0 == state.m0

    unchanged = channel.apply_generalized_coeffs(
        channel.GeneralizedPauliChannel(decomposition=d, lambdas=np.ones(15)), state
    )
    np.testing.assert_allclose(unchanged.coeffs, state.coeffs, atol=1e-15)

    d_mixed = basis.m4_mixed_decomposition()
    lam = np.array([0.9, 0.8, 0.3, 0.6, 0.5])
    support = np.zeros(16)
    support[0] = 0.5
    support[5] = 0.07  # index 5 lives in block 2 of the mixed decomposition
    state3 = basis.state_vector(support, dim=4)
    scaled = channel.apply_generalized_coeffs(
        channel.GeneralizedPauliChannel(decomposition=d_mixed, lambdas=lam), state3
    )
    assert scaled.coeffs[5] == pytest.approx(0.07 * 0.3, abs=1e-15)


def test_output_probability_qubit_von_neumann():
    ch = channel.QubitPauliChannel.diagonal([0.75, 0.5, 0.25])
    state = basis.bloch_qubit_state([1.0, 0.0, 0.0])
    effect = basis.bloch_qubit_effect([1.0, 0.0, 0.0])
    assert channel.output_probability(ch, state, effect) == pytest.approx(0.875, abs=1e-12)


def test_output_probability_identity_effect_and_mixed_input():
    d = basis.m4_mixed_decomposition()
    ch = channel.GeneralizedPauliChannel(decomposition=d, lambdas=[0.9, 0.7, 0.5, 0.3, 0.1])
    identity_effect = basis.effect_vector(np.concatenate(([2.0], np.zeros(15))), dim=4)
    rng = np.random.default_rng(13)
    coeffs = np.concatenate(([0.5], rng.uniform(-0.05, 0.05, size=15)))
    state = basis.state_vector(coeffs, dim=4)
    assert channel.output_probability(ch, state, identity_effect) == pytest.approx(1.0, abs=1e-12)

    mixed = basis.state_vector(np.concatenate(([0.5], np.zeros(15))), dim=4)
    effect = basis.effect_vector(np.concatenate(([1.2], rng.uniform(-0.1, 0.1, size=15))), dim=4)
    assert channel.output_probability(ch, mixed, effect) == pytest.approx(
        1.2 / 2.0, abs=1e-12
    )


def test_output_probability_matches_matrix_path():
    rng = np.random.default_rng(17)
    b = basis.build_tensor_pauli_basis(2)
    for d in (basis.singleton_decomposition(4), basis.m4_mixed_decomposition()):
        lam = rng.uniform(0, 1, size=d.n_blocks)
        ch = channel.GeneralizedPauliChannel(decomposition=d, lambdas=lam)
        weights = rng.dirichlet(np.ones(4))
        raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, _ = np.linalg.qr(raw)
        rho = q @ np.diag(weights) @ q.conj().T
        state = basis.project_coefficients(rho, b)
        effect = basis.project_coefficients(np.eye(4) / 2 + b.elements[5], b, kind=basis.EFFECT)

        direct = channel.output_probability(ch, state, effect)
        via_matrix = np.trace(
            channel.apply_generalized(ch, rho, b) @ basis.reconstruct_matrix(effect, b)
        ).real
        assert direct == pytest.approx(via_matrix, abs=1e-12)


def test_output_probability_qubit_matches_applied_state():
    rng = np.random.default_rng(19)
    for _ in range(20):
        lam = random_cptp_lambdas(rng)
        ch = channel.QubitPauliChannel(lambdas=lam, angles=rng.uniform(-np.pi, np.pi, size=3))
        theta = rng.normal(size=3)
        theta *= rng.uniform(0, 1) / np.linalg.norm(theta)
        m = rng.normal(size=3)
        m /= np.linalg.norm(m)
        state = basis.bloch_qubit_state(theta)
        effect = basis.bloch_qubit_effect(m)
        moved = basis.bloch_qubit_state(channel.apply_qubit(ch, theta))
        assert channel.output_probability(ch, state, effect) == pytest.approx(
            basis.measurement_probability(moved, effect), abs=1e-12
        )


def test_positivity_preserved_empirically():
    rng = np.random.default_rng(23)
    lam = random_cptp_lambdas(rng)
    ch = channel.QubitPauliChannel(lambdas=lam, angles=rng.uniform(-np.pi, np.pi, size=3))
    a = channel.qubit_affine_matrix(ch).entries
    for _ in range(1000):
        theta = rng.normal(size=3)
        theta *= rng.uniform(0, 1) ** (1 / 3) / np.linalg.norm(theta)
        out = basis.reconstruct_matrix(basis.bloch_qubit_state(a @ theta))
        assert np.linalg.eigvalsh(out)[0] >= -1e-9


def test_generalized_validate_notes_mixed_blocks():
    mixed = channel.GeneralizedPauliChannel(
        decomposition=basis.SubalgebraDecomposition(dim=2, blocks=((1, 2), (3,))),
        lambdas=[0.5, 0.5],
    )
    report = mixed.validate()
    assert report.notes
    uniform = channel.GeneralizedPauliChannel(
        decomposition=basis.qubit_decomposition(), lambdas=[0.5, 0.5, 0.5]
    )
    assert not uniform.validate().notes


def test_channel_constructor_guards():
    with pytest.raises(ValueError):
        channel.QubitPauliChannel.diagonal([1.5, 0.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        channel.GeneralizedPauliChannel(
            decomposition=basis.qubit_decomposition(), lambdas=[0.5, 0.5]
        )
