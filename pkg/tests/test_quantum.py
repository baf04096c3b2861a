import numpy as np
import pytest
from ghzphotonics.quantum import (StateVector, Operator, DensityMatrix, MeasurementProjector,
                                  IncompatibleProjectionError, tensor, basis_state, ghz_state, bell_state, pauli,
                                  fidelity, expectation, embed, partial_trace, project_and_renormalize,
                                  projector_xz, random_density_matrix, random_state_vector, permute_qubits,
                                  BELL_KINDS)


def test_ghz_amplitudes():
    state = ghz_state(4)
    assert state.n_qubits == 4
    assert state.amplitudes[0] == pytest.approx(1 / np.sqrt(2))
    assert state.amplitudes[15] == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(state.amplitudes) == 2
    assert state.norm == pytest.approx(1, abs=1e-12)


def test_ghz_phase():
    state = ghz_state(3, phase=np.pi / 2)
    assert state.amplitudes[-1] == pytest.approx(1j / np.sqrt(2))
    with pytest.raises(ValueError):
        ghz_state(1)


def test_tensor_of_bell_pairs():
    state = tensor([bell_state("phi+"), bell_state("phi+")])
    assert state.n_qubits == 4
    for bits in ("0000", "0011", "1100", "1111"):
        assert abs(state.amplitudes[int(bits, 2)]) == pytest.approx(0.5)
    assert abs(state.inner(tensor([basis_state("00"), basis_state("11")]))) == pytest.approx(0.5)


def test_tensor_rejects_mixed_factors():
    with pytest.raises(ValueError):
        tensor([bell_state("phi+"), Operator(np.eye(2))])
    with pytest.raises(ValueError):
        tensor([])


def test_bell_states_orthonormal():
    states = [bell_state(kind) for kind in BELL_KINDS]
    gram = np.array([[a.inner(b) for b in states] for a in states])
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-12)
    with pytest.raises(ValueError):
        bell_state("chi+")


def test_dimension_checks():
    with pytest.raises(ValueError):
        StateVector(np.ones(3))
    with pytest.raises(ValueError):
        StateVector(np.ones(4), n_qubits=3)
    with pytest.raises(ValueError):
        Operator(np.ones((2, 3)))
    with pytest.raises(ValueError):
        fidelity(ghz_state(3).density_matrix(), ghz_state(4))


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.0, 1.0]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 1], [0, 0.5]]))
    mixed = DensityMatrix.maximally_mixed(2)
    assert mixed.purity() == pytest.approx(0.25)


def test_pure_state_properties(ghz):
    assert ghz.purity() == pytest.approx(1, abs=1e-12)
    assert fidelity(ghz, ghz_state(4)) == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(ghz.eigenvalues()[-1], 1, atol=1e-12)


def test_pauli_expectations(ghz):
    assert expectation(ghz, pauli("XXXX")) == pytest.approx(1, abs=1e-12)
    assert expectation(ghz, pauli("ZZII")) == pytest.approx(1, abs=1e-12)
    assert expectation(ghz, pauli("ZIII")) == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        pauli("XQ")
    with pytest.raises(ValueError):
        expectation(ghz, Operator(np.triu(np.ones((16, 16)))))


def test_embed_matches_kron():
    z = pauli("Z").entries
    full = embed(z, [2], 4).entries
    np.testing.assert_allclose(full, np.kron(np.kron(np.eye(4), z), np.eye(2)), atol=1e-12)
    cnot = np.eye(4)[[0, 1, 3, 2]]
    # reversed subset swaps control and target
    swapped = embed(cnot, [1, 0], 2).entries
    np.testing.assert_allclose(swapped, np.eye(4)[[0, 3, 2, 1]], atol=1e-12)
    with pytest.raises(ValueError):
        embed(z, [4], 4)
    with pytest.raises(ValueError):
        embed(cnot, [1, 1], 4)


def test_partial_trace_of_ghz(ghz):
    reduced = partial_trace(ghz, [0, 3])
    np.testing.assert_allclose(reduced.entries, np.diag([0.5, 0, 0, 0.5]), atol=1e-12)
    single = ghz.partial_trace([2])
    np.testing.assert_allclose(single.entries, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_product_state(rng):
    first = random_density_matrix(1, rng)
    second = random_density_matrix(2, rng)
    product = tensor([first, second])
    np.testing.assert_allclose(partial_trace(product, [0]).entries, first.entries, atol=1e-12)
    np.testing.assert_allclose(partial_trace(product, [1, 2]).entries, second.entries, atol=1e-12)


def test_project_and_renormalize(ghz):
    projector = basis_state("00").density_matrix()
    rho, probability = project_and_renormalize(ghz, projector, [1, 2], trace_out=True)
    assert probability == pytest.approx(0.5)
    np.testing.assert_allclose(rho.entries, basis_state("00").density_matrix().entries, atol=1e-12)


def test_incompatible_projection():
    state = basis_state("0000").density_matrix()
    with pytest.raises(IncompatibleProjectionError):
        project_and_renormalize(state, basis_state("1").density_matrix(), [0])
    with pytest.raises(ValueError):
        project_and_renormalize(state, np.array([[1, 1], [0, 0]]), [0])


def test_projector_xz():
    projector = projector_xz(np.pi / 3)
    np.testing.assert_allclose(projector.entries @ projector.entries, projector.entries, atol=1e-12)
    complement = projector.orthocomplement()
    np.testing.assert_allclose(projector.entries + complement.entries, np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        projector_xz(np.inf)


def test_pauli_projectors():
    plus = MeasurementProjector.pauli("X")
    minus = plus.orthocomplement()
    np.testing.assert_allclose(plus.entries - minus.entries, pauli("X").entries, atol=1e-12)
    with pytest.raises(ValueError):
        MeasurementProjector.pauli("W")


def test_random_states_are_physical(rng):
    rho = random_density_matrix(3, rng, rank=2)
    assert np.trace(rho.entries).real == pytest.approx(1, abs=1e-12)
    assert np.sum(rho.eigenvalues() > 1e-10) == 2
    state = random_state_vector(3, rng)
    assert state.norm == pytest.approx(1, abs=1e-12)


def test_permute_qubits(rng):
    first, second = random_density_matrix(1, rng), random_density_matrix(1, rng)
    swapped = permute_qubits(tensor([first, second]), [1, 0])
    np.testing.assert_allclose(swapped.entries, tensor([second, first]).entries, atol=1e-12)
    with pytest.raises(ValueError):
        permute_qubits(tensor([first, second]), [0, 0])


def test_json_dicts():
    state = ghz_state(2, phase=0.3)
    assert StateVector.from_dict(state.to_dict()).allclose(state)
    rho = state.density_matrix()
    assert DensityMatrix.from_dict(rho.to_dict()).allclose(rho)
