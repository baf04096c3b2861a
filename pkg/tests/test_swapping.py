import numpy as np
import pytest
from ghzphotonics.quantum import random_density_matrix, basis_state, bell_state, BELL_KINDS
from ghzphotonics.noise import white_noise
from ghzphotonics.circuit import Circuit, input_state
from ghzphotonics.tomography import generate_settings, simulate_counts, expected_counts, TomographySetting
from ghzphotonics.swapping import (BsmConfig, bsm_outcome_map, bell_projection_probabilities, swap_analyze,
                                   swap_from_tomography)


def test_outcome_map():
    assert bsm_outcome_map("phi_pair") == {"++": "phi+", "--": "phi+", "+-": "phi-", "-+": "phi-"}
    assert set(bsm_outcome_map("psi_pair").values()) == {"psi+", "psi-"}
    with pytest.raises(ValueError):
        BsmConfig("chi_pair")


@pytest.mark.parametrize("pair", ["phi_pair", "psi_pair"])
def test_ideal_input_swapping(pair):
    report = swap_analyze(input_state(), pair)
    assert set(report.outcomes) == set(BsmConfig(pair).bell_states)
    for outcome in report.outcomes.values():
        assert outcome.probability == pytest.approx(0.25, abs=1e-12)
        assert outcome.fidelity == pytest.approx(1, abs=1e-12)
    assert report.average_fidelity == pytest.approx(1, abs=1e-12)


def test_bell_probabilities_complete(rng):
    for _ in range(10):
        probabilities = bell_projection_probabilities(random_density_matrix(4, rng))
        assert set(probabilities) == set(BELL_KINDS)
        assert sum(probabilities.values()) == pytest.approx(1, abs=1e-12)


def test_absent_outcomes(ghz):
    report = swap_analyze(ghz, "psi_pair")
    assert all(not outcome.present for outcome in report.outcomes.values())
    assert all(outcome.probability == 0 for outcome in report.outcomes.values())
    assert report.average_fidelity is None
    phi = swap_analyze(ghz, "phi_pair")
    assert phi.outcomes["phi+"].probability == pytest.approx(0.5, abs=1e-12)
    assert phi.average_fidelity == pytest.approx(1, abs=1e-12)


def project_middle_pair(rho, bell):
    """Bell projection of qubits 1 and 2 by explicit Kronecker products."""
    b = bell_state(bell).amplitudes
    projector = np.kron(np.kron(np.eye(2), np.outer(b, b.conj())), np.eye(2))
    projected = projector @ rho.entries @ projector
    probability = np.trace(projected).real
    reduced = np.einsum("abcdxbcy->adxy", projected.reshape([2] * 8)).reshape(4, 4) / probability
    return probability, np.vdot(b, reduced @ b).real


def test_noisy_input_matches_explicit_projection():
    rho = white_noise(input_state().density_matrix(), 0.9)
    report = swap_analyze(rho, "phi_pair")
    expected = [project_middle_pair(rho, bell) for bell in ("phi+", "phi-")]
    for (probability, fidelity_), bell in zip(expected, ("phi+", "phi-")):
        assert report.outcomes[bell].probability == pytest.approx(probability, abs=1e-10)
        assert report.outcomes[bell].fidelity == pytest.approx(fidelity_, abs=1e-10)
    assert report.average_fidelity == pytest.approx(np.mean([f for _, f in expected]), abs=1e-10)


def test_product_input_swapping():
    hhhh = basis_state("0000")
    report = swap_analyze(hhhh, "phi_pair")
    for bell in ("phi+", "phi-"):
        probability, fidelity_ = project_middle_pair(hhhh.density_matrix(), bell)
        assert report.outcomes[bell].probability == pytest.approx(probability, abs=1e-12)
        assert report.outcomes[bell].probability == pytest.approx(0.5, abs=1e-12)
        assert report.outcomes[bell].fidelity == pytest.approx(0.5, abs=1e-12)


def test_swapping_needs_four_qubits():
    with pytest.raises(ValueError):
        swap_analyze(random_density_matrix(3, np.random.default_rng(0)))


@pytest.mark.parametrize("pair", ["phi_pair", "psi_pair"])
def test_swap_from_exact_counts(pair):
    rho, _ = Circuit("ideal").state(discrimination_pair=pair)
    dataset = expected_counts(rho, generate_settings(4), 0.42, 267)
    report = swap_from_tomography(dataset, pair)
    for outcome in report.outcomes.values():
        assert outcome.present
        assert outcome.probability == pytest.approx(0.5, abs=1e-9)
        assert outcome.fidelity >= 0.999


def test_swap_from_simulated_counts(calibrated_state):
    dataset = simulate_counts(calibrated_state, generate_settings(4), 0.42, 267, seed=21)
    report = swap_from_tomography(dataset, "phi_pair")
    assert 0.9 <= report.average_fidelity <= 1.0
    dictionary = report.to_dict()
    assert dictionary["discrimination_pair"] == "phi_pair"
    assert dictionary["outcomes"]["phi+"]["counts"] > 50


def test_low_statistics_partition(calibrated_state):
    dataset = simulate_counts(calibrated_state, generate_settings(4), 0.42, 267, seed=21)
    with pytest.warns(UserWarning):
        report = swap_from_tomography(dataset, "phi_pair", min_counts=10 ** 6)
    assert all(outcome.low_statistics for outcome in report.outcomes.values())
    assert report.average_fidelity is None


def test_swap_from_tomography_errors(ghz):
    dataset = expected_counts(ghz, [TomographySetting("ZZZZ")], 1.0, 10)
    with pytest.raises(ValueError):
        swap_from_tomography(dataset)
    small = expected_counts(random_density_matrix(3, np.random.default_rng(1)), generate_settings(3), 1.0, 10)
    with pytest.raises(ValueError):
        swap_from_tomography(small)
