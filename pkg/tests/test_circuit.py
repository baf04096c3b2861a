import numpy as np
import pytest
from ghzphotonics.quantum import ghz_state, basis_state, bell_state, fidelity, tensor, StateVector
from ghzphotonics.noise import noisy_epr_pair
from ghzphotonics.circuit import (Circuit, get_component, epr_pair, sandwich_source_raw, apply_waveplate, input_state,
                                  pbs_parity_check, pbs_parity_check_density, generate_ghz_pipeline)
from ghzphotonics.components.sources import EPRSource, SandwichSource
from ghzphotonics.components.waveplates import WavePlate, HalfWavePlate, QuarterWavePlate, PhasePlate
from ghzphotonics.components.beam_splitters import (PolarizingBeamSplitter, PostselectionRule, PostselectionError,
                                                    PARITY_PROJECTOR)


def test_pair_sources():
    assert epr_pair().allclose(bell_state("phi+"))
    assert sandwich_source_raw().allclose(bell_state("psi-"))
    assert fidelity(EPRSource(0.99).density_matrix(), bell_state("phi+")) == pytest.approx(0.9925)
    np.testing.assert_allclose(EPRSource(0.9).density_matrix().entries, noisy_epr_pair(0.9).entries)
    np.testing.assert_allclose(SandwichSource(0.9).density_matrix().entries, noisy_epr_pair(0.9, "psi-").entries)
    with pytest.raises(ValueError):
        EPRSource(1.5)


def test_half_wave_plate_rotates_polarization():
    diagonal = HalfWavePlate(22.5).apply(basis_state("0"), 0)
    np.testing.assert_allclose(diagonal.amplitudes, np.array([1, 1]) / np.sqrt(2), atol=1e-12)
    flipped = HalfWavePlate(45).apply(basis_state("0"), 0)
    np.testing.assert_allclose(np.abs(flipped.amplitudes), [0, 1], atol=1e-12)


@pytest.mark.parametrize("plate", [HalfWavePlate(10), QuarterWavePlate(33), WavePlate("quarter", 0.4)])
def test_wave_plates_are_unitary(plate):
    assert plate.is_unitary()
    assert plate.operator().allclose(plate.jones)


def test_wave_plate_errors():
    with pytest.raises(ValueError):
        WavePlate("third")
    with pytest.raises(ValueError):
        HalfWavePlate(np.nan)


def test_phase_plate():
    np.testing.assert_allclose(PhasePlate(90, degrees=True).jones, np.diag([1, 1j]), atol=1e-12)
    state = PhasePlate(np.pi).apply(ghz_state(4), 0)
    assert state.allclose(ghz_state(4, phase=np.pi))


def test_apply_waveplate_on_one_qubit():
    state = apply_waveplate(basis_state("00"), HalfWavePlate(45), 1)
    assert abs(state.inner(basis_state("01"))) == pytest.approx(1)


def test_parity_check_produces_ghz():
    state, probability = pbs_parity_check(input_state())
    assert probability == pytest.approx(0.5, abs=1e-12)
    assert abs(state.inner(ghz_state(4))) == pytest.approx(1, abs=1e-12)


def test_parity_check_density_matches_pure():
    rho, probability = pbs_parity_check_density(input_state().density_matrix())
    assert probability == pytest.approx(0.5, abs=1e-12)
    assert fidelity(rho, ghz_state(4)) == pytest.approx(1, abs=1e-12)


def test_parity_check_brute_force(rng):
    parity = np.kron(np.kron(np.eye(2), PARITY_PROJECTOR), np.eye(2))
    for _ in range(20):
        amplitudes = rng.normal(size=16) + 1j * rng.normal(size=16)
        state = StateVector(amplitudes / np.linalg.norm(amplitudes))
        _, probability = pbs_parity_check(state)
        expected = np.real(np.vdot(state.amplitudes, parity @ state.amplitudes))
        assert probability == pytest.approx(expected, abs=1e-12)


def test_postselection_failure():
    with pytest.raises(PostselectionError):
        pbs_parity_check(basis_state("0100"))
    with pytest.raises(PostselectionError):
        pbs_parity_check_density(basis_state("0010").density_matrix())
    with pytest.raises(ValueError):
        pbs_parity_check(basis_state("010"))


def test_beam_splitter_configuration():
    with pytest.raises(ValueError):
        PolarizingBeamSplitter((1, 1))
    with pytest.raises(ValueError):
        PostselectionRule(("1", "1", "3'", "4"))
    assert PostselectionRule().n_photons == 4


def test_pipeline_ideal_and_phase():
    assert fidelity(generate_ghz_pipeline(), ghz_state(4)) == pytest.approx(1, abs=1e-12)
    assert fidelity(generate_ghz_pipeline(phase=0.7), ghz_state(4, phase=0.7)) == pytest.approx(1, abs=1e-12)
    assert fidelity(generate_ghz_pipeline(0.9), ghz_state(4)) == pytest.approx(0.95, abs=1e-12)
    with pytest.raises(ValueError):
        generate_ghz_pipeline(1.2)


def test_get_component():
    plate = get_component({"location": "waveplates", "component": "HalfWavePlate", "arguments": [45.0]})
    assert isinstance(plate, HalfWavePlate)
    with pytest.raises(ValueError):
        get_component({"location": "waveplates", "component": "Polarizer"})
    with pytest.raises(ValueError):
        get_component({"location": "mirrors", "component": "HalfWavePlate"})


def test_ideal_circuit_state():
    circuit = Circuit("ideal")
    rho, probability = circuit.state()
    assert probability == pytest.approx(0.5, abs=1e-12)
    assert fidelity(rho, ghz_state(4)) == pytest.approx(1, abs=1e-12)


def test_configured_noise_circuit():
    circuit = Circuit("ghz4")
    assert circuit.rate == pytest.approx(0.42)
    rho, _ = circuit.state()
    assert fidelity(rho, ghz_state(4)) == pytest.approx(circuit.noise.predicted_fidelity(), abs=1e-12)


def test_psi_pair_state():
    rho, _ = Circuit("ideal").state(discrimination_pair="psi_pair")
    target = StateVector((basis_state("0001").amplitudes + basis_state("1110").amplitudes) / np.sqrt(2))
    assert fidelity(rho, target) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        Circuit("ideal").state(discrimination_pair="chi_pair")


def test_sandwich_alignment():
    circuit = Circuit("sandwich")
    assert all(isinstance(source, SandwichSource) for source in circuit.sources)
    assert circuit.input_state().allclose(tensor([bell_state("phi+"), bell_state("phi+")]))
    rho, _ = circuit.state()
    assert fidelity(rho, ghz_state(4)) < Circuit("ghz4").noise.predicted_fidelity()


def test_circuit_configuration_errors():
    with pytest.raises(ValueError):
        Circuit("no_such_configuration")
    with pytest.raises(ValueError):
        Circuit({"name": "slow", "rate": -1})
    with pytest.raises(ValueError):
        Circuit({"components": {"sources": [{"location": "sources", "component": "EPRSource"}]}})
    with pytest.raises(ValueError):
        Circuit("ideal").procedure_class("calibration")
