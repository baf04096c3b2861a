import numpy as np
import pytest
from ghzphotonics.quantum import ghz_state, bell_state, fidelity, random_density_matrix, permute_qubits, DensityMatrix
from ghzphotonics.noise import white_noise
from ghzphotonics.tomography import (TomographySetting, TomographyDataset, InformationallyIncompleteError,
                                     LowStatisticsError, BootstrapError, generate_settings, outcome_probabilities,
                                     outcome_label, simulate_counts, expected_counts, efficiency_correct,
                                     parity_expectation, mle_reconstruct, log_likelihood, bootstrap, seed_sequence,
                                     write_counts, read_counts, write_efficiencies, read_efficiencies)


def test_generate_settings_order():
    settings = generate_settings(2)
    assert [s.label for s in settings] == ["XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"]
    assert len(generate_settings(4)) == 81
    with pytest.raises(ValueError):
        generate_settings(0)


def test_setting_validation():
    with pytest.raises(ValueError):
        TomographySetting("XQ")
    with pytest.raises(ValueError):
        TomographySetting("")
    assert TomographySetting("XZ") == TomographySetting(("X", "Z"))
    assert TomographySetting("XZ").permuted([1, 0]).label == "ZX"


def test_outcome_probabilities_of_ghz(ghz):
    z = outcome_probabilities(ghz, TomographySetting("ZZZZ"))
    assert z[0] == pytest.approx(0.5) and z[15] == pytest.approx(0.5)
    x = outcome_probabilities(ghz, TomographySetting("XXXX"))
    even = [i for i in range(16) if outcome_label(i, 4).count("1") % 2 == 0]
    assert np.sum(x[even]) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        outcome_probabilities(ghz, TomographySetting("ZZ"))


def test_parity_expectations(ghz):
    settings = [TomographySetting(label) for label in ("XXXX", "YYYY", "DDDD", "AAAA")]
    dataset = expected_counts(ghz, settings, 1.0, 1000)
    values = [parity_expectation(dataset, i) for i in range(4)]
    np.testing.assert_allclose(values, [1, 1, -1, -1], atol=1e-12)


def test_simulate_counts_is_reproducible(ghz):
    settings = generate_settings(4)
    first = simulate_counts(ghz, settings, 0.42, 267, seed=5)
    second = simulate_counts(ghz, settings, 0.42, 267, seed=5)
    np.testing.assert_array_equal(first.counts, second.counts)
    assert first.counts.shape == (81, 16)
    assert first.total_counts == pytest.approx(81 * 267 * 0.42, rel=0.05)


def test_simulate_counts_errors(ghz):
    with pytest.raises(ValueError):
        simulate_counts(ghz, generate_settings(4), 0, 267, seed=1)
    with pytest.raises(ValueError):
        simulate_counts(ghz, generate_settings(4), 0.42, -1, seed=1)
    with pytest.raises(ValueError):
        simulate_counts(ghz, generate_settings(4), 0.42, 267, efficiencies=np.ones((3, 2)), seed=1)


def test_dataset_validation():
    settings = generate_settings(1)
    with pytest.raises(ValueError):
        TomographyDataset(settings, np.ones((3, 3)), 1)
    with pytest.raises(ValueError):
        TomographyDataset(settings, -np.ones((3, 2)), 1)
    with pytest.raises(ValueError):
        TomographyDataset([], [], 1)
    dataset = TomographyDataset(settings, np.ones((3, 2), dtype=int), 2)
    assert dataset.index("Z") == 2
    with pytest.raises(KeyError):
        dataset.index("D")


def test_efficiency_correction(ghz):
    efficiencies = np.full((4, 2), 0.5)
    dataset = expected_counts(ghz, generate_settings(4), 1.0, 100)
    dataset = dataset.replace(counts=dataset.counts * 0.5 ** 4, efficiencies=efficiencies)
    corrected = efficiency_correct(dataset)
    assert corrected.corrected
    assert corrected.efficiencies is None
    np.testing.assert_allclose(corrected.counts, expected_counts(ghz, generate_settings(4), 1.0, 100).counts)
    with pytest.raises(ValueError):
        efficiency_correct(corrected)


def test_mle_on_exact_frequencies(ghz):
    dataset = expected_counts(ghz, generate_settings(4), 0.42, 267)
    result = mle_reconstruct(dataset)
    assert fidelity(result.rho, ghz_state(4)) >= 0.999
    assert np.all(np.diff(result.log_likelihoods) >= -1e-9)


def test_mle_two_qubit_mixed_state(rng):
    rho = white_noise(bell_state("psi-").density_matrix(), 0.8)
    dataset = expected_counts(rho, generate_settings(2), 1.0, 1e4)
    result = mle_reconstruct(dataset)
    assert result.converged
    np.testing.assert_allclose(result.rho.entries, rho.entries, atol=1e-3)


def test_mle_is_physical_on_noisy_data(rng):
    rho = random_density_matrix(2, rng)
    dataset = simulate_counts(rho, generate_settings(2), 1.0, 20, seed=3)
    result = mle_reconstruct(dataset)
    assert isinstance(result.rho, DensityMatrix)
    assert result.rho.eigenvalues()[0] >= -1e-8
    assert log_likelihood(result.rho, dataset) >= log_likelihood(DensityMatrix.maximally_mixed(2), dataset)


def test_mle_non_convergence_warns(ghz):
    dataset = simulate_counts(ghz, generate_settings(4), 0.42, 267, seed=11)
    with pytest.warns(UserWarning):
        result = mle_reconstruct(dataset, max_iter=2)
    assert not result.converged
    assert result.iterations == 2


def test_mle_requires_complete_settings(ghz):
    dataset = expected_counts(ghz, [TomographySetting("ZZZZ")], 1.0, 100)
    with pytest.raises(InformationallyIncompleteError):
        mle_reconstruct(dataset)


def test_mle_requires_counts():
    dataset = TomographyDataset(generate_settings(1), np.zeros((3, 2), dtype=int), 1)
    with pytest.raises(LowStatisticsError):
        mle_reconstruct(dataset)


def test_parity_expectation_without_counts():
    dataset = TomographyDataset(generate_settings(1), np.zeros((3, 2), dtype=int), 1)
    with pytest.raises(LowStatisticsError):
        parity_expectation(dataset, 0)


def test_permuted_dataset_matches_permuted_state(rng):
    rho = random_density_matrix(3, rng)
    dataset = expected_counts(rho, generate_settings(3), 1.0, 10)
    permuted = dataset.permuted([2, 0, 1])
    for setting, counts in zip(permuted.settings, permuted.counts):
        original = dataset.counts[dataset.index(setting.permuted([1, 2, 0]).label)]
        reordered = original.reshape(2, 2, 2).transpose(2, 0, 1).ravel()
        np.testing.assert_allclose(counts, reordered, atol=1e-12)


def test_bootstrap_is_deterministic(ghz):
    dataset = simulate_counts(ghz, [TomographySetting("XXXX")], 1.0, 500, seed=2)
    first = bootstrap(dataset, lambda d: parity_expectation(d, 0), n_resamples=50, seed=9)
    second = bootstrap(dataset, lambda d: parity_expectation(d, 0), n_resamples=50, seed=9, n_workers=4)
    assert first == second
    assert first[0] == pytest.approx(1)
    with pytest.raises(ValueError):
        bootstrap(dataset, len, n_resamples=1)


def test_bootstrap_wraps_failures(ghz):
    dataset = simulate_counts(ghz, [TomographySetting("XXXX")], 1.0, 10, seed=2)

    def failing(_):
        raise ArithmeticError("boom")

    with pytest.raises(BootstrapError) as info:
        bootstrap(dataset, failing, n_resamples=5, seed=1)
    assert info.value.index == 0


def test_mle_likelihood_never_decreases(rng):
    rho = random_density_matrix(3, rng)
    dataset = simulate_counts(rho, generate_settings(3), 1.0, 30, seed=8)
    history = np.array(mle_reconstruct(dataset).log_likelihoods)
    assert history.size > 1
    assert np.all(np.diff(history) >= -1e-9)


def test_mle_commutes_with_qubit_relabelling(rng):
    rho = random_density_matrix(3, rng)
    dataset = expected_counts(rho, generate_settings(3), 1.0, 1e4)
    order = [2, 0, 1]
    direct = mle_reconstruct(dataset).rho
    relabelled = mle_reconstruct(dataset.permuted(order)).rho
    np.testing.assert_allclose(relabelled.entries, permute_qubits(direct, order).entries, atol=1e-8)


def test_efficiency_correction_is_unbiased(calibrated_state):
    efficiencies = np.array([[0.9, 0.8], [0.7, 0.95], [1.0, 0.85], [0.6, 0.75]])
    settings = [TomographySetting("XXXX"), TomographySetting("ZZZZ")]
    exact = expected_counts(calibrated_state, settings, 0.42, 2000)
    totals, parities = [], []
    for child in seed_sequence(21).spawn(100):
        corrected = efficiency_correct(simulate_counts(calibrated_state, settings, 0.42, 2000,
                                                       efficiencies=efficiencies, seed=child))
        totals.append(np.sum(corrected.counts[1]))
        parities.append(parity_expectation(corrected, 0))
    for values, expected in ((totals, np.sum(exact.counts[1])), (parities, parity_expectation(exact, 0))):
        error = np.std(values, ddof=1) / np.sqrt(len(values))
        assert abs(np.mean(values) - expected) <= 3 * error


def test_bootstrap_total_counts_spread(ghz):
    dataset = simulate_counts(ghz, generate_settings(4), 0.42, 267, seed=6)
    mean, std = bootstrap(dataset, lambda d: d.total_counts, n_resamples=1000, seed=1)
    assert mean == pytest.approx(dataset.total_counts, rel=0.01)
    assert std == pytest.approx(np.sqrt(dataset.total_counts), rel=0.2)


def test_bootstrap_of_empty_dataset():
    dataset = TomographyDataset(generate_settings(1), np.zeros((3, 2), dtype=int), 1)
    assert bootstrap(dataset, lambda d: d.total_counts, n_resamples=10, seed=1) == (0.0, 0.0)


def test_bootstrap_drops_undefined_resamples(ghz):
    dataset = simulate_counts(ghz, [TomographySetting("XXXX")], 1.0, 500, seed=2)

    def even_total(d):
        return np.nan if d.total_counts % 2 else 1.0

    with pytest.warns(UserWarning, match="dropped"):
        mean, std = bootstrap(dataset, even_total, n_resamples=50, seed=3)
    assert (mean, std) == (1.0, 0.0)
    with pytest.warns(UserWarning), pytest.raises(LowStatisticsError):
        bootstrap(dataset, lambda d: np.full(3, np.nan), n_resamples=5, seed=3)


def test_seed_sequence_accepts_children():
    parent = seed_sequence(7)
    child = parent.spawn(1)[0]
    assert seed_sequence(child) is child
    assert seed_sequence(7).entropy == 7


def test_counts_csv(tmp_path, ghz):
    dataset = simulate_counts(ghz, generate_settings(4), 0.42, 267, seed=4)
    path = str(tmp_path / "counts.csv")
    write_counts(dataset, path)
    loaded = read_counts(path)
    assert [s.label for s in loaded.settings] == [s.label for s in dataset.settings]
    np.testing.assert_array_equal(loaded.counts, dataset.counts)
    np.testing.assert_allclose(loaded.times, dataset.times)
    with open(path) as f:
        assert f.readline().strip() == "setting_index,bases,outcome,count,time_s"


def test_efficiencies_csv(tmp_path):
    efficiencies = np.array([[0.9, 0.8], [0.7, 0.95], [1.0, 0.85], [0.6, 0.75]])
    path = str(tmp_path / "efficiencies.csv")
    write_efficiencies(efficiencies, path)
    np.testing.assert_allclose(read_efficiencies(path), efficiencies)


@pytest.mark.slow
def test_fidelity_estimate_is_unbiased(calibrated_state):
    target = ghz_state(4)
    true_fidelity = fidelity(calibrated_state, target)
    seeds = seed_sequence(101).spawn(10)
    estimates = [fidelity(mle_reconstruct(simulate_counts(calibrated_state, generate_settings(4), 0.42, 267,
                                                          seed=s)).rho, target) for s in seeds]
    assert np.mean(estimates) == pytest.approx(true_fidelity, abs=0.01)
