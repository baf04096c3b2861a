"""
Fidelity-based entanglement witness of the four-photon GHZ state,

    W = I/2 - |G4><G4| = I/2 - A/2 - (1/2) M_bar,
    M_bar = (1/4) sum_k (-1)^k M_k,

with A = |HHHH><HHHH| + |VVVV><VVVV| and
M_k = [cos(k pi/4) sigma_x + sin(k pi/4) sigma_y]^(x4).
"""
import logging
import numpy as np
from functools import reduce
from ghzphotonics.quantum import (Operator, StateVector, basis_state, ghz_state, expectation,
                                  fidelity)
from ghzphotonics.tomography import (TomographySetting, simulate_counts, bootstrap, parity_expectation,
                                     efficiency_correct, seed_sequence, LowStatisticsError)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

N_QUBITS = 4
M_SETTINGS = ("XXXX", "DDDD", "YYYY", "AAAA")  # eigenbases of M_0 ... M_3
HV_SETTING = "ZZZZ"


def a_operator():
    """Projector onto the two correct H/V terms."""
    zeros = basis_state("0" * N_QUBITS).density_matrix().entries
    ones = basis_state("1" * N_QUBITS).density_matrix().entries
    return Operator(zeros + ones)


def m_k_operator(k):
    if k not in (0, 1, 2, 3):
        raise ValueError("k must be one of 0, 1, 2, 3, got {}".format(k))
    phi = k * np.pi / 4
    sigma = np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]])
    return Operator(reduce(np.kron, [sigma] * N_QUBITS))


def witness_operator():
    identity = np.eye(2 ** N_QUBITS)
    m_bar = sum((-1) ** k * m_k_operator(k).entries for k in range(4)) / 4
    return Operator(identity / 2 - a_operator().entries / 2 - m_bar / 2)


class WitnessReport:
    """
    Witness observables of one state.
    Args:
        a_expect: <A>
        m_values: <M_k> for k = 0 ... 3
        w_expect: <W>
        uncertainties: optional dictionary of standard errors with the same keys
            as to_dict()
        dataset: optional TomographyDataset of the simulated counts
    """
    def __init__(self, a_expect, m_values, w_expect=None, uncertainties=None, dataset=None):
        self.a_expect = float(a_expect)
        self.m_values = [float(m) for m in m_values]
        self.m_bar = sum((-1) ** k * m for k, m in enumerate(self.m_values)) / 4
        self.fidelity = self.a_expect / 2 + self.m_bar / 2
        self.w_expect = 0.5 - self.fidelity if w_expect is None else float(w_expect)
        self.uncertainties = uncertainties
        self.dataset = dataset

    @property
    def entangled(self):
        return self.w_expect < 0

    def to_dict(self):
        dictionary = {"a_expect": self.a_expect,
                      "m_values": self.m_values,
                      "m_bar": self.m_bar,
                      "w_expect": self.w_expect,
                      "fidelity": self.fidelity}
        if self.uncertainties is not None:
            dictionary["uncertainties"] = self.uncertainties
        return dictionary

    def __repr__(self):
        return "WitnessReport(fidelity={:.5f}, w_expect={:.5f})".format(self.fidelity, self.w_expect)


def _check_state(rho):
    if isinstance(rho, StateVector):
        rho = rho.density_matrix()
    if rho.n_qubits != N_QUBITS:
        raise ValueError("the witness acts on {} qubits, got a {}-qubit state".format(N_QUBITS, rho.n_qubits))
    return rho


def evaluate_witness(rho):
    """Exact witness observables of a four-qubit state."""
    rho = _check_state(rho)
    a_expect = expectation(rho, a_operator())
    m_values = [expectation(rho, m_k_operator(k)) for k in range(4)]
    w_expect = expectation(rho, witness_operator())
    report = WitnessReport(a_expect, m_values, w_expect=w_expect)
    log.debug("Witness evaluated: F = %.6f (direct %.6f)", report.fidelity, fidelity(rho, ghz_state(N_QUBITS)))
    return report


def witness_settings():
    return [TomographySetting(HV_SETTING)] + [TomographySetting(label) for label in M_SETTINGS]


def witness_estimates(dataset):
    """
    Count-based witness estimates from the five witness settings.
    Returns:
        array (a_expect, M_0, M_1, M_2, M_3)
    """
    hv = dataset.counts[dataset.index(HV_SETTING)]
    total = np.sum(hv)
    if total <= 0:
        raise LowStatisticsError("the H/V setting has no counts")
    a_expect = (hv[0] + hv[-1]) / total
    m_values = [parity_expectation(dataset, dataset.index(label)) for label in M_SETTINGS]
    return np.array([a_expect] + m_values, dtype=float)


def _report_vector(dataset):
    try:
        estimates = witness_estimates(dataset)
    except LowStatisticsError:
        return np.full(8, np.nan)
    report = WitnessReport(estimates[0], estimates[1:])
    return np.array([report.a_expect] + report.m_values + [report.m_bar, report.w_expect, report.fidelity])


def simulate_witness_counts(rho, rate_per_s, t_hv, t_mk, seed=None, n_resamples=1000, n_workers=1,
                            efficiencies=None):
    """
    Simulate the witness counting experiment and estimate its observables.
    Args:
        rho: four-qubit DensityMatrix
        rate_per_s: fourfold coincidence rate [1/s]
        t_hv: acquisition time in the H/V basis [s]
        t_mk: acquisition time of each M_k setting [s]
        seed: seed for the counts; the bootstrap uses a derived seed
        n_resamples: bootstrap resamples for the standard errors
        n_workers: bootstrap threads
        efficiencies: optional (4, 2) detector efficiencies
    Returns:
        WitnessReport with uncertainties and the simulated dataset attached
    """
    rho = _check_state(rho)
    if t_hv <= 0 or t_mk <= 0:
        raise ValueError("acquisition times must be positive, got t_hv={} and t_mk={}".format(t_hv, t_mk))
    seeds = seed_sequence(seed).spawn(2)
    settings = witness_settings()
    times = [t_hv] + [t_mk] * len(M_SETTINGS)
    dataset = simulate_counts(rho, settings, rate_per_s, times, efficiencies=efficiencies, seed=seeds[0])
    log.info("Simulated witness experiment with %d fourfold counts", dataset.total_counts)
    measured = dataset
    if dataset.efficiencies is not None:
        measured = efficiency_correct(dataset)
    estimates = witness_estimates(measured)
    _, errors = bootstrap(measured, _report_vector, n_resamples=n_resamples, seed=seeds[1],
                          n_workers=n_workers)
    uncertainties = {"a_expect": errors[0],
                     "m_values": list(errors[1:5]),
                     "m_bar": errors[5],
                     "w_expect": errors[6],
                     "fidelity": errors[7]}
    return WitnessReport(estimates[0], estimates[1:], uncertainties=uncertainties, dataset=dataset)
