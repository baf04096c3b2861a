"""
Phenomenological noise channels for the postselected GHZ state:
population errors from higher-order emission (epsilon), reduced GHZ
coherence from photon distinguishability (lambda) and isotropic white noise (p).
"""
import logging
import warnings
import numpy as np
from ghzphotonics.quantum import DensityMatrix, ghz_state, bell_state

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


def _check_unit_interval(name, value):
    value = float(value)
    if not 0 <= value <= 1:
        raise ValueError("{} must lie in [0, 1], got {}".format(name, value))
    return value


class NoiseParams:
    """
    Args:
        epsilon_pop: weight moved to the incorrect computational-basis terms
        lambda_coh: GHZ coherence factor (HOM visibility)
        p_white: white-noise survival probability
    """
    def __init__(self, epsilon_pop=0.0, lambda_coh=1.0, p_white=1.0):
        self.epsilon_pop = _check_unit_interval("epsilon_pop", epsilon_pop)
        self.lambda_coh = _check_unit_interval("lambda_coh", lambda_coh)
        self.p_white = _check_unit_interval("p_white", p_white)

    def to_dict(self):
        return {"epsilon_pop": self.epsilon_pop, "lambda_coh": self.lambda_coh, "p_white": self.p_white}

    @classmethod
    def from_dict(cls, dictionary):
        return cls(**dictionary)

    def predicted_fidelity(self, n_qubits=4):
        """GHZ fidelity of noise_state(self) without building the matrix."""
        d = 2 ** n_qubits
        f = (1 - self.epsilon_pop) * (1 + self.lambda_coh) / 2
        return self.p_white * f + (1 - self.p_white) / d

    def __repr__(self):
        return "NoiseParams(epsilon_pop={:g}, lambda_coh={:g}, p_white={:g})".format(
            self.epsilon_pop, self.lambda_coh, self.p_white)


def white_noise(rho, p):
    """p rho + (1 - p) I / d"""
    p = _check_unit_interval("p", p)
    d = rho.dim
    return DensityMatrix(p * rho.entries + (1 - p) * np.eye(d) / d)


def dephase_ghz(rho, lambda_coh):
    """
    Scale the |0...0><1...1| coherence and its conjugate by lambda.
    The map mixes rho with its image under a sign flip of |1...1>, so every
    coherence of |1...1> shrinks by lambda and the map is completely positive
    on any input. On GHZ-sector states only the extremal coherence is touched.
    """
    lambda_coh = _check_unit_interval("lambda", lambda_coh)
    entries = np.array(rho.entries)
    entries[:-1, -1] *= lambda_coh
    entries[-1, :-1] *= lambda_coh
    return DensityMatrix(entries)


def incorrect_terms_mixture(n_qubits=4):
    """Uniform mixture of the computational-basis states other than |0...0> and |1...1>."""
    d = 2 ** n_qubits
    diagonal = np.ones(d)
    diagonal[[0, -1]] = 0
    return DensityMatrix(np.diag(diagonal / (d - 2)))


def population_noise(rho, epsilon):
    """(1 - epsilon) rho + epsilon D with D the incorrect-terms mixture."""
    epsilon = _check_unit_interval("epsilon", epsilon)
    mixture = incorrect_terms_mixture(rho.n_qubits)
    return DensityMatrix((1 - epsilon) * rho.entries + epsilon * mixture.entries)


def noise_state(params, n_qubits=4, phase=0.0):
    """Ideal GHZ state passed through dephasing, population and white noise."""
    rho = ghz_state(n_qubits, phase=phase).density_matrix()
    rho = dephase_ghz(rho, params.lambda_coh)
    rho = population_noise(rho, params.epsilon_pop)
    return white_noise(rho, params.p_white)


def noisy_epr_pair(p=1.0, kind="phi+"):
    """Imperfect pair source: p |kind><kind| + (1 - p) I / 4, kind phi+ by default."""
    return white_noise(bell_state(kind).density_matrix(), p)


def calibrate_from_witness(a_expect, m_bar):
    """
    Invert the witness observables of the population/dephasing model.
    Args:
        a_expect: <A>, weight of the two correct H/V terms
        m_bar: (1/4) sum_k (-1)^k <M_k>
    Returns:
        NoiseParams with epsilon = 1 - <A> and lambda = m_bar / <A>
    """
    a_expect = _check_unit_interval("a_expect", a_expect)
    m_bar = _check_unit_interval("m_bar", m_bar)
    if a_expect == 0:
        raise ValueError("a_expect must be positive to calibrate the coherence")
    lambda_coh = m_bar / a_expect
    if lambda_coh > 1:
        message = "m_bar {:g} exceeds a_expect {:g}, clamping lambda to 1".format(m_bar, a_expect)
        log.warning(message)
        warnings.warn(message, UserWarning)
        lambda_coh = 1.0
    params = NoiseParams(epsilon_pop=1 - a_expect, lambda_coh=lambda_coh)
    log.info("Calibrated noise model: %s", params)
    return params
