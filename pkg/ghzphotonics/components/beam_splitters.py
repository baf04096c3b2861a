import logging
import numpy as np
from ghzphotonics.quantum import (StateVector, DensityMatrix, IncompatibleProjectionError, embed,
                                  project_and_renormalize, PROBABILITY_TOL)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

PARITY_PROJECTOR = np.diag([1, 0, 0, 1]).astype(complex)  # |HH><HH| + |VV><VV|


class PostselectionError(IncompatibleProjectionError):
    """The fourfold postselection has zero probability."""


class PostselectionRule:
    """
    Fourfold coincidence condition: one and only one photon in each listed
    output port.
    """
    def __init__(self, ports=("1", "2'", "3'", "4")):
        ports = tuple(str(port) for port in ports)
        if len(set(ports)) != len(ports):
            raise ValueError("postselection ports must be distinct, got {}".format(ports))
        self.ports = ports

    @property
    def n_photons(self):
        return len(self.ports)

    def __repr__(self):
        return "PostselectionRule(ports={})".format(self.ports)


class PolarizingBeamSplitter:
    """
    PBS acting as a parity check on two interfering photons: with one photon
    in each output port only |HH> and |VV> survive.
    Args:
        pair: zero-based qubit indices of the interfering photons
        postselection: PostselectionRule of the fourfold coincidence
    """
    def __init__(self, pair=(1, 2), postselection=None):
        pair = tuple(int(q) for q in pair)
        if len(pair) != 2 or pair[0] == pair[1]:
            raise ValueError("the PBS needs two distinct input qubits, got {}".format(pair))
        self.pair = pair
        self.postselection = PostselectionRule() if postselection is None else postselection

    def _check(self, n_qubits):
        if n_qubits != self.postselection.n_photons:
            raise ValueError("the postselection expects {} photons, got {} qubits"
                             .format(self.postselection.n_photons, n_qubits))
        if max(self.pair) >= n_qubits or min(self.pair) < 0:
            raise ValueError("PBS pair {} out of range for {} qubits".format(self.pair, n_qubits))

    def parity_check(self, state):
        """
        Returns:
            (postselected StateVector, success probability)
        """
        self._check(state.n_qubits)
        projected = embed(PARITY_PROJECTOR, self.pair, state.n_qubits).apply(state)
        probability = float(np.real(projected.norm ** 2))
        if probability < PROBABILITY_TOL:
            log.error("PBS postselection never succeeds for this input")
            raise PostselectionError("postselection never succeeds")
        return StateVector(projected.amplitudes / np.sqrt(probability)), min(probability, 1.0)

    def parity_check_density(self, rho):
        """
        Returns:
            (postselected DensityMatrix, success probability)
        """
        if not isinstance(rho, DensityMatrix):
            rho = rho.density_matrix()
        self._check(rho.n_qubits)
        try:
            return project_and_renormalize(rho, PARITY_PROJECTOR, self.pair)
        except IncompatibleProjectionError:
            log.error("PBS postselection never succeeds for this input")
            raise PostselectionError("postselection never succeeds")

    def __repr__(self):
        return "PolarizingBeamSplitter(pair={})".format(self.pair)
