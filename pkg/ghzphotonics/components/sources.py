import logging
from ghzphotonics.quantum import bell_state
from ghzphotonics.noise import noisy_epr_pair

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


class EPRSource:
    """
    Down-conversion source emitting (|HH> + |VV>)/sqrt(2).
    Args:
        fidelity: white-noise survival probability of the emitted pair
    """
    KIND = "phi+"

    def __init__(self, fidelity=1.0):
        self.fidelity = float(fidelity)
        if not 0 <= self.fidelity <= 1:
            raise ValueError("source fidelity must lie in [0, 1], got {}".format(fidelity))

    def emit(self):
        """Ideal pair state."""
        return bell_state(self.KIND)

    def density_matrix(self):
        return noisy_epr_pair(self.fidelity, self.KIND)

    def __repr__(self):
        return "{}(fidelity={:g})".format(self.__class__.__name__, self.fidelity)


class SandwichSource(EPRSource):
    """
    Sandwichlike type-II source. The raw pair is (|HV> - |VH>)/sqrt(2) and
    needs alignment plates before it enters the parity check.
    """
    KIND = "psi-"
