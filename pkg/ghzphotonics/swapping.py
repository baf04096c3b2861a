"""
Entanglement swapping through the PBS Bell-state measurement on photons 2
and 3: Bell-outcome bookkeeping and the conditional state of photons 1 and 4.
"""
import logging
import warnings
import numpy as np
from ghzphotonics.quantum import (IncompatibleProjectionError, BELL_KINDS, bell_state, embed, fidelity,
                                  project_and_renormalize)
from ghzphotonics.tomography import (TomographySetting, TomographyDataset, efficiency_correct, mle_reconstruct,
                                     LowStatisticsError)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

BSM_PAIR = (1, 2)  # photons 2 and 3
REMAINING_PAIR = (0, 3)  # photons 1 and 4
MIN_COUNTS = 50


class BsmConfig:
    """
    Args:
        discrimination_pair: 'phi_pair' (plain PBS) or 'psi_pair' (HWP at 45
            degrees in front of one PBS input)
    """
    PAIRS = {"phi_pair": ("phi+", "phi-"), "psi_pair": ("psi+", "psi-")}

    def __init__(self, discrimination_pair="phi_pair"):
        if discrimination_pair not in self.PAIRS:
            raise ValueError("discrimination pair must be one of {}, got '{}'"
                             .format(tuple(self.PAIRS), discrimination_pair))
        self.discrimination_pair = discrimination_pair

    @property
    def bell_states(self):
        return self.PAIRS[self.discrimination_pair]

    def __repr__(self):
        return "BsmConfig('{}')".format(self.discrimination_pair)


def _as_config(config):
    return config if isinstance(config, BsmConfig) else BsmConfig(config)


def bsm_outcome_map(config="phi_pair"):
    """
    Detector patterns of photons 2 and 3 in the +/- basis mapped to the
    announced Bell state.
    """
    even, odd = _as_config(config).bell_states
    return {"++": even, "--": even, "+-": odd, "-+": odd}


class SwapOutcome:
    def __init__(self, bell, probability, rho=None, counts=None, low_statistics=False):
        self.bell = bell
        self.probability = probability
        self.rho = rho
        self.fidelity = None if rho is None else fidelity(rho, bell_state(bell))
        self.counts = counts
        self.low_statistics = low_statistics

    @property
    def present(self):
        return self.rho is not None

    def to_dict(self):
        dictionary = {"bell_state": self.bell,
                      "probability": self.probability,
                      "fidelity": self.fidelity,
                      "rho": None if self.rho is None else self.rho.to_dict()}
        if self.counts is not None:
            dictionary["counts"] = self.counts
            dictionary["low_statistics"] = self.low_statistics
        return dictionary


class SwapReport:
    """
    Conditional states of photons 1 and 4 for the discriminated Bell outcomes.
    The average fidelity is the unweighted mean over the outcomes present.
    """
    def __init__(self, config, outcomes):
        self.config = config
        self.outcomes = outcomes

    @property
    def average_fidelity(self):
        values = [outcome.fidelity for outcome in self.outcomes.values() if outcome.present]
        return float(np.mean(values)) if values else None

    def to_dict(self):
        return {"discrimination_pair": self.config.discrimination_pair,
                "outcomes": {bell: outcome.to_dict() for bell, outcome in self.outcomes.items()},
                "average_fidelity": self.average_fidelity}

    def __repr__(self):
        return "SwapReport({}, average_fidelity={})".format(self.config, self.average_fidelity)


def _check_state(rho4):
    if not hasattr(rho4, "entries"):
        rho4 = rho4.density_matrix()
    if rho4.n_qubits != 4:
        raise ValueError("swapping acts on a four-qubit state, got {} qubits".format(rho4.n_qubits))
    return rho4


def bell_projection_probabilities(rho4, pair=BSM_PAIR):
    """Probability of each of the four Bell states on the measured pair."""
    rho4 = _check_state(rho4)
    probabilities = {}
    for kind in BELL_KINDS:
        projector = bell_state(kind).density_matrix().entries
        full = embed(projector, pair, rho4.n_qubits).entries
        probabilities[kind] = float(np.real(np.trace(full @ rho4.entries)))
    return probabilities


def swap_analyze(rho4, config="phi_pair"):
    """
    Project photons 2 and 3 onto the discriminated Bell states and report the
    conditional state of photons 1 and 4 with its fidelity to the same Bell
    state. Outcomes that never occur are reported absent.
    """
    rho4 = _check_state(rho4)
    config = _as_config(config)
    outcomes = {}
    for bell in config.bell_states:
        projector = bell_state(bell).density_matrix()
        try:
            rho, probability = project_and_renormalize(rho4, projector, BSM_PAIR, trace_out=True)
        except IncompatibleProjectionError:
            log.info("Bell outcome %s never occurs", bell)
            outcomes[bell] = SwapOutcome(bell, 0.0)
            continue
        outcomes[bell] = SwapOutcome(bell, probability, rho=rho)
    return SwapReport(config, outcomes)


def swap_from_tomography(dataset, config="phi_pair", min_counts=MIN_COUNTS, tol=1e-10, max_iter=5000):
    """
    Conditional two-photon tomography from four-photon counts of the
    postselected state: settings with photons 2 and 3 in the +/- basis are
    split by the parity of their outcomes and each partition is reconstructed
    by two-qubit maximum likelihood on photons 1 and 4.
    Args:
        dataset: TomographyDataset of the four-photon state
        config: BsmConfig or its tag
        min_counts: partitions with fewer counts are flagged low-statistics
            and not reconstructed
        tol, max_iter: passed to mle_reconstruct
    """
    config = _as_config(config)
    if dataset.n_qubits != 4:
        raise ValueError("swapping needs a four-qubit dataset, got {} qubits".format(dataset.n_qubits))
    if dataset.efficiencies is not None:
        dataset = efficiency_correct(dataset)
    selected = [i for i, s in enumerate(dataset.settings)
                if getattr(s, "bases", None) is not None and s.bases[1] == "X" and s.bases[2] == "X"]
    if not selected:
        raise ValueError("the dataset has no settings with photons 2 and 3 in the +/- basis")
    settings = [TomographySetting((dataset.settings[i].bases[0], dataset.settings[i].bases[3])) for i in selected]
    times = dataset.times[selected]
    # axes: setting, photon 1, photon 2, photon 3, photon 4
    counts = dataset.counts[selected].reshape(len(selected), 2, 2, 2, 2)
    partitions = {0: counts[:, :, 0, 0, :] + counts[:, :, 1, 1, :],
                  1: counts[:, :, 0, 1, :] + counts[:, :, 1, 0, :]}
    grand_total = float(np.sum(counts))
    outcomes = {}
    for parity, bell in enumerate(config.bell_states):
        partition = partitions[parity].reshape(len(selected), 4)
        total = float(np.sum(partition))
        probability = total / grand_total if grand_total > 0 else 0.0
        if total < min_counts:
            message = "the {} partition has {:g} counts, fewer than {}".format(bell, total, min_counts)
            log.warning(message)
            warnings.warn(message, UserWarning)
            outcomes[bell] = SwapOutcome(bell, probability, counts=total, low_statistics=True)
            continue
        conditional = TomographyDataset(settings, partition, times, corrected=dataset.corrected)
        try:
            result = mle_reconstruct(conditional, tol=tol, max_iter=max_iter)
        except LowStatisticsError:
            outcomes[bell] = SwapOutcome(bell, probability, counts=total, low_statistics=True)
            continue
        outcomes[bell] = SwapOutcome(bell, probability, rho=result.rho, counts=total)
        log.info("Swapped %s state reconstructed from %g counts, fidelity %.4f", bell, total,
                 outcomes[bell].fidelity)
    return SwapReport(config, outcomes)
