"""
Over-complete Pauli-basis state tomography: setting generation, Poissonian
count simulation, efficiency correction, diluted maximum-likelihood
reconstruction and parametric bootstrap.

Outcome convention: outcome bit 0 is the first eigenstate of the basis tag
(X -> |+>, Y -> |R> = (|0> + i|1>)/sqrt(2), Z -> |H>), bit 1 the second.
Outcome indices are bit strings with qubit 0 as the most significant bit.
"""
import csv
import logging
import warnings
import itertools
import numpy as np
from functools import reduce
from concurrent.futures import ThreadPoolExecutor
from ghzphotonics.quantum import DensityMatrix, PAULI_EIGENVECTORS

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


def equatorial_basis(phi):
    """Eigenbasis of cos(phi) sigma_x + sin(phi) sigma_y, +1 eigenvector first."""
    phase = np.exp(1j * phi)
    return np.array([[1, 1], [phase, -phase]], dtype=complex) / np.sqrt(2)


# D and A are the diagonal equatorial bases used by the witness M_1 and M_3 settings
BASES = {"X": PAULI_EIGENVECTORS["X"],
         "Y": PAULI_EIGENVECTORS["Y"],
         "Z": PAULI_EIGENVECTORS["Z"],
         "D": equatorial_basis(np.pi / 4),
         "A": equatorial_basis(3 * np.pi / 4)}
PAULI_TAGS = ("X", "Y", "Z")


class InformationallyIncompleteError(ValueError):
    """The measured projectors do not span the operator space."""


class LowStatisticsError(ValueError):
    """An estimator is undefined because a setting collected no counts."""


class BootstrapError(RuntimeError):
    def __init__(self, index, error):
        super().__init__("bootstrap functional failed on resample {}: {}".format(index, error))
        self.index = index
        self.error = error


def outcome_bits(n_qubits):
    """(2**n, n) array of the outcome bits, qubit 0 first."""
    indices = np.arange(2 ** n_qubits)
    shifts = np.arange(n_qubits - 1, -1, -1)
    return (indices[:, None] >> shifts[None, :]) & 1


def outcome_label(index, n_qubits):
    return format(index, "0{}b".format(n_qubits))


class TomographySetting:
    """
    Joint local measurement setting given by one basis tag per qubit.
    Args:
        bases: sequence of tags from BASES, e.g. "XZYX" or ("X", "Z")
    """
    def __init__(self, bases):
        bases = tuple(bases)
        if not bases:
            raise ValueError("a setting needs at least one basis tag")
        for tag in bases:
            if tag not in BASES:
                raise ValueError("unknown basis tag '{}', expected one of {}".format(tag, tuple(BASES)))
        self.bases = bases

    @property
    def n_qubits(self):
        return len(self.bases)

    @property
    def label(self):
        return "".join(self.bases)

    def unitary(self):
        """Columns are the product eigenvectors in outcome-index order."""
        return reduce(np.kron, [BASES[tag] for tag in self.bases])

    def permuted(self, order):
        return TomographySetting([self.bases[q] for q in order])

    def __eq__(self, other):
        return isinstance(other, TomographySetting) and self.bases == other.bases

    def __hash__(self):
        return hash(self.bases)

    def __repr__(self):
        return "TomographySetting('{}')".format(self.label)


def generate_settings(n):
    """All 3**n Pauli settings in lexicographic order (X < Y < Z)."""
    if n < 1:
        raise ValueError("need at least one qubit, got {}".format(n))
    return [TomographySetting(bases) for bases in itertools.product(PAULI_TAGS, repeat=n)]


def outcome_probabilities(rho, setting):
    """Born-rule probabilities of the 2**n outcomes of a setting."""
    if setting.n_qubits != rho.n_qubits:
        raise ValueError("setting acts on {} qubits but the state has {}".format(setting.n_qubits, rho.n_qubits))
    v = setting.unitary()
    probabilities = np.real(np.einsum("ji,jk,ki->i", v.conj(), rho.entries, v))
    probabilities = np.clip(probabilities, 0, None)
    return probabilities / probabilities.sum()


def _check_efficiencies(efficiencies, n_qubits):
    if efficiencies is None:
        return None
    efficiencies = np.array(efficiencies, dtype=float)
    if efficiencies.shape != (n_qubits, 2):
        raise ValueError("efficiencies must have shape ({}, 2), got {}".format(n_qubits, efficiencies.shape))
    if np.any(efficiencies <= 0) or np.any(efficiencies > 1):
        raise ValueError("detector efficiencies must lie in (0, 1]")
    return efficiencies


class TomographyDataset:
    """
    Counts for a list of settings.
    Args:
        settings: list of setting objects (TomographySetting or any object with
            n_qubits, label and unitary())
        counts: (n_settings, 2**n) non-negative counts; integers before
            efficiency correction, reals after
        times: acquisition time of each setting [s]
        efficiencies: optional (n_qubits, 2) detector efficiencies indexed by
            qubit and outcome bit
        expected_rate: nominal fourfold rate used to simulate the data [1/s]
    """
    def __init__(self, settings, counts, times, efficiencies=None, expected_rate=None, corrected=False):
        self.settings = list(settings)
        if not self.settings:
            raise ValueError("a dataset needs at least one setting")
        n = self.settings[0].n_qubits
        if any(s.n_qubits != n for s in self.settings):
            raise ValueError("all settings must act on the same number of qubits")
        counts = np.array(counts)
        if not np.issubdtype(counts.dtype, np.integer):
            counts = counts.astype(float)
        if counts.shape != (len(self.settings), 2 ** n):
            raise ValueError("counts must have shape ({}, {}), got {}".format(len(self.settings), 2 ** n,
                                                                               counts.shape))
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        times = np.broadcast_to(np.array(times, dtype=float), (len(self.settings),)).copy()
        if np.any(times < 0):
            raise ValueError("acquisition times must be non-negative")
        self.counts = counts
        self.times = times
        self.efficiencies = _check_efficiencies(efficiencies, n)
        self.expected_rate = expected_rate
        self.corrected = corrected

    @property
    def n_qubits(self):
        return self.settings[0].n_qubits

    @property
    def n_settings(self):
        return len(self.settings)

    @property
    def total_counts(self):
        return float(np.sum(self.counts))

    def outcome_efficiencies(self):
        """Product of the detector efficiencies for every outcome."""
        if self.efficiencies is None:
            return np.ones(2 ** self.n_qubits)
        bits = outcome_bits(self.n_qubits)
        return np.prod(self.efficiencies[np.arange(self.n_qubits)[None, :], bits], axis=1)

    def weights(self):
        """Relative expected-count weight (time x efficiency) of every outcome."""
        return self.times[:, None] * self.outcome_efficiencies()[None, :]

    def replace(self, **kwargs):
        values = {"settings": self.settings, "counts": self.counts, "times": self.times,
                  "efficiencies": self.efficiencies, "expected_rate": self.expected_rate,
                  "corrected": self.corrected}
        values.update(kwargs)
        return TomographyDataset(**values)

    def subset(self, indices):
        indices = list(indices)
        return self.replace(settings=[self.settings[i] for i in indices], counts=self.counts[indices],
                            times=self.times[indices])

    def index(self, label):
        for i, setting in enumerate(self.settings):
            if setting.label == label:
                return i
        raise KeyError("no setting labelled '{}'".format(label))

    def permuted(self, order):
        """Relabel qubits so that new qubit i is old qubit order[i]."""
        n = self.n_qubits
        counts = self.counts.reshape([self.n_settings] + [2] * n)
        counts = counts.transpose([0] + [1 + q for q in order]).reshape(self.n_settings, 2 ** n)
        efficiencies = None if self.efficiencies is None else self.efficiencies[list(order)]
        return self.replace(settings=[s.permuted(order) for s in self.settings], counts=counts,
                            efficiencies=efficiencies)


def simulate_counts(rho, settings, rate_per_s, time_per_setting_s, efficiencies=None, seed=None):
    """
    Draw Poisson counts with mean rate * time * probability * efficiency for
    every outcome of every setting.
    Args:
        rho: DensityMatrix measured
        settings: list of settings
        rate_per_s: fourfold coincidence rate [1/s]
        time_per_setting_s: scalar or one acquisition time per setting [s]
        efficiencies: optional (n_qubits, 2) detector efficiencies
        seed: seed for numpy's default_rng
    """
    if rate_per_s <= 0:
        raise ValueError("the coincidence rate must be positive, got {}".format(rate_per_s))
    settings = list(settings)
    times = np.broadcast_to(np.array(time_per_setting_s, dtype=float), (len(settings),))
    if np.any(times <= 0):
        raise ValueError("acquisition times must be positive")
    efficiencies = _check_efficiencies(efficiencies, rho.n_qubits)
    rng = np.random.default_rng(seed)
    dataset = TomographyDataset(settings, np.zeros((len(settings), rho.dim), dtype=int), times,
                                efficiencies=efficiencies, expected_rate=rate_per_s)
    probabilities = np.array([outcome_probabilities(rho, s) for s in settings])
    means = rate_per_s * probabilities * dataset.weights()
    dataset.counts = rng.poisson(means)
    log.debug("Simulated %d counts over %d settings", dataset.total_counts, len(settings))
    return dataset


def expected_counts(rho, settings, rate_per_s, time_per_setting_s):
    """Noiseless 'counts' equal to the expected values."""
    settings = list(settings)
    probabilities = np.array([outcome_probabilities(rho, s) for s in settings])
    return TomographyDataset(settings, rate_per_s * probabilities * np.array(time_per_setting_s, dtype=float),
                             time_per_setting_s, expected_rate=rate_per_s)


def efficiency_correct(dataset):
    """Divide every count by the product of the detector efficiencies of its outcome."""
    if dataset.efficiencies is None:
        raise ValueError("the dataset has no detector efficiencies to correct for")
    counts = dataset.counts / dataset.outcome_efficiencies()[None, :]
    return dataset.replace(counts=counts, efficiencies=None, corrected=True)


def parity_expectation(dataset, index):
    """Estimate of the product of +/-1 outcome values for one setting."""
    counts = dataset.counts[index]
    total = np.sum(counts)
    if total <= 0:
        raise LowStatisticsError("setting '{}' has no counts".format(dataset.settings[index].label))
    signs = (-1.0) ** np.sum(outcome_bits(dataset.n_qubits), axis=1)
    return float(np.dot(signs, counts) / total)


class ReconstructionResult:
    def __init__(self, rho, log_likelihood, iterations, converged, log_likelihoods=None):
        self.rho = rho
        self.log_likelihood = log_likelihood
        self.iterations = iterations
        self.converged = converged
        self.log_likelihoods = [] if log_likelihoods is None else log_likelihoods

    def to_dict(self):
        dictionary = self.rho.to_dict()
        dictionary["metadata"] = {"iterations": self.iterations,
                                  "log_likelihood": self.log_likelihood,
                                  "converged": self.converged}
        return dictionary


def _projector_stack(dataset):
    v = np.array([s.unitary() for s in dataset.settings])  # (S, d, d), outcomes in columns
    projectors = np.einsum("sio,sjo->soij", v, v.conj())
    d = v.shape[1]
    return projectors.reshape(-1, d, d)


def _normalized_povm(dataset):
    """
    Fold the per-outcome weights into a POVM: with H = sum_j w_j P_j and
    G = H^(-1/2), the operators w_j G P_j G sum to the identity.
    """
    weights = dataset.weights().ravel()
    projectors = _projector_stack(dataset)
    used = weights > 0
    weights, projectors = weights[used], projectors[used]
    d = projectors.shape[1]
    rank = np.linalg.matrix_rank(projectors.reshape(len(projectors), d * d))
    if rank < d * d:
        raise InformationallyIncompleteError(
            "the measured projectors span {} of {} operator dimensions".format(rank, d * d))
    h = np.einsum("j,jab->ab", weights, projectors)
    values, vectors = np.linalg.eigh(h)
    g = vectors @ np.diag(values ** -0.5) @ vectors.conj().T
    povm = weights[:, None, None] * np.einsum("ab,jbc,cd->jad", g, projectors, g)
    return povm, g, used


def log_likelihood(rho, dataset):
    """Poisson log-likelihood with the overall rate profiled out."""
    povm, g, used = _normalized_povm(dataset)
    counts = dataset.counts.ravel()[used].astype(float)
    h_half = np.linalg.inv(g)
    sigma = h_half @ rho.entries @ h_half
    sigma = sigma / np.trace(sigma).real
    probabilities = np.real(np.einsum("jab,ba->j", povm, sigma))
    observed = counts > 0
    return float(np.sum(counts[observed] * np.log(probabilities[observed])))


def mle_reconstruct(dataset, tol=1e-10, max_iter=5000, dilution=0.1, max_dilution=100.0):
    """
    Maximum-likelihood density matrix by the diluted R rho R iteration.

    The dilution starts at `dilution`, doubles after every step that raises the
    likelihood (up to `max_dilution`) and halves after a rejected step, so the
    accepted likelihoods never decrease. Iteration stops when the relative
    likelihood gain falls below `tol`.
    Args:
        dataset: TomographyDataset over an informationally complete setting set
        tol: relative likelihood gain that counts as converged
        max_iter: maximum number of iterations
        dilution: initial dilution parameter
        max_dilution: cap on the dilution parameter
    Returns:
        ReconstructionResult; converged is False when max_iter is reached
    """
    povm, g, used = _normalized_povm(dataset)
    counts = dataset.counts.ravel()[used].astype(float)
    total = counts.sum()
    if total <= 0:
        raise LowStatisticsError("the dataset has no counts")
    frequencies = counts / total
    observed = frequencies > 0
    d = povm.shape[1]
    flat = povm.reshape(len(povm), d * d)
    identity = np.eye(d)

    def probabilities_of(sigma):
        return np.real(flat @ sigma.T.ravel())

    def likelihood_of(probabilities):
        return float(np.sum(frequencies[observed] * np.log(probabilities[observed])))

    # rho = I / d maps onto sigma = H / tr(H)
    h = np.linalg.inv(g @ g)
    sigma = h / np.trace(h).real
    probabilities = probabilities_of(sigma)
    likelihood = likelihood_of(probabilities)
    history = [total * likelihood]
    epsilon = dilution
    converged = False
    iteration = 0
    while iteration < max_iter:
        iteration += 1
        ratios = np.zeros_like(frequencies)
        ratios[observed] = frequencies[observed] / probabilities[observed]
        r = (ratios @ flat).reshape(d, d)
        step = identity + epsilon * r
        candidate = step @ sigma @ step.conj().T
        candidate = (candidate + candidate.conj().T) / 2
        candidate /= np.trace(candidate).real
        candidate_probabilities = probabilities_of(candidate)
        candidate_likelihood = likelihood_of(candidate_probabilities)
        gain = candidate_likelihood - likelihood
        if gain < -1e-15 * abs(likelihood):
            epsilon /= 2
            log.debug("MLE iteration %d rejected, dilution reduced to %g", iteration, epsilon)
            continue
        sigma, probabilities, likelihood = candidate, candidate_probabilities, candidate_likelihood
        history.append(total * likelihood)
        if gain <= tol * max(abs(likelihood), 1e-300):
            converged = True
            break
        epsilon = min(2 * epsilon, max_dilution)
    rho = g @ sigma @ g
    rho = DensityMatrix.from_unnormalized(rho)
    if not converged:
        message = "MLE did not converge in {} iterations".format(max_iter)
        log.warning(message)
        warnings.warn(message, UserWarning)
    log.debug("MLE finished after %d iterations (converged: %s)", iteration, converged)
    return ReconstructionResult(rho, history[-1], iteration, converged, log_likelihoods=history)


def seed_sequence(seed):
    """Accept an integer, None or an existing SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def bootstrap(dataset, functional, n_resamples=1000, seed=None, n_workers=1):
    """
    Parametric bootstrap: every count is redrawn as Poisson(count) and the
    functional is evaluated on each resampled dataset. A functional may
    return NaN where the resample leaves its estimator undefined; those
    resamples are dropped from the statistics.
    Args:
        dataset: TomographyDataset
        functional: callable dataset -> scalar or array
        n_resamples: number of resamples (>= 2)
        seed: seed of the resample seed sequence; each resample owns a child
            seed so results do not depend on execution order
        n_workers: threads used to evaluate resamples
    Returns:
        (mean, std) over the kept resamples, std with one degree of freedom
        removed
    Raises:
        BootstrapError: if the functional raises on a resample
        LowStatisticsError: if fewer than 2 resamples are defined
    """
    if n_resamples < 2:
        raise ValueError("the bootstrap needs at least 2 resamples, got {}".format(n_resamples))
    seeds = seed_sequence(seed).spawn(n_resamples)

    def resample(index):
        rng = np.random.default_rng(seeds[index])
        resampled = dataset.replace(counts=rng.poisson(dataset.counts))
        try:
            return np.asarray(functional(resampled), dtype=float)
        except Exception as error:
            raise BootstrapError(index, error) from error

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            values = list(pool.map(resample, range(n_resamples)))
    else:
        values = [resample(index) for index in range(n_resamples)]
    values = np.array(values)
    finite = np.isfinite(values.reshape(n_resamples, -1)).all(axis=1)
    n_dropped = int(n_resamples - np.count_nonzero(finite))
    if n_dropped:
        message = "{} of {} bootstrap resamples left the estimator undefined and were dropped".format(
            n_dropped, n_resamples)
        log.warning(message)
        warnings.warn(message, UserWarning)
    if n_resamples - n_dropped < 2:
        raise LowStatisticsError("only {} bootstrap resamples are defined".format(n_resamples - n_dropped))
    values = values[finite]
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1)
    if mean.ndim == 0:
        return float(mean), float(std)
    return mean, std


def write_counts(dataset, file_path):
    """CSV with header setting_index,bases,outcome,count,time_s."""
    n = dataset.n_qubits
    with open(file_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["setting_index", "bases", "outcome", "count", "time_s"])
        for index, setting in enumerate(dataset.settings):
            for outcome in range(2 ** n):
                count = dataset.counts[index, outcome]
                count = int(count) if np.issubdtype(dataset.counts.dtype, np.integer) else \
                    "{:.12g}".format(count)
                writer.writerow([index, setting.label, outcome_label(outcome, n), count,
                                 "{:.12g}".format(dataset.times[index])])
    log.info("Saving counts to %s", file_path)


def read_counts(file_path, efficiencies=None):
    rows = {}
    integral = True
    with open(file_path, "r", newline="") as f:
        for row in csv.DictReader(f):
            index = int(row["setting_index"])
            count = float(row["count"])
            integral = integral and count.is_integer()
            entry = rows.setdefault(index, {"bases": row["bases"], "time": float(row["time_s"]), "counts": {}})
            entry["counts"][int(row["outcome"], 2)] = count
    if not rows:
        raise ValueError("no counts in {}".format(file_path))
    indices = sorted(rows)
    settings = [TomographySetting(rows[i]["bases"]) for i in indices]
    n = settings[0].n_qubits
    counts = np.zeros((len(indices), 2 ** n))
    for row, i in enumerate(indices):
        for outcome, count in rows[i]["counts"].items():
            counts[row, outcome] = count
    if integral:
        counts = counts.astype(int)
    return TomographyDataset(settings, counts, [rows[i]["time"] for i in indices], efficiencies=efficiencies)


def write_efficiencies(efficiencies, file_path):
    """CSV with header qubit,outcome_bit,efficiency; qubits numbered from 1."""
    with open(file_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["qubit", "outcome_bit", "efficiency"])
        for qubit, pair in enumerate(np.asarray(efficiencies)):
            for bit, value in enumerate(pair):
                writer.writerow([qubit + 1, bit, "{:.12g}".format(value)])


def read_efficiencies(file_path):
    entries = []
    with open(file_path, "r", newline="") as f:
        for row in csv.DictReader(f):
            entries.append((int(row["qubit"]) - 1, int(row["outcome_bit"]), float(row["efficiency"])))
    n = max(q for q, _, _ in entries) + 1
    efficiencies = np.full((n, 2), np.nan)
    for qubit, bit, value in entries:
        efficiencies[qubit, bit] = value
    if np.any(np.isnan(efficiencies)):
        raise ValueError("efficiencies file {} is missing entries".format(file_path))
    return efficiencies
