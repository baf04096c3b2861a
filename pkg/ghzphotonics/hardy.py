"""
Symmetric four-party Hardy-like inequality

    I = <a1 a2 a3 a4> - <b1 a2 a3 a4> - <a1 b2 a3 a4> - <a1 a2 b3 a4> - <a1 a2 a3 b4>
        - <~b1 ~b2 a3 a4> - <~b1 a2 ~b3 a4> - <~b1 a2 a3 ~b4>  <=  0

for binary observables given by projectors in the X-Z plane of each photon.
A correlator <x1 x2 x3 x4> is the probability that all four projectors
click; ~b is the orthocomplement of b (angle + pi/2). Photon 1 uses the
angles alpha1/beta1, photons 2-4 share alpha/beta.
"""
import logging
import numpy as np
import lmfit as lm
from functools import reduce
from concurrent.futures import ThreadPoolExecutor
from scipy.optimize import bisect
from ghzphotonics.quantum import StateVector, MeasurementProjector, projector_xz, ghz_state
from ghzphotonics.noise import white_noise
from ghzphotonics.utils import dump_json, load_json
from ghzphotonics.tomography import (simulate_counts, efficiency_correct, bootstrap, seed_sequence,
                                     LowStatisticsError)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

N_QUBITS = 4
N_TERMS = 8
TERM_LABELS = ("a1 a2 a3 a4", "b1 a2 a3 a4", "a1 b2 a3 a4", "a1 a2 b3 a4", "a1 a2 a3 b4",
               "~b1 ~b2 a3 a4", "~b1 a2 ~b3 a4", "~b1 a2 a3 ~b4")
TERM_SIGNS = np.array([1, -1, -1, -1, -1, -1, -1, -1])
UNIFORM_VALUE = float(np.dot(TERM_SIGNS, np.full(N_TERMS, 1 / 2 ** N_QUBITS)))  # -0.375
SYMMETRY_TOL = 1e-10


class NoThresholdError(ValueError):
    """The settings do not violate the inequality on the ideal GHZ state."""


class HardySettings:
    """
    Projector angles in radians.
    Args:
        alpha1, beta1: angles of photon 1
        alpha, beta: angles shared by photons 2, 3 and 4
    """
    NAMES = ("alpha1", "alpha", "beta1", "beta")

    def __init__(self, alpha1, alpha, beta1, beta):
        values = np.array([alpha1, alpha, beta1, beta], dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("Hardy angles must be finite, got {}".format(values))
        self.alpha1, self.alpha, self.beta1, self.beta = (float(v) for v in values)

    @classmethod
    def from_degrees(cls, alpha1, alpha, beta1, beta):
        return cls(*np.deg2rad([alpha1, alpha, beta1, beta]))

    @classmethod
    def from_array(cls, array):
        return cls(*array)

    def to_array(self):
        return np.array([self.alpha1, self.alpha, self.beta1, self.beta])

    def to_degrees(self):
        return tuple(float(v) for v in np.rad2deg(self.to_array()))

    def canonical(self):
        """Representative with every angle in [0, pi); projectors are pi-periodic."""
        return HardySettings(*np.mod(self.to_array(), np.pi))

    def to_dict(self):
        degrees = self.canonical().to_degrees()
        return {name + "_deg": value for name, value in zip(self.NAMES, degrees)}

    @classmethod
    def from_dict(cls, dictionary):
        try:
            return cls.from_degrees(*[float(dictionary[name + "_deg"]) for name in cls.NAMES])
        except KeyError as error:
            raise ValueError("settings are missing the angle {}".format(error))

    def term_angles(self):
        """(8, 4) projector angles of every term in inequality order."""
        a1, a, b1, b = self.to_array()
        b1p, bp = b1 + np.pi / 2, b + np.pi / 2
        return np.array([[a1, a, a, a],
                         [b1, a, a, a],
                         [a1, b, a, a],
                         [a1, a, b, a],
                         [a1, a, a, b],
                         [b1p, bp, a, a],
                         [b1p, a, bp, a],
                         [b1p, a, a, bp]])

    def __repr__(self):
        return "HardySettings({:.4f}, {:.4f}, {:.4f}, {:.4f} deg)".format(*self.to_degrees())


REFERENCE_SETTINGS = HardySettings.from_degrees(2.52, 48.47, 163.70, 83.30)


def _as_density(rho):
    return rho.density_matrix() if isinstance(rho, StateVector) else rho


def joint_probability(rho, projectors):
    """
    Probability that every rank-1 projector (one per qubit) clicks.
    Args:
        rho: DensityMatrix
        projectors: MeasurementProjector per qubit, qubit 0 first
    """
    rho = _as_density(rho)
    projectors = list(projectors)
    if len(projectors) != rho.n_qubits:
        raise ValueError("need one projector per qubit: {} projectors for {} qubits"
                         .format(len(projectors), rho.n_qubits))
    for projector in projectors:
        if not isinstance(projector, MeasurementProjector):
            raise ValueError("joint probabilities need rank-1 MeasurementProjector objects")
    vector = reduce(np.kron, [projector.vector for projector in projectors])
    value = np.real(np.vdot(vector, rho.entries @ vector))
    return float(np.clip(value, 0.0, 1.0))


class HardyResult:
    """
    The eight correlators in inequality order and the value I.
    Args:
        terms: eight joint probabilities
        sigmas: optional standard errors of the terms
        sigma_value: optional standard error of I
        theory: optional exact terms of the generating state
        settings: HardySettings used
    """
    def __init__(self, terms, sigmas=None, sigma_value=None, theory=None, settings=None, dataset=None):
        self.terms = np.array(terms, dtype=float)
        if self.terms.shape != (N_TERMS,):
            raise ValueError("a Hardy result needs {} terms".format(N_TERMS))
        self.sigmas = None if sigmas is None else np.array(sigmas, dtype=float)
        self.sigma_value = sigma_value
        self.theory = None if theory is None else np.array(theory, dtype=float)
        self.settings = settings
        self.dataset = dataset

    @property
    def value(self):
        return float(np.dot(TERM_SIGNS, self.terms))

    @property
    def significance(self):
        """Number of standard deviations by which I exceeds 0."""
        if not self.sigma_value:
            return None
        return self.value / self.sigma_value

    @property
    def violated(self):
        return self.value > 0

    def to_dict(self):
        rows = []
        for index, label in enumerate(TERM_LABELS):
            row = {"label": label, "estimate": self.terms[index]}
            if self.theory is not None:
                row["theory"] = self.theory[index]
            if self.sigmas is not None:
                row["sigma"] = self.sigmas[index]
            rows.append(row)
        total = {"label": "I", "estimate": self.value}
        if self.theory is not None:
            total["theory"] = float(np.dot(TERM_SIGNS, self.theory))
        if self.sigma_value is not None:
            total["sigma"] = self.sigma_value
        rows.append(total)
        dictionary = {"terms": rows, "I": self.value}
        if self.settings is not None:
            dictionary["settings"] = self.settings.to_dict()
        if self.sigma_value is not None:
            dictionary["significance"] = self.significance
        return dictionary

    def __repr__(self):
        return "HardyResult(I={:.6f})".format(self.value)


def hardy_terms(rho, settings):
    """Exact correlators of a state for the given settings."""
    rho = _as_density(rho)
    if rho.n_qubits != N_QUBITS:
        raise ValueError("the inequality is defined for {} qubits, got {}".format(N_QUBITS, rho.n_qubits))
    return np.array([joint_probability(rho, [projector_xz(theta) for theta in row])
                     for row in settings.term_angles()])


def hardy_evaluate(rho, settings):
    terms = hardy_terms(rho, settings)
    return HardyResult(terms, theory=terms, settings=settings)


def hardy_terms_closed_form(settings):
    """
    Correlators of the ideal GHZ state from the amplitudes,
    P = (prod cos(theta_i) + prod sin(theta_i))**2 / 2.
    """
    angles = settings.term_angles()
    return (np.prod(np.cos(angles), axis=1) + np.prod(np.sin(angles), axis=1)) ** 2 / 2


def _grid_correlators(rho, grid):
    """P[i, j, k, l] for projector angles grid[i], grid[j], grid[k], grid[l]."""
    vectors = np.stack([np.cos(grid), np.sin(grid)], axis=-1)
    outer = np.einsum("ia,ib->iab", vectors, vectors)
    tensor = rho.entries.reshape([2] * (2 * N_QUBITS))
    values = np.einsum("abcdefgh,iae,jbf,kcg,ldh->ijkl", tensor, outer, outer, outer, outer, optimize=True)
    return np.real(values)


def _grid_values(correlators):
    """I on every grid point (alpha1, alpha, beta1, beta), orthocomplement = half-period shift."""
    m = correlators.shape[0]
    a1, a, b1, b = np.meshgrid(*[np.arange(m)] * 4, indexing="ij")
    b1p, bp = (b1 + m // 2) % m, (b + m // 2) % m
    p = correlators
    return (p[a1, a, a, a] - p[b1, a, a, a] - p[a1, b, a, a] - p[a1, a, b, a] - p[a1, a, a, b]
            - p[b1p, bp, a, a] - p[b1p, a, bp, a] - p[b1p, a, a, bp])


def _value(rho, angles):
    return float(np.dot(TERM_SIGNS, hardy_terms(rho, HardySettings(*angles))))


def _refine(rho, start, step, xatol):
    """Nelder-Mead refinement of one start point."""
    params = lm.Parameters()
    for name, value in zip(HardySettings.NAMES, start):
        params.add(name, value=value)

    def objective(p):
        return -_value(rho, [p[name].value for name in HardySettings.NAMES])

    simplex = np.vstack([start, start + step * np.eye(4)])
    result = lm.minimize(objective, params, method="nelder", calc_covar=False, max_nfev=20000,
                         options={"initial_simplex": simplex, "xatol": xatol, "fatol": 1e-12})
    angles = np.array([result.params[name].value for name in HardySettings.NAMES])
    return angles, _value(rho, angles)


def _symmetry_images(angles):
    """Global X-Z reflections that map a GHZ-symmetric optimum onto itself."""
    return [angles, -angles, np.pi / 2 - angles, np.pi / 2 + angles]


def _angular_distance(first, second):
    difference = np.mod(first - second + np.pi / 2, np.pi) - np.pi / 2
    return float(np.sum(difference ** 2))


def _representative(rho, angles, value, reference):
    candidates = []
    for image in _symmetry_images(angles):
        image = np.mod(image, np.pi)
        if abs(_value(rho, image) - value) <= SYMMETRY_TOL:
            candidates.append(image)
    if reference is None:
        return min(candidates, key=lambda c: tuple(np.round(c, 12)))
    return min(candidates, key=lambda c: (round(_angular_distance(c, reference.to_array()), 12),
                                          tuple(np.round(c, 12))))


def search_settings(rho, restarts=8, seed=None, n_workers=1, reference=REFERENCE_SETTINGS, grid_step_deg=5.0,
                    xatol=1e-6):
    """
    Maximize I over the four angles: a coarse grid, then Nelder-Mead
    refinement from the best distinct grid points.
    Args:
        rho: four-qubit DensityMatrix
        restarts: number of refined start points
        seed: seed of the start-point jitter
        n_workers: threads refining start points
        reference: settings whose symmetry image is reported when several
            images give the same I (None for the lexicographically smallest)
        grid_step_deg: coarse grid resolution [deg]
        xatol: angle tolerance of the refinement [rad]
    Returns:
        (HardySettings, I)
    """
    rho = _as_density(rho)
    if rho.n_qubits != N_QUBITS:
        raise ValueError("the inequality is defined for {} qubits, got {}".format(N_QUBITS, rho.n_qubits))
    if restarts < 1:
        raise ValueError("need at least one restart, got {}".format(restarts))
    n_grid = int(round(180 / grid_step_deg))
    if n_grid % 2:
        raise ValueError("the grid step must divide 90 degrees, got {}".format(grid_step_deg))
    step = np.pi / n_grid
    grid = np.arange(n_grid) * step
    values = _grid_values(_grid_correlators(rho, grid))
    order = np.argsort(-values, axis=None, kind="stable")[:restarts]
    rng = np.random.default_rng(seed_sequence(seed))
    starts = []
    for rank, flat in enumerate(order):
        start = grid[np.array(np.unravel_index(flat, values.shape))]
        if rank:
            start = start + rng.uniform(-step / 2, step / 2, size=4)
        starts.append(start)
    log.debug("Grid maximum I = %.6f, refining %d start points", values.max(), len(starts))

    def refine(start):
        return _refine(rho, start, step / 2, xatol)

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            refined = list(pool.map(refine, starts))
    else:
        refined = [refine(start) for start in starts]
    best_value = max(value for _, value in refined)
    ties = [np.mod(angles, np.pi) for angles, value in refined if value >= best_value - SYMMETRY_TOL]
    best = min(ties, key=lambda c: tuple(np.round(c, 12)))
    best = _representative(rho, best, _value(rho, best), reference)
    settings = HardySettings(*best)
    value = _value(rho, best)
    log.info("Hardy search finished: I = %.6f at %s", value, settings)
    return settings, value


def white_noise_threshold(settings, n_qubits=N_QUBITS):
    """
    White-noise survival probability p* at which the GHZ violation vanishes.
    Returns:
        (p_star, fidelity_star) with fidelity_star = p* + (1 - p*)/16
    Raises:
        NoThresholdError: if the settings do not violate on the ideal GHZ state
    """
    ghz = ghz_state(n_qubits).density_matrix()
    ideal = hardy_evaluate(ghz, settings).value
    if ideal <= 0:
        raise NoThresholdError("settings give I = {:.6g} on the ideal GHZ state, no threshold exists"
                               .format(ideal))

    def violation(p):
        return hardy_evaluate(white_noise(ghz, p), settings).value

    p_star = bisect(violation, 0.0, 1.0, xtol=1e-10)
    fidelity_star = p_star + (1 - p_star) / 2 ** n_qubits
    log.info("White-noise threshold p* = %.6f, F* = %.6f", p_star, fidelity_star)
    return p_star, fidelity_star


class HardyMeasurement:
    """
    Joint setting of one correlator: outcome bit 0 of each photon is the
    projector clicking, bit 1 its orthocomplement.
    """
    def __init__(self, angles, label=""):
        self.angles = np.array(angles, dtype=float)
        self.label = label

    @property
    def n_qubits(self):
        return self.angles.size

    def unitary(self):
        columns = [np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]], dtype=complex)
                   for t in self.angles]
        return reduce(np.kron, columns)

    def __repr__(self):
        return "HardyMeasurement('{}')".format(self.label)


def hardy_measurements(settings):
    return [HardyMeasurement(angles, label) for angles, label in zip(settings.term_angles(), TERM_LABELS)]


def hardy_estimates(dataset):
    """Fraction of counts with every projector clicking, per correlator."""
    totals = np.sum(dataset.counts, axis=1)
    if np.any(totals <= 0):
        empty = [dataset.settings[i].label for i in np.flatnonzero(totals <= 0)]
        raise LowStatisticsError("correlators {} have no counts".format(empty))
    return dataset.counts[:, 0] / totals


def _estimate_vector(dataset):
    terms = hardy_estimates(dataset)
    return np.append(terms, np.dot(TERM_SIGNS, terms))


def _resampled_vector(dataset):
    try:
        return _estimate_vector(dataset)
    except LowStatisticsError:
        return np.full(N_TERMS + 1, np.nan)


def simulate_hardy_counts(rho, settings, times, rate_per_s, efficiencies=None, seed=None, n_resamples=1000,
                          n_workers=1):
    """
    Simulate the eight-setting counting experiment.
    Args:
        rho: four-qubit DensityMatrix
        settings: HardySettings
        times: eight acquisition times [s]
        rate_per_s: fourfold coincidence rate [1/s]
        efficiencies: optional (4, 2) detector efficiencies; counts are
            efficiency corrected before estimation
        seed: seed for the counts; the bootstrap uses a derived seed
        n_resamples: bootstrap resamples
        n_workers: bootstrap threads
    Returns:
        HardyResult with bootstrap standard errors and the exact terms of rho
    """
    rho = _as_density(rho)
    times = np.array(times, dtype=float)
    if times.shape != (N_TERMS,):
        raise ValueError("need {} acquisition times, got {}".format(N_TERMS, times.size))
    if np.any(times < 0):
        raise ValueError("acquisition times must be non-negative")
    if rate_per_s <= 0:
        raise ValueError("the coincidence rate must be positive, got {}".format(rate_per_s))
    if np.any(times == 0):
        raise LowStatisticsError("zero acquisition time leaves correlators without counts")
    seeds = seed_sequence(seed).spawn(2)
    dataset = simulate_counts(rho, hardy_measurements(settings), rate_per_s, times, efficiencies=efficiencies,
                              seed=seeds[0])
    log.info("Simulated Hardy experiment with %d fourfold counts", dataset.total_counts)
    measured = efficiency_correct(dataset) if dataset.efficiencies is not None else dataset
    estimates = _estimate_vector(measured)
    _, errors = bootstrap(measured, _resampled_vector, n_resamples=n_resamples, seed=seeds[1],
                          n_workers=n_workers)
    return HardyResult(estimates[:N_TERMS], sigmas=errors[:N_TERMS], sigma_value=float(errors[N_TERMS]),
                       theory=hardy_terms(rho, settings), settings=settings, dataset=dataset)


def save_settings(settings, file_path):
    dump_json(settings.to_dict(), file_path)


def load_settings(file_path):
    return HardySettings.from_dict(load_json(file_path))
