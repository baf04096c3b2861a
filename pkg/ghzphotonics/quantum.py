"""
Dense complex linear algebra for n-qubit polarization states.

Basis convention: qubit 0 (photon 1) is the most significant bit of the
basis index, |H> = |0>, |V> = |1> and |+/-> = (|0> +/- |1>) / sqrt(2).
Every value type is immutable after construction.
"""
import logging
import numpy as np
from functools import reduce
from scipy import linalg

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

MAX_QUBITS = 10
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-8
PROBABILITY_TOL = 1e-14

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": IDENTITY, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

# first column: outcome 0 (eigenvalue +1), second column: outcome 1
PAULI_EIGENVECTORS = {"X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
                      "Y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
                      "Z": np.eye(2, dtype=complex)}

BELL_KINDS = ("phi+", "phi-", "psi+", "psi-")


class IncompatibleProjectionError(ValueError):
    """The projection has (numerically) zero probability on the given state."""


def _frozen(array):
    array = np.array(array, dtype=complex)
    array.flags.writeable = False
    return array


def _qubits_for_dimension(dim, n_qubits=None):
    n = int(round(np.log2(dim))) if dim > 0 else 0
    if dim < 2 or 2 ** n != dim:
        raise ValueError("dimension {} is not a power of two".format(dim))
    if n_qubits is not None and n_qubits != n:
        raise ValueError("dimension {} does not match {} qubits".format(dim, n_qubits))
    if n > MAX_QUBITS:
        raise ValueError("at most {} qubits are supported, got {}".format(MAX_QUBITS, n))
    return n


class StateVector:
    """
    Pure state of n polarization qubits.
    Args:
        amplitudes: complex vector of length 2**n in the global basis order
        n_qubits: optional, checked against the vector length
    """
    def __init__(self, amplitudes, n_qubits=None):
        amplitudes = np.array(amplitudes, dtype=complex).ravel()
        self._n_qubits = _qubits_for_dimension(amplitudes.size, n_qubits)
        self._amplitudes = _frozen(amplitudes)

    @property
    def amplitudes(self):
        return self._amplitudes

    @property
    def n_qubits(self):
        return self._n_qubits

    @property
    def dim(self):
        return self._amplitudes.size

    @property
    def norm(self):
        return float(np.linalg.norm(self._amplitudes))

    def normalize(self):
        norm = self.norm
        if norm < PROBABILITY_TOL:
            raise ValueError("cannot normalize a zero vector")
        return StateVector(self._amplitudes / norm)

    def inner(self, other):
        """Return <self|other>."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch: {} and {}".format(self.dim, other.dim))
        return complex(np.vdot(self._amplitudes, other.amplitudes))

    def density_matrix(self):
        return DensityMatrix(np.outer(self._amplitudes, self._amplitudes.conj()))

    def allclose(self, other, atol=1e-12):
        return self.dim == other.dim and np.allclose(self._amplitudes, other.amplitudes, rtol=0, atol=atol)

    def to_dict(self):
        return {"n_qubits": self._n_qubits,
                "amps_re": self._amplitudes.real.tolist(),
                "amps_im": self._amplitudes.imag.tolist()}

    @classmethod
    def from_dict(cls, dictionary):
        amplitudes = np.array(dictionary["amps_re"]) + 1j * np.array(dictionary["amps_im"])
        return cls(amplitudes, n_qubits=dictionary["n_qubits"])

    def __repr__(self):
        return "StateVector(n_qubits={})".format(self._n_qubits)


class Operator:
    """
    Linear operator on n qubits with no positivity constraint.
    Args:
        entries: complex 2**n x 2**n matrix
        n_qubits: optional, checked against the matrix size
    """
    def __init__(self, entries, n_qubits=None):
        entries = np.array(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("operator entries must be a square matrix, got shape {}".format(entries.shape))
        self._n_qubits = _qubits_for_dimension(entries.shape[0], n_qubits)
        self._entries = _frozen(entries)

    @property
    def entries(self):
        return self._entries

    @property
    def n_qubits(self):
        return self._n_qubits

    @property
    def dim(self):
        return self._entries.shape[0]

    def is_hermitian(self, atol=HERMITIAN_TOL):
        return bool(np.max(np.abs(self._entries - self._entries.conj().T)) <= atol)

    def dagger(self):
        return Operator(self._entries.conj().T)

    def apply(self, state):
        if state.dim != self.dim:
            raise ValueError("dimension mismatch: {} and {}".format(self.dim, state.dim))
        return StateVector(self._entries @ state.amplitudes)

    def allclose(self, other, atol=1e-12):
        other = other.entries if isinstance(other, Operator) else np.asarray(other)
        return self._entries.shape == other.shape and np.allclose(self._entries, other, rtol=0, atol=atol)

    @classmethod
    def identity(cls, n_qubits):
        return cls(np.eye(2 ** n_qubits))

    def __add__(self, other):
        return Operator(self._entries + _entries_of(other))

    def __sub__(self, other):
        return Operator(self._entries - _entries_of(other))

    def __mul__(self, scalar):
        return Operator(self._entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return Operator(self._entries @ _entries_of(other))

    def to_dict(self):
        return {"n_qubits": self._n_qubits,
                "re": self._entries.real.tolist(),
                "im": self._entries.imag.tolist()}

    @classmethod
    def from_dict(cls, dictionary):
        entries = np.array(dictionary["re"]) + 1j * np.array(dictionary["im"])
        return cls(entries, n_qubits=dictionary["n_qubits"])

    def __repr__(self):
        return "{}(n_qubits={})".format(self.__class__.__name__, self._n_qubits)


def _entries_of(value):
    return value.entries if isinstance(value, Operator) else np.asarray(value, dtype=complex)


class DensityMatrix(Operator):
    """
    Mixed state: Hermitian, unit trace and positive semidefinite within the
    module tolerances. Construction fails with a ValueError otherwise.
    """
    def __init__(self, entries, n_qubits=None):
        super().__init__(entries, n_qubits=n_qubits)
        if not self.is_hermitian():
            raise ValueError("density matrix is not Hermitian")
        trace = np.trace(self._entries)
        if abs(trace - 1) > TRACE_TOL:
            raise ValueError("density matrix trace is {} instead of 1".format(trace.real))
        minimum = self.eigenvalues()[0]
        if minimum < PSD_TOL:
            raise ValueError("density matrix has a negative eigenvalue {:g}".format(minimum))

    @classmethod
    def from_state(cls, state):
        return state.density_matrix()

    @classmethod
    def maximally_mixed(cls, n_qubits):
        return cls(np.eye(2 ** n_qubits) / 2 ** n_qubits)

    @classmethod
    def from_unnormalized(cls, entries):
        """Symmetrize and normalize a matrix produced by floating-point arithmetic."""
        entries = np.array(entries, dtype=complex)
        entries = (entries + entries.conj().T) / 2
        return cls(entries / np.trace(entries).real)

    def eigenvalues(self):
        return linalg.eigvalsh(self._entries)

    def purity(self):
        return float(np.real(np.trace(self._entries @ self._entries)))

    def partial_trace(self, keep):
        return partial_trace(self, keep)


class MeasurementProjector(Operator):
    """
    Rank-1 single-qubit projector |v><v|.
    Use projector_xz() for X-Z plane angles or MeasurementProjector.pauli() for
    Pauli eigenbases.
    """
    def __init__(self, vector, theta=None, tag=None):
        vector = np.array(vector, dtype=complex).ravel()
        if vector.size != 2:
            raise ValueError("a single-qubit projector needs a vector of length 2")
        vector = vector / np.linalg.norm(vector)
        super().__init__(np.outer(vector, vector.conj()))
        self._vector = _frozen(vector)
        self.theta = theta
        self.tag = tag

    @property
    def vector(self):
        return self._vector

    @classmethod
    def pauli(cls, basis, sign="+"):
        if basis not in PAULI_EIGENVECTORS or sign not in ("+", "-"):
            raise ValueError("unknown Pauli eigenbasis tag {}{}".format(basis, sign))
        column = 0 if sign == "+" else 1
        return cls(PAULI_EIGENVECTORS[basis][:, column], tag=(basis, sign))

    def orthocomplement(self):
        if self.theta is not None:
            return projector_xz(self.theta + np.pi / 2)
        if self.tag is not None:
            return MeasurementProjector.pauli(self.tag[0], "-" if self.tag[1] == "+" else "+")
        return MeasurementProjector(np.array([-self._vector[1].conj(), self._vector[0].conj()]))


def projector_xz(theta):
    """Projector onto cos(theta)|0> + sin(theta)|1>."""
    if not np.isfinite(theta):
        raise ValueError("projector angle must be finite, got {}".format(theta))
    return MeasurementProjector([np.cos(theta), np.sin(theta)], theta=float(theta))


def tensor(factors):
    """
    Kronecker product of an ordered list of states or operators; the first
    factor holds the most significant qubits.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("tensor needs at least one factor")
    if all(isinstance(f, StateVector) for f in factors):
        return StateVector(reduce(np.kron, [f.amplitudes for f in factors]))
    if all(isinstance(f, DensityMatrix) for f in factors):
        return DensityMatrix(reduce(np.kron, [f.entries for f in factors]))
    if all(isinstance(f, Operator) for f in factors):
        return Operator(reduce(np.kron, [f.entries for f in factors]))
    raise ValueError("cannot mix states and operators in a tensor product")


def basis_state(bits):
    """Computational basis state from a bit string such as '0110'."""
    amplitudes = np.zeros(2 ** len(bits), dtype=complex)
    amplitudes[int(bits, 2)] = 1
    return StateVector(amplitudes)


def ghz_state(n, phase=0.0):
    """(|0...0> + exp(i phase)|1...1>) / sqrt(2)"""
    if n < 2:
        raise ValueError("a GHZ state needs at least 2 qubits, got {}".format(n))
    amplitudes = np.zeros(2 ** n, dtype=complex)
    amplitudes[0] = 1 / np.sqrt(2)
    amplitudes[-1] = np.exp(1j * phase) / np.sqrt(2)
    return StateVector(amplitudes)


def bell_state(kind):
    if kind not in BELL_KINDS:
        raise ValueError("unknown Bell state '{}', expected one of {}".format(kind, BELL_KINDS))
    sign = 1 if kind.endswith("+") else -1
    amplitudes = np.zeros(4, dtype=complex)
    if kind.startswith("phi"):
        amplitudes[0b00], amplitudes[0b11] = 1, sign
    else:
        amplitudes[0b01], amplitudes[0b10] = 1, sign
    return StateVector(amplitudes / np.sqrt(2))


def pauli(label):
    """Pauli string operator such as 'XXXX' or 'ZIZI'."""
    try:
        return Operator(reduce(np.kron, [PAULIS[c] for c in label]))
    except KeyError:
        raise ValueError("invalid Pauli string '{}'".format(label))


def _as_density(rho):
    return rho.density_matrix() if isinstance(rho, StateVector) else rho


def fidelity(rho, target):
    """<target|rho|target> for a pure target state."""
    rho = _as_density(rho)
    if rho.dim != target.dim:
        raise ValueError("dimension mismatch: {} and {}".format(rho.dim, target.dim))
    value = np.vdot(target.amplitudes, rho.entries @ target.amplitudes)
    return float(np.clip(value.real, 0.0, 1.0))


def expectation(rho, observable):
    rho = _as_density(rho)
    if rho.dim != observable.dim:
        raise ValueError("dimension mismatch: {} and {}".format(rho.dim, observable.dim))
    if not observable.is_hermitian():
        raise ValueError("observable is not Hermitian")
    return float(np.real(np.trace(observable.entries @ rho.entries)))


def embed(operator, subset, n_qubits):
    """
    Lift an operator acting on the qubits in `subset` (in that order) to the
    full n-qubit space.
    """
    matrix = _entries_of(operator)
    subset = [int(q) for q in subset]
    k = len(subset)
    if matrix.shape != (2 ** k, 2 ** k):
        raise ValueError("operator does not act on {} qubits".format(k))
    if len(set(subset)) != k or any(q < 0 or q >= n_qubits for q in subset):
        raise ValueError("invalid qubit subset {} for {} qubits".format(subset, n_qubits))
    rest = [q for q in range(n_qubits) if q not in subset]
    order = subset + rest
    full = np.kron(matrix, np.eye(2 ** len(rest))).reshape([2] * (2 * n_qubits))
    axes = [order.index(q) for q in range(n_qubits)]
    full = full.transpose(axes + [n_qubits + a for a in axes])
    return Operator(full.reshape(2 ** n_qubits, 2 ** n_qubits))


def apply_local(state, matrix, qubit):
    """Apply a single-qubit matrix to one qubit of a state vector."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError("qubit index {} out of range for {} qubits".format(qubit, state.n_qubits))
    return embed(matrix, [qubit], state.n_qubits).apply(state)


def partial_trace(rho, keep):
    """Reduced density matrix on the qubits in `keep` (ascending order)."""
    n = rho.n_qubits
    keep = sorted(int(q) for q in keep)
    if not keep or any(q < 0 or q >= n for q in keep):
        raise ValueError("invalid qubits to keep {} for {} qubits".format(keep, n))
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    columns = [letters[n + q] if q in keep else rows[q] for q in range(n)]
    output = "".join(rows[q] for q in keep) + "".join(columns[q] for q in keep)
    tensor_ = rho.entries.reshape([2] * (2 * n))
    reduced = np.einsum("".join(rows) + "".join(columns) + "->" + output, tensor_)
    d = 2 ** len(keep)
    return DensityMatrix.from_unnormalized(reduced.reshape(d, d))


def project_and_renormalize(rho, projector, subset, trace_out=False):
    """
    Postselect `rho` on a projector acting on `subset`.
    Args:
        rho: DensityMatrix (or StateVector)
        projector: idempotent Hermitian Operator on the subset
        subset: qubit indices the projector acts on
        trace_out: if True the measured qubits are traced out of the result
    Returns:
        (conditional DensityMatrix, probability)
    Raises:
        IncompatibleProjectionError: if the probability is below 1e-14
    """
    rho = _as_density(rho)
    matrix = _entries_of(projector)
    if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL or \
            np.max(np.abs(matrix @ matrix - matrix)) > HERMITIAN_TOL:
        raise ValueError("projector must be idempotent and Hermitian")
    full = embed(matrix, subset, rho.n_qubits).entries
    projected = full @ rho.entries @ full.conj().T
    probability = float(np.real(np.trace(projected)))
    if probability < PROBABILITY_TOL:
        raise IncompatibleProjectionError(
            "incompatible projection on qubits {}: probability {:g}".format(list(subset), probability))
    conditional = DensityMatrix.from_unnormalized(projected)
    if trace_out:
        keep = [q for q in range(rho.n_qubits) if q not in subset]
        conditional = partial_trace(conditional, keep)
    return conditional, min(probability, 1.0)


def random_density_matrix(n_qubits, rng=None, rank=None):
    """Random state from the Ginibre ensemble (used for property checks)."""
    rng = np.random.default_rng(rng)
    d = 2 ** n_qubits
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return DensityMatrix.from_unnormalized(g @ g.conj().T)


def random_state_vector(n_qubits, rng=None):
    rng = np.random.default_rng(rng)
    d = 2 ** n_qubits
    return StateVector(rng.normal(size=d) + 1j * rng.normal(size=d)).normalize()


def permute_qubits(rho, order):
    """Relabel qubits so that new qubit i is old qubit order[i]."""
    n = rho.n_qubits
    order = [int(q) for q in order]
    if sorted(order) != list(range(n)):
        raise ValueError("{} is not a permutation of {} qubits".format(order, n))
    tensor_ = rho.entries.reshape([2] * (2 * n)).transpose(order + [n + q for q in order])
    return DensityMatrix.from_unnormalized(tensor_.reshape(rho.dim, rho.dim))
