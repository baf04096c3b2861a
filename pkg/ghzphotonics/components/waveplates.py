"""
Jones operators of the polarization elements in the H/V basis (|H> = |0>,
|V> = |1>). Angles are fast-axis angles measured from H.

    HWP(theta) = [[cos 2theta,  sin 2theta],
                  [sin 2theta, -cos 2theta]]
    QWP(theta) = exp(-i pi/4) [[cos^2 + i sin^2,  (1 - i) sin cos],
                               [(1 - i) sin cos,  sin^2 + i cos^2]]

Global phases are irrelevant to every probability computed downstream.
"""
import logging
import numpy as np
from ghzphotonics.quantum import Operator, apply_local

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

UNITARY_TOL = 1e-12


class WavePlate:
    """
    Args:
        kind: 'half' or 'quarter'
        angle: fast-axis angle
        degrees: if True the angle is given in degrees
    """
    KINDS = ("half", "quarter")

    def __init__(self, kind, angle=0.0, degrees=False):
        if kind not in self.KINDS:
            raise ValueError("wave plate kind must be one of {}, got '{}'".format(self.KINDS, kind))
        angle = np.deg2rad(angle) if degrees else float(angle)
        if not np.isfinite(angle):
            raise ValueError("wave plate angle must be finite")
        self.kind = kind
        self.angle = angle

    @property
    def jones(self):
        c, s = np.cos(self.angle), np.sin(self.angle)
        if self.kind == "half":
            c2, s2 = np.cos(2 * self.angle), np.sin(2 * self.angle)
            return np.array([[c2, s2], [s2, -c2]], dtype=complex)
        matrix = np.array([[c ** 2 + 1j * s ** 2, (1 - 1j) * s * c],
                           [(1 - 1j) * s * c, s ** 2 + 1j * c ** 2]])
        return np.exp(-1j * np.pi / 4) * matrix

    def operator(self):
        return Operator(self.jones)

    def is_unitary(self, atol=UNITARY_TOL):
        return np.allclose(self.jones @ self.jones.conj().T, np.eye(2), atol=atol)

    def apply(self, state, qubit):
        return apply_local(state, self.jones, qubit)

    def __repr__(self):
        return "{}(angle={:.4f} deg)".format(self.__class__.__name__, np.rad2deg(self.angle))


class HalfWavePlate(WavePlate):
    def __init__(self, angle=0.0, degrees=True):
        super().__init__("half", angle=angle, degrees=degrees)


class QuarterWavePlate(WavePlate):
    def __init__(self, angle=0.0, degrees=True):
        super().__init__("quarter", angle=angle, degrees=degrees)


class PhasePlate:
    """
    Tiltable quarter-wave plate at 0 degrees used as a phase shifter: the V
    component picks up exp(i phase) relative to H.
    """
    def __init__(self, phase=0.0, degrees=False):
        self.phase = np.deg2rad(phase) if degrees else float(phase)
        if not np.isfinite(self.phase):
            raise ValueError("phase must be finite")

    @property
    def jones(self):
        return np.diag([1, np.exp(1j * self.phase)])

    def operator(self):
        return Operator(self.jones)

    def apply(self, state, qubit):
        return apply_local(state, self.jones, qubit)

    def __repr__(self):
        return "PhasePlate(phase={:.4f} rad)".format(self.phase)


class NotAWavePlate:
    """Placeholder for an optical path without an element."""
    jones = np.eye(2, dtype=complex)

    def operator(self):
        return Operator(self.jones)

    def apply(self, state, qubit):
        return apply_local(state, self.jones, qubit)
