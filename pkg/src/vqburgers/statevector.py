"""Exact simulated qubit register: amplitudes, gates, inner products.

Index convention used throughout the package: qubit 0 is the most significant
bit of the amplitude index, i.e. the coarsest length scale of an encoded
field.  Amplitude arrays are little more than numpy vectors of length 2^N;
the QuantumState wrapper enforces normalization at the API boundary while the
module-level ``_apply_*_raw`` helpers run the hot loops on bare arrays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_QUBITS",
    "QuantumState",
    "Gate",
    "init_zero_state",
    "apply_gate",
    "inner_product",
]

# 2^24 complex amplitudes is the practical exact-emulation ceiling on a desk.
MAX_QUBITS = 24

_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized complex amplitude vector over an N-qubit register."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")

    @classmethod
    def from_amplitudes(cls, amps: np.ndarray, normalize: bool = False) -> "QuantumState":
        amps = np.asarray(amps, dtype=complex)
        n = amps.size
        if n < 2 or n & (n - 1):
            raise ValueError("amplitude count must be a power of two >= 2")
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / nrm
        return cls(n_qubits=n.bit_length() - 1, amplitudes=amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def dump_csv(self, path: str) -> None:
        """Debug dump of amplitudes, one row per index: index,re,im."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im"])
            for j, a in enumerate(self.amplitudes):
                w.writerow([j, repr(float(a.real)), repr(float(a.imag))])


def _check_unitary(m: np.ndarray) -> None:
    d = m.shape[0]
    if np.max(np.abs(m.conj().T @ m - np.eye(d))) > _NORM_TOL:
        raise ValueError("gate matrix is not unitary within 1e-12")


@dataclass(frozen=True, eq=False)
class Gate:
    """One- or two-qubit unitary acting on named target qubits."""

    targets: tuple[int, ...]
    matrix: np.ndarray
    name: str = ""
    param: float | None = None

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        k = len(self.targets)
        if k not in (1, 2):
            raise ValueError("gates act on 1 or 2 qubits")
        if len(set(self.targets)) != k:
            raise ValueError("target qubits must be distinct")
        if m.shape != (2**k, 2**k):
            raise ValueError(f"matrix shape {m.shape} does not match {k} targets")
        _check_unitary(m)

    @property
    def arity(self) -> int:
        return len(self.targets)

    def dagger(self) -> "Gate":
        return Gate(self.targets, self.matrix.conj().T, name=self.name + "+", param=self.param)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def ry(theta: float, target: int) -> "Gate":
        c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
        return Gate((target,), np.array([[c, -s], [s, c]]), name="ry", param=theta)

    @staticmethod
    def rx(theta: float, target: int) -> "Gate":
        c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
        return Gate((target,), np.array([[c, -1j * s], [-1j * s, c]]), name="rx", param=theta)

    @staticmethod
    def rz(theta: float, target: int) -> "Gate":
        e = np.exp(-0.5j * theta)
        return Gate((target,), np.array([[e, 0], [0, e.conjugate()]]), name="rz", param=theta)

    @staticmethod
    def x(target: int) -> "Gate":
        return Gate((target,), np.array([[0.0, 1.0], [1.0, 0.0]]), name="x")

    @staticmethod
    def y(target: int) -> "Gate":
        return Gate((target,), np.array([[0.0, -1j], [1j, 0.0]]), name="y")

    @staticmethod
    def z(target: int) -> "Gate":
        return Gate((target,), np.array([[1.0, 0.0], [0.0, -1.0]]), name="z")

    @staticmethod
    def h(target: int) -> "Gate":
        r = 1.0 / math.sqrt(2.0)
        return Gate((target,), np.array([[r, r], [r, -r]]), name="h")

    @staticmethod
    def cz(a: int, b: int) -> "Gate":
        return Gate((a, b), np.diag([1.0, 1.0, 1.0, -1.0]), name="cz")

    @staticmethod
    def cx(control: int, target: int) -> "Gate":
        m = np.zeros((4, 4))
        m[0, 0] = m[1, 1] = m[2, 3] = m[3, 2] = 1.0
        return Gate((control, target), m, name="cx")


def init_zero_state(n_qubits: int) -> QuantumState:
    """|00...0>: amplitude 1 at index 0."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}]")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


# -- raw-array gate application (hot path, shared with qnpu/ansatz) --------


def _apply_1q_raw(amps: np.ndarray, m: np.ndarray, q: int, n: int) -> np.ndarray:
    a = amps.reshape(2**q, 2, -1)
    u, v = a[:, 0, :], a[:, 1, :]
    out = np.empty_like(a)
    out[:, 0, :] = m[0, 0] * u + m[0, 1] * v
    out[:, 1, :] = m[1, 0] * u + m[1, 1] * v
    return out.reshape(amps.shape)


def _apply_2q_raw(amps: np.ndarray, m: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    a = amps.reshape((2,) * n)
    a = np.moveaxis(a, (q0, q1), (0, 1)).reshape(4, -1)
    a = (m @ a).reshape((2, 2) + (2,) * (n - 2))
    a = np.moveaxis(a, (0, 1), (q0, q1))
    return a.reshape(amps.shape)


def _apply_gate_raw(amps: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    for q in gate.targets:
        if not 0 <= q < n:
            raise ValueError(f"gate target {q} out of range for {n} qubits")
    if gate.arity == 1:
        return _apply_1q_raw(amps, gate.matrix, gate.targets[0], n)
    return _apply_2q_raw(amps, gate.matrix, gate.targets[0], gate.targets[1], n)


def _apply_sequence_raw(amps: np.ndarray, gates, n: int) -> np.ndarray:
    for g in gates:
        amps = _apply_gate_raw(amps, g, n)
    return amps


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    """Apply a gate to the targeted qubit(s), identity elsewhere."""
    out = _apply_gate_raw(state.amplitudes, gate, state.n_qubits)
    return QuantumState(state.n_qubits, out)


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    """<a|b> = sum_j conj(a_j) b_j."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("register sizes differ")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
