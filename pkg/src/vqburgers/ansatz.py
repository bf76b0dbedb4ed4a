"""Brick-wall variational circuit: CZ + Ry blocks over alternating qubit pairs.

Layer 1, 3, 5, ... couples pairs (0,1), (2,3), ...; layer 2, 4, ... couples
(1,2), (3,4), ....  Each block is a CZ followed by one Ry on each of its two
qubits (two parameters per block).  An initial layer of single-qubit Ry gates
precedes layer 1 so that shallow circuits already reach non-product real
states.  All gates are real, so prepared amplitudes are real.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .statevector import Gate, QuantumState

__all__ = [
    "AnsatzCircuit",
    "ParameterVector",
    "build_ansatz",
    "prepare",
    "prepare_raw",
    "gate_sequence",
    "parameter_shift_grad",
    "overlap_with_shifts",
    "full_expressivity_depth",
    "circuit_to_json",
    "circuit_from_json",
]


@dataclass(frozen=True, eq=False)
class AnsatzCircuit:
    """Brick-wall layout plus the bookkeeping from parameter slot to gate."""

    n_qubits: int
    depth: int
    # ops: ("ry", qubit, param_index) or ("cz", lo, hi, -1)
    ops: tuple[tuple, ...]
    blocks: tuple[tuple[int, int], ...]  # (layer, lower qubit) per block
    n_parameters: int


@dataclass(eq=False)
class ParameterVector:
    """Flat rotation angles (radians, unconstrained) plus the scale factor."""

    theta: np.ndarray
    lambda0: float = 1.0

    def __post_init__(self) -> None:
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 1 or not np.all(np.isfinite(self.theta)):
            raise ValueError("theta must be a finite 1D array")
        if not math.isfinite(self.lambda0):
            raise ValueError("lambda0 must be finite")


def full_expressivity_depth(n_qubits: int) -> int:
    """Depth at which the brick wall can fit any real state (d = 2^N)."""
    return 2**n_qubits


def build_ansatz(n_qubits: int, depth: int) -> AnsatzCircuit:
    """Brick-wall circuit of the given depth; parameters indexed layer by layer."""
    if n_qubits < 2:
        raise ValueError("ansatz needs at least 2 qubits")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ops: list[tuple] = []
    blocks: list[tuple[int, int]] = []
    p = 0
    for q in range(n_qubits):
        ops.append(("ry", q, p))
        p += 1
    for layer in range(1, depth + 1):
        start = 0 if layer % 2 == 1 else 1
        for lo in range(start, n_qubits - 1, 2):
            ops.append(("cz", lo, lo + 1, -1))
            ops.append(("ry", lo, p))
            ops.append(("ry", lo + 1, p + 1))
            blocks.append((layer, lo))
            p += 2
    return AnsatzCircuit(
        n_qubits=n_qubits,
        depth=depth,
        ops=tuple(ops),
        blocks=tuple(blocks),
        n_parameters=p,
    )


# -- state preparation (real fast path + complex API) ------------------------


def _ry_raw(a: np.ndarray, q: int, theta: float) -> np.ndarray:
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    v = a.reshape(2**q, 2, -1)
    u0 = v[:, 0, :]
    u1 = v[:, 1, :]
    out = np.empty_like(v)
    out[:, 0, :] = c * u0 - s * u1
    out[:, 1, :] = s * u0 + c * u1
    return out.reshape(a.shape)


def _cz_raw(a: np.ndarray, lo: int, hi: int) -> np.ndarray:
    v = a.reshape(2**lo, 2, 2 ** (hi - lo - 1), 2, -1).copy()
    v[:, 1, :, 1, :] *= -1.0
    return v.reshape(a.shape)


def _apply_ops(amps: np.ndarray, ops, theta: np.ndarray) -> np.ndarray:
    for op in ops:
        if op[0] == "ry":
            amps = _ry_raw(amps, op[1], theta[op[2]])
        else:
            amps = _cz_raw(amps, op[1], op[2])
    return amps


def prepare_raw(circ: AnsatzCircuit, theta: np.ndarray) -> np.ndarray:
    """Real amplitude vector U(theta)|0...0> as a float64 array."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circ.n_parameters,):
        raise ValueError(
            f"expected {circ.n_parameters} parameters, got {theta.shape}"
        )
    amps = np.zeros(2**circ.n_qubits)
    amps[0] = 1.0
    return _apply_ops(amps, circ.ops, theta)


def prepare(circ: AnsatzCircuit, p: ParameterVector | np.ndarray) -> QuantumState:
    """Apply all gates in layer order to |0...0>."""
    theta = p.theta if isinstance(p, ParameterVector) else np.asarray(p, dtype=float)
    amps = prepare_raw(circ, theta)
    return QuantumState(circ.n_qubits, amps.astype(complex))


def gate_sequence(circ: AnsatzCircuit, theta: np.ndarray) -> list[Gate]:
    """The circuit as explicit Gate objects (used by the circuit backend)."""
    theta = np.asarray(theta, dtype=float)
    gates = []
    for op in circ.ops:
        if op[0] == "ry":
            gates.append(Gate.ry(theta[op[2]], op[1]))
        else:
            gates.append(Gate.cz(op[1], op[2]))
    return gates


# -- differentiation ----------------------------------------------------------


def parameter_shift_grad(circ: AnsatzCircuit, p, loss, shift: float = math.pi / 2.0) -> np.ndarray:
    """Shift-rule gradient: dL/dtheta_i = [L(theta_i + s) - L(theta_i - s)] / 2.

    Exact whenever the loss is a degree-1 trigonometric polynomial of each
    angle, as is the case for squared-overlap costs; a plain two-point rule
    otherwise.  ``loss`` is called with a full angle vector.
    """
    theta = np.array(p.theta if isinstance(p, ParameterVector) else p, dtype=float)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        t0 = theta[i]
        theta[i] = t0 + shift
        lp = loss(theta)
        theta[i] = t0 - shift
        lm = loss(theta)
        theta[i] = t0
        grad[i] = 0.5 * (lp - lm)
    return grad


def overlap_with_shifts(circ: AnsatzCircuit, theta: np.ndarray, phi: np.ndarray):
    """W(theta) = phi . U(theta)|0>, plus W at every angle shifted by +-pi/2.

    One forward and one backward pass instead of 2P re-preparations: since
    same-axis rotations compose additively, the shifted overlap is the
    unshifted circuit with one extra Ry(+-pi/2) spliced in after the gate that
    owns the parameter.  Returns (W, W_plus, W_minus).
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n = circ.n_qubits
    npar = circ.n_parameters
    fwd = np.zeros(2**n)
    fwd[0] = 1.0
    f_at = np.empty((npar, 2**n))
    for op in circ.ops:
        if op[0] == "ry":
            fwd = _ry_raw(fwd, op[1], theta[op[2]])
            f_at[op[2]] = fwd
        else:
            fwd = _cz_raw(fwd, op[1], op[2])
    w = float(phi @ fwd)

    back = phi.copy()
    b_at = np.empty((npar, 2**n))
    for op in reversed(circ.ops):
        if op[0] == "ry":
            b_at[op[2]] = back
            back = _ry_raw(back, op[1], -theta[op[2]])  # transpose of Ry is Ry(-t)
        else:
            back = _cz_raw(back, op[1], op[2])

    w_plus = np.empty(npar)
    w_minus = np.empty(npar)
    r = math.sqrt(0.5)
    for op in circ.ops:
        if op[0] != "ry":
            continue
        q, i = op[1], op[2]
        f = f_at[i].reshape(2**q, 2, -1)
        b = b_at[i].reshape(2**q, 2, -1)
        u0, u1 = f[:, 0, :], f[:, 1, :]
        b0, b1 = b[:, 0, :], b[:, 1, :]
        # Ry(+pi/2): (u0,u1) -> r(u0-u1, u0+u1); Ry(-pi/2): -> r(u0+u1, u1-u0)
        w_plus[i] = r * (np.sum(b0 * (u0 - u1)) + np.sum(b1 * (u0 + u1)))
        w_minus[i] = r * (np.sum(b0 * (u0 + u1)) + np.sum(b1 * (u1 - u0)))
    return w, w_plus, w_minus


# -- serialization ------------------------------------------------------------


def circuit_to_json(circ: AnsatzCircuit) -> str:
    n = circ.n_qubits
    blocks = [
        {"layer": layer, "pair": [lo, lo + 1], "parameters": [n + 2 * j, n + 2 * j + 1]}
        for j, (layer, lo) in enumerate(circ.blocks)
    ]
    doc = {
        "n_qubits": circ.n_qubits,
        "depth": circ.depth,
        "initial_parameters": list(range(circ.n_qubits)),
        "blocks": blocks,
        "n_parameters": circ.n_parameters,
    }
    return json.dumps(doc, indent=2)


def circuit_from_json(text: str) -> AnsatzCircuit:
    doc = json.loads(text)
    circ = build_ansatz(doc["n_qubits"], doc["depth"])
    if circ.n_parameters != doc["n_parameters"]:
        raise ValueError("parameter count mismatch in serialized circuit")
    return circ
