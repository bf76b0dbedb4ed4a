"""Discrete linear operators on the amplitude register.

Representation variants: a weighted sum of cyclic-shift powers, a Pauli-string
sum, a coordinate-space diagonal, or an explicit dense matrix (small N only).
Sign convention fixed globally: (S+ a)_k = a_{k-1}, i.e. S+|k> = |k+1 mod 2^N>,
so nabla = (S+^-1 - S+)/(2h) gives (f_{k+1} - f_{k-1})/(2h).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .statevector import QuantumState

__all__ = [
    "OperatorSpec",
    "shift_plus",
    "nabla",
    "laplacian",
    "diagonal_of",
    "identity_op",
    "pauli_decompose",
    "apply",
    "to_dense",
    "adjoint",
    "unitary_terms",
    "shift_cascade",
    "apply_cascade",
    "pauli_sum_to_text",
    "pauli_sum_from_text",
]

DENSE_CAP = 8  # largest N for which a dense 2^N x 2^N build is allowed
PAULI_CAP = 6  # largest N for brute-force Pauli decomposition

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PAULI_TENSOR = np.stack([_PAULI_MATS[c] for c in "IXYZ"])  # (4, 2, 2)


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Linear operator in one of four interchangeable representations.

    kind        one of "shift", "pauli", "diagonal", "dense"
    shift_terms tuples (coeff, power) meaning coeff * S+^power
    pauli_terms tuples (coeff, string) with one I/X/Y/Z letter per qubit,
                leftmost letter = qubit 0 = most significant bit
    scale       physical prefactor (e.g. 1/h^2) applied on top of the terms
    """

    kind: str
    n_qubits: int
    shift_terms: tuple[tuple[complex, int], ...] = ()
    pauli_terms: tuple[tuple[complex, str], ...] = ()
    diagonal: np.ndarray | None = None
    dense: np.ndarray | None = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("shift", "pauli", "diagonal", "dense"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        n = self.n_qubits
        if self.kind == "pauli":
            for _, s in self.pauli_terms:
                if len(s) != n or any(c not in "IXYZ" for c in s):
                    raise ValueError(f"bad Pauli string {s!r} for {n} qubits")
        if self.kind == "diagonal":
            d = np.asarray(self.diagonal, dtype=complex)
            if d.shape != (2**n,):
                raise ValueError("diagonal length must be 2^N")
            object.__setattr__(self, "diagonal", d)
        if self.kind == "dense":
            if n > DENSE_CAP:
                raise ValueError(f"dense representation capped at N <= {DENSE_CAP}")
            m = np.asarray(self.dense, dtype=complex)
            if m.shape != (2**n, 2**n):
                raise ValueError("dense matrix must be 2^N x 2^N")
            object.__setattr__(self, "dense", m)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


def identity_op(n_qubits: int) -> OperatorSpec:
    return OperatorSpec("shift", n_qubits, shift_terms=((1.0, 0),))


def shift_plus(n_qubits: int) -> OperatorSpec:
    """Cyclic increment S+|k> = |k+1 mod 2^N> (a permutation, hence unitary)."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    return OperatorSpec("shift", n_qubits, shift_terms=((1.0, 1),))


def nabla(n_qubits: int, h: float) -> OperatorSpec:
    """Central difference: (grad f)_k = (f_{k+1} - f_{k-1}) / (2h), periodic."""
    if h <= 0:
        raise ValueError("grid spacing must be positive")
    return OperatorSpec(
        "shift", n_qubits, shift_terms=((1.0, -1), (-1.0, 1)), scale=1.0 / (2.0 * h)
    )


def laplacian(n_qubits: int, h: float) -> OperatorSpec:
    """Second difference: (lap f)_k = (f_{k+1} - 2 f_k + f_{k-1}) / h^2, periodic."""
    if h <= 0:
        raise ValueError("grid spacing must be positive")
    return OperatorSpec(
        "shift", n_qubits, shift_terms=((1.0, -1), (-2.0, 0), (1.0, 1)), scale=1.0 / h**2
    )


def diagonal_of(f) -> OperatorSpec:
    """Coordinate-space diagonal with the field's values on the diagonal.

    Accepts a GridFunction or an EncodedField (uses lambda0 * amplitudes).
    """
    values = getattr(f, "values", None)
    if values is None:
        # EncodedField: decoded entries lambda0 * psi_k
        state = f.state
        values = f.lambda0 * state.amplitudes
        n = state.n_qubits
    else:
        values = np.asarray(values)
        n = f.grid.n_qubits
    return OperatorSpec("diagonal", n, diagonal=np.asarray(values, dtype=complex))


# -- application ------------------------------------------------------------


def _string_apply(amps: np.ndarray, s: str, n: int) -> np.ndarray:
    out = amps
    for q, c in enumerate(s):
        if c == "I":
            continue
        a = out.reshape(2**q, 2, -1)
        new = np.empty_like(a)
        if c == "X":
            new[:, 0, :] = a[:, 1, :]
            new[:, 1, :] = a[:, 0, :]
        elif c == "Y":
            new[:, 0, :] = -1j * a[:, 1, :]
            new[:, 1, :] = 1j * a[:, 0, :]
        else:  # Z
            new[:, 0, :] = a[:, 0, :]
            new[:, 1, :] = -a[:, 1, :]
        out = new.reshape(amps.shape)
    return out


def apply(op: OperatorSpec, state) -> np.ndarray:
    """Apply the operator in its native representation; result may be unnormalized."""
    amps = state.amplitudes if isinstance(state, QuantumState) else np.asarray(state)
    if amps.shape != (op.dim,):
        raise ValueError(f"state size {amps.shape} does not match operator on {op.n_qubits} qubits")
    if op.kind == "shift":
        out = np.zeros_like(amps, dtype=complex if np.iscomplexobj(amps) else float)
        for c, p in op.shift_terms:
            term = np.roll(amps, p)
            out = out + c * term
    elif op.kind == "diagonal":
        out = op.diagonal * amps
    elif op.kind == "pauli":
        out = np.zeros(op.dim, dtype=complex)
        for c, s in op.pauli_terms:
            out = out + c * _string_apply(np.asarray(amps, dtype=complex), s, op.n_qubits)
    else:
        out = op.dense @ amps
    return out * op.scale


def to_dense(op: OperatorSpec) -> np.ndarray:
    """Dense matrix of any variant, for small-N cross checks."""
    if op.n_qubits > DENSE_CAP:
        raise ValueError(f"dense conversion capped at N <= {DENSE_CAP}")
    d = op.dim
    if op.kind == "dense":
        return op.dense * op.scale
    if op.kind == "diagonal":
        return np.diag(op.diagonal) * op.scale
    if op.kind == "shift":
        m = np.zeros((d, d), dtype=complex)
        eye = np.eye(d)
        for c, p in op.shift_terms:
            m += c * np.roll(eye, p, axis=0)
        return m * op.scale
    m = np.zeros((d, d), dtype=complex)
    for c, s in op.pauli_terms:
        term = np.array([[1.0 + 0j]])
        for ch in s:
            term = np.kron(term, _PAULI_MATS[ch])
        m += c * term
    return m * op.scale


def adjoint(op: OperatorSpec) -> OperatorSpec:
    if op.kind == "shift":
        terms = tuple((np.conj(c), -p) for c, p in op.shift_terms)
        return OperatorSpec("shift", op.n_qubits, shift_terms=terms, scale=op.scale)
    if op.kind == "diagonal":
        return OperatorSpec("diagonal", op.n_qubits, diagonal=np.conj(op.diagonal), scale=op.scale)
    if op.kind == "pauli":
        terms = tuple((np.conj(c), s) for c, s in op.pauli_terms)
        return OperatorSpec("pauli", op.n_qubits, pauli_terms=terms, scale=op.scale)
    return OperatorSpec("dense", op.n_qubits, dense=op.dense.conj().T, scale=op.scale)


# -- Pauli decomposition ------------------------------------------------------


def _fwht(a: np.ndarray) -> np.ndarray:
    """In-place fast Walsh-Hadamard transform (no normalization)."""
    a = a.copy()
    h = 1
    n = a.size
    while h < n:
        a = a.reshape(-1, 2, h)
        x, y = a[:, 0, :].copy(), a[:, 1, :].copy()
        a[:, 0, :] = x + y
        a[:, 1, :] = x - y
        a = a.reshape(n)
        h *= 2
    return a


def _diagonal_pauli_terms(diag: np.ndarray, n: int, drop_tol: float) -> tuple:
    """I/Z-string expansion of a diagonal via the Walsh-Hadamard transform."""
    coeffs = _fwht(np.asarray(diag, dtype=complex)) / diag.size
    terms = []
    for z in range(diag.size):
        c = coeffs[z]
        if abs(c) <= drop_tol:
            continue
        s = "".join("Z" if (z >> (n - 1 - q)) & 1 else "I" for q in range(n))
        terms.append((complex(c), s))
    return tuple(terms)


def pauli_decompose(op: OperatorSpec, drop_tol: float = 1e-12) -> OperatorSpec:
    """Expand into Pauli strings: c_s = Tr(P_s M) / 2^N over all 4^N strings.

    Brute force via the dense matrix; capped at N <= 6.  Strings with
    |c_s| <= drop_tol are dropped.
    """
    n = op.n_qubits
    if n > PAULI_CAP:
        raise ValueError(f"brute-force Pauli decomposition capped at N <= {PAULI_CAP}")
    if op.kind == "pauli":
        return op
    if op.kind == "diagonal":
        terms = _diagonal_pauli_terms(op.diagonal * op.scale, n, drop_tol)
        return OperatorSpec("pauli", n, pauli_terms=terms)
    m = to_dense(op)
    # contract the (row, col) index pair of each qubit with the Pauli basis
    t = m.reshape((2,) * (2 * n))
    for q in range(n - 1, -1, -1):
        nrem = q + 1  # qubits not yet contracted
        t = np.tensordot(t, _PAULI_TENSOR, axes=([2 * nrem - 1, nrem - 1], [1, 2]))
    # axes are now (a_{N-1}, ..., a_0)
    coeffs = np.transpose(t, tuple(range(n - 1, -1, -1))) / 2**n
    letters = "IXYZ"
    terms = []
    it = np.nditer(coeffs, flags=["multi_index"])
    for c in it:
        c = complex(c)
        if abs(c) <= drop_tol:
            continue
        s = "".join(letters[a] for a in it.multi_index)
        terms.append((c, s))
    return OperatorSpec("pauli", n, pauli_terms=tuple(terms))


# -- sum-of-unitaries view (feeds the circuit backend) -----------------------


def unitary_terms(op: OperatorSpec) -> list[tuple[complex, tuple]]:
    """Flatten into weighted unitary parts.

    Each part is ("shift", power) or ("pauli", string); both are unitary and
    directly realizable as gate sequences.  Non-unitary variants (diagonal,
    dense) go through their Pauli expansion.
    """
    if op.kind == "shift":
        return [(complex(c) * op.scale, ("shift", p)) for c, p in op.shift_terms]
    if op.kind == "pauli":
        return [(complex(c) * op.scale, ("pauli", s)) for c, s in op.pauli_terms]
    decomposed = pauli_decompose(op)
    return [(complex(c), ("pauli", s)) for c, s in decomposed.pauli_terms]


def apply_unitary_part(amps: np.ndarray, part: tuple, n: int) -> np.ndarray:
    kind, payload = part
    if kind == "shift":
        return np.roll(amps, payload)
    return _string_apply(np.asarray(amps, dtype=complex), payload, n)


# -- adder cascade ------------------------------------------------------------


def shift_cascade(n_qubits: int) -> list[tuple[tuple[int, ...], int]]:
    """Gate-level increment: multi-controlled X cascade, most significant first.

    Returns (controls, target) pairs; controls are all lower-significance
    qubits of the target.  Composing the flips reproduces S+ exactly.
    """
    gates = []
    for target in range(n_qubits):
        controls = tuple(range(target + 1, n_qubits))
        gates.append((controls, target))
    return gates


def apply_cascade(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """Apply the increment cascade gate by gate (reference path for tests)."""
    out = np.asarray(amps).copy()
    idx = np.arange(out.size)
    for controls, target in shift_cascade(n_qubits):
        ctrl_mask = 0
        for c in controls:
            ctrl_mask |= 1 << (n_qubits - 1 - c)
        active = (idx & ctrl_mask) == ctrl_mask
        flip = idx ^ (1 << (n_qubits - 1 - target))
        new = out.copy()
        new[flip[active]] = out[idx[active]]
        out = new
    return out


# -- text serialization -------------------------------------------------------


def pauli_sum_to_text(op: OperatorSpec) -> str:
    """One line per term: coeff_re coeff_im STRING."""
    if op.kind != "pauli":
        raise ValueError("text serialization is for Pauli sums")
    lines = [f"{(c * op.scale).real!r} {(c * op.scale).imag!r} {s}" for c, s in op.pauli_terms]
    return "\n".join(lines) + "\n"


def pauli_sum_from_text(text: str) -> OperatorSpec:
    terms = []
    n = None
    for line in text.strip().splitlines():
        re_s, im_s, s = line.split()
        terms.append((complex(float(re_s), float(im_s)), s))
        n = len(s)
    if not terms:
        raise ValueError("empty Pauli sum")
    return OperatorSpec("pauli", n, pauli_terms=tuple(terms))
