"""Cost-function and observable evaluation on trial states.

The Euler-step cost is C(lambda0, lam) = lambda0^2 - 2 lambda0 W with

    W = Re{ lt0 * <psi(lam)| (I + tau (nu Lap - lt0 D_psit Grad)) |psit> },

the overlap of the trial state with the operator-advanced previous state
(lt0, psit fixed from the last step).  Expanding the squared residual
|| lambda0 psi - (1 + tau O) lt0 psit ||^2 produces exactly this cross term,
which keeps C + ||(1+tau O) f(t)||^2 equal to the true squared residual.

Two interchangeable evaluation paths:

* direct  - plain linear algebra on amplitude vectors (shift powers as index
  rolls, diagonals elementwise).
* circuit - the operator chain is flattened into a weighted sum of unitaries
  (shift permutations and Pauli strings); each part is measured by an
  ancilla-controlled Hadamard test on an (N+1)-qubit register.

In sampled mode each Hadamard-test expectation is replaced by M Bernoulli
draws with success probability (1 + Re<.>)/2, estimate 2 p_hat - 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzCircuit, gate_sequence, prepare_raw
from .encoding import EncodedField
from .operators import OperatorSpec, apply as op_apply, apply_unitary_part, unitary_terms
from .statevector import QuantumState, _apply_gate_raw

__all__ = [
    "Preparation",
    "ChainTerm",
    "CostTerm",
    "ShotModel",
    "overlap_bracket",
    "cost",
    "optimal_lambda0",
    "residual_norm",
    "measure_observable",
    "target_vector",
]


@dataclass(frozen=True, eq=False)
class Preparation:
    """A register preparation: a parameterized circuit, or a raw state.

    Raw-state preparations are a direct-backend convenience (e.g. encoded
    source terms); the circuit backend needs an actual gate sequence.
    """

    n_qubits: int
    circuit: AnsatzCircuit | None = None
    theta: np.ndarray | None = None
    raw_state: np.ndarray | None = None

    @classmethod
    def from_circuit(cls, circuit: AnsatzCircuit, theta: np.ndarray) -> "Preparation":
        return cls(n_qubits=circuit.n_qubits, circuit=circuit, theta=np.asarray(theta, float))

    @classmethod
    def from_state(cls, state: QuantumState | np.ndarray) -> "Preparation":
        amps = state.amplitudes if isinstance(state, QuantumState) else np.asarray(state)
        n = amps.size.bit_length() - 1
        return cls(n_qubits=n, raw_state=amps)

    def amplitudes(self) -> np.ndarray:
        if self.circuit is not None:
            return prepare_raw(self.circuit, self.theta)
        return self.raw_state

    def gates(self):
        if self.circuit is None:
            raise ValueError("circuit backend needs a gate-based preparation")
        return gate_sequence(self.circuit, self.theta)


@dataclass(frozen=True, eq=False)
class ChainTerm:
    """weight * (product of operator factors); factors[0] is applied last."""

    weight: float
    factors: tuple[OperatorSpec, ...] = ()


@dataclass(frozen=True, eq=False)
class CostTerm:
    """Overlap bracket between a fixed preparation and a variational trial.

    fixed     the previous-step preparation (U-tilde)
    trial     the circuit being optimized (U(lambda))
    chain     weighted sum of operator products applied to the fixed state
    prefactor scalar in front of the bracket (lambda0-tilde for Burgers)
    """

    fixed: Preparation
    trial: Preparation
    chain: tuple[ChainTerm, ...]
    prefactor: float = 1.0

    def __post_init__(self) -> None:
        n = self.trial.n_qubits
        if self.fixed.n_qubits != n:
            raise ValueError("fixed and trial registers differ in size")
        for t in self.chain:
            for f in t.factors:
                if f.n_qubits != n:
                    raise ValueError("operator register size mismatch")

    @property
    def n_qubits(self) -> int:
        return self.trial.n_qubits


@dataclass(frozen=True)
class ShotModel:
    """exact: deterministic expectations; sampled: M Bernoulli draws per part."""

    mode: str = "exact"
    shots: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "sampled"):
            raise ValueError("mode must be 'exact' or 'sampled'")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("sampled mode needs shots >= 1")


def _chain_apply(term: CostTerm, amps: np.ndarray) -> np.ndarray:
    """Apply the weighted operator chain to an amplitude vector."""
    out = np.zeros(amps.size, dtype=complex if np.iscomplexobj(amps) else float)
    for t in term.chain:
        v = amps
        for f in reversed(t.factors):
            v = op_apply(f, v)
        out = out + t.weight * v
    return out


def target_vector(term: CostTerm) -> np.ndarray:
    """prefactor * chain applied to the fixed state: the Euler-step target."""
    return term.prefactor * _chain_apply(term, term.fixed.amplitudes())


def _flatten_unitaries(term: CostTerm) -> list[tuple[complex, tuple]]:
    """Distribute chain products over each factor's sum-of-unitaries parts."""
    flat: list[tuple[complex, tuple]] = []
    for t in term.chain:
        factor_terms = [unitary_terms(f) for f in t.factors]
        if not factor_terms:
            flat.append((complex(t.weight) * term.prefactor, ()))
            continue
        for combo in itertools.product(*factor_terms):
            w = complex(t.weight) * term.prefactor
            parts = []
            for c, part in combo:
                w *= c
            # factors[0] acts last; application order is reversed
            parts = tuple(part for _, part in reversed(combo))
            flat.append((w, parts))
    return flat


def _hadamard_test(term: CostTerm, parts: tuple, imaginary: bool = False) -> tuple[float, float]:
    """Ancilla-controlled bracket <trial| V |fixed> on an (N+1)-qubit register.

    Returns (expectation, p0): the ancilla <Z> equals Re(.) (or Im(.) with the
    extra S-dagger phase) and p0 is the probability of reading ancilla 0.
    """
    n = term.n_qubits
    reg = np.zeros((2, 2**n), dtype=complex)
    reg[0, 0] = 1.0
    # H on ancilla
    r = math.sqrt(0.5)
    reg[0, :], reg[1, :] = r * (reg[0] + reg[1]), r * (reg[0] - reg[1])
    if imaginary:
        reg[1, :] *= -1j  # S-dagger on the ancilla
    # controlled application on the ancilla-1 block
    block = reg[1].copy()
    for g in term.fixed.gates():
        block = _apply_gate_raw(block, g, n)
    for part in parts:
        block = apply_unitary_part(block, part, n)
    for g in reversed(term.trial.gates()):
        block = _apply_gate_raw(block, g.dagger(), n)
    reg[1] = block
    # closing H on ancilla
    row0 = r * (reg[0] + reg[1])
    row1 = r * (reg[0] - reg[1])
    p0 = float(np.sum(np.abs(row0) ** 2))
    p1 = float(np.sum(np.abs(row1) ** 2))
    return p0 - p1, p0


def _part_bracket_direct(term: CostTerm, parts: tuple) -> complex:
    v = term.fixed.amplitudes().astype(complex)
    for part in parts:
        v = apply_unitary_part(v, part, term.n_qubits)
    return complex(np.vdot(term.trial.amplitudes().astype(complex), v))


def overlap_bracket(
    term: CostTerm, backend: str = "direct", shots: ShotModel | None = None
) -> float:
    """W = Re{prefactor * <trial| chain |fixed>} under the chosen backend."""
    if backend not in ("direct", "circuit"):
        raise ValueError("backend must be 'direct' or 'circuit'")
    shots = shots or ShotModel()
    if shots.mode == "exact" and backend == "direct":
        tv = target_vector(term)
        tr = term.trial.amplitudes()
        return float(np.real(np.vdot(np.asarray(tr, dtype=complex), tv)))

    flat = _flatten_unitaries(term)
    rng = np.random.default_rng(shots.seed) if shots.mode == "sampled" else None
    total = 0.0
    for w, parts in flat:
        need_im = abs(w.imag) > 1e-15
        if backend == "circuit":
            t_re, p0 = _hadamard_test(term, parts, imaginary=False)
            t_im = _hadamard_test(term, parts, imaginary=True)[0] if need_im else 0.0
        else:
            b = _part_bracket_direct(term, parts)
            t_re, t_im = b.real, b.imag
            p0 = 0.5 * (1.0 + t_re)
        if rng is not None:
            p = min(max(0.5 * (1.0 + t_re), 0.0), 1.0)
            t_re = 2.0 * rng.binomial(shots.shots, p) / shots.shots - 1.0
            if need_im:
                q = min(max(0.5 * (1.0 + t_im), 0.0), 1.0)
                t_im = 2.0 * rng.binomial(shots.shots, q) / shots.shots - 1.0
        total += w.real * t_re - w.imag * t_im
    return float(total)


def cost(
    lambda0: float,
    term: CostTerm,
    backend: str = "direct",
    shots: ShotModel | None = None,
) -> float:
    """C = lambda0^2 - 2 lambda0 W (the constant ||target||^2 is reported separately)."""
    w = overlap_bracket(term, backend=backend, shots=shots)
    return float(lambda0**2 - 2.0 * lambda0 * w)


def optimal_lambda0(w: float) -> tuple[float, float]:
    """Closed-form minimizer of C(lambda0) = lambda0^2 - 2 lambda0 W."""
    return float(w), float(-(w**2))


def residual_norm(term: CostTerm, lambda0: float) -> float:
    """Full squared residual ||lambda0 * trial - prefactor * chain(fixed)||^2."""
    tv = target_vector(term)
    tr = np.asarray(term.trial.amplitudes(), dtype=complex)
    return float(np.sum(np.abs(lambda0 * tr - tv) ** 2))


def measure_observable(
    fields: list[EncodedField],
    chains: list[tuple[OperatorSpec, ...]] | None = None,
    region: str | None = None,
) -> float:
    """sum_k Re{F_k} with F = f1* prod_j (O_j f_j), optionally over a coarse region.

    ``chains[j]`` is the ordered operator product applied to field j (identity
    when omitted).  A region mask is a bit string matched against the most
    significant index bits, restricting the sum to that coarse subdomain.
    """
    if not fields:
        raise ValueError("need at least one field")
    n = fields[0].state.n_qubits
    if chains is None:
        chains = [() for _ in fields]
    if len(chains) != len(fields):
        raise ValueError("one chain per field required")
    vs = []
    for f, chain in zip(fields, chains):
        if f.state.n_qubits != n:
            raise ValueError("field register sizes differ")
        v = f.lambda0 * f.state.amplitudes
        for op in reversed(chain):
            v = op_apply(op, v)
        vs.append(v)
    base = np.conj(fields[0].lambda0 * fields[0].state.amplitudes)
    prod = base
    for v in vs:
        prod = prod * v
    if region is not None:
        if len(region) > n or any(c not in "01" for c in region):
            raise ValueError("region mask must be a bit string no longer than N")
        sel = np.arange(2**n) >> (n - len(region)) == int(region, 2)
        prod = prod[sel]
    return float(np.sum(prod.real))
