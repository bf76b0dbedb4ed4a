"""Multigrid map between grid functions and qubit amplitudes, plus MPS analysis.

A field on 2^N points becomes the amplitudes of an N-qubit register after
dividing out its Euclidean norm (kept as the scale factor lambda0).  With
qubit 0 the most significant index bit, qubit significance equals length
scale: tracing out low qubits coarse-grains the field.  Scale-by-scale
Schmidt decompositions give the MPS form used to quantify interscale
correlations (entropy per cut, chi_99).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridFunction
from .statevector import QuantumState

__all__ = [
    "EncodedField",
    "MpsState",
    "encode",
    "decode",
    "to_mps",
    "mps_to_state",
    "chi_99",
    "interscale_entropy",
    "schmidt_values_at_cut",
    "chi_spectrum",
]

_CANONICAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EncodedField:
    """Normalized state plus the scale factor that restores physical units."""

    lambda0: float
    state: QuantumState
    grid: Grid | None = None

    def __post_init__(self) -> None:
        if self.lambda0 == 0:
            raise ValueError("lambda0 must be nonzero")


@dataclass(eq=False)
class MpsState:
    """Chain of Schmidt-decomposed tensors, one per qubit (scale).

    tensors[i] has legs (left bond, physical, right bond); bond 0 and bond N
    are trivial.  schmidt_values[b] holds the descending Schmidt spectrum at
    internal bond b+1, renormalized so sum(lambda^2) = 1 (canonical form).
    discarded_weights[b] records the squared weight dropped there.
    """

    tensors: list[np.ndarray]
    schmidt_values: list[np.ndarray]
    discarded_weights: list[float]

    def __post_init__(self) -> None:
        n = len(self.tensors)
        if len(self.schmidt_values) != n - 1:
            raise ValueError("need one Schmidt spectrum per internal bond")
        for b, lam in enumerate(self.schmidt_values):
            if np.any(np.diff(lam) > 1e-14):
                raise ValueError(f"Schmidt values at bond {b + 1} not descending")
            if abs(np.sum(lam**2) - 1.0) > _CANONICAL_TOL:
                raise ValueError(f"Schmidt values at bond {b + 1} not normalized")

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def total_discarded_weight(self) -> float:
        return float(sum(self.discarded_weights))

    def entropy_at(self, bond: int) -> float:
        """Interscale entanglement entropy in bits at internal bond (1..N-1)."""
        lam = self.schmidt_values[bond - 1]
        p = lam[lam > 1e-18] ** 2
        return float(-np.sum(p * np.log2(p)))


def encode(f: GridFunction) -> EncodedField:
    """Store field values as amplitudes: lambda0 = ||f||_2, a_j = f_j / lambda0."""
    lam0 = f.norm()
    if lam0 == 0:
        raise ValueError("cannot encode the all-zero field")
    amps = f.values / lam0
    state = QuantumState(f.grid.n_qubits, amps.astype(complex))
    return EncodedField(lambda0=lam0, state=state, grid=f.grid)


def decode(e: EncodedField, grid: Grid | None = None) -> GridFunction:
    """Inverse map: f_j = lambda0 * Re(a_j).  Warns when imaginary parts matter."""
    g = grid if grid is not None else e.grid
    if g is None:
        raise ValueError("decode needs the grid (none stored on the encoded field)")
    amps = e.state.amplitudes
    worst = float(np.max(np.abs(amps.imag))) if amps.size else 0.0
    if worst > 1e-8:
        warnings.warn(f"discarding imaginary amplitude content up to {worst:.3e}")
    return GridFunction(g, e.lambda0 * amps.real, tag="velocity")


def to_mps(
    state: QuantumState, chi_max: int | None = None, eps: float | None = None
) -> MpsState:
    """Scale-by-scale Schmidt decomposition with optional truncation.

    At each bond keep at most chi_max values, or all values except a tail of
    squared weight <= eps.  Kept spectra are renormalized per bond (canonical
    form); the discarded weight is recorded.
    """
    if chi_max is not None and chi_max < 1:
        raise ValueError("chi_max must be >= 1")
    n = state.n_qubits
    v = state.amplitudes.copy()
    tensors: list[np.ndarray] = []
    spectra: list[np.ndarray] = []
    discarded: list[float] = []
    chi = 1
    for _ in range(n - 1):
        m = v.reshape(chi * 2, -1)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        keep = len(s)
        if eps is not None:
            tail = np.cumsum(s[::-1] ** 2)[::-1]  # tail[i] = sum of s[i:]^2
            keep = 1
            for i in range(len(s)):
                if tail[i] <= eps:
                    keep = i
                    break
            else:
                keep = len(s)
            keep = max(keep, 1)
        if chi_max is not None:
            keep = min(keep, chi_max)
        w = float(np.sum(s[keep:] ** 2))
        s = s[:keep] / np.sqrt(max(1.0 - w, 1e-300))
        tensors.append(u[:, :keep].reshape(chi, 2, keep))
        spectra.append(s)
        discarded.append(w)
        v = (s[:, None] * vt[:keep]).reshape(-1)
        chi = keep
    tensors.append(v.reshape(chi, 2, 1))
    return MpsState(tensors=tensors, schmidt_values=spectra, discarded_weights=discarded)


def mps_to_state(m: MpsState) -> QuantumState:
    """Contract the chain back to 2^N amplitudes, renormalizing residual drift."""
    from .statevector import MAX_QUBITS

    if m.n_qubits > MAX_QUBITS:
        raise ValueError("register too large to expand")
    v = m.tensors[0].reshape(2, -1)
    for t in m.tensors[1:]:
        chi = t.shape[0]
        v = v.reshape(-1, chi) @ t.reshape(chi, -1)
        v = v.reshape(-1, t.shape[2])
    amps = v.reshape(-1)
    nrm = np.linalg.norm(amps)
    if abs(nrm - 1.0) > 1e-6:
        warnings.warn(f"contraction norm {nrm:.6f} deviates from 1; renormalizing")
    return QuantumState(m.n_qubits, amps / nrm)


def schmidt_values_at_cut(state: QuantumState, cut: int) -> np.ndarray:
    """Schmidt spectrum across the bipartition (first cut qubits | rest)."""
    n = state.n_qubits
    if not 1 <= cut <= n - 1:
        raise ValueError(f"cut must be in [1, {n - 1}]")
    m = state.amplitudes.reshape(2**cut, -1)
    return np.linalg.svd(m, compute_uv=False)


def interscale_entropy(state: QuantumState, cut: int) -> float:
    """Entanglement entropy in bits between scales coarser/finer than the cut."""
    lam = schmidt_values_at_cut(state, cut)
    p = lam[lam > 1e-18] ** 2
    return float(-np.sum(p * np.log2(p)))


def _fidelity_to(state: QuantumState, other: QuantumState) -> float:
    return abs(np.vdot(state.amplitudes, other.amplitudes)) ** 2


def chi_99(f: GridFunction | QuantumState, threshold: float = 0.99, metric: str = "fidelity") -> int:
    """Smallest uniform bond cap chi whose truncated MPS is 99% accurate.

    metric "fidelity": squared overlap >= threshold (default).
    metric "l2": relative L2 error of the amplitude vector <= 1 - threshold.
    """
    state = f if isinstance(f, QuantumState) else encode(f).state
    n = state.n_qubits
    chi_cap = 2 ** (n // 2)
    for chi in range(1, chi_cap + 1):
        rec = mps_to_state(to_mps(state, chi_max=chi))
        if metric == "fidelity":
            ok = _fidelity_to(rec, state) >= threshold
        elif metric == "l2":
            a, b = rec.amplitudes, state.amplitudes
            err = min(np.linalg.norm(a - b), np.linalg.norm(a + b))
            ok = err <= (1.0 - threshold)
        else:
            raise ValueError(f"unknown metric {metric!r}")
        if ok:
            return chi
    return chi_cap


@dataclass(eq=False)
class ChiSpectrum:
    """Per-bond report for an encoded field at its chi_99 truncation."""

    chi99: int
    bonds: list[int]
    chi_kept: list[int]
    entropy_bits: list[float]
    discarded_weight: list[float]
    schmidt_values: list[np.ndarray]


def chi_spectrum(f: GridFunction | QuantumState, metric: str = "fidelity") -> ChiSpectrum:
    state = f if isinstance(f, QuantumState) else encode(f).state
    n = state.n_qubits
    c99 = chi_99(state, metric=metric)
    full = to_mps(state)
    capped = to_mps(state, chi_max=c99)
    return ChiSpectrum(
        chi99=c99,
        bonds=list(range(1, n)),
        chi_kept=[len(s) for s in capped.schmidt_values],
        entropy_bits=[full.entropy_at(b) for b in range(1, n)],
        discarded_weight=list(capped.discarded_weights),
        schmidt_values=[s.copy() for s in full.schmidt_values],
    )
