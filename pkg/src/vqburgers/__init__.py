"""Desk-scale emulator of variational quantum time evolution for 1D Burgers flow.

Function values on a periodic 2^N-point grid are stored as amplitudes of an
N-qubit register (most significant qubit = coarsest length scale).  Time
stepping is explicit Euler, with each step solved as a variational overlap
maximization over a brick-wall circuit ansatz.  A finite-difference oracle and
the analytic viscous hump solution provide independent ground truth.
"""

__version__ = "0.1.0"

from .grid import Grid, GridFunction, make_uniform_grid, analytic_hump, qubits_required
from .statevector import QuantumState, Gate, init_zero_state, apply_gate, inner_product
from .encoding import (
    EncodedField,
    MpsState,
    encode,
    decode,
    to_mps,
    mps_to_state,
    chi_99,
    interscale_entropy,
)
from .ansatz import AnsatzCircuit, ParameterVector, build_ansatz, prepare, parameter_shift_grad
from .operators import (
    OperatorSpec,
    shift_plus,
    nabla,
    laplacian,
    diagonal_of,
    pauli_decompose,
    apply,
)
from .qnpu import (
    CostTerm,
    ShotModel,
    Preparation,
    overlap_bracket,
    cost,
    optimal_lambda0,
    residual_norm,
    measure_observable,
)
from .oracle import DenseStepper, fd_burgers_step, dense_residual
from .evolve import (
    EvolutionConfig,
    AdjointConfig,
    TrajectoryFrame,
    StepRejectedError,
    optimize_step,
    euler_evolve,
    adjoint_euler_evolve,
)
