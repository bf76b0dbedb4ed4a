"""Hybrid time evolution: per-step variational optimization of the Euler update.

Each explicit Euler step minimizes C(lambda0, lam) = lambda0^2 - 2 lambda0 W
over the ansatz parameters.  lambda0 is eliminated in closed form
(lambda0* = W), leaving the outer optimizer to maximize W^2; the pi/2 shift
rule is exact on that loss.  The adjoint sweep reuses the same machinery
backward in time with the advection sign flipped and an optional source
injection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .ansatz import (
    AnsatzCircuit,
    ParameterVector,
    build_ansatz,
    full_expressivity_depth,
    overlap_with_shifts,
    prepare_raw,
)
from .encoding import encode
from .grid import Grid, GridFunction
from .operators import OperatorSpec, laplacian, nabla
from .qnpu import ChainTerm, CostTerm, Preparation, ShotModel, overlap_bracket

__all__ = [
    "EvolutionConfig",
    "AdjointConfig",
    "TrajectoryFrame",
    "StepRejectedError",
    "optimize_step",
    "euler_evolve",
    "adjoint_euler_evolve",
    "burgers_cost_term",
]


@dataclass
class EvolutionConfig:
    """Physics, ansatz, and optimizer settings for a variational run."""

    nu: float
    tau: float
    n_steps: int
    depth: int | None = None  # None: full-expressivity depth 2^N
    optimizer: str = "gd"  # gd (parameter shift + backtracking) | compass
    max_iters: int = 4000
    tol: float = 1e-15  # stop when the cost stops improving by more than this
    target_residual: float | None = None  # early stop once the residual is this low
    residual_ceiling: float = 1e-6  # step rejected above this after all restarts
    restarts: int = 3
    warm_start: bool = True
    shots: ShotModel = field(default_factory=ShotModel)
    backend: str = "direct"
    nonlinear: bool = True
    seed: int = 0
    allow_unstable: bool = False
    init_infidelity: float = 1e-12  # initial-projection quality target
    init_max_iters: int = 20000

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("iteration cap must be >= 1")
        if self.optimizer not in ("gd", "compass"):
            raise ValueError("optimizer must be 'gd' or 'compass'")
        if self.backend not in ("direct", "circuit"):
            raise ValueError("backend must be 'direct' or 'circuit'")


@dataclass(eq=False)
class TrajectoryFrame:
    """One accepted time level of a variational trajectory."""

    step: int
    time: float
    params: ParameterVector
    field: GridFunction
    residual: float
    iters: int
    state: np.ndarray | None = None  # cached normalized real amplitudes

    def __post_init__(self) -> None:
        if self.residual < 0:
            raise ValueError("residual must be nonnegative")


@dataclass(eq=False)
class AdjointConfig:
    """Backward-sweep inputs: stored forward fields, terminal state, source.

    forward_fields must cover every time level 0..n_steps of the primal run
    (full storage).  source may be None, a single GridFunction (steady), or
    one GridFunction per time level.  terminal defaults to the zero field.
    """

    forward_fields: list[GridFunction]
    terminal: GridFunction | None = None
    source: GridFunction | list[GridFunction] | None = None

    def source_at(self, k: int) -> GridFunction | None:
        if self.source is None:
            return None
        if isinstance(self.source, GridFunction):
            return self.source
        return self.source[k]


class StepRejectedError(RuntimeError):
    """Optimizer could not push the step residual below the acceptance ceiling."""

    def __init__(self, message: str, frames: list, diagnostics: dict):
        super().__init__(message)
        self.frames = frames
        self.diagnostics = diagnostics


# -- inner optimizers ---------------------------------------------------------


def _gd_maximize(circ, theta0, cfg, c_const, phi, w_slow, stop_residual, trace, trace_ctx):
    """Gradient descent on -W^2 with backtracking line search.

    The trial step starts from a Barzilai-Borwein estimate and backtracks
    until the Armijo condition holds.  Gradient components come from the pi/2
    shift rule applied to the squared-overlap loss, on which it is exact.
    Returns (theta, W, iterations).
    """
    theta = np.array(theta0, dtype=float)

    if w_slow is None:

        def w_only(th):
            return float(phi @ prepare_raw(circ, th))

        def w_shifts(th):
            return overlap_with_shifts(circ, th, phi)

    else:
        w_only = w_slow

        def w_shifts(th):
            w0 = w_slow(th)
            wp = np.empty(circ.n_parameters)
            wm = np.empty(circ.n_parameters)
            t = np.array(th, dtype=float)
            for i in range(t.size):
                t0 = t[i]
                t[i] = t0 + math.pi / 2
                wp[i] = w_slow(t)
                t[i] = t0 - math.pi / 2
                wm[i] = w_slow(t)
                t[i] = t0
            return w0, wp, wm

    w = w_only(theta)
    loss = -w * w
    eta = 0.25
    prev_grad = None
    prev_theta = None
    stall = 0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if stop_residual is not None and c_const - w * w <= stop_residual:
            break
        _, wp, wm = w_shifts(theta)
        # shift rule on the loss -W^2: [(-W+^2) - (-W-^2)] / 2
        grad = -0.5 * (wp - wm) * (wp + wm)
        gnorm2 = float(grad @ grad)
        if gnorm2 < 1e-32:
            break
        if prev_grad is not None:
            dth = theta - prev_theta
            dg = grad - prev_grad
            denom = float(dg @ dg)
            if denom > 0:
                bb = abs(float(dth @ dg)) / denom
                if math.isfinite(bb) and bb > 0:
                    eta = min(max(bb, 1e-6), 20.0)
        prev_grad, prev_theta = grad, theta.copy()
        improved = False
        for _ in range(40):
            cand = theta - eta * grad
            w_c = w_only(cand)
            loss_c = -w_c * w_c
            if loss_c <= loss - 1e-4 * eta * gnorm2:
                improved = True
                break
            eta *= 0.5
        if not improved:
            break
        gain = loss - loss_c
        theta, w, loss = cand, w_c, loss_c
        if trace is not None:
            trace.append(
                {
                    **trace_ctx,
                    "iter": it,
                    "W": w,
                    "lambda0": w,
                    "cost": loss,
                    "residual": c_const - w * w,
                    "shots": cfg.shots.shots if cfg.shots.mode == "sampled" else 0,
                }
            )
        if gain < cfg.tol:
            stall += 1
            if stall >= 2:
                break
        else:
            stall = 0
    return theta, w, it


def _compass_maximize(circ, theta0, cfg, c_const, phi, w_slow, stop_residual):
    """Derivative-free compass search fallback on the same loss."""
    if w_slow is None:

        def w_only(th):
            return float(phi @ prepare_raw(circ, th))

    else:
        w_only = w_slow

    theta = np.array(theta0, dtype=float)
    w = w_only(theta)
    loss = -w * w
    step = 0.5
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if stop_residual is not None and c_const - w * w <= stop_residual:
            break
        best_gain = 0.0
        best = None
        for i in range(theta.size):
            for sgn in (1.0, -1.0):
                cand = theta.copy()
                cand[i] += sgn * step
                w_c = w_only(cand)
                gain = loss - (-w_c * w_c)
                if gain > best_gain:
                    best_gain, best = gain, (cand, w_c)
        if best is None:
            step *= 0.5
            if step < 1e-10:
                break
            continue
        theta, w = best
        loss = -w * w
        if best_gain < cfg.tol:
            break
    return theta, w, it


def _maximize_overlap(circ, theta0, phi, cfg, rng, trace=None, trace_ctx=None, w_slow=None):
    """Maximize |W|, W = <psi(theta)|phi>, restarting until acceptable.

    phi is the step's fixed target vector; w_slow overrides the evaluation for
    non-direct backends or sampled shots.  Returns (theta, W, total_iters).
    """
    c_const = float(phi @ phi)
    stop_residual = cfg.target_residual
    accept = cfg.target_residual if cfg.target_residual is not None else cfg.residual_ceiling
    best = None
    total_iters = 0
    theta_start = np.array(theta0, dtype=float)
    fast_phi = phi if w_slow is None else None
    for attempt in range(cfg.restarts + 1):
        if attempt == 0:
            th0 = theta_start
        elif attempt % 2 == 1:
            th0 = theta_start + rng.normal(0.0, 0.2 * attempt, size=theta_start.size)
        else:
            th0 = rng.uniform(-math.pi, math.pi, size=theta_start.size)
        if cfg.optimizer == "compass":
            th, w, iters = _compass_maximize(
                circ, th0, cfg, c_const, fast_phi, w_slow, stop_residual
            )
        else:
            th, w, iters = _gd_maximize(
                circ, th0, cfg, c_const, fast_phi, w_slow, stop_residual,
                trace, trace_ctx or {},
            )
        total_iters += iters
        if best is None or w * w > best[1] ** 2:
            best = (th, w)
        if not math.isfinite(accept) or c_const - best[1] ** 2 <= accept:
            break
    return best[0], best[1], total_iters


# -- cost-term construction ---------------------------------------------------


def burgers_cost_term(
    prev_params: ParameterVector,
    prev_state: np.ndarray,
    circ: AnsatzCircuit,
    trial_theta: np.ndarray,
    grid: Grid,
    nu: float,
    tau: float,
    nonlinear: bool = True,
) -> CostTerm:
    """CostTerm for one Euler step: I + tau (nu Lap - lt0 D_psit Grad) on the old state."""
    n = grid.n_qubits
    h = grid.spacing
    lt0 = prev_params.lambda0
    chain = [ChainTerm(1.0), ChainTerm(tau * nu, (laplacian(n, h),))]
    if nonlinear:
        d_psit = OperatorSpec("diagonal", n, diagonal=np.asarray(prev_state, dtype=complex))
        chain.append(ChainTerm(-tau * lt0, (d_psit, nabla(n, h))))
    return CostTerm(
        fixed=Preparation.from_circuit(circ, prev_params.theta),
        trial=Preparation.from_circuit(circ, trial_theta),
        chain=tuple(chain),
        prefactor=lt0,
    )


def _step_target(prev: TrajectoryFrame, grid: Grid, nu: float, tau: float, nonlinear: bool) -> np.ndarray:
    """Euler-step target vector (1 + tau O) f(t) from the previous frame."""
    f = prev.field.values
    h = grid.spacing
    lap = (np.roll(f, -1) - 2.0 * f + np.roll(f, 1)) / h**2
    out = f + tau * nu * lap
    if nonlinear:
        grad = (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * h)
        out = out - tau * f * grad
    return out


def _adjoint_step_target(
    fh: np.ndarray,
    forward_field: GridFunction,
    source: GridFunction | None,
    grid: Grid,
    nu: float,
    tau: float,
) -> np.ndarray:
    """Backward step target (1 + tau (nu Lap + D_f Grad)) fhat + tau S."""
    h = grid.spacing
    lap = (np.roll(fh, -1) - 2.0 * fh + np.roll(fh, 1)) / h**2
    grad = (np.roll(fh, -1) - np.roll(fh, 1)) / (2.0 * h)
    out = fh + tau * (nu * lap + forward_field.values * grad)
    if source is not None:
        out = out + tau * source.values
    return out


# -- step and trajectory drivers ----------------------------------------------


def _frame_from_theta(circ, theta, w, phi, grid, step, tau, iters, tag="velocity"):
    psi = prepare_raw(circ, theta)
    lam0 = w
    residual = float(np.sum((lam0 * psi - phi) ** 2))
    return TrajectoryFrame(
        step=step,
        time=step * tau,
        params=ParameterVector(theta=np.array(theta, dtype=float), lambda0=lam0),
        field=GridFunction(grid, lam0 * psi, tag=tag),
        residual=residual,
        iters=iters,
        state=psi,
    )


def _zero_frame(circ, theta, grid, step, tau, tag="adjoint velocity"):
    psi = prepare_raw(circ, theta)
    return TrajectoryFrame(
        step=step,
        time=step * tau,
        params=ParameterVector(theta=np.array(theta, dtype=float), lambda0=0.0),
        field=GridFunction(grid, np.zeros(grid.n_points), tag=tag),
        residual=0.0,
        iters=0,
        state=psi,
    )


def _optimize_to_target(circ, theta0, phi, cfg, rng, grid, step, trace=None, w_slow=None, tag="velocity"):
    """Shared step solver: fit lambda0 * psi(theta) to the target vector phi."""
    c_const = float(phi @ phi)
    if c_const == 0.0:
        return _zero_frame(circ, theta0, grid, step, cfg.tau, tag=tag)
    ctx = {"step": step}
    theta, w, iters = _maximize_overlap(
        circ, theta0, phi, cfg, rng, trace=trace, trace_ctx=ctx, w_slow=w_slow
    )
    frame = _frame_from_theta(circ, theta, w, phi, grid, step, cfg.tau, iters, tag=tag)
    if frame.residual > cfg.residual_ceiling:
        raise StepRejectedError(
            f"step {step}: residual {frame.residual:.3e} above ceiling "
            f"{cfg.residual_ceiling:.3e} after {cfg.restarts} restarts",
            frames=[],
            diagnostics={
                "step": step,
                "residual": frame.residual,
                "ceiling": cfg.residual_ceiling,
                "iterations": iters,
                "target_norm_sq": c_const,
            },
        )
    return frame


def optimize_step(
    prev: TrajectoryFrame,
    cfg: EvolutionConfig,
    circ: AnsatzCircuit,
    grid: Grid,
    rng: np.random.Generator | None = None,
    trace: list | None = None,
) -> TrajectoryFrame:
    """Advance one Euler step variationally from an accepted frame."""
    rng = rng or np.random.default_rng(cfg.seed)
    phi = _step_target(prev, grid, cfg.nu, cfg.tau, cfg.nonlinear)
    w_slow = None
    if not (cfg.backend == "direct" and cfg.shots.mode == "exact"):
        prev_state = prev.state if prev.state is not None else prepare_raw(circ, prev.params.theta)

        def w_slow(theta, _ps=prev_state):
            term = burgers_cost_term(
                prev.params, _ps, circ, theta, grid, cfg.nu, cfg.tau, cfg.nonlinear
            )
            return overlap_bracket(term, backend=cfg.backend, shots=cfg.shots)

    theta0 = (
        prev.params.theta
        if cfg.warm_start
        else rng.uniform(-math.pi, math.pi, circ.n_parameters)
    )
    return _optimize_to_target(
        circ, theta0, phi, cfg, rng, grid, prev.step + 1, trace=trace, w_slow=w_slow
    )


def _stability_guard(grid: Grid, cfg: EvolutionConfig) -> None:
    limit = grid.spacing**2 / (2.0 * cfg.nu) if cfg.nu > 0 else math.inf
    if cfg.tau > 10.0 * limit and not cfg.allow_unstable:
        raise ValueError(
            f"tau = {cfg.tau:.3e} exceeds 10x the explicit-diffusion limit {limit:.3e}"
        )
    if cfg.tau > limit:
        warnings.warn(
            f"tau = {cfg.tau:.3e} above the stability guard h^2/(2 nu) = {limit:.3e}"
        )


def _fit_field(circ, target: GridFunction, cfg, rng, step, trace=None, tag="velocity"):
    """Project a field onto the ansatz by maximizing overlap fidelity."""
    phi = target.values
    fit_cfg = replace(
        cfg,
        max_iters=cfg.init_max_iters,
        target_residual=cfg.init_infidelity * float(phi @ phi),
        residual_ceiling=math.inf,
        restarts=max(cfg.restarts, 4),
    )
    theta0 = rng.normal(0.0, 0.2, size=circ.n_parameters)
    return _optimize_to_target(circ, theta0, phi, fit_cfg, rng, target.grid, step, trace=trace, tag=tag)


def euler_evolve(
    initial: GridFunction, cfg: EvolutionConfig, trace: list | None = None
) -> list[TrajectoryFrame]:
    """Variational Euler trajectory from an initial field; emits every frame.

    The initial condition is projected onto the ansatz by a fidelity
    pre-optimization.  Raises StepRejectedError (carrying the partial
    trajectory) if a step cannot meet the acceptance ceiling.
    """
    grid = initial.grid
    _stability_guard(grid, cfg)
    depth = cfg.depth if cfg.depth is not None else full_expressivity_depth(grid.n_qubits)
    circ = build_ansatz(grid.n_qubits, depth)
    rng = np.random.default_rng(cfg.seed)
    encode(initial)  # validates the field is encodable (nonzero, finite)
    frames = [_fit_field(circ, initial, cfg, rng, step=0, trace=trace)]
    for _ in range(cfg.n_steps):
        try:
            frames.append(optimize_step(frames[-1], cfg, circ, grid, rng=rng, trace=trace))
        except StepRejectedError as err:
            err.frames = frames
            raise
    return frames


def adjoint_euler_evolve(
    adj_cfg: AdjointConfig, cfg: EvolutionConfig, trace: list | None = None
) -> list[TrajectoryFrame]:
    """Backward sweep of the adjoint equation over a stored forward trajectory.

    Integrates fhat(t - tau) = (1 + tau (nu Lap + D_f Grad)) fhat(t) + tau S
    from the terminal condition down to t = 0, with the forward field taken at
    the earlier time level of each step (the level whose forward Jacobian the
    step mirrors).  Returns frames indexed by time level, fhat(k tau) at
    index k.
    """
    forward = adj_cfg.forward_fields
    if len(forward) < 2:
        raise ValueError("forward trajectory must cover at least one step")
    grid = forward[0].grid
    n_steps = len(forward) - 1
    depth = cfg.depth if cfg.depth is not None else full_expressivity_depth(grid.n_qubits)
    circ = build_ansatz(grid.n_qubits, depth)
    rng = np.random.default_rng(cfg.seed)

    terminal = adj_cfg.terminal
    tag = "adjoint velocity"
    if terminal is None or float(np.sum(terminal.values**2)) == 0.0:
        frames_rev = [_zero_frame(circ, np.zeros(circ.n_parameters), grid, n_steps, cfg.tau)]
    else:
        fit = _fit_field(circ, terminal, cfg, rng, step=n_steps, trace=trace, tag=tag)
        frames_rev = [fit]

    for k in range(n_steps - 1, -1, -1):
        adj_next = frames_rev[-1]
        phi = _adjoint_step_target(
            adj_next.field.values, forward[k], adj_cfg.source_at(k), grid, cfg.nu, cfg.tau
        )
        theta0 = (
            adj_next.params.theta
            if cfg.warm_start
            else rng.uniform(-math.pi, math.pi, circ.n_parameters)
        )
        try:
            frame = _optimize_to_target(
                circ, theta0, phi, cfg, rng, grid, k, trace=trace, tag=tag
            )
        except StepRejectedError as err:
            err.frames = list(reversed(frames_rev))
            raise
        frames_rev.append(frame)
    return list(reversed(frames_rev))
