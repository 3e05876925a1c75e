"""Network dynamics: integral-feedback mirror flow and its discretizations.

The simulator advances the stacked dual variable with the sum of local
gradients, Laplacian disagreement, and the integral-feedback state, then
maps back to primal space through the mirror map:

    dual'     = dual - dt * (grad + lap @ primal + feedback)
    feedback' = feedback + dt * lap @ primal
    primal'   = gradient_inverse(dual')

States are (n_agents, dim) arrays, one row per agent. A reduced
simulation in deviation coordinates (primal offset from the optimum plus
a consensus-free memory variable) cross-validates the full one, and
feedback-free baselines with constant or diminishing step sizes provide
the comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    DomainViolationError,
    InvalidParameterError,
    NumericalOverflowError,
    SingularHessianError,
)
from .graph import Graph, SpectralDecomposition
from .mirror import DistanceGenerator
from .objective import CostSet, closed_form_optimum

# state norm beyond which a run is declared divergent and stopped
_DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class NetworkState:
    """Per-agent primal/dual/feedback triple at one time point."""

    primal: np.ndarray
    dual: np.ndarray
    feedback: np.ndarray
    time: float

    def __post_init__(self):
        primal = _as_state_array(self.primal)
        dual = _as_state_array(self.dual)
        feedback = _as_state_array(self.feedback)
        if not (primal.shape == dual.shape == feedback.shape):
            raise DimensionMismatchError(
                f"state blocks disagree: {primal.shape}, {dual.shape}, "
                f"{feedback.shape}"
            )
        object.__setattr__(self, "primal", primal)
        object.__setattr__(self, "dual", dual)
        object.__setattr__(self, "feedback", feedback)

    @property
    def n_agents(self) -> int:
        return self.primal.shape[0]

    @property
    def dim(self) -> int:
        return self.primal.shape[1]


@dataclass(frozen=True)
class Equilibrium:
    """Stationary point of the flow: consensus at the global optimum.

    Every agent sits at the optimum, the feedback variable absorbs the
    local gradients there (they sum to zero but are individually
    nonzero), and the dual block is the mirror image of the primal.
    """

    primal: np.ndarray
    dual: np.ndarray
    feedback: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.primal.shape[0]

    @property
    def dim(self) -> int:
        return self.primal.shape[1]

    @property
    def optimum(self) -> np.ndarray:
        return self.primal[0]


@dataclass(frozen=True)
class Trajectory:
    """Snapshot record of one run plus optional per-step scalar metrics.

    Snapshots are subsampled at the configured stride (step 0 and the
    final step are always present) so long runs stay small; the scalar
    track, recorded every step when a reference optimum is available,
    carries suboptimality and consensus diagnostics at full resolution.
    """

    steps: np.ndarray
    times: np.ndarray
    primal: np.ndarray
    dual: np.ndarray
    feedback: np.ndarray
    diverged: bool = False
    metadata: dict = field(default_factory=dict)
    scalar_track: dict | None = None

    def __post_init__(self):
        if len(self.times) >= 2 and not np.all(np.diff(self.times) > 0):
            raise InvalidParameterError("snapshot times must strictly increase")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def n_agents(self) -> int:
        return self.primal.shape[1]

    @property
    def dim(self) -> int:
        return self.primal.shape[2]

    def state_at(self, index: int) -> NetworkState:
        return NetworkState(
            primal=self.primal[index],
            dual=self.dual[index],
            feedback=self.feedback[index],
            time=float(self.times[index]),
        )

    @property
    def final_state(self) -> NetworkState:
        return self.state_at(len(self) - 1)


@dataclass(frozen=True)
class ReducedState:
    """Deviation coordinates: primal offset and consensus-free memory.

    ``offset`` is primal minus the optimum block; ``memory`` has one row
    per non-consensus Laplacian direction and reconstructs the feedback
    deviation through the square-root Laplacian.
    """

    offset: np.ndarray
    memory: np.ndarray
    time: float


@dataclass(frozen=True)
class ReducedTrajectory:
    steps: np.ndarray
    times: np.ndarray
    offset: np.ndarray
    memory: np.ndarray
    diverged: bool = False
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.steps)

    def state_at(self, index: int) -> ReducedState:
        return ReducedState(
            offset=self.offset[index],
            memory=self.memory[index],
            time=float(self.times[index]),
        )


def _as_state_array(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatchError(
            f"expected (n_agents, dim) array, got shape {arr.shape}"
        )
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def initial_state(dgf: DistanceGenerator, x0) -> NetworkState:
    """Start the flow at per-agent primal points with zero feedback."""
    primal = _as_state_array(x0)
    if primal.shape[1] != dgf.dim:
        raise DimensionMismatchError(
            f"initial points have dim {primal.shape[1]}, mirror map has {dgf.dim}"
        )
    dual = dgf.gradient(primal)
    feedback = np.zeros_like(primal)
    return NetworkState(primal=primal, dual=dual, feedback=feedback, time=0.0)


def equilibrium_state(
    cost_set: CostSet,
    dgf: DistanceGenerator,
    x_star=None,
) -> Equilibrium:
    """Stationary state over the network for a known or solvable optimum."""
    if x_star is None:
        x_star = closed_form_optimum(cost_set)
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (cost_set.dim,):
        raise DimensionMismatchError(
            f"optimum must have shape ({cost_set.dim},), got {x_star.shape}"
        )
    primal = np.tile(x_star, (cost_set.n_agents, 1))
    feedback = -cost_set.gradient_stack(primal)
    dual = dgf.gradient(primal)
    return Equilibrium(primal=primal, dual=dual, feedback=feedback)


def vector_field(
    state: NetworkState,
    cost_set: CostSet,
    graph: Graph,
    dgf: DistanceGenerator,
) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-time derivatives (dual rate, feedback rate).

    The primal block is recomputed from the dual through the mirror map
    rather than read from the state, so slightly inconsistent states
    still evaluate the field of the underlying ODE.
    """
    _check_shapes(state.primal, cost_set, graph, dgf)
    primal = dgf.gradient_inverse(state.dual)
    grads = cost_set.gradient_stack(primal)
    disagreement = graph.laplacian @ primal
    dual_rate = -(grads + disagreement + state.feedback)
    return dual_rate, disagreement.copy()


def euler_step(
    state: NetworkState,
    dt: float,
    cost_set: CostSet,
    graph: Graph,
    dgf: DistanceGenerator,
) -> NetworkState:
    """One explicit Euler step of the discretized flow."""
    if dt <= 0:
        raise InvalidParameterError(f"step size must be positive, got {dt}")
    _check_shapes(state.primal, cost_set, graph, dgf)
    grads = cost_set.gradient_stack(state.primal)
    disagreement = graph.laplacian @ state.primal
    dual = state.dual - dt * (grads + disagreement + state.feedback)
    feedback = state.feedback + dt * disagreement
    primal = dgf.gradient_inverse(dual)
    return NetworkState(
        primal=primal, dual=dual, feedback=feedback, time=state.time + dt
    )


def simulate(
    cost_set: CostSet,
    graph: Graph,
    dgf: DistanceGenerator,
    x0,
    dt: float,
    steps: int,
    stride: int = 1,
    x_star=None,
    divergence_guard: float = _DIVERGENCE_GUARD,
    metadata: dict | None = None,
) -> Trajectory:
    """Run the integral-feedback dynamics for a fixed number of steps.

    Snapshots are kept every ``stride`` steps. When ``x_star`` is given,
    per-step suboptimality (global objective at agent 1 minus the
    optimal value), consensus error, and distance to the optimum are
    tracked at full resolution. A state norm beyond the divergence guard
    or a mirror-map overflow stops the run early with the ``diverged``
    flag set; the trajectory up to that point is returned.
    """
    state = initial_state(dgf, x0)
    _check_shapes(state.primal, cost_set, graph, dgf)
    if dt <= 0:
        raise InvalidParameterError(f"step size must be positive, got {dt}")
    if steps < 0 or stride < 1:
        raise InvalidParameterError("steps must be >= 0 and stride >= 1")

    lap = graph.laplacian
    primal = state.primal.copy()
    dual = state.dual.copy()
    feedback = state.feedback.copy()

    recorder = _Recorder(stride)
    recorder.snapshot(0, 0.0, primal, dual, feedback)
    tracker = _ScalarTracker(cost_set, x_star)
    tracker.record(0, 0.0, primal)

    diverged = False
    for k in range(steps):
        grads = cost_set.gradient_stack(primal)
        disagreement = lap @ primal
        dual -= dt * (grads + disagreement + feedback)
        feedback += dt * disagreement
        try:
            primal = dgf.gradient_inverse(dual)
        except NumericalOverflowError:
            # snapshots hold only completed consistent steps; stop here
            diverged = True
            break
        step = k + 1
        tracker.record(step, step * dt, primal)
        if not _state_bounded(primal, dual, feedback, guard=divergence_guard):
            diverged = True
            recorder.snapshot(step, step * dt, primal, dual, feedback)
            break
        if step % stride == 0 or step == steps:
            recorder.snapshot(step, step * dt, primal, dual, feedback)

    meta = dict(metadata or {})
    meta.setdefault("scheme", "integral-feedback euler")
    meta.update(dt=dt, steps=steps, stride=stride, dgf=dgf.name)
    return recorder.build(
        diverged=diverged, metadata=meta, scalar_track=tracker.build()
    )


def simulate_no_feedback(
    cost_set: CostSet,
    graph: Graph,
    dgf: DistanceGenerator,
    x0,
    eta0: float,
    steps: int,
    schedule: str = "diminishing",
    stride: int = 1,
    x_star=None,
    divergence_guard: float = _DIVERGENCE_GUARD,
    metadata: dict | None = None,
) -> Trajectory:
    """Feedback-free distributed mirror descent baseline.

    The dual update drops the integral term and scales the gradient plus
    disagreement by eta0/sqrt(k+1) (diminishing) or eta0 (constant).
    The exact update form is declared in metadata as "baseline
    definition v1" since it is a choice, not a given.
    """
    if schedule not in ("diminishing", "constant"):
        raise InvalidParameterError(
            f"schedule must be 'diminishing' or 'constant', got {schedule!r}"
        )
    if eta0 < 0:
        raise InvalidParameterError(f"eta0 must be nonnegative, got {eta0}")
    state = initial_state(dgf, x0)
    _check_shapes(state.primal, cost_set, graph, dgf)
    if steps < 0 or stride < 1:
        raise InvalidParameterError("steps must be >= 0 and stride >= 1")

    lap = graph.laplacian
    primal = state.primal.copy()
    dual = state.dual.copy()
    zeros = np.zeros_like(primal)

    recorder = _Recorder(stride)
    recorder.snapshot(0, 0.0, primal, dual, zeros)
    tracker = _ScalarTracker(cost_set, x_star)
    tracker.record(0, 0.0, primal)

    diverged = False
    elapsed = 0.0
    for k in range(steps):
        eta = eta0 / np.sqrt(k + 1.0) if schedule == "diminishing" else eta0
        grads = cost_set.gradient_stack(primal)
        dual -= eta * (grads + lap @ primal)
        try:
            primal = dgf.gradient_inverse(dual)
        except NumericalOverflowError:
            # snapshots hold only completed consistent steps; stop here
            diverged = True
            break
        step = k + 1
        elapsed += eta
        tracker.record(step, elapsed, primal)
        if not _state_bounded(primal, dual, guard=divergence_guard):
            diverged = True
            recorder.snapshot(step, elapsed, primal, dual, zeros)
            break
        if step % stride == 0 or step == steps:
            recorder.snapshot(step, elapsed, primal, dual, zeros)

    meta = dict(metadata or {})
    meta.update(
        scheme="baseline definition v1",
        schedule=schedule,
        eta0=eta0,
        steps=steps,
        stride=stride,
        dgf=dgf.name,
    )
    return recorder.build(
        diverged=diverged, metadata=meta, scalar_track=tracker.build()
    )


def centralized_mirror_descent(
    cost,
    dgf: DistanceGenerator,
    x0,
    dt: float,
    steps: int,
    stride: int = 1,
) -> Trajectory:
    """Single-point mirror descent on the summed objective.

    Serves as the centralized oracle; it coincides step for step with
    the network simulation on a single agent, where the Laplacian action
    is empty and the feedback variable never leaves zero.
    """
    gradient = cost.global_gradient if isinstance(cost, CostSet) else cost.gradient
    if dt <= 0:
        raise InvalidParameterError(f"step size must be positive, got {dt}")
    x = np.asarray(x0, dtype=float).reshape(-1)
    z = dgf.gradient(x)
    zeros = np.zeros_like(x)

    recorder = _Recorder(stride)
    recorder.snapshot(0, 0.0, x[None, :], z[None, :], zeros[None, :])
    diverged = False
    for k in range(steps):
        z = z - dt * gradient(x)
        try:
            x = dgf.gradient_inverse(z)
        except NumericalOverflowError:
            # snapshots hold only completed consistent steps; stop here
            diverged = True
            break
        step = k + 1
        if not _state_bounded(x, z, guard=_DIVERGENCE_GUARD):
            diverged = True
            recorder.snapshot(step, step * dt, x[None, :], z[None, :], zeros[None, :])
            break
        if step % stride == 0 or step == steps:
            recorder.snapshot(step, step * dt, x[None, :], z[None, :], zeros[None, :])

    meta = {"scheme": "centralized euler", "dt": dt, "steps": steps, "dgf": dgf.name}
    return recorder.build(diverged=diverged, metadata=meta, scalar_track=None)


def reduce_state(
    state: NetworkState,
    equilibrium: Equilibrium,
    spectral: SpectralDecomposition,
) -> ReducedState:
    """Project a full state onto deviation coordinates.

    The memory rows solve (basis^T S basis) @ memory = basis^T (feedback
    deviation); the consensus component of the feedback deviation is
    conserved at zero by the dynamics, so nothing is lost.
    """
    offset = state.primal - equilibrium.primal
    n = state.n_agents
    if n == 1:
        memory = np.zeros((0, state.dim))
    else:
        reduced = spectral.reduced_basis
        pencil = reduced.T @ spectral.sqrt_laplacian @ reduced
        rhs = reduced.T @ (state.feedback - equilibrium.feedback)
        memory = np.linalg.solve(pencil, rhs)
    return ReducedState(offset=offset, memory=memory, time=state.time)


def reconstruct_state(
    reduced: ReducedState,
    dgf: DistanceGenerator,
    spectral: SpectralDecomposition,
    equilibrium: Equilibrium,
) -> NetworkState:
    primal = reduced.offset + equilibrium.primal
    lifted = spectral.reduced_basis @ reduced.memory
    feedback = spectral.sqrt_laplacian @ lifted + equilibrium.feedback
    dual = dgf.gradient(primal)
    return NetworkState(primal=primal, dual=dual, feedback=feedback, time=reduced.time)


def simulate_reduced(
    cost_set: CostSet,
    spectral: SpectralDecomposition,
    dgf: DistanceGenerator,
    x0,
    x_star,
    dt: float,
    steps: int,
    stride: int = 1,
    metadata: dict | None = None,
) -> ReducedTrajectory:
    """Euler-integrate the dynamics in deviation coordinates.

    The offset block moves with the inverse mirror-map Hessian applied
    to the gradient deviation, Laplacian coupling, and the lifted memory
    variable; the memory integrates the spectrally projected offset.
    Starts from zero feedback, matching the full simulation's initial
    condition.
    """
    if dt <= 0:
        raise InvalidParameterError(f"step size must be positive, got {dt}")
    equilibrium = equilibrium_state(cost_set, dgf, x_star)
    start = initial_state(dgf, x0)
    _shape_guard(start.primal, cost_set)
    reduced = reduce_state(start, equilibrium, spectral)

    lap = spectral.laplacian
    sqrt_lap = spectral.sqrt_laplacian
    basis = spectral.reduced_basis
    grads_at_opt = cost_set.gradient_stack(equilibrium.primal)

    offset = reduced.offset.copy()
    memory = reduced.memory.copy()
    steps_idx = [0]
    times = [0.0]
    offsets = [offset.copy()]
    memories = [memory.copy()]
    diverged = False

    for k in range(steps):
        point = offset + equilibrium.primal
        try:
            grad_dev = cost_set.gradient_stack(point) - grads_at_opt
            curvature = dgf.hessian_diag(point)
        except (DomainViolationError, NumericalOverflowError):
            diverged = True
            break
        if np.any(~np.isfinite(curvature)) or np.any(np.abs(curvature) < 1e-300):
            raise SingularHessianError(
                "mirror-map Hessian not invertible at an iterate"
            )
        flow = -(grad_dev + lap @ offset + sqrt_lap @ (basis @ memory))
        # simultaneous update: the memory integrates the pre-step offset
        memory = memory + dt * (basis.T @ (sqrt_lap @ offset))
        offset = offset + dt * (flow / curvature)
        step = k + 1
        if not _state_bounded(offset, memory, guard=_DIVERGENCE_GUARD):
            diverged = True
        if step % stride == 0 or step == steps or diverged:
            steps_idx.append(step)
            times.append(step * dt)
            offsets.append(offset.copy())
            memories.append(memory.copy())
        if diverged:
            break

    meta = dict(metadata or {})
    meta.update(scheme="reduced euler", dt=dt, steps=steps, dgf=dgf.name)
    return ReducedTrajectory(
        steps=np.array(steps_idx, dtype=int),
        times=np.array(times),
        offset=np.stack(offsets),
        memory=np.stack(memories),
        diverged=diverged,
        metadata=meta,
    )


def reconstruct_trajectory(
    reduced: ReducedTrajectory,
    dgf: DistanceGenerator,
    spectral: SpectralDecomposition,
    equilibrium: Equilibrium,
) -> Trajectory:
    """Map a reduced trajectory back to full network coordinates."""
    primal = reduced.offset + equilibrium.primal[None, :, :]
    lifted = np.einsum("nm,tmd->tnd", spectral.reduced_basis, reduced.memory)
    feedback = (
        np.einsum("nm,tmd->tnd", spectral.sqrt_laplacian, lifted)
        + equilibrium.feedback[None, :, :]
    )
    dual = dgf.gradient(primal)
    meta = dict(reduced.metadata)
    meta["scheme"] = "reduced euler (reconstructed)"
    return Trajectory(
        steps=reduced.steps.copy(),
        times=reduced.times.copy(),
        primal=primal,
        dual=dual,
        feedback=feedback,
        diverged=reduced.diverged,
        metadata=meta,
        scalar_track=None,
    )


def consensus_component_residual(
    reduced: ReducedTrajectory, spectral: SpectralDecomposition
) -> np.ndarray:
    """Per-sample magnitude of the conserved consensus component.

    The reconstructed feedback deviation is built from the reduced basis,
    which is orthogonal to the consensus direction, so this stays at
    floating-point zero; it is measured rather than assumed.
    """
    lifted = np.einsum("nm,tmd->tnd", spectral.reduced_basis, reduced.memory)
    projection = np.einsum("n,tnd->td", spectral.consensus_direction, lifted)
    if projection.size == 0:
        return np.zeros(len(reduced))
    return np.max(np.abs(projection), axis=1)


def default_step_size(cost_set: CostSet, graph: Graph, x_ref=None) -> float:
    """Heuristic step size: half the reciprocal of the stiffest mode.

    Uses the largest eigenvalue of the combined curvature (block
    diagonal of local Hessians at the reference point plus the lifted
    Laplacian), computed once.
    """
    n, d = cost_set.n_agents, cost_set.dim
    if x_ref is None:
        x_ref = np.zeros(d)
    x_ref = np.asarray(x_ref, dtype=float)
    combined = np.kron(graph.laplacian, np.eye(d))
    for i, cost in enumerate(cost_set.costs):
        block = slice(i * d, (i + 1) * d)
        combined[block, block] += cost.hessian(x_ref)
    stiffness = float(np.linalg.eigvalsh(combined)[-1])
    if stiffness <= 0:
        raise InvalidParameterError("combined curvature has no positive mode")
    return 1.0 / (2.0 * stiffness)


class _Recorder:
    """Accumulates snapshot arrays during a simulation loop."""

    def __init__(self, stride: int):
        self.stride = stride
        self.steps: list[int] = []
        self.times: list[float] = []
        self.primal: list[np.ndarray] = []
        self.dual: list[np.ndarray] = []
        self.feedback: list[np.ndarray] = []

    def snapshot(self, step, time, primal, dual, feedback):
        if self.steps and self.steps[-1] == step:
            return
        self.steps.append(int(step))
        self.times.append(float(time))
        self.primal.append(np.array(primal, dtype=float))
        self.dual.append(np.array(dual, dtype=float))
        self.feedback.append(np.array(feedback, dtype=float))

    def build(self, diverged, metadata, scalar_track) -> Trajectory:
        return Trajectory(
            steps=np.array(self.steps, dtype=int),
            times=np.array(self.times),
            primal=np.stack(self.primal),
            dual=np.stack(self.dual),
            feedback=np.stack(self.feedback),
            diverged=diverged,
            metadata=metadata,
            scalar_track=scalar_track,
        )


class _ScalarTracker:
    """Per-step scalar diagnostics, active when an optimum is supplied."""

    def __init__(self, cost_set: CostSet, x_star):
        self.active = x_star is not None
        if not self.active:
            return
        self.cost_set = cost_set
        self.optimum = np.asarray(x_star, dtype=float)
        self.optimal_value = cost_set.global_value(self.optimum)
        self.steps: list[int] = []
        self.times: list[float] = []
        self.suboptimality: list[float] = []
        self.consensus: list[float] = []
        self.distance: list[float] = []

    def record(self, step, time, primal):
        if not self.active:
            return
        self.steps.append(int(step))
        self.times.append(float(time))
        self.suboptimality.append(
            self.cost_set.global_value(primal[0]) - self.optimal_value
        )
        self.consensus.append(consensus_error(primal))
        deviations = np.linalg.norm(primal - self.optimum[None, :], axis=1)
        self.distance.append(float(deviations.max()))

    def build(self) -> dict | None:
        if not self.active:
            return None
        return {
            "step": np.array(self.steps, dtype=int),
            "time": np.array(self.times),
            "suboptimality": np.array(self.suboptimality),
            "consensus_error": np.array(self.consensus),
            "distance_to_opt": np.array(self.distance),
            "optimum": self.optimum.copy(),
        }


def consensus_error(primal: np.ndarray) -> float:
    """Largest pairwise distance between agents' primal points."""
    primal = np.asarray(primal, dtype=float)
    diffs = primal[:, None, :] - primal[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=2)).max())


def _state_bounded(*blocks: np.ndarray, guard: float) -> bool:
    for block in blocks:
        if not np.all(np.isfinite(block)):
            return False
        if block.size and np.abs(block).max() > guard:
            return False
    return True


def _check_shapes(primal, cost_set: CostSet, graph: Graph, dgf: DistanceGenerator):
    _shape_guard(primal, cost_set)
    if graph.n != primal.shape[0]:
        raise DimensionMismatchError(
            f"graph has {graph.n} nodes, state has {primal.shape[0]} agents"
        )
    if dgf.dim != primal.shape[1]:
        raise DimensionMismatchError(
            f"mirror map dim {dgf.dim} does not match state dim {primal.shape[1]}"
        )


def _shape_guard(primal, cost_set: CostSet):
    if primal.shape != (cost_set.n_agents, cost_set.dim):
        raise DimensionMismatchError(
            f"state shape {primal.shape} does not match cost set "
            f"({cost_set.n_agents}, {cost_set.dim})"
        )
