"""Fixed-step Schrodinger propagation with an explicit convergence ladder.

The integrator is the classical fourth-order Runge-Kutta scheme on a
uniform grid. The state is never renormalized; the norm defect is a
diagnostic that reports integration quality, and ``converge`` halves the
step until successive terminal states agree. Phases are unwrapped along
the time axis only while a level is populated; across depopulated gaps the
last defined value is frozen and unwrapping resumes relative to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcore import POPULATION_FLOOR, StateVector, principal_angle

NORM_DRIFT_LIMIT = 1e-6

_MAX_HALVINGS = 10
_STABILITY_FACTOR = 0.8
_CHUNK_STEPS = 4096


class IntegrationQualityError(RuntimeError):
    """Raised when a propagation run is numerically untrustworthy."""


class ConvergenceError(IntegrationQualityError):
    """Raised when the step-halving ladder hits its cap without converging."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform integration grid with a sampling stride.

    The actual step divides the span exactly: it is the largest value not
    above ``base_step`` for which an integer number of steps lands on
    ``t_end``. Samples are taken every ``sample_stride`` steps, with the
    final point always included.
    """

    t_start: float
    t_end: float
    base_step: float
    sample_stride: int = 1

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if not self.base_step > 0.0:
            raise ValueError("base_step must be positive")
        if self.sample_stride < 1 or int(self.sample_stride) != self.sample_stride:
            raise ValueError("sample_stride must be a positive integer")

    @property
    def span(self) -> float:
        return self.t_end - self.t_start

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.span / self.base_step - 1e-9))

    @property
    def step(self) -> float:
        return self.span / self.n_steps

    def sample_indices(self) -> np.ndarray:
        idx = np.arange(0, self.n_steps + 1, self.sample_stride)
        if idx[-1] != self.n_steps:
            idx = np.append(idx, self.n_steps)
        return idx

    def sample_times(self) -> np.ndarray:
        return self.t_start + self.sample_indices() * self.step

    def refined(self) -> "TimeGrid":
        """Grid with half the step; shared sample times stay on the grid."""
        return TimeGrid(
            t_start=self.t_start,
            t_end=self.t_end,
            base_step=self.span / (2 * self.n_steps),
            sample_stride=2 * self.sample_stride,
        )

    def with_step(self, base_step: float) -> "TimeGrid":
        return TimeGrid(self.t_start, self.t_end, base_step, self.sample_stride)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of one propagation run.

    ``states`` has shape (n_samples, dim). ``phases`` holds unwrapped
    per-level phases with NaN wherever the level population is at or below
    the reporting floor. ``max_populations`` tracks every integrator step,
    not just the sampled ones, and ``norm_drift`` is the largest observed
    deviation of the squared norm from one.
    """

    times: np.ndarray
    states: np.ndarray
    basis_labels: tuple[str, ...]
    populations: np.ndarray
    phases: np.ndarray
    norm_drift: float
    max_populations: np.ndarray
    step: float
    n_steps: int

    @property
    def final_state(self) -> StateVector:
        """Terminal state as a strictly normalized state vector.

        Raw trajectory samples keep whatever norm the integrator produced
        (the deviation is recorded in norm_drift and gated elsewhere), but
        the state type demands exact normalization, so the division happens
        here at the boundary.
        """
        amps = self.states[-1]
        return StateVector(amps / np.linalg.norm(amps), self.basis_labels)

    @property
    def max_e_population(self) -> float:
        """Largest population ever seen in any level whose label contains 'e'."""
        worst = 0.0
        for idx, label in enumerate(self.basis_labels):
            if "e" in label:
                worst = max(worst, float(self.max_populations[idx]))
        return worst

    def level_index(self, level: str) -> int:
        return self.basis_labels.index(level)

    def max_population(self, level: str) -> float:
        return float(self.max_populations[self.level_index(level)])

    def terminal_phase(self, level: str) -> float:
        """Last unwrapped phase of the level; NaN if undefined there."""
        return float(self.phases[-1, self.level_index(level)])


class _ConstantModel:
    def __init__(self, matrix: np.ndarray, labels: tuple[str, ...]):
        self.basis_labels = labels
        self._matrix = np.asarray(matrix, dtype=complex)

    def sample(self, times: np.ndarray) -> np.ndarray:
        times = np.atleast_1d(times)
        return np.broadcast_to(
            self._matrix, (times.size, *self._matrix.shape)
        ).copy()


class _CallableModel:
    def __init__(self, func, labels: tuple[str, ...]):
        self.basis_labels = labels
        self._func = func

    def sample(self, times: np.ndarray) -> np.ndarray:
        times = np.atleast_1d(times)
        return np.stack([np.asarray(self._func(float(t)), dtype=complex) for t in times])


class _ReversedModel:
    """Generator for running a finished evolution backwards in time."""

    def __init__(self, model, t_start: float, t_end: float):
        self.basis_labels = model.basis_labels
        self._model = model
        self._pivot = t_start + t_end

    def sample(self, times: np.ndarray) -> np.ndarray:
        return -self._model.sample(self._pivot - np.atleast_1d(np.asarray(times, dtype=float)))


def time_reversed(model, t_start: float, t_end: float) -> _ReversedModel:
    """Model whose propagation over [t_start, t_end] undoes the original's."""
    return _ReversedModel(_as_model(model, None), t_start, t_end)


def _as_model(hamiltonian, labels):
    if hasattr(hamiltonian, "sample") and hasattr(hamiltonian, "basis_labels"):
        return hamiltonian
    if isinstance(hamiltonian, np.ndarray):
        if labels is None:
            labels = tuple(str(i) for i in range(hamiltonian.shape[0]))
        return _ConstantModel(hamiltonian, labels)
    if callable(hamiltonian):
        if labels is None:
            raise ValueError("a bare callable Hamiltonian needs the state to supply labels")
        return _CallableModel(hamiltonian, labels)
    raise TypeError(f"unsupported Hamiltonian input: {type(hamiltonian)!r}")


def _run_fixed_step(model, psi0: np.ndarray, grid: TimeGrid):
    """Core RK4 loop over a (dim, n_states) amplitude block."""
    h = grid.step
    n = grid.n_steps
    t0 = grid.t_start
    sample_idx = grid.sample_indices()
    n_samples = sample_idx.size
    dim, width = psi0.shape

    samples = np.empty((n_samples, dim, width), dtype=complex)
    psi = psi0.astype(complex, copy=True)
    samples[0] = psi
    next_sample_pos = 1

    pops = np.abs(psi) ** 2
    max_pops = pops.copy()
    drift = float(np.max(np.abs(pops.sum(axis=0) - 1.0)))

    done = 0
    while done < n:
        chunk = min(_CHUNK_STEPS, n - done)
        half_times = t0 + h * (done + 0.5 * np.arange(2 * chunk + 1))
        # Pre-scale by -i h so each stage is a plain matrix product.
        stack = model.sample(half_times)
        stack *= -1j * h
        for i in range(chunk):
            b0 = stack[2 * i]
            b1 = stack[2 * i + 1]
            k1 = b0 @ psi
            k2 = b1 @ (psi + 0.5 * k1)
            k3 = b1 @ (psi + 0.5 * k2)
            k4 = stack[2 * i + 2] @ (psi + k3)
            psi = psi + (k1 + 2.0 * (k2 + k3) + k4) / 6.0

            np.abs(psi, out=k1)
            np.multiply(k1, k1, out=k1)
            pops = k1.real
            np.maximum(max_pops, pops, out=max_pops)
            drift_here = float(np.max(np.abs(pops.sum(axis=0) - 1.0)))
            if drift_here > drift:
                drift = drift_here

            step_index = done + i + 1
            if next_sample_pos < n_samples and sample_idx[next_sample_pos] == step_index:
                samples[next_sample_pos] = psi
                next_sample_pos += 1
        done += chunk

    times = t0 + sample_idx * h
    return times, samples, drift, max_pops


def _unwrap_column(raw: np.ndarray, defined: np.ndarray) -> np.ndarray:
    out = np.full(raw.shape, np.nan)
    idx = np.nonzero(defined)[0]
    if idx.size == 0:
        return out
    vals = raw[idx]
    deltas = np.diff(vals)
    wrapped = np.mod(deltas + np.pi, 2.0 * np.pi) - np.pi
    wrapped[wrapped == -np.pi] = np.pi
    start = principal_angle(float(vals[0]))
    out[idx] = start + np.concatenate(([0.0], np.cumsum(wrapped)))
    return out


def extract_observables(trajectory: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Populations and unwrapped phases recomputed from the stored states.

    A level's phase is defined only where its population exceeds the
    reporting floor. Within a defined stretch consecutive values differ by
    less than pi; across an undefined gap the phase resumes from the last
    defined value plus the principal-branch increment.
    """
    states = trajectory.states
    pops = np.abs(states) ** 2
    raw = np.angle(states)
    phases = np.empty_like(pops)
    defined = pops > POPULATION_FLOOR
    for k in range(states.shape[1]):
        phases[:, k] = _unwrap_column(raw[:, k], defined[:, k])
    return pops, phases


def _build_trajectory(times, samples, labels, drift, max_pops, grid) -> Trajectory:
    traj = Trajectory(
        times=times,
        states=samples,
        basis_labels=labels,
        populations=np.empty(0),
        phases=np.empty(0),
        norm_drift=drift,
        max_populations=max_pops,
        step=grid.step,
        n_steps=grid.n_steps,
    )
    pops, phases = extract_observables(traj)
    object.__setattr__(traj, "populations", pops)
    object.__setattr__(traj, "phases", phases)
    return traj


def propagate(
    hamiltonian,
    state: StateVector,
    grid: TimeGrid,
    check_quality: bool = True,
) -> Trajectory:
    """Integrate i d(psi)/dt = H(t) psi with classical RK4 on the grid.

    ``hamiltonian`` may be a HamiltonianModel, a constant matrix, or a
    callable t -> matrix. The run is deterministic for a given grid. When
    the norm drifts by more than ``NORM_DRIFT_LIMIT`` the result is
    rejected with an error asking for step refinement (use ``converge``).
    """
    model = _as_model(hamiltonian, state.basis_labels)
    if tuple(model.basis_labels) != tuple(state.basis_labels):
        raise ValueError(
            f"state basis {state.basis_labels} does not match the model "
            f"basis {tuple(model.basis_labels)}"
        )
    times, samples, drift, max_pops = _run_fixed_step(
        model, state.amplitudes[:, None], grid
    )
    traj = _build_trajectory(
        times, samples[:, :, 0], tuple(state.basis_labels), drift, max_pops[:, 0], grid
    )
    if check_quality and drift > NORM_DRIFT_LIMIT:
        raise IntegrationQualityError(
            f"norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT}; "
            f"refine the step (current {grid.step:.3e}) or use converge()"
        )
    return traj


def propagate_many(
    hamiltonian,
    states: list[StateVector],
    grid: TimeGrid,
    check_quality: bool = True,
) -> list[Trajectory]:
    """Propagate several initial states through one shared grid pass."""
    if not states:
        raise ValueError("need at least one initial state")
    labels = tuple(states[0].basis_labels)
    for st in states:
        if tuple(st.basis_labels) != labels:
            raise ValueError("all initial states must share one basis")
    model = _as_model(hamiltonian, labels)
    if tuple(model.basis_labels) != labels:
        raise ValueError("state basis does not match the model basis")
    block = np.stack([st.amplitudes for st in states], axis=1)
    times, samples, drift, max_pops = _run_fixed_step(model, block, grid)
    if check_quality and drift > NORM_DRIFT_LIMIT:
        raise IntegrationQualityError(
            f"norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT}; "
            f"refine the step (current {grid.step:.3e}) or use converge()"
        )
    return [
        _build_trajectory(times, samples[:, :, j], labels, drift, max_pops[:, j], grid)
        for j in range(block.shape[1])
    ]


@dataclass(frozen=True)
class ConvergenceReport:
    """Step-halving history of a converged run."""

    requested_step: float
    initial_step: float
    steps: tuple[float, ...]
    distances: tuple[float, ...]
    accepted_step: float
    tolerance: float
    halvings: int
    norm_drift: float
    clamped: bool


def _stability_step(model, grid: TimeGrid) -> float:
    """Largest step the ladder may start from, by an infinity-norm scan."""
    probes = np.linspace(grid.t_start, grid.t_end, 257)
    stack = model.sample(probes)
    norm = float(np.max(np.sum(np.abs(stack), axis=2)))
    if norm == 0.0:
        return grid.step
    return min(grid.step, _STABILITY_FACTOR / norm)


def _converge_block(model, block: np.ndarray, grid: TimeGrid, tolerance: float,
                    max_halvings: int):
    h0 = _stability_step(model, grid)
    clamped = h0 < grid.step
    current = grid.with_step(h0) if clamped else grid
    runs = [_run_fixed_step(model, block, current)]
    grids = [current]
    steps = [current.step]
    distances: list[float] = []
    for _ in range(max_halvings):
        current = current.refined()
        runs.append(_run_fixed_step(model, block, current))
        grids.append(current)
        steps.append(current.step)
        coarse_final = runs[-2][1][-1]
        fine_final = runs[-1][1][-1]
        dist = float(np.max(np.linalg.norm(fine_final - coarse_final, axis=0)))
        distances.append(dist)
        drift = runs[-1][2]
        if dist <= tolerance and drift <= NORM_DRIFT_LIMIT:
            report = ConvergenceReport(
                requested_step=grid.step,
                initial_step=h0,
                steps=tuple(steps),
                distances=tuple(distances),
                accepted_step=current.step,
                tolerance=tolerance,
                halvings=len(distances),
                norm_drift=drift,
                clamped=clamped,
            )
            return runs[-1], grids[-1], report
        runs.pop(0)
        grids.pop(0)
    raise ConvergenceError(
        f"terminal states did not converge to {tolerance} within "
        f"{max_halvings} halvings (distances: "
        + ", ".join(f"{d:.3e}" for d in distances)
        + ")"
    )


def converge(
    hamiltonian,
    state: StateVector,
    grid: TimeGrid,
    tolerance: float = 1e-8,
    max_halvings: int = _MAX_HALVINGS,
) -> tuple[Trajectory, ConvergenceReport]:
    """Halve the step until successive terminal states agree.

    Acceptance requires both the terminal-state distance at or below
    ``tolerance`` and a healthy norm; the finest trajectory is returned.
    Raises ConvergenceError when the halving cap is exhausted.
    """
    model = _as_model(hamiltonian, state.basis_labels)
    block = state.amplitudes[:, None]
    run, used_grid, report = _converge_block(model, block, grid, tolerance, max_halvings)
    times, samples, drift, max_pops = run
    traj = _build_trajectory(
        times, samples[:, :, 0], tuple(state.basis_labels), drift, max_pops[:, 0], used_grid
    )
    return traj, report


def converge_many(
    hamiltonian,
    states: list[StateVector],
    grid: TimeGrid,
    tolerance: float = 1e-8,
    max_halvings: int = _MAX_HALVINGS,
) -> tuple[list[Trajectory], ConvergenceReport]:
    """Shared convergence ladder for a batch of initial states."""
    labels = tuple(states[0].basis_labels)
    model = _as_model(hamiltonian, labels)
    block = np.stack([st.amplitudes for st in states], axis=1)
    run, used_grid, report = _converge_block(model, block, grid, tolerance, max_halvings)
    times, samples, drift, max_pops = run
    trajs = [
        _build_trajectory(times, samples[:, :, j], labels, drift, max_pops[:, j], used_grid)
        for j in range(block.shape[1])
    ]
    return trajs, report


def adiabaticity_report(trajectory: Trajectory, subspace) -> float:
    """Largest sampled population outside a designated adiabatic subspace.

    ``subspace`` maps a time to a (dim, k) matrix with orthonormal columns
    spanning the subspace the evolution is meant to stay inside.
    """
    worst = 0.0
    for t, amps in zip(trajectory.times, trajectory.states):
        basis = np.asarray(subspace(float(t)), dtype=complex)
        inside = float(np.sum(np.abs(basis.conj().T @ amps) ** 2))
        total = float(np.sum(np.abs(amps) ** 2))
        worst = max(worst, total - inside)
    return worst
