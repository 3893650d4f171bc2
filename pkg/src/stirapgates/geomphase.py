"""Geometric-phase integrals for dark-state transport.

Single-atom transport picks up a phase equal to minus the integral of the
pumped-level weight against the drive-phase winding. For two interacting
atoms the doubly-excited dark state acquires the analogous phase from the
interaction shift, and its coupling to a second degenerate dark state is
integrated as a small dedicated Schrodinger problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagator import ConvergenceReport, TimeGrid, Trajectory, converge
from .pulses import MixingProfile, PhaseRamp, StirapSchedule
from .qcore import StateVector

_WZ_LABELS = ("D5", "D6")


@dataclass(frozen=True)
class PhaseEstimate:
    """Quadrature result with a Richardson error estimate."""

    value: float
    error_estimate: float


def _simpson(values: np.ndarray, h: float) -> float:
    acc = values[0] + values[-1] + 4.0 * np.sum(values[1:-1:2]) + 2.0 * np.sum(values[2:-2:2])
    return float(acc * h / 3.0)


def integrate_piecewise(
    func,
    t_start: float,
    t_end: float,
    breakpoints: tuple[float, ...] = (),
    intervals: int = 64,
) -> PhaseEstimate:
    """Composite Simpson rule split at integrand kinks.

    ``func`` must accept an array of times. Each segment between adjacent
    breakpoints is integrated with ``intervals`` panels and again with
    twice as many; the halving difference over fifteen is the standard
    error estimate for a fourth-order rule.
    """
    if intervals < 2 or intervals % 2:
        raise ValueError("intervals must be a positive even number")
    cuts = [t_start]
    for b in sorted(set(breakpoints)):
        if t_start < b < t_end:
            cuts.append(float(b))
    cuts.append(t_end)

    total = 0.0
    error = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        coarse_t = np.linspace(a, b, intervals + 1)
        fine_t = np.linspace(a, b, 2 * intervals + 1)
        coarse = _simpson(np.asarray(func(coarse_t), dtype=float), (b - a) / intervals)
        fine = _simpson(np.asarray(func(fine_t), dtype=float), (b - a) / (2 * intervals))
        total += fine
        error += abs(fine - coarse) / 15.0
    return PhaseEstimate(value=total, error_estimate=error)


def schedule_breakpoints(schedule: StirapSchedule) -> tuple[float, ...]:
    """Envelope onsets and offsets, where the mixing angle has kinks."""
    tau = schedule.tau
    points = set()
    for onset in schedule.stokes_onsets + schedule.pump_onsets:
        points.add(onset)
        points.add(onset + 2.0 * tau)
    return tuple(sorted(points))


def mixing_integral(
    schedule: StirapSchedule,
    power: int = 1,
    peak_pump: float = 1.0,
    peak_stokes: float = 1.0,
    intervals: int = 96,
) -> PhaseEstimate:
    """Integral of the pumped-level weight (to a power) over the sequence.

    With power 1 this equals the sequence delay exactly: the two ramp
    regions are mirror images and their deviations from the hold cancel.
    """
    profile = MixingProfile(schedule, peak_pump=peak_pump, peak_stokes=peak_stokes)

    def integrand(times: np.ndarray) -> np.ndarray:
        vals, _ = profile.values(times)
        return vals**power

    return integrate_piecewise(
        integrand,
        schedule.t_start,
        schedule.support_end,
        breakpoints=schedule_breakpoints(schedule),
        intervals=intervals,
    )


def berry_phase_numeric(
    schedule: StirapSchedule,
    stokes_phase: PhaseRamp,
    peak_pump: float = 1.0,
    peak_stokes: float = 1.0,
    intervals: int = 96,
) -> PhaseEstimate:
    """Transport phase as minus the mixing weight against the phase winding.

    Only the relative phase between the two drives matters, so the pump
    phase is taken constant and the winding rate is the stokes ramp slope.
    """
    profile = MixingProfile(schedule, peak_pump=peak_pump, peak_stokes=peak_stokes)
    rate = stokes_phase.slope

    def integrand(times: np.ndarray) -> np.ndarray:
        vals, _ = profile.values(times)
        return -rate * vals

    return integrate_piecewise(
        integrand,
        schedule.t_start,
        schedule.support_end,
        breakpoints=schedule_breakpoints(schedule),
        intervals=intervals,
    )


def berry_phase_closed_form(schedule: StirapSchedule, stokes_phase: PhaseRamp) -> float:
    """Exact transport phase for a linear stokes-phase ramp.

    The weight integrates to the sequence delay, so the phase is the ramp
    value at the pump onset minus its value one sequence delay later.
    """
    t_a = schedule.t_a
    return stokes_phase.value(t_a) - stokes_phase.value(t_a + schedule.sequence_delay)


def _resolve_weight_profile(theta, peak_1, peak_2, t_start, t_end):
    """Normalize a schedule or an angle callable into (R(t), bounds, kinks).

    R is the transferred-level weight sin^2(theta_2) as a vectorized
    function of time.
    """
    if isinstance(theta, StirapSchedule):
        profile = MixingProfile(theta, peak_pump=peak_1, peak_stokes=peak_2)

        def weight(times: np.ndarray) -> np.ndarray:
            vals, _ = profile.values(times)
            return vals

        return weight, theta.t_start, theta.support_end, schedule_breakpoints(theta)
    if callable(theta):
        if t_start is None or t_end is None:
            raise ValueError("a bare angle callable needs explicit t_start and t_end")

        def weight(times: np.ndarray) -> np.ndarray:
            times = np.atleast_1d(times)
            return np.array([np.sin(float(theta(float(t)))) ** 2 for t in times])

        return weight, float(t_start), float(t_end), ()
    raise TypeError(f"expected a schedule or an angle callable, got {type(theta)!r}")


def two_qubit_phase(
    theta,
    interaction_shift: float,
    t_start: float | None = None,
    t_end: float | None = None,
    peak_1: float = 1.0,
    peak_2: float = 1.0,
    intervals: int = 96,
) -> PhaseEstimate:
    """Phase collected by the doubly-transferred dark state.

    The doubly-excited component carries weight equal to the square of the
    single-atom mixing weight, and the interaction shift turns that weight
    into a phase rate. ``theta`` is a pulse schedule or a callable mapping
    time to the mixing angle in radians (then the bounds are required).
    """
    weight, a, b, kinks = _resolve_weight_profile(theta, peak_1, peak_2, t_start, t_end)

    def integrand(times: np.ndarray) -> np.ndarray:
        r = weight(times)
        return r * r

    est = integrate_piecewise(integrand, a, b, breakpoints=kinks, intervals=intervals)
    return PhaseEstimate(
        value=-interaction_shift * est.value,
        error_estimate=abs(interaction_shift) * est.error_estimate,
    )


def ramp_weight_deficit(
    schedule: StirapSchedule,
    peak_1: float = 1.0,
    peak_2: float = 1.0,
    intervals: int = 96,
) -> float:
    """Integral of R(1 - R) over the ramps, with R the mixing weight.

    The quantity is independent of the sequence delay (the ramps keep
    their shape as the second pulse pair slides), which makes it the
    natural correction when solving for a delay that hits a phase target.
    """
    profile = MixingProfile(schedule, peak_pump=peak_1, peak_stokes=peak_2)

    def integrand(times: np.ndarray) -> np.ndarray:
        vals, _ = profile.values(times)
        return vals * (1.0 - vals)

    est = integrate_piecewise(
        integrand,
        schedule.t_start,
        schedule.support_end,
        breakpoints=schedule_breakpoints(schedule),
        intervals=intervals,
    )
    return est.value


def wz_connection(theta_2: float, interaction_shift: float) -> np.ndarray:
    """Connection matrix over the six two-atom dark states.

    Only the doubly-transferred pair mixes; the populated single-transfer
    states are flat. Entries are anti-Hermitian as required for a
    norm-preserving transport law.
    """
    s2 = np.sin(theta_2) ** 2
    c2 = np.cos(theta_2) ** 2
    a = np.zeros((6, 6), dtype=complex)
    a[4, 4] = 1j * interaction_shift * s2 * s2
    a[4, 5] = 1j * interaction_shift * c2 * s2 / np.sqrt(2.0)
    a[5, 4] = a[4, 5]
    a[5, 5] = 0.5j * interaction_shift * c2 * c2
    return a


def wz_hamiltonian(theta_2: float, interaction_shift: float) -> np.ndarray:
    """Effective 2x2 generator for the mixing dark-state pair."""
    return -1j * wz_connection(theta_2, interaction_shift)[4:6, 4:6]


@dataclass(frozen=True)
class WzResult:
    """Outcome of transporting the doubly-excited dark-state pair."""

    trajectory: Trajectory
    final_amplitudes: np.ndarray
    geometric_phase: float
    max_mixing: float
    terminal_mixing: float
    report: ConvergenceReport


def wz_propagate(
    theta,
    interaction_shift: float,
    t_start: float | None = None,
    t_end: float | None = None,
    peak_1: float = 1.0,
    peak_2: float = 1.0,
    base_step: float = 0.01,
    tolerance: float = 1e-10,
    sample_stride: int = 8,
) -> WzResult:
    """Integrate the dark-pair transport law across one pulse sequence.

    Starts entirely in the doubly-transferred state. The returned phase is
    that state's unwrapped terminal phase; the mixing numbers quantify how
    much amplitude ever reaches (and finally remains in) its partner.
    ``theta`` follows the same schedule-or-callable convention as
    ``two_qubit_phase``.
    """
    weight, a, b, _ = _resolve_weight_profile(theta, peak_1, peak_2, t_start, t_end)
    shift = interaction_shift

    def model(t: float) -> np.ndarray:
        r = float(weight(np.array([t]))[0])
        q = 1.0 - r
        off = shift * r * q / np.sqrt(2.0)
        return np.array(
            [[shift * r * r, off], [off, 0.5 * shift * q * q]], dtype=complex
        )

    grid = TimeGrid(t_start=a, t_end=b, base_step=base_step, sample_stride=sample_stride)
    start = StateVector(np.array([1.0, 0.0], dtype=complex), _WZ_LABELS)
    traj, report = converge(model, start, grid, tolerance=tolerance)

    mixing = traj.populations[:, 1]
    return WzResult(
        trajectory=traj,
        final_amplitudes=traj.states[-1].copy(),
        geometric_phase=traj.terminal_phase("D5"),
        max_mixing=float(np.max(mixing)),
        terminal_mixing=float(mixing[-1]),
        report=report,
    )


def calibrate_interaction_shift(
    tau: float,
    target_mixing: float = 0.005,
    pulse_delay_ratio: float = 0.4,
    sequence_delay_ratio: float = 4.0,
    bracket: tuple[float, float] = (1e-4, 4.0),
    rel_tol: float = 1e-3,
    base_step: float | None = None,
) -> float:
    """Interaction shift whose worst dark-pair mixing hits a target.

    The schedule is scaled off the pulse width, so halving ``tau`` shrinks
    every timing proportionally. Peak mixing grows monotonically with the
    shift in the perturbative regime, so a bisection on the shift finds
    the calibration point.
    """
    schedule = StirapSchedule(
        tau=tau,
        pulse_delay=pulse_delay_ratio * tau,
        sequence_delay=sequence_delay_ratio * tau,
    )
    if base_step is None:
        base_step = tau / 100.0

    def mixing(shift: float) -> float:
        return wz_propagate(
            schedule, shift, base_step=base_step, tolerance=1e-9
        ).max_mixing

    # Walk up to the first crossing so the bisection stays on the rising
    # flank; far beyond it the mixing saturates and turns over.
    lo, cap = bracket
    if mixing(lo) > target_mixing:
        raise ValueError(
            f"mixing at the lower bracket {lo} already exceeds the target "
            f"{target_mixing}; lower the bracket"
        )
    hi = lo
    while True:
        hi = 2.0 * hi
        if hi > cap:
            raise ValueError(
                f"no crossing of target mixing {target_mixing} found below "
                f"shift {cap}"
            )
        if mixing(hi) >= target_mixing:
            break
        lo = hi
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mixing(mid) < target_mixing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def transform_interaction(
    state: StateVector, interaction_shift: float, t: float
) -> StateVector:
    """Remove the interaction-shift rotation from a two-atom state.

    The doubly-excited basis amplitude picks up a bare phase at the shift
    rate; dividing it out makes the instantaneous dark states stationary
    targets at any time, not just at zero.
    """
    labels = tuple(state.basis_labels)
    if "22" not in labels:
        raise ValueError("state has no doubly-transferred component to rotate")
    amps = state.amplitudes.copy()
    amps[labels.index("22")] *= np.exp(-1j * interaction_shift * t)
    return StateVector(amps, labels)
