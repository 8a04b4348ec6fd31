"""Event-driven simulation of the oscillator against a rigid wall at ``u = sigma``.

The admissible region is ``H(x) = sigma - u >= 0``.  When the mass reaches the
wall moving towards it, the reset ``R(x) = x + W v(x)`` with ``W = (0, 1 + r)``
and normal velocity ``v(x) = -v`` reverses the velocity: ``v+ = -r v-``.

Internally a state is carried as its deviation ``e = x - x_p(t)`` from the
steady-state orbit.  Free flight is then ``e(t) = N_{t - t0} e0`` and the wall
gap is ``(sigma - A) + 2 A sin^2(theta / 2) - e_u``, which keeps grazing
penetrations many orders of magnitude below ``eps * sigma`` resolvable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChatterDetected
from .linear_flow import (
    OscillatorConfig,
    State,
    evolve_deviation,
    forcing,
    particular_solution,
    response_phase,
)

H_GRADIENT = (-1.0, 0.0)  # dH/dx for H = sigma - u
CELLS_PER_PERIOD = 1024
MAX_IMPACTS_PER_PERIOD = 1000


@dataclass(frozen=True)
class ImpactEvent:
    t: float
    pre_state: State
    post_state: State
    normal_velocity: float


@dataclass
class Trajectory:
    """Sampled hybrid trajectory.

    ``t`` and ``x`` hold strictly increasing sample times and the matching
    states; at an impact time the post-impact state is stored.
    """

    t: np.ndarray
    x: np.ndarray
    impacts: list[ImpactEvent] = field(default_factory=list)
    strobe_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    strobe_points: list[State] = field(default_factory=list)

    @property
    def samples(self) -> list[tuple[float, State]]:
        return [(float(t), State(float(u), float(v))) for t, (u, v) in zip(self.t, self.x)]


def boundary_h(cfg: OscillatorConfig, x: State) -> float:
    return cfg.sigma - x[0]


def normal_velocity(cfg: OscillatorConfig, x: State) -> float:
    """``H_x F = -v``: negative while approaching the wall."""
    return -x[1]


def normal_acceleration(cfg: OscillatorConfig, x: State, t: float) -> float:
    """Second time derivative of ``H`` along the flow, ``-u''``."""
    u, v = x
    return -(forcing(cfg, t) - 2.0 * cfg.zeta * cfg.omega_n * v - cfg.omega_n**2 * u)


def apply_reset(cfg: OscillatorConfig, x: State) -> State:
    """Reset map ``R(x) = x + W v(x)``; only valid on the wall."""
    if abs(boundary_h(cfg, x)) > 1e-9:
        raise ValueError(f"reset applied off the wall: H = {boundary_h(cfg, x):.3e}")
    return State(x[0], x[1] + cfg.w2 * normal_velocity(cfg, x))


# -- deviation-coordinate kernel -------------------------------------------------


def steady_gap(cfg: OscillatorConfig, t: float) -> float:
    """``sigma - u_p(t)`` evaluated without cancellation near the orbit maximum."""
    amp = cfg.amplitude
    half = 0.5 * response_phase(cfg, t)
    return (cfg.sigma - amp) + 2.0 * amp * math.sin(half) ** 2


def _steady_gap_arr(cfg, t):
    amp = cfg.amplitude
    theta = cfg.omega_f * t + cfg.phase0 - cfg.phase_lag
    return (cfg.sigma - amp) + 2.0 * amp * np.sin(0.5 * theta) ** 2


def _evolve_arr(cfg, du, dv, tau):
    w0 = cfg.omega_0
    s = np.sin(w0 * tau)
    c = np.cos(w0 * tau)
    root = math.sqrt(1.0 - cfg.zeta**2)
    k = cfg.zeta / root
    e = np.exp(-cfg.decay_rate * tau)
    eu = e * ((c + k * s) * du + (s / w0) * dv)
    ev = e * (-(cfg.omega_n / root) * s * du + (c - k * s) * dv)
    return eu, ev


def velocity_arr(cfg, t0, e0, ts):
    _, ev = _evolve_arr(cfg, e0[0], e0[1], ts - t0)
    theta = cfg.omega_f * ts + cfg.phase0 - cfg.phase_lag
    return -cfg.amplitude * cfg.omega_f * np.sin(theta) + ev


def to_deviation(cfg: OscillatorConfig, x: State, t: float) -> tuple[float, float]:
    p = particular_solution(cfg, t)
    return x[0] - p.u, x[1] - p.v


def from_deviation(cfg: OscillatorConfig, e, t: float) -> State:
    p = particular_solution(cfg, t)
    return State(p.u + e[0], p.v + e[1])


def gap_along(cfg, t0, e0, t):
    """Wall gap ``H`` at time ``t`` on the free flight from ``(t0, e0)``."""
    eu, _ = evolve_deviation(cfg, e0[0], e0[1], t - t0)
    return steady_gap(cfg, t) - eu


def velocity_along(cfg, t0, e0, t):
    _, ev = evolve_deviation(cfg, e0[0], e0[1], t - t0)
    return particular_solution(cfg, t).v + ev


def _bisect(fun, a, b):
    """Shrink ``[a, b]`` with ``fun(a) >= 0 > fun(b)`` to adjacent floats."""
    while True:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            return a, b
        fm = fun(m)
        if fm >= 0.0:
            a = m
        else:
            b = m


def _peak_time(cfg, t0, e0, a, b):
    """Time of the position maximum in ``[a, b]`` where ``v(a) > 0 >= v(b)``."""
    vel = lambda t: velocity_along(cfg, t0, e0, t)  # noqa: E731
    lo, hi = _bisect(vel, a, b)
    return lo if abs(vel(lo)) <= abs(vel(hi)) else hi


def _locate_crossing(cfg, t0, e0, a, b):
    gap = lambda t: gap_along(cfg, t0, e0, t)  # noqa: E731
    lo, hi = _bisect(gap, a, b)
    # Newton polish, accepted only inside the bracket
    v = velocity_along(cfg, t0, e0, hi)
    t = hi
    if v > 0.0:
        cand = hi - gap(hi) / (-v)
        if lo <= cand <= hi:
            t = cand
    return t


def next_impact_dev(cfg: OscillatorConfig, t0: float, e0, horizon: float):
    """Earliest wall crossing in ``(t0, t0 + horizon]`` for the free flight from ``e0``.

    Returns ``(t_hit, (eu, ev))`` with the pre-impact deviation, or ``None``.
    """
    if math.isinf(cfg.sigma) or horizon <= 0.0:
        return None
    n_cells = max(1, math.ceil(horizon / cfg.period * CELLS_PER_PERIOD))
    ts = t0 + np.linspace(0.0, horizon, n_cells + 1)
    eu, ev = _evolve_arr(cfg, e0[0], e0[1], ts - t0)
    gap = _steady_gap_arr(cfg, ts) - eu
    theta = cfg.omega_f * ts + cfg.phase0 - cfg.phase_lag
    vel = -cfg.amplitude * cfg.omega_f * np.sin(theta) + ev

    crossed = np.flatnonzero(gap[1:] < 0.0)
    stop = crossed[0] if crossed.size else n_cells
    peaks = np.flatnonzero((vel[:-1] > 0.0) & (vel[1:] <= 0.0))
    for i in peaks[peaks <= stop]:
        if i == stop:
            break
        tm = _peak_time(cfg, t0, e0, ts[i], ts[i + 1])
        if gap_along(cfg, t0, e0, tm) < 0.0:
            t_hit = _locate_crossing(cfg, t0, e0, ts[i], tm)
            return t_hit, evolve_deviation(cfg, e0[0], e0[1], t_hit - t0)
    if crossed.size:
        i = stop
        t_hit = _locate_crossing(cfg, t0, e0, ts[i], ts[i + 1])
        return t_hit, evolve_deviation(cfg, e0[0], e0[1], t_hit - t0)
    return None


def reset_dev(cfg: OscillatorConfig, t: float, e) -> tuple[float, float]:
    """Reset in deviation coordinates; pins ``u`` to the wall exactly."""
    vp = particular_solution(cfg, t).v
    r = cfg.restitution
    return steady_gap(cfg, t), -r * e[1] - (1.0 + r) * vp


@dataclass
class _Run:
    t_end: float
    e_end: tuple[float, float]
    segments: list[tuple[float, tuple[float, float]]]
    impacts: list[tuple[float, tuple[float, float], tuple[float, float]]]


def run_dev(cfg: OscillatorConfig, t0: float, e0, duration: float) -> _Run:
    """Integrate the hybrid system in deviation coordinates over ``duration``."""
    if duration < 0.0:
        raise ValueError("duration must be >= 0")
    t_end = t0 + duration
    t, e = t0, (float(e0[0]), float(e0[1]))
    segments = []
    impacts = []
    per_period: dict[int, int] = {}

    def record(t_hit, pre):
        k = int((t_hit - t0) // cfg.period)
        per_period[k] = per_period.get(k, 0) + 1
        if per_period[k] > MAX_IMPACTS_PER_PERIOD:
            raise ChatterDetected(f"more than {MAX_IMPACTS_PER_PERIOD} impacts in forcing period {k} (t ~ {t_hit:.6g})")
        post = reset_dev(cfg, t_hit, pre)
        impacts.append((t_hit, pre, post))
        return post

    # start on the wall moving into it: impact at t0
    if not math.isinf(cfg.sigma) and steady_gap(cfg, t) - e[0] <= 0.0 and velocity_along(cfg, t, e, t) > 0.0:
        e = record(t, e)

    segments.append((t, e))
    while True:
        chunk_end = min(t_end, t + cfg.period)
        hit = next_impact_dev(cfg, t, e, chunk_end - t)
        if hit is None:
            if chunk_end >= t_end:
                break
            e = evolve_deviation(cfg, e[0], e[1], chunk_end - t)
            t = chunk_end
            continue
        t, pre = hit
        e = record(t, pre)
        segments.append((t, e))
    e_end = evolve_deviation(cfg, e[0], e[1], t_end - t)
    return _Run(t_end=t_end, e_end=e_end, segments=segments, impacts=impacts)


# -- public API --------------------------------------------------------------------


def next_impact(cfg: OscillatorConfig, x0: State, t0: float, horizon: float):
    """Earliest impact in ``(t0, t0 + horizon]`` as ``(t_hit, pre_impact_state)``, or ``None``."""
    if boundary_h(cfg, x0) < 0.0:
        raise ValueError(f"initial state violates the wall: H = {boundary_h(cfg, x0):.3e}")
    if horizon <= 0.0:
        raise ValueError("horizon must be > 0")
    hit = next_impact_dev(cfg, t0, to_deviation(cfg, x0, t0), horizon)
    if hit is None:
        return None
    t_hit, e = hit
    x = from_deviation(cfg, e, t_hit)
    return t_hit, State(cfg.sigma, x.v)


def _impact_events(cfg, run):
    events = []
    for t_hit, pre, _ in run.impacts:
        pre_state = State(cfg.sigma, particular_solution(cfg, t_hit).v + pre[1])
        events.append(
            ImpactEvent(
                t=float(t_hit),
                pre_state=pre_state,
                post_state=State(cfg.sigma, -cfg.restitution * pre_state.v),
                normal_velocity=normal_velocity(cfg, pre_state),
            )
        )
    return events


def _states_on_segments(cfg, run, times):
    """Evaluate the piecewise flow at sorted ``times``; impact instants give post-impact states."""
    starts = np.array([s[0] for s in run.segments])
    out = np.empty((len(times), 2))
    idx = np.searchsorted(starts, times, side="right") - 1
    for j, t in enumerate(times):
        ts, es = run.segments[max(idx[j], 0)]
        out[j] = from_deviation(cfg, evolve_deviation(cfg, es[0], es[1], t - ts), t)
    return out


def simulate(
    cfg: OscillatorConfig,
    x0: State,
    t0: float,
    duration: float,
    sample_step: float | None = None,
) -> Trajectory:
    """Alternate closed-form free flight and resets over ``[t0, t0 + duration]``.

    Samples are taken every ``sample_step`` (default ``T / 64``) plus one at
    each impact.  Strobe points are recorded at every ``t = 0 mod T`` in the
    window, including the endpoints when they fall on the strobe phase.
    """
    if boundary_h(cfg, x0) < 0.0:
        raise ValueError(f"initial state violates the wall: H = {boundary_h(cfg, x0):.3e}")
    period = cfg.period
    step = period / 64 if sample_step is None else float(sample_step)
    if step <= 0.0:
        raise ValueError("sample_step must be > 0")
    run = run_dev(cfg, t0, to_deviation(cfg, x0, t0), duration)
    t_end = run.t_end

    n = int(math.floor(duration / step + 1e-9))
    grid = t0 + step * np.arange(n + 1)
    grid = grid[grid <= t_end]
    if grid[-1] < t_end:
        grid = np.append(grid, t_end)
    impact_times = np.array([imp[0] for imp in run.impacts])
    times = np.union1d(grid, impact_times)
    x = _states_on_segments(cfg, run, times)

    k0 = math.ceil(t0 / period - 1e-12)
    k1 = math.floor(t_end / period + 1e-12)
    strobe_times = period * np.arange(k0, k1 + 1, dtype=float)
    strobe_times = strobe_times[(strobe_times >= t0 - 1e-12) & (strobe_times <= t_end + 1e-12)]
    strobe_x = _states_on_segments(cfg, run, np.clip(strobe_times, t0, t_end))
    return Trajectory(
        t=times,
        x=x,
        impacts=_impact_events(cfg, run),
        strobe_times=strobe_times,
        strobe_points=[State(float(u), float(v)) for u, v in strobe_x],
    )


def strobe_map_dev(cfg: OscillatorConfig, e0, t0: float = 0.0, periods: int = 1):
    """Stroboscopic map on deviations; returns ``(e1, impact_count)``."""
    run = run_dev(cfg, t0, e0, periods * cfg.period)
    return run.e_end, len(run.impacts)


def strobe_map(cfg: OscillatorConfig, x0: State, t0: float = 0.0) -> State:
    """Exact stroboscopic Poincare map: the state one forcing period after ``t0``."""
    if boundary_h(cfg, x0) < 0.0:
        raise ValueError(f"initial state violates the wall: H = {boundary_h(cfg, x0):.3e}")
    e1, _ = strobe_map_dev(cfg, to_deviation(cfg, x0, t0), t0)
    return from_deviation(cfg, e1, t0 + cfg.period)


def local_extremum_gaps(cfg: OscillatorConfig, t0: float, e0, a: float, b: float):
    """Wall gaps at the interior maxima of ``u`` on the free flight from ``(t0, e0)`` over ``[a, b]``.

    Returns a list of ``(t_max, gap)``; a negative gap is a virtual penetration.
    """
    n = max(8, math.ceil((b - a) / cfg.period * CELLS_PER_PERIOD))
    ts = np.linspace(a, b, n + 1)
    vel = velocity_arr(cfg, t0, e0, ts)
    out = []
    for i in np.flatnonzero((vel[:-1] > 0.0) & (vel[1:] <= 0.0)):
        tm = float(ts[i + 1]) if vel[i + 1] == 0.0 else _peak_time(cfg, t0, e0, ts[i], ts[i + 1])
        out.append((tm, gap_along(cfg, t0, e0, tm)))
    return out


def border_distance_dev(cfg: OscillatorConfig, e0, t0: float = 0.0, periods: int = 1) -> float:
    """Distance of a strobe point from the grazing border of the map.

    The smallest of the virtual penetration depths of the impacts and the
    clearances of the non-impacting position maxima over the run; this is the
    scale on which the strobe map stops being smooth.
    """
    if math.isinf(cfg.sigma):
        return math.inf
    run = run_dev(cfg, t0, e0, periods * cfg.period)
    ends = [imp[0] for imp in run.impacts] + [run.t_end]
    dist = math.inf
    for (ts, es), te in zip(run.segments, ends):
        for _, g in local_extremum_gaps(cfg, ts, es, ts, te):
            dist = min(dist, abs(g))
    for t_hit, pre, _ in run.impacts:
        after = local_extremum_gaps(cfg, t_hit, pre, t_hit, t_hit + 0.5 * cfg.period)
        if after:
            dist = min(dist, abs(after[0][1]))
    return dist
