"""Grazing geometry and the zero-time discontinuity mapping (ZDM).

With ``H = sigma - u`` the boundary gradient is ``H_x = (h1, 0)`` with
``h1 = -1`` and the reset direction is ``W = (0, w2)`` with ``w2 = 1 + r``.
To leading order a trajectory that would penetrate the wall by ``-H_min`` is
corrected at the grazing phase by

    x -> x - W sqrt(2 a*) sqrt(-H_min)

whose Jacobian is ``[[1, 0], [alpha, 1]]`` with
``alpha = w2 h1 sqrt(2 a*) / (2 sqrt(-H_min))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGrazing, NoLocalMinimum, SingularAtGrazing
from .hybrid_sim import (
    boundary_h,
    normal_acceleration,
    normal_velocity,
    steady_gap,
    to_deviation,
    velocity_along,
    velocity_arr,
)
from .linear_flow import (
    OscillatorConfig,
    State,
    evolve_deviation,
    fundamental_matrix,
    particular_solution,
)

H1 = -1.0


@dataclass(frozen=True)
class GrazingInfo:
    """Regular grazing point of the steady-state orbit.

    ``s0`` is the time from the strobe section (``t = 0 mod T``) to grazing;
    ``w2`` is carried along so the ZDM can be evaluated from this record alone.
    """

    x_star: State
    t_star: float
    s0: float
    a_star: float
    sigma_star: float
    w2: float
    period: float
    residuals: tuple[float, float]  # (|H(x*)|, |v(x*)|) at sigma = sigma_star


@dataclass(frozen=True)
class ZdmResult:
    """Output of :func:`zdm`.

    ``penetration`` is ``-H_min >= 0`` and ``y = sqrt(-H_min)``.  At zero
    penetration the map is the identity and ``alpha`` is ``-inf``.
    """

    x_out: State
    penetration: float
    y: float
    alpha: float

    @property
    def singular(self) -> bool:
        return self.penetration == 0.0


def find_grazing_orbit(cfg: OscillatorConfig) -> GrazingInfo:
    """Locate the maximum of the wall-free steady-state orbit.

    The wall placed at that maximum makes the orbit tangent to it:
    ``H = 0``, ``v = 0`` and normal acceleration ``a* > 0``.
    """
    amp = cfg.amplitude
    period = cfg.period
    # u_p = A cos(omega_f t + phase0 - lag) peaks where the argument is 0 mod 2 pi
    t_star = ((cfg.phase_lag - cfg.phase0) / cfg.omega_f) % period
    # Newton polish on u' = 0 (u'' < 0 at a maximum)
    for _ in range(3):
        p = particular_solution(cfg, t_star)
        acc = -(cfg.omega_f**2) * p.u
        if acc >= 0.0 or p.v == 0.0:
            break
        t_star -= p.v / acc
    t_star %= period
    p = particular_solution(cfg, t_star)
    graze_cfg = cfg.replace(sigma=amp)
    x_star = State(amp, 0.0)
    a_star = normal_acceleration(graze_cfg, x_star, t_star)
    if a_star <= 1e-10:
        raise DegenerateGrazing(f"normal acceleration at the orbit maximum is {a_star:.3e} (must be > 0)")
    residuals = (abs(steady_gap(graze_cfg, t_star)), abs(normal_velocity(graze_cfg, p)))
    if max(residuals) > 1e-10:
        raise DegenerateGrazing(f"grazing conditions not met: |H|, |v| = {residuals}")
    return GrazingInfo(
        x_star=x_star,
        t_star=t_star,
        s0=t_star % period,
        a_star=a_star,
        sigma_star=amp,
        w2=cfg.w2,
        period=period,
        residuals=residuals,
    )


def h_min_dev(cfg: OscillatorConfig, e0, t0: float):
    """``H_min`` of the wall-free flight from deviation ``e0`` at ``t0``.

    Returns ``(h_min, t_min)``: the local minimum of ``H`` (maximum of ``u``)
    nearest to ``t0`` within ``+-T/2``.
    """
    period = cfg.period
    n = 2048
    ts = t0 + np.linspace(-0.5 * period, 0.5 * period, n + 1)
    vel = velocity_arr(cfg, t0, e0, ts)
    cells = np.flatnonzero((vel[:-1] > 0.0) & (vel[1:] <= 0.0))
    if cells.size == 0:
        raise NoLocalMinimum("no local maximum of u within half a period of t0")
    best = None
    for i in cells:
        a, b = ts[i], ts[i + 1]
        fa = vel[i]
        if vel[i + 1] == 0.0:
            tm = b
        else:
            while True:
                m = 0.5 * (a + b)
                if m <= a or m >= b:
                    break
                fm = velocity_along(cfg, t0, e0, m)
                if fm > 0.0:
                    a, fa = m, fm
                else:
                    b = m
            tm = a if abs(fa) <= abs(velocity_along(cfg, t0, e0, b)) else b
        if best is None or abs(tm - t0) < abs(best - t0):
            best = tm
    eu, _ = evolve_deviation(cfg, e0[0], e0[1], best - t0)
    return steady_gap(cfg, best) - eu, best


def h_min(cfg: OscillatorConfig, x0: State, t0: float = 0.0) -> float:
    """Minimum of ``H`` along the wall-free flow from ``x0``, nearest in time to ``t0``."""
    value, _ = h_min_dev(cfg, to_deviation(cfg, x0, t0), t0)
    return value


def zdm(cfg: OscillatorConfig, x0: State, graze: GrazingInfo, t0: float | None = None) -> ZdmResult:
    """Leading-order discontinuity correction of ``x0`` at the grazing phase.

    ``x0`` is a state at time ``t0`` (default ``graze.t_star``).
    """
    t0 = graze.t_star if t0 is None else t0
    if graze.a_star <= 0.0:
        raise DegenerateGrazing("a_star must be > 0")
    hm = h_min(cfg, x0, t0)
    if hm > 0.0:
        raise ValueError(f"H_min = {hm:.3e} > 0: the trajectory does not reach the wall")
    depth = -hm
    y = math.sqrt(depth)
    jump = graze.w2 * math.sqrt(2.0 * graze.a_star) * y
    alpha = _alpha(graze, depth) if depth > 0.0 else math.copysign(math.inf, graze.w2 * H1)
    return ZdmResult(x_out=State(x0[0], x0[1] - jump), penetration=depth, y=y, alpha=alpha)


def _alpha(graze: GrazingInfo, depth: float) -> float:
    return graze.w2 * H1 * math.sqrt(2.0 * graze.a_star) / (2.0 * math.sqrt(depth))


def zdm_jacobian(graze: GrazingInfo, h_min_value: float) -> np.ndarray:
    """``I + sqrt(2 a*) W* H_x / (2 sqrt(-H_min)) = [[1, 0], [alpha, 1]]``."""
    if h_min_value == 0.0:
        raise SingularAtGrazing("the ZDM Jacobian is unbounded at H_min = 0")
    if h_min_value > 0.0:
        raise ValueError(f"h_min_value must be < 0, got {h_min_value}")
    return np.array([[1.0, 0.0], [_alpha(graze, -h_min_value), 1.0]])


def border_maps(cfg: OscillatorConfig, graze: GrazingInfo) -> tuple[np.ndarray, np.ndarray]:
    """``(N1, N2)``: linear flow from the strobe section to grazing and back."""
    return fundamental_matrix(cfg, graze.s0), fundamental_matrix(cfg, graze.period - graze.s0)


def approx_strobe_map(cfg: OscillatorConfig, graze: GrazingInfo, dx) -> State:
    """First-order near-grazing strobe map on deviations from the grazing orbit.

    ``dx -> N2 N1 dx - sqrt(2 a*) sqrt(-H_min) N2 W*`` with the linearised
    ``-H_min = (sigma* - sigma) - H_x N1 dx``; the linear image is returned when
    the virtual orbit does not reach the wall.  For ``cfg.sigma == sigma_star``
    the wall offset vanishes.
    """
    n1, n2 = border_maps(cfg, graze)
    w = n1 @ np.asarray(dx, dtype=float)
    depth = (graze.sigma_star - cfg.sigma) - H1 * w[0]
    out = n2 @ w
    if depth > 0.0:
        out = out - math.sqrt(2.0 * graze.a_star) * math.sqrt(depth) * (n2 @ np.array([0.0, graze.w2]))
    return State(float(out[0]), float(out[1]))


def impacting_fixed_point_estimate(cfg: OscillatorConfig, graze: GrazingInfo):
    """Small-amplitude one-impact fixed point predicted by the grazing-phase ZDM.

    The fixed point is sought as ``dx = y b`` with
    ``b = -sqrt(2 a*) (I - N_T)^-1 N2 W*`` and ``y = sqrt(-H_min)``.  Keeping
    the velocity contribution to the penetration,
    ``-H_min = (sigma* - sigma) + w_u + w_v**2 / (2 a*)`` for ``w = N1 dx``,
    gives ``k y**2 - q y + (sigma - sigma*) = 0`` with ``q`` from
    :func:`grazing_side_coefficient` and ``k = 1 - c_v**2 / (2 a*)``, ``c = N1 b``.

    Returns ``(dx, y)`` for the root that vanishes with ``sigma - sigma*``, or
    ``None`` when that root is not positive: no small one-impact orbit exists
    on this side of grazing.
    """
    n1, n2 = border_maps(cfg, graze)
    n_t = n2 @ n1
    b = -math.sqrt(2.0 * graze.a_star) * np.linalg.solve(np.eye(2) - n_t, n2 @ np.array([0.0, graze.w2]))
    c = n1 @ b
    q = -H1 * c[0]
    k = 1.0 - c[1] ** 2 / (2.0 * graze.a_star)
    delta = cfg.sigma - graze.sigma_star
    if delta == 0.0 or q == 0.0:
        return None
    disc = q * q - 4.0 * k * delta
    if disc < 0.0:
        return None
    y = 2.0 * delta / (q + math.copysign(math.sqrt(disc), q))
    if not y > 0.0:
        return None
    return b * y, y


def grazing_side_coefficient(cfg: OscillatorConfig, graze: GrazingInfo) -> float:
    """The coefficient ``q`` above; its sign tells on which side of ``sigma*``
    the one-impact orbit lives (``q > 0``: ``sigma > sigma*``)."""
    n1, n2 = border_maps(cfg, graze)
    n_t = n2 @ n1
    resolvent = np.linalg.solve(np.eye(2) - n_t, n_t)
    return H1 * graze.w2 * math.sqrt(2.0 * graze.a_star) * resolvent[0, 1]


__all__ = [
    "GrazingInfo",
    "ZdmResult",
    "H1",
    "approx_strobe_map",
    "border_maps",
    "boundary_h",
    "find_grazing_orbit",
    "grazing_side_coefficient",
    "h_min",
    "h_min_dev",
    "impacting_fixed_point_estimate",
    "zdm",
    "zdm_jacobian",
]
