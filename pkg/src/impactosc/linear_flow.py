"""Closed-form motion of the forced, damped linear oscillator between impacts.

Between impacts the mass obeys

    u'' + 2 zeta omega_n u' + omega_n**2 u = F cos(omega_f t + phase0)

with unit mass.  Every trajectory is the steady-state (particular) response
plus a transient carried by the fundamental matrix ``N_tau``, so the flow is
evaluated exactly instead of being integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


class State(NamedTuple):
    """Phase point ``(u, v)``: position and velocity."""

    u: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)

    @classmethod
    def from_array(cls, a) -> State:
        return cls(float(a[0]), float(a[1]))


@dataclass(frozen=True)
class OscillatorConfig:
    """Physical and forcing parameters of the impact oscillator.

    Parameters
    ----------
    zeta : float
        Damping ratio, ``0 <= zeta < 1``.
    omega_n : float
        Natural angular frequency (rad/s).
    force_amp : float
        Forcing amplitude ``F`` (acceleration units).
    omega_f : float
        Forcing angular frequency (rad/s); the strobe period is ``2 pi / omega_f``.
    phase0 : float
        Forcing phase offset (rad).
    sigma : float
        Wall position; motion is confined to ``u <= sigma``.
    restitution : float
        Newtonian restitution coefficient ``r`` in ``(0, 1]``; ``v+ = -r v-``.
    """

    zeta: float
    omega_n: float
    force_amp: float
    omega_f: float
    phase0: float = 0.0
    sigma: float = math.inf
    restitution: float = 1.0

    def __post_init__(self):
        for name in ("zeta", "omega_n", "force_amp", "omega_f", "phase0", "restitution"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(name, f"must be a finite number, got {value!r}")
        if not isinstance(self.sigma, (int, float)) or math.isnan(self.sigma):
            raise ConfigError("sigma", f"must be a number, got {self.sigma!r}")
        if not 0.0 <= self.zeta < 1.0:
            raise ConfigError("zeta", f"must satisfy 0 <= zeta < 1 (underdamped), got {self.zeta}")
        if self.omega_n <= 0.0:
            raise ConfigError("omega_n", f"must be > 0, got {self.omega_n}")
        if self.force_amp < 0.0:
            raise ConfigError("force_amp", f"must be >= 0, got {self.force_amp}")
        if self.omega_f <= 0.0:
            raise ConfigError("omega_f", f"must be > 0, got {self.omega_f}")
        if not 0.0 < self.restitution <= 1.0:
            raise ConfigError("restitution", f"must lie in (0, 1], got {self.restitution}")

    def replace(self, **changes) -> OscillatorConfig:
        from dataclasses import replace

        return replace(self, **changes)

    @cached_property
    def omega_0(self) -> float:
        """Damped natural frequency ``omega_n sqrt(1 - zeta**2)``."""
        return self.omega_n * math.sqrt(1.0 - self.zeta**2)

    @cached_property
    def decay_rate(self) -> float:
        return self.zeta * self.omega_n

    @property
    def period(self) -> float:
        return TWO_PI / self.omega_f

    @property
    def w2(self) -> float:
        """Velocity gain of the reset ``R(x) = x + W v(x)``; ``w2 = 1 + r``."""
        return 1.0 + self.restitution

    @cached_property
    def _response(self) -> tuple[float, float]:
        if self.force_amp == 0.0:
            return 0.0, 0.0
        detuning = self.omega_n**2 - self.omega_f**2
        damping = 2.0 * self.zeta * self.omega_n * self.omega_f
        amp = self.force_amp / math.hypot(detuning, damping) if detuning or damping else math.inf
        if not math.isfinite(amp):
            raise ConfigError("omega_f", "resonance without effective damping has no bounded response")
        return amp, math.atan2(damping, detuning)

    @property
    def amplitude(self) -> float:
        """Steady-state amplitude ``F / sqrt((wn^2 - wf^2)^2 + (2 zeta wn wf)^2)``."""
        return self._response[0]

    @property
    def phase_lag(self) -> float:
        return self._response[1]


def forcing(cfg: OscillatorConfig, t: float) -> float:
    return cfg.force_amp * math.cos(cfg.omega_f * t + cfg.phase0)


def response_phase(cfg: OscillatorConfig, t: float) -> float:
    """Phase of the steady response at ``t``, reduced to ``[-pi, pi]``.

    ``u_p(t) = A cos(theta)``; ``theta = 0`` marks the steady-state maximum.
    """
    return math.remainder(cfg.omega_f * t + cfg.phase0 - cfg.phase_lag, TWO_PI)


def n_entries(cfg: OscillatorConfig, tau: float) -> tuple[float, float, float, float]:
    """Entries ``(n11, n12, n21, n22)`` of the fundamental matrix over ``tau``."""
    w0 = cfg.omega_0
    s = math.sin(w0 * tau)
    c = math.cos(w0 * tau)
    root = math.sqrt(1.0 - cfg.zeta**2)
    k = cfg.zeta / root
    e = math.exp(-cfg.decay_rate * tau)
    return (
        e * (c + k * s),
        e * s / w0,
        -e * (cfg.omega_n / root) * s,
        e * (c - k * s),
    )


def fundamental_matrix(cfg: OscillatorConfig, tau: float) -> np.ndarray:
    """Variational (state-transition) matrix of the unforced oscillator.

    ``N_tau = exp(-zeta wn tau) [[c + k s, s/w0], [-(wn/sqrt(1-zeta^2)) s, c - k s]]``
    with ``c = cos(w0 tau)``, ``s = sin(w0 tau)``, ``k = zeta/sqrt(1-zeta^2)``.
    Negative ``tau`` gives the backward flow.
    """
    if not math.isfinite(tau):
        raise ValueError(f"tau must be finite, got {tau}")
    n11, n12, n21, n22 = n_entries(cfg, tau)
    return np.array([[n11, n12], [n21, n22]])


def particular_solution(cfg: OscillatorConfig, t: float) -> State:
    """Steady-state response ``(u_p, v_p)`` to ``g(t) = F cos(omega_f t + phase0)``."""
    amp = cfg.amplitude
    if amp == 0.0:
        return State(0.0, 0.0)
    theta = response_phase(cfg, t)
    return State(amp * math.cos(theta), -amp * cfg.omega_f * math.sin(theta))


def evolve_deviation(cfg: OscillatorConfig, du: float, dv: float, tau: float) -> tuple[float, float]:
    """Apply ``N_tau`` to a deviation from the steady-state orbit."""
    n11, n12, n21, n22 = n_entries(cfg, tau)
    return n11 * du + n12 * dv, n21 * du + n22 * dv


def flow(cfg: OscillatorConfig, x0: State, t0: float, tau: float) -> State:
    """Wall-free flow: ``x(t0 + tau) = N_tau (x0 - x_p(t0)) + x_p(t0 + tau)``."""
    p0 = particular_solution(cfg, t0)
    p1 = particular_solution(cfg, t0 + tau)
    du, dv = evolve_deviation(cfg, x0[0] - p0.u, x0[1] - p0.v, tau)
    return State(p1.u + du, p1.v + dv)


@dataclass(frozen=True)
class AffineFlow:
    """Time-``tau`` flow map ``x -> n @ x + offset`` started at ``t0``."""

    n: np.ndarray
    offset: np.ndarray
    tau: float
    t0: float = 0.0

    def __call__(self, x) -> State:
        return State.from_array(self.n @ np.asarray(x, dtype=float) + self.offset)


def affine_flow(cfg: OscillatorConfig, t0: float, tau: float) -> AffineFlow:
    n = fundamental_matrix(cfg, tau)
    p0 = particular_solution(cfg, t0).as_array()
    p1 = particular_solution(cfg, t0 + tau).as_array()
    return AffineFlow(n=n, offset=p1 - n @ p0, tau=tau, t0=t0)
