"""Two-dimensional piecewise-linear border-collision normal form.

    (x, y) -> (tau_L x + y + mu, -delta_L x)   for x <= 0
    (x, y) -> (tau_R x + y + mu, -delta_R x)   for x >  0

Each side is a companion matrix ``[[tau, 1], [-delta, 0]]`` with trace
``tau`` and determinant ``delta``.  The map is continuous across ``x = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSide

CONVERGED_TOL = 1e-12
RECURRENCE_TOL = 1e-9
ESCAPE_NORM = 1e8

LEFT = "L"
RIGHT = "R"


@dataclass(frozen=True)
class NormalFormParams:
    tau_l: float
    delta_l: float
    tau_r: float
    delta_r: float
    mu: float = 0.0

    def __post_init__(self):
        for name in ("tau_l", "delta_l", "tau_r", "delta_r", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)!r}")

    def side_params(self, side: str) -> tuple[float, float]:
        if side == LEFT:
            return self.tau_l, self.delta_l
        if side == RIGHT:
            return self.tau_r, self.delta_r
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")

    def matrix(self, side: str) -> np.ndarray:
        tau, delta = self.side_params(side)
        return np.array([[tau, 1.0], [-delta, 0.0]])

    def with_mu(self, mu: float) -> NormalFormParams:
        return replace(self, mu=float(mu))


@dataclass(frozen=True)
class NfFixedPoint:
    """Candidate fixed point of one linear branch.

    ``point`` is ``None`` when the branch is degenerate (``1 - tau + delta = 0``).
    """

    point: tuple[float, float] | None
    side: str
    admissible: bool
    eigenvalues: tuple[complex, complex]
    degenerate: bool = False


@dataclass(frozen=True)
class NfOrbit:
    points: list[tuple[float, float]]
    side_sequence: list[str]
    classification: str  # converged_fixed_point | periodic | unbounded | undecided
    period: int | None = None

    @property
    def label(self) -> str:
        return f"periodic({self.period})" if self.classification == "periodic" else self.classification


def side_of(x: float) -> str:
    """Border points belong to the left branch."""
    return LEFT if x <= 0.0 else RIGHT


def nf_step(p: NormalFormParams, x: float, y: float) -> tuple[float, float]:
    tau, delta = p.side_params(side_of(x))
    return tau * x + y + p.mu, -delta * x


def eigenvalues(tau: float, delta: float) -> tuple[complex, complex]:
    """Roots of ``lambda**2 - tau lambda + delta``, larger modulus first."""
    root = np.sqrt(complex(tau * tau - 4.0 * delta))
    pair = sorted(((tau + root) / 2.0, (tau - root) / 2.0), key=lambda z: (-abs(z), -z.real))
    return complex(pair[0]), complex(pair[1])


def nf_fixed_point(p: NormalFormParams, side: str) -> NfFixedPoint:
    """Fixed point of the ``side`` branch: ``x* = mu / (1 - tau + delta)``, ``y* = -delta x*``.

    Raises
    ------
    DegenerateSide
        If ``1 - tau + delta == 0`` on that side.
    """
    tau, delta = p.side_params(side)
    denom = 1.0 - tau + delta
    if denom == 0.0:
        raise DegenerateSide(f"side {side}: 1 - tau + delta = 0, no isolated fixed point")
    x = p.mu / denom
    y = -delta * x
    admissible = x <= 0.0 if side == LEFT else x >= 0.0
    return NfFixedPoint((x, y), side, admissible, eigenvalues(tau, delta))


def nf_fixed_points(p: NormalFormParams) -> list[NfFixedPoint]:
    """Both branch candidates, L first.  A degenerate side is reported, not raised."""
    out = []
    for side in (LEFT, RIGHT):
        try:
            out.append(nf_fixed_point(p, side))
        except DegenerateSide:
            out.append(NfFixedPoint(None, side, False, eigenvalues(*p.side_params(side)), degenerate=True))
    return out


def nf_iterate(p: NormalFormParams, x0: float, y0: float, n_transient: int, n_keep: int) -> NfOrbit:
    """Iterate, drop a transient, keep ``n_keep`` points and classify the tail.

    Classification, first match wins: ``unbounded`` (norm above 1e8, iteration
    stops there), ``converged_fixed_point`` (last step shorter than 1e-12),
    ``periodic`` (last point recurs within 1e-9 after ``n <= n_keep`` steps),
    ``undecided``.
    """
    if n_transient < 0 or n_keep < 0:
        raise ValueError("n_transient and n_keep must be >= 0")
    x, y = float(x0), float(y0)
    for _ in range(n_transient):
        x, y = nf_step(p, x, y)
        if not math.hypot(x, y) <= ESCAPE_NORM:
            return NfOrbit([(x, y)], [side_of(x)], "unbounded")
    points = []
    before = (x, y)
    for _ in range(n_keep):
        before = (x, y)
        x, y = nf_step(p, x, y)
        points.append((x, y))
        if not math.hypot(x, y) <= ESCAPE_NORM:
            return NfOrbit(points, [side_of(px) for px, _ in points], "unbounded")
    sides = [side_of(px) for px, _ in points]
    if not points:
        return NfOrbit(points, sides, "undecided")
    last = np.array(points[-1])
    if np.linalg.norm(last - np.array(before)) <= CONVERGED_TOL:
        return NfOrbit(points, sides, "converged_fixed_point")
    for n in range(2, len(points)):
        if np.linalg.norm(last - np.array(points[-1 - n])) <= RECURRENCE_TOL:
            return NfOrbit(points, sides, "periodic", period=n)
    return NfOrbit(points, sides, "undecided")


def nf_from_impact(
    trace_lin: float,
    det_lin: float,
    trace_imp: float,
    det_imp: float,
    delta_sigma: float = 0.0,
    mu_scale: float = 1.0,
) -> NormalFormParams:
    """Normal-form parameters from Jacobians measured on both sides of grazing.

    The non-impacting side becomes L and the impacting side R;
    ``mu = mu_scale * delta_sigma``.  Because the impacting trace diverges like
    ``(-H_min)**-0.5`` as grazing is approached, the resulting constant-
    coefficient map is a local model valid at the sampled penetration only.
    """
    return NormalFormParams(
        tau_l=float(trace_lin),
        delta_l=float(det_lin),
        tau_r=float(trace_imp),
        delta_r=float(det_imp),
        mu=float(mu_scale) * float(delta_sigma),
    )


def nf_sweep(p: NormalFormParams, mus, x0: float, y0: float, n_transient: int, n_keep: int):
    """Bifurcation data: ``[(mu, orbit)]`` in the order of ``mus``."""
    return [(float(mu), nf_iterate(p.with_mu(mu), x0, y0, n_transient, n_keep)) for mu in mus]


__all__ = [
    "LEFT",
    "RIGHT",
    "NfFixedPoint",
    "NfOrbit",
    "NormalFormParams",
    "eigenvalues",
    "nf_fixed_point",
    "nf_fixed_points",
    "nf_from_impact",
    "nf_iterate",
    "nf_step",
    "nf_sweep",
    "side_of",
]
