"""Jacobians of the stroboscopic map across grazing.

Two routes are provided and cross-checked:

* ``numeric_jacobian``: finite differences of the exact (simulated) map,
  with probes kept on the same side of the grazing border as the base point;
* ``analytic_jacobian``: the composition ``N2 J_zdm N1`` of the linear flows
  to and from the grazing phase with the leading-order ZDM Jacobian.

``grazing_sweep`` moves the wall through ``sigma*`` and records trace and
determinant at the period-one orbits it finds; ``fit_singularity_exponent``
measures how ``trace - trace_linear`` scales with the penetration ``-H_min``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BorderStraddle,
    ChatterDetected,
    InsufficientDecades,
    NoConvergence,
    NumericalFailure,
    StepTooLarge,
)
from .grazing_zdm import (
    GrazingInfo,
    border_maps,
    find_grazing_orbit,
    h_min_dev,
    impacting_fixed_point_estimate,
    zdm_jacobian,
)
from .hybrid_sim import (
    border_distance_dev,
    from_deviation,
    run_dev,
    strobe_map_dev,
    to_deviation,
)
from .linear_flow import (
    OscillatorConfig,
    State,
    affine_flow,
    forcing,
    fundamental_matrix,
    n_entries,
    particular_solution,
)

log = logging.getLogger(__name__)

NON_IMPACTING = "non_impacting"
IMPACTING = "impacting"


@dataclass(frozen=True)
class JacobianReport:
    j: np.ndarray
    side: str
    h_min_at_point: float
    method: str
    # determinant known from the factors of a composition; entries of order
    # alpha make the 2x2 formula lose all digits near grazing
    factor_det: float | None = None

    @property
    def trace(self) -> float:
        return float(self.j[0, 0] + self.j[1, 1])

    @property
    def det(self) -> float:
        if self.factor_det is not None:
            return self.factor_det
        return float(self.j[0, 0] * self.j[1, 1] - self.j[0, 1] * self.j[1, 0])


@dataclass(frozen=True)
class SweepRecord:
    sigma: float
    delta_sigma: float
    trace: float
    det: float
    h_min: float
    fixed_point: State
    side: str
    impacts: int = 0


@dataclass
class FixedPoint:
    """Period-one orbit of the strobe map, kept in both coordinate systems."""

    state: State
    deviation: tuple[float, float]
    impacts: int
    residual: float
    iterations: int = 0
    t0: float = 0.0
    history: list = field(default_factory=list, repr=False)


def linear_jacobian(cfg: OscillatorConfig) -> np.ndarray:
    """Jacobian of the non-impacting strobe map: ``N_T``."""
    return fundamental_matrix(cfg, cfg.period)


def peak_frame(cfg: OscillatorConfig, t0: float) -> tuple[OscillatorConfig, float]:
    """Same dynamics with time measured from a maximum of the steady orbit.

    Deviations are unchanged by the shift.  Impacts near grazing then occur at
    times close to zero, which float arithmetic resolves far more finely than
    times of order one; finite differences at penetrations of 1e-16 need it.
    """
    shift = ((cfg.phase_lag - cfg.phase0) / cfg.omega_f) % cfg.period
    return cfg.replace(phase0=cfg.phase_lag), t0 - shift


def _map(cfg, e, t0):
    c, t = peak_frame(cfg, t0)
    e1, n = strobe_map_dev(c, e, t)
    return np.array(e1), n


def grazing_h_min(cfg: OscillatorConfig, graze: GrazingInfo, e, t0: float = 0.0) -> float:
    """``H_min`` of the wall-free flight from strobe deviation ``e``, taken at the grazing phase."""
    tau = (graze.t_star - t0) % cfg.period
    w = fundamental_matrix(cfg, tau) @ np.asarray(e, dtype=float)
    c, tg = peak_frame(cfg, t0 + tau)
    value, _ = h_min_dev(c, w, tg)
    return value


def _default_step(cfg, e, t0):
    c, t = peak_frame(cfg, t0)
    dist = border_distance_dev(c, e, t)
    return min(1e-6, 1e-3 * dist) if dist > 0.0 else 1e-6


def jacobian_dev(cfg: OscillatorConfig, e, t0: float = 0.0, step: float | None = None):
    """Finite-difference Jacobian of the strobe map at deviation ``e``.

    Central differences when both probes keep the base impact count,
    otherwise the one-sided difference that does.  The step is divided by 10
    on a border crossing, at most four times.
    """
    e = np.asarray(e, dtype=float)
    h = _default_step(cfg, e, t0) if step is None else float(step)
    if not h > 0.0:
        raise ValueError(f"finite-difference step must be > 0, got {h}")
    base, n0 = _map(cfg, e, t0)
    for _ in range(5):
        cols = []
        for k in range(2):
            d = np.zeros(2)
            d[k] = h
            fp, n_p = _map(cfg, e + d, t0)
            fm, n_m = _map(cfg, e - d, t0)
            if n_p == n0 and n_m == n0:
                cols.append((fp - fm) / (2.0 * h))
            elif n_p == n0:
                cols.append((fp - base) / h)
            elif n_m == n0:
                cols.append((base - fm) / h)
            else:
                break
        if len(cols) == 2:
            return np.column_stack(cols), n0
        h /= 10.0
    raise StepTooLarge(f"finite-difference probes cross the grazing border even at step {h * 10:.3e}")


def fixed_point_dev(
    cfg: OscillatorConfig,
    e_guess,
    t0: float = 0.0,
    max_iter: int = 50,
    tol: float = 1e-9,
) -> FixedPoint:
    """Newton iteration on ``P(e) - e`` in deviation coordinates.

    Steps are halved until the trial point keeps the impact count of the
    guess, so the iteration stays on one branch of the piecewise-smooth map.
    """
    e = np.asarray(e_guess, dtype=float)
    f, n_target = _map(cfg, e, t0)
    f = f - e
    if n_target == 0 and cfg.amplitude <= cfg.sigma:
        # non-impacting: the affine map x -> N_T x + b has its fixed point on the steady orbit
        aff = affine_flow(cfg, t0, cfg.period)
        x = np.linalg.solve(np.eye(2) - aff.n, aff.offset)
        return FixedPoint(State.from_array(x), (0.0, 0.0), 0, 0.0, 0, t0)
    history = []
    for _ in range(1, max_iter + 1):
        jac, _ = jacobian_dev(cfg, e, t0)
        delta = np.linalg.solve(jac - np.eye(2), -f)
        lam = 1.0
        for _ in range(60):
            trial = e + lam * delta
            try:
                f_trial, n_trial = _map(cfg, trial, t0)
            except ChatterDetected:
                n_trial = -1
            if n_trial == n_target:
                break
            lam *= 0.5
        else:
            raise BorderStraddle("Newton step cannot stay on the impact branch of the guess", last=e)
        f_trial = f_trial - trial
        history.append(float(np.linalg.norm(f_trial)))
        small_step = np.linalg.norm(lam * delta) <= 1e-12 * max(np.linalg.norm(trial), 1e-300)
        stalled = np.linalg.norm(f_trial) >= np.linalg.norm(f) and np.linalg.norm(f) <= tol
        if stalled:
            break
        e, f = trial, f_trial
        if np.linalg.norm(f) <= tol and (small_step or np.linalg.norm(f) == 0.0):
            break
    else:
        raise NoConvergence(f"Newton did not converge in {max_iter} iterations", last=e)
    res = float(np.linalg.norm(f))
    if res > tol:
        raise NoConvergence(f"fixed-point residual {res:.3e} exceeds {tol:.1e}", last=e)
    state = from_deviation(cfg, e, t0)
    return FixedPoint(state, (float(e[0]), float(e[1])), n_target, res, len(history), t0, history)


def find_fixed_point(cfg: OscillatorConfig, x_guess: State, t0: float = 0.0) -> State:
    """Period-one strobe point near ``x_guess`` (residual <= 1e-9)."""
    return fixed_point_dev(cfg, to_deviation(cfg, x_guess, t0), t0).state


def numeric_jacobian(
    cfg: OscillatorConfig,
    x_fp: State,
    step: float | None = None,
    t0: float = 0.0,
    graze: GrazingInfo | None = None,
) -> JacobianReport:
    """Finite-difference Jacobian of the exact strobe map at ``x_fp``.

    ``step`` defaults to ``min(1e-6, 1e-3 d)`` with ``d`` the distance of the
    orbit from the grazing border.
    """
    if step is not None and not step > 0.0:
        raise ValueError(f"finite-difference step must be > 0, got {step}")
    if graze is None:
        try:
            graze = find_grazing_orbit(cfg)
        except NumericalFailure:
            graze = None
    e = to_deviation(cfg, x_fp, t0)
    j, n = jacobian_dev(cfg, e, t0, step)
    hm = grazing_h_min(cfg, graze, e, t0) if graze is not None else math.nan
    return JacobianReport(j=j, side=IMPACTING if n else NON_IMPACTING, h_min_at_point=hm, method="finite_difference")


def analytic_jacobian(cfg: OscillatorConfig, graze: GrazingInfo, h_min_value: float) -> JacobianReport:
    """``J = N2 J_zdm N1`` with ``N1 = N_{s0}``, ``N2 = N_{T - s0}``."""
    n1, n2 = border_maps(cfg, graze)
    j_zdm = zdm_jacobian(graze, h_min_value)
    j = n2 @ j_zdm @ n1
    factor_det = float(np.linalg.det(n2) * np.linalg.det(n1))  # det J_zdm = 1
    return JacobianReport(
        j=j, side=IMPACTING, h_min_at_point=h_min_value, method="analytic_composition", factor_det=factor_det
    )


def trace_expansion(cfg: OscillatorConfig, graze: GrazingInfo, h_min_value: float) -> float:
    """Trace of ``N2 J_zdm N1`` written out entrywise.

    ``exp(-zeta wn T) (n21 n11 + n22 n13 + n23 n12 + n24 n14 + alpha (n22 n11 + n24 n12))``
    with ``n1j``, ``n2j`` the undamped factors of ``N1`` and ``N2`` (row-major).
    """
    alpha = zdm_jacobian(graze, h_min_value)[1, 0]
    n11, n12, n13, n14 = _undamped(cfg, graze.s0)
    n21, n22, n23, n24 = _undamped(cfg, graze.period - graze.s0)
    scale = math.exp(-cfg.decay_rate * graze.period)
    return scale * (n21 * n11 + n22 * n13 + n23 * n12 + n24 * n14 + alpha * (n22 * n11 + n24 * n12))


def _undamped(cfg, tau):
    return tuple(x * math.exp(cfg.decay_rate * tau) for x in n_entries(cfg, tau))


def trace_coefficient_identity(cfg: OscillatorConfig, s0: float) -> tuple[float, float]:
    """``(n22 n11 + n24 n12, sin(w0 T) / w0)``: both sides of the s0-free identity."""
    w0 = cfg.omega_0
    period = cfg.period
    k = cfg.zeta / math.sqrt(1.0 - cfg.zeta**2)
    n11 = math.cos(w0 * s0) + k * math.sin(w0 * s0)
    n12 = math.sin(w0 * s0) / w0
    n22 = math.sin(w0 * (period - s0)) / w0
    n24 = math.cos(w0 * (period - s0)) - k * math.sin(w0 * (period - s0))
    return n22 * n11 + n24 * n12, math.sin(w0 * period) / w0


def resonance_flag(cfg: OscillatorConfig, tol: float = 1e-6) -> bool:
    """True when ``sin(w0 T)`` nearly vanishes (``w0 ~ m omega_f / 2``): the
    singular term then drops out of the trace."""
    return abs(math.sin(cfg.omega_0 * cfg.period)) < tol


def saltation_jacobian(cfg: OscillatorConfig, e, t0: float = 0.0) -> np.ndarray:
    """Exact variational Jacobian of the strobe map along the simulated orbit.

    Products of ``N`` over free flights and, at every impact, the saltation
    matrix ``[[-r, 0], [(u''+ + r u''-) / v-, -r]]`` (determinant ``r**2``).
    """
    run = run_dev(cfg, t0, e, cfg.period)
    r = cfg.restitution
    m = np.eye(2)
    t_prev = t0
    for t_hit, pre, post in run.impacts:
        m = fundamental_matrix(cfg, t_hit - t_prev) @ m
        x_pre = from_deviation(cfg, pre, t_hit)
        x_post = from_deviation(cfg, post, t_hit)
        acc_pre = _acceleration(cfg, x_pre, t_hit)
        acc_post = _acceleration(cfg, x_post, t_hit)
        salt = np.array([[-r, 0.0], [(acc_post + r * acc_pre) / x_pre.v, -r]])
        m = salt @ m
        t_prev = t_hit
    return fundamental_matrix(cfg, run.t_end - t_prev) @ m


def _acceleration(cfg, x, t):
    return forcing(cfg, t) - 2.0 * cfg.decay_rate * x.v - cfg.omega_n**2 * x.u


def grazing_sweep(
    cfg: OscillatorConfig,
    deltas,
    max_fail_fraction: float = 0.5,
    graze: GrazingInfo | None = None,
) -> list[SweepRecord]:
    """Trace and determinant of period-one orbits as the wall crosses ``sigma*``.

    For every ``sigma = sigma* + delta``:

    * the non-impacting steady orbit is recorded when admissible
      (``delta >= 0``), with the closed-form Jacobian ``N_T``;
    * a one-impact orbit is sought by Newton from the grazing-ZDM prediction,
      and its Jacobian measured by finite differences.

    Which side of ``sigma*`` carries the one-impact orbit depends on the sign
    of ``sin(w0 T)``; deltas yielding no orbit at all are skipped with a log
    message, and more than ``max_fail_fraction`` of them raises.
    """
    graze = find_grazing_orbit(cfg) if graze is None else graze
    deltas = [float(d) for d in deltas]
    records: list[SweepRecord] = []
    failed = []
    for delta in sorted(deltas, key=abs):
        c = cfg.replace(sigma=graze.sigma_star + delta)
        found = False
        if delta >= 0.0:
            j = linear_jacobian(c)
            x = particular_solution(c, 0.0)
            # the steady orbit clears the wall by exactly delta
            records.append(_record(c, graze, delta, j, delta, x, NON_IMPACTING, 0))
            found = True
        est = impacting_fixed_point_estimate(c, graze)
        if est is not None:
            dx, _ = est
            try:
                fp = fixed_point_dev(c, dx)
                if fp.impacts != 1:
                    raise NoConvergence(f"orbit has {fp.impacts} impacts per period")
                j, _ = jacobian_dev(c, fp.deviation)
                hm = grazing_h_min(c, graze, fp.deviation)
                records.append(_record(c, graze, delta, j, hm, fp.state, IMPACTING, fp.impacts))
                found = True
            except NumericalFailure as exc:
                log.warning("delta_sigma=%g: one-impact orbit not resolved (%s)", delta, exc)
        if not found:
            log.warning("delta_sigma=%g: no period-one orbit near grazing; skipped", delta)
            failed.append(delta)
    if deltas and len(failed) > max_fail_fraction * len(deltas):
        raise NoConvergence(f"{len(failed)} of {len(deltas)} sweep points failed: {failed}")
    records.sort(key=lambda r: (r.delta_sigma, r.side))
    return records


def _record(cfg, graze, delta, j, hm, x, side, impacts, det=None):
    return SweepRecord(
        sigma=cfg.sigma,
        delta_sigma=delta,
        trace=float(j[0, 0] + j[1, 1]),
        det=float(j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]) if det is None else det,
        h_min=float(hm),
        fixed_point=x,
        side=side,
        impacts=impacts,
    )


def analytic_sweep(cfg: OscillatorConfig, deltas, graze: GrazingInfo | None = None) -> list[SweepRecord]:
    """Sweep records from the first-order map alone (no simulation).

    Impacting records use the predicted penetration ``y**2`` and
    :func:`analytic_jacobian`; non-impacting ones use ``N_T``.
    """
    graze = find_grazing_orbit(cfg) if graze is None else graze
    n1, _ = border_maps(cfg, graze)
    records = []
    for delta in sorted(float(d) for d in deltas):
        c = cfg.replace(sigma=graze.sigma_star + delta)
        if delta >= 0.0:
            records.append(
                _record(c, graze, delta, linear_jacobian(c), delta, particular_solution(c, 0.0), NON_IMPACTING, 0)
            )
        est = impacting_fixed_point_estimate(c, graze)
        if est is not None:
            dx, y = est
            rep = analytic_jacobian(c, graze, -y * y)
            x = from_deviation(c, dx, 0.0)
            records.append(_record(c, graze, delta, rep.j, -y * y, x, IMPACTING, 1, det=rep.det))
    records.sort(key=lambda r: (r.delta_sigma, r.side))
    return records


def fit_singularity_exponent(records, trace_linear: float | None = None, cfg: OscillatorConfig | None = None):
    """Least-squares slope of ``log|trace - trace_linear|`` against ``log(-h_min)``.

    Uses the impacting records only.  ``trace_linear`` defaults to the trace
    of ``N_T`` for ``cfg``, or to the non-impacting records' trace.
    Returns ``(exponent, r_squared)``.
    """
    imp = [r for r in records if r.side == IMPACTING and r.h_min < 0.0]
    if trace_linear is None:
        if cfg is not None:
            trace_linear = float(np.trace(linear_jacobian(cfg)))
        else:
            lin = [r.trace for r in records if r.side == NON_IMPACTING]
            if not lin:
                raise ValueError("trace_linear is required when no non-impacting record is given")
            trace_linear = lin[0]
    if len(imp) < 5:
        raise InsufficientDecades(f"need at least 5 impacting records, got {len(imp)}")
    x = np.log10([-r.h_min for r in imp])
    if x.max() - x.min() < 2.0:
        raise InsufficientDecades(f"-h_min spans {x.max() - x.min():.2f} decades (< 2)")
    y = np.log10([abs(r.trace - trace_linear) for r in imp])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


__all__ = [
    "FixedPoint",
    "JacobianReport",
    "SweepRecord",
    "analytic_jacobian",
    "analytic_sweep",
    "find_fixed_point",
    "fit_singularity_exponent",
    "fixed_point_dev",
    "grazing_h_min",
    "grazing_sweep",
    "jacobian_dev",
    "linear_jacobian",
    "numeric_jacobian",
    "resonance_flag",
    "peak_frame",
    "saltation_jacobian",
    "trace_coefficient_identity",
    "trace_expansion",
]
