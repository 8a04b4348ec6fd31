import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from impactosc.errors import DegenerateGrazing, NoLocalMinimum, SingularAtGrazing
from impactosc.grazing_zdm import (
    GrazingInfo,
    approx_strobe_map,
    border_maps,
    find_grazing_orbit,
    grazing_side_coefficient,
    h_min,
    impacting_fixed_point_estimate,
    zdm,
    zdm_jacobian,
)
from impactosc.hybrid_sim import from_deviation, next_impact, strobe_map, to_deviation
from impactosc.linear_flow import OscillatorConfig, State, flow, particular_solution

from oracles import ModalSolution, dense_max


def cfg_of(zeta=0.0, omega_n=1.0, force=0.0, omega_f=1.0, **kw):
    return OscillatorConfig(zeta=zeta, omega_n=omega_n, force_amp=force, omega_f=omega_f, **kw)


def graze_of(a_star, w2=1.9):
    return GrazingInfo(State(1.0, 0.0), 0.0, 0.0, a_star, 1.0, w2, 2 * math.pi, (0.0, 0.0))


# -- find_grazing_orbit -------------------------------------------------------------


def test_unforced_system_cannot_graze():
    with pytest.raises(DegenerateGrazing):
        find_grazing_orbit(cfg_of(zeta=0.1, force=0.0))


def test_undamped_grazing_point():
    g = find_grazing_orbit(cfg_of(zeta=0.0, omega_n=2.0, force=1.0, omega_f=1.0))
    assert g.sigma_star == pytest.approx(1 / 3, rel=1e-15)
    assert g.t_star == pytest.approx(0.0, abs=1e-15)
    assert g.a_star == pytest.approx(1 / 3, rel=1e-14)
    assert g.x_star == State(g.sigma_star, 0.0)


def test_reference_grazing_matches_dense_maximum(reference_cfg, reference_graze):
    c = reference_cfg
    sol = ModalSolution(c.zeta, c.omega_n, c.force_amp, c.omega_f, c.phase0, 0.0, *particular_solution(c, 0.0))
    _, u_max = dense_max(sol, 0.0, c.period, samples=10**6)
    assert reference_graze.sigma_star == pytest.approx(u_max, abs=1e-10)
    assert max(reference_graze.residuals) <= 1e-10
    assert reference_graze.a_star > 0.0
    assert 0.0 <= reference_graze.s0 < c.period


@given(st.floats(0.01, 0.3), st.floats(0.5, 2.0), st.floats(0.1, 2.0), st.floats(0.3, 3.0), st.floats(-3, 3))
def test_grazing_conditions_hold(zeta, omega_n, force, ratio, phase0):
    cfg = cfg_of(zeta=zeta, omega_n=omega_n, force=force, omega_f=ratio * omega_n, phase0=phase0)
    g = find_grazing_orbit(cfg)
    at_wall = cfg.replace(sigma=g.sigma_star)
    p = particular_solution(at_wall, g.t_star)
    assert abs(g.sigma_star - p.u) <= 1e-10
    assert abs(p.v) <= 1e-10 * max(1.0, cfg.amplitude * cfg.omega_f)
    assert g.a_star > 0.0
    assert g.w2 == cfg.w2


# -- h_min ---------------------------------------------------------------------------


def test_grazing_orbit_just_touches(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star)
    x0 = particular_solution(cfg, reference_graze.t_star)
    assert abs(h_min(cfg, x0, reference_graze.t_star)) <= 1e-10


def test_free_sine_peak():
    assert h_min(cfg_of(sigma=0.8), State(0.0, 1.0), 0.0) == pytest.approx(-0.2, abs=1e-14)


def test_near_grazing_matches_dense_grid(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star)
    x0 = State(0.05, -0.02)
    t0 = 1.7
    c = cfg
    sol = ModalSolution(c.zeta, c.omega_n, c.force_amp, c.omega_f, c.phase0, t0, *x0)
    # the nearest maximum lies just before t0; the window excludes the rising edge
    _, u_max = dense_max(sol, t0 - 1.0, t0 + 1.0, samples=10**6)
    assert h_min(cfg, x0, t0) == pytest.approx(cfg.sigma - u_max, abs=1e-9)


def test_no_local_maximum_raises():
    # overdamped-looking decay toward equilibrium from below: u only rises over the window
    cfg = cfg_of(zeta=0.9, omega_n=0.05, sigma=1.0)
    with pytest.raises(NoLocalMinimum):
        h_min(cfg, State(-1.0, 0.0), 0.0)


# -- zdm ---------------------------------------------------------------------------


def test_zdm_identity_at_grazing(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star)
    x = State(reference_graze.sigma_star, 0.0)
    res = zdm(cfg, x, reference_graze)
    assert res.x_out == pytest.approx(x, abs=1e-12)
    assert res.penetration <= 1e-15


def test_zdm_velocity_jump():
    # free sine with peak 1 against a wall at 1 - 4e-6: penetration 4e-6, y = 2e-3
    cfg = cfg_of(sigma=1.0 - 4e-6, restitution=0.9)
    g = graze_of(a_star=1.0, w2=1.9)
    res = zdm(cfg, State(1.0, 0.0), g, t0=0.0)
    assert res.penetration == pytest.approx(4e-6, rel=1e-9)
    assert res.y == pytest.approx(2e-3, rel=1e-9)
    assert res.x_out.u == 1.0
    assert res.x_out.v == pytest.approx(-1.9 * math.sqrt(2) * 2e-3, rel=1e-9)
    assert res.y**2 == pytest.approx(res.penetration, rel=1e-12)


def test_zdm_agrees_with_flow_impact_backflow(reference_cfg, reference_graze):
    """Fly into the wall, reset, fly back to the grazing time: O(y^2) from the ZDM."""
    g = reference_graze
    for depth in (1e-4, 1e-6):
        cfg = reference_cfg.replace(sigma=g.sigma_star - depth)
        x0 = particular_solution(cfg, g.t_star)
        start = g.t_star - 0.5
        t_hit, x_hit = next_impact(cfg, flow(cfg, x0, g.t_star, -0.5), start, 1.0)
        x_post = State(x_hit.u, -cfg.restitution * x_hit.v)
        exact = flow(cfg, x_post, t_hit, g.t_star - t_hit)
        approx = zdm(cfg, x0, g).x_out
        y = math.sqrt(depth)
        assert np.linalg.norm(np.subtract(exact, approx)) <= 10 * y**2


def test_zdm_changes_velocity_only(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star - 1e-3)
    x0 = particular_solution(cfg, reference_graze.t_star)
    res = zdm(cfg, x0, reference_graze)
    assert res.x_out.u == x0.u


def test_zdm_rejects_clear_states(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star + 1e-3)
    with pytest.raises(ValueError):
        zdm(cfg, particular_solution(cfg, reference_graze.t_star), reference_graze)


def test_zdm_square_root_scaling(reference_cfg, reference_graze):
    g = reference_graze
    shifts = []
    for depth in (1e-6, 4e-6):
        cfg = reference_cfg.replace(sigma=g.sigma_star - depth)
        x0 = particular_solution(cfg, g.t_star)
        shifts.append(x0.v - zdm(cfg, x0, g).x_out.v)
    assert shifts[1] / shifts[0] == pytest.approx(2.0, rel=1e-6)


# -- zdm_jacobian --------------------------------------------------------------------


@given(st.floats(1e-6, 1e3), st.floats(1.0, 2.0), st.floats(1e-12, 1e2))
def test_zdm_jacobian_unit_determinant(a_star, w2, depth):
    j = zdm_jacobian(graze_of(a_star, w2), -depth)
    assert j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0] == 1.0


def test_alpha_value():
    j = zdm_jacobian(graze_of(a_star=0.5, w2=2.0), -1e-4)
    assert j[1, 0] == pytest.approx(-100.0, rel=1e-14)
    assert j[0, 0] == j[1, 1] == 1.0 and j[0, 1] == 0.0


def test_alpha_halves_for_four_times_the_depth():
    g = graze_of(a_star=1.3)
    assert zdm_jacobian(g, -4e-6)[1, 0] / zdm_jacobian(g, -1e-6)[1, 0] == pytest.approx(0.5, rel=1e-12)


def test_zdm_jacobian_singular_at_grazing():
    with pytest.raises(SingularAtGrazing):
        zdm_jacobian(graze_of(1.0), 0.0)
    with pytest.raises(ValueError):
        zdm_jacobian(graze_of(1.0), 1e-3)


# -- approx_strobe_map ---------------------------------------------------------------


def test_approx_map_fixes_grazing_orbit(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star)
    assert approx_strobe_map(cfg, reference_graze, (0.0, 0.0)) == State(0.0, 0.0)


def test_approx_map_linear_on_clear_side(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star)
    n1, n2 = border_maps(cfg, reference_graze)
    dx = np.linalg.solve(n1, [-1e-4, 3e-5])  # lowers the orbit maximum
    assert np.allclose(approx_strobe_map(cfg, reference_graze, dx), n2 @ n1 @ dx, rtol=0, atol=1e-18)


def test_approx_map_continuous_across_border(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star)
    n1, n2 = border_maps(cfg, reference_graze)
    for side in (1.0, -1.0):
        # penetration 1e-24 gives a velocity jump of order 1e-12
        dx = np.linalg.solve(n1, [side * 1e-24, 2e-5])
        assert np.allclose(approx_strobe_map(cfg, reference_graze, dx), n2 @ n1 @ dx, rtol=0, atol=1e-10)


def test_approx_map_matches_exact_map_near_grazing(reference_cfg, reference_graze):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star)
    n1, _ = border_maps(cfg, reference_graze)
    amp = cfg.amplitude
    for scale in (1e-5, 1e-6):
        dx = scale * amp * np.linalg.solve(n1, [1.0, 0.0]) / np.linalg.norm(np.linalg.solve(n1, [1.0, 0.0]))
        x0 = from_deviation(cfg, dx, 0.0)
        exact = np.array(to_deviation(cfg, strobe_map(cfg, x0), cfg.period))
        approx = np.array(approx_strobe_map(cfg, reference_graze, dx))
        assert np.linalg.norm(approx - exact) <= 0.05 * np.linalg.norm(exact)


# -- side of grazing and the small fixed point --------------------------------------


def test_side_coefficient_sign_decides_where_the_orbit_lives(reference_cfg, below_side_cfg):
    g = find_grazing_orbit(reference_cfg)
    assert grazing_side_coefficient(reference_cfg, g) > 0
    assert impacting_fixed_point_estimate(reference_cfg.replace(sigma=g.sigma_star + 1e-6), g) is not None
    assert impacting_fixed_point_estimate(reference_cfg.replace(sigma=g.sigma_star - 1e-6), g) is None

    g3 = find_grazing_orbit(below_side_cfg)
    assert grazing_side_coefficient(below_side_cfg, g3) < 0
    assert impacting_fixed_point_estimate(below_side_cfg.replace(sigma=g3.sigma_star - 1e-6), g3) is not None
    assert impacting_fixed_point_estimate(below_side_cfg.replace(sigma=g3.sigma_star + 1e-6), g3) is None


@pytest.mark.parametrize("delta", [1e-4, 1e-5, 1e-6])
def test_fixed_point_estimate_is_nearly_fixed(reference_cfg, reference_graze, delta):
    cfg = reference_cfg.replace(sigma=reference_graze.sigma_star + delta)
    dx, y = impacting_fixed_point_estimate(cfg, reference_graze)
    x0 = from_deviation(cfg, dx, 0.0)
    image = np.array(to_deviation(cfg, strobe_map(cfg, x0), cfg.period))
    # the estimate drops O(y^2) terms relative to a deviation of size O(y)
    assert np.linalg.norm(image - dx) <= 50 * y**2
    assert np.linalg.norm(dx) > 0.1 * y
