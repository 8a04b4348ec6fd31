import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from impactosc.errors import DegenerateSide
from impactosc.normal_form import (
    LEFT,
    RIGHT,
    NormalFormParams,
    eigenvalues,
    nf_fixed_point,
    nf_fixed_points,
    nf_from_impact,
    nf_iterate,
    nf_step,
    nf_sweep,
    side_of,
)

coeffs = st.floats(-3.0, 3.0)
params = st.builds(NormalFormParams, coeffs, coeffs, coeffs, coeffs, st.floats(-2.0, 2.0))


# -- nf_step --------------------------------------------------------------------------


def test_origin_fixed_at_border_collision():
    assert nf_step(NormalFormParams(0.3, -0.7, 2.0, 1.1), 0.0, 0.0) == (0.0, 0.0)


def test_left_branch_value():
    x, y = nf_step(NormalFormParams(0.5, 0.25, 9.0, 9.0, mu=0.3), -1.0, 0.1)
    assert x == pytest.approx(-0.1, abs=1e-15)
    assert y == 0.25


def test_right_branch_value():
    assert nf_step(NormalFormParams(0.5, 0.25, 2.0, -0.5, mu=0.1), 0.5, 0.2) == (1.3, 0.25)


@given(params, st.floats(-10, 10))
def test_branches_agree_on_border(p, y):
    # evaluate each branch formula at x = 0 through the companion matrices
    for side in (LEFT, RIGHT):
        img = p.matrix(side) @ np.array([0.0, y]) + np.array([p.mu, 0.0])
        assert tuple(img) == nf_step(p, 0.0, y)


@given(params, st.floats(0.01, 5.0), st.floats(-5, 5), st.floats(0.0, 1.0), st.floats(-1.0, 1.0))
def test_piecewise_linear(p, x_abs, y, frac, dy):
    for sign, side in ((-1.0, LEFT), (1.0, RIGHT)):
        x = sign * x_abs
        dx = -sign * frac * x_abs  # stays on the same side, possibly reaching the border
        moved = np.array(nf_step(p, x + dx, y + dy)) - np.array(nf_step(p, x, y))
        assert np.allclose(moved, p.matrix(side) @ [dx, dy], rtol=0, atol=1e-12 * (1 + x_abs + abs(y)) * 10)


@given(coeffs, coeffs)
def test_companion_trace_and_determinant(tau, delta):
    m = NormalFormParams(tau, delta, 0.0, 0.0).matrix(LEFT)
    assert np.trace(m) == tau
    assert m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] == delta


def test_border_belongs_to_left():
    assert side_of(0.0) == LEFT and side_of(-0.0) == LEFT
    assert side_of(1e-300) == RIGHT


def test_params_must_be_finite():
    with pytest.raises(ValueError):
        NormalFormParams(float("nan"), 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        NormalFormParams(0.0, 0.0, 0.0, 0.0, mu=float("inf"))


# -- fixed points ------------------------------------------------------------------------


def test_border_fixed_point_at_zero_mu():
    fps = nf_fixed_points(NormalFormParams(0.5, 0.25, 2.5, 0.5))
    assert [f.side for f in fps] == [LEFT, RIGHT]
    assert all(f.point == (0.0, 0.0) and f.admissible for f in fps)


def test_admissible_left_fixed_point():
    fp = nf_fixed_point(NormalFormParams(0.5, 0.25, 0.0, 0.0, mu=-1.0), LEFT)
    assert fp.point == pytest.approx((-4 / 3, 1 / 3), abs=1e-15)
    assert fp.admissible


def test_inadmissible_right_candidate():
    fp = nf_fixed_point(NormalFormParams(0.0, 0.0, 2.5, 0.5, mu=1.0), RIGHT)
    assert fp.point == pytest.approx((-1.0, 0.5), abs=1e-15)
    assert not fp.admissible


def test_eigenvalues_solve_characteristic_polynomial():
    lam = eigenvalues(0.5, 0.25)
    for z in lam:
        assert abs(z * z - 0.5 * z + 0.25) <= 1e-15
    fp = nf_fixed_point(NormalFormParams(0.5, 0.25, 0.0, 0.0, mu=-1.0), LEFT)
    assert sorted(fp.eigenvalues, key=lambda z: z.imag) == pytest.approx(sorted(lam, key=lambda z: z.imag))


def test_degenerate_side():
    p = NormalFormParams(2.0, 1.0, 0.5, 0.1, mu=1.0)
    with pytest.raises(DegenerateSide):
        nf_fixed_point(p, LEFT)
    left, right = nf_fixed_points(p)
    assert left.degenerate and left.point is None and not left.admissible
    assert not right.degenerate and right.admissible


@given(params)
def test_admissible_fixed_points_are_fixed(p):
    for fp in nf_fixed_points(p):
        if fp.admissible:
            image = nf_step(p, *fp.point)
            scale = max(1.0, abs(fp.point[0]), abs(fp.point[1]))
            assert np.allclose(image, fp.point, rtol=0, atol=1e-14 * scale * 8)


# -- nf_iterate --------------------------------------------------------------------------


def test_contraction_converges_to_left_fixed_point():
    p = NormalFormParams(0.5, 0.06, 3.0, 3.0, mu=-1.0)
    orbit = nf_iterate(p, -1.0, 0.0, 200, 10)
    assert orbit.classification == "converged_fixed_point"
    assert orbit.points[-1] == pytest.approx(nf_fixed_point(p, LEFT).point, abs=1e-12)
    assert set(orbit.side_sequence) == {LEFT}


def test_origin_stays_put():
    orbit = nf_iterate(NormalFormParams(0.5, 0.06, 3.0, 3.0), 0.0, 0.0, 0, 5)
    assert orbit.classification == "converged_fixed_point"
    assert orbit.points == [(0.0, 0.0)] * 5


def test_escape_is_unbounded():
    orbit = nf_iterate(NormalFormParams(3.0, 0.0, 3.0, 0.0, mu=1.0), 1.0, 0.0, 0, 100)
    assert orbit.classification == "unbounded"
    assert np.hypot(*orbit.points[-1]) > 1e8


def test_period_two_cycle():
    # tau = 0, delta = -1 on both sides: (x, y) -> (y, x) when mu = 0
    orbit = nf_iterate(NormalFormParams(0.0, -1.0, 0.0, -1.0), 1.0, 2.0, 10, 8)
    assert orbit.classification == "periodic"
    assert orbit.period == 2
    assert orbit.label == "periodic(2)"


def test_slow_rotation_is_undecided():
    orbit = nf_iterate(NormalFormParams(2 * np.cos(0.1), 1.0, 2 * np.cos(0.1), 1.0), 1.0, 0.0, 0, 10)
    assert orbit.classification == "undecided"


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        nf_iterate(NormalFormParams(0.0, 0.0, 0.0, 0.0), 0.0, 0.0, -1, 3)


@given(params, st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 100.0))
def test_homogeneous_in_mu(p, x0, y0, scale):
    assume(p.mu != 0.0)
    sign = np.sign(p.mu)
    unit = nf_iterate(p.with_mu(sign), x0, y0, 0, 12)
    scaled = nf_iterate(p.with_mu(sign * scale), scale * x0, scale * y0, 0, 12)
    assume(unit.classification != "unbounded" and scaled.classification != "unbounded")
    assert unit.side_sequence == scaled.side_sequence or np.any(np.abs(np.array(unit.points)[:, 0]) < 1e-9)
    got = np.array(scaled.points)
    want = scale * np.array(unit.points)
    assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * scale * max(1.0, np.max(np.abs(want)) / scale))


@given(params)
def test_stable_admissible_fixed_points_attract(p):
    for fp in nf_fixed_points(p):
        if not fp.admissible or fp.point == (0.0, 0.0):
            continue
        assume(max(abs(z) for z in fp.eigenvalues) < 0.99)
        x, y = fp.point
        # push the start slightly deeper into the owning side
        start = (x * (1 + 1e-6), y)
        orbit = nf_iterate(p, *start, 5000, 4)
        scale = max(1.0, abs(x), abs(y))
        assert np.allclose(orbit.points[-1], fp.point, rtol=0, atol=1e-9 * scale)


# -- nf_from_impact and sweeps ------------------------------------------------------------


def test_equal_sides_give_smooth_map():
    p = nf_from_impact(0.3, 0.5, 0.3, 0.5)
    assert (p.tau_l, p.delta_l) == (p.tau_r, p.delta_r)
    assert p.mu == 0.0


def test_from_impact_assigns_sides_and_scale():
    p = nf_from_impact(0.3, 0.5, -40.0, 0.5, delta_sigma=1e-4, mu_scale=2.0)
    assert (p.tau_l, p.delta_l, p.tau_r, p.delta_r) == (0.3, 0.5, -40.0, 0.5)
    assert p.mu == pytest.approx(2e-4)


def test_impacting_trace_singular_part_scales(reference_cfg, reference_graze):
    from impactosc.jacobian_analysis import analytic_jacobian, linear_jacobian

    n_t = linear_jacobian(reference_cfg)
    lin = np.trace(n_t)
    near = analytic_jacobian(reference_cfg, reference_graze, -1e-8)
    far = analytic_jacobian(reference_cfg, reference_graze, -1e-6)
    p_near = nf_from_impact(lin, np.linalg.det(n_t), near.trace, near.det)
    p_far = nf_from_impact(lin, np.linalg.det(n_t), far.trace, far.det)
    assert (p_near.tau_r - lin) / (p_far.tau_r - lin) == pytest.approx(10.0, rel=1e-9)
    assert p_near.delta_r == pytest.approx(p_near.delta_l, rel=1e-12)


def test_sweep_preserves_order_and_is_deterministic():
    p = NormalFormParams(0.5, 0.06, -1.5, 0.3)
    mus = [0.5, -0.5, 0.0]
    a = nf_sweep(p, mus, 0.1, 0.0, 100, 4)
    b = nf_sweep(p, mus, 0.1, 0.0, 100, 4)
    assert [mu for mu, _ in a] == mus
    assert [o.points for _, o in a] == [o.points for _, o in b]
    assert a[2][1].points[-1] == pytest.approx((0.0, 0.0), abs=1e-12)
