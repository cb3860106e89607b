import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import catmull_rom_matrix
from quadevo import gait
from quadevo.genome import DomainError, GaitParams, decode

unit_genes = arrays(np.float64, 10, elements=st.floats(0.0, 1.0))


def params(**kw):
    base = dict(step_length=0.2, step_height=0.05, step_smoothing=0.0, gait_frequency=0.5,
                lift_duration=0.1, wag_phase=0.0, wag_x_amp=0.0, wag_y_amp=0.0, femur_ext=0.0, tibia_ext=0.0)
    base.update(kw)
    return GaitParams(**base)


def test_control_layout():
    path = gait.build_foot_path(params())
    np.testing.assert_allclose(path.swing_controls[1], [-0.05, 0.05], atol=1e-15)
    np.testing.assert_allclose(path.swing_controls[2], [0.1, 0.005], atol=1e-15)
    np.testing.assert_allclose(path.swing_controls[0], path.stance_end)
    np.testing.assert_allclose(path.swing_controls[-1], path.stance_start)
    assert path.stance_start[1] == 0.0 and path.stance_end[1] == 0.0


def test_smoothing_flattens_touchdown():
    path = gait.build_foot_path(params(step_smoothing=0.05))
    np.testing.assert_allclose(path.swing_controls[2], [0.15, 0.005], atol=1e-15)
    assert gait.touchdown_angle(params(step_smoothing=0.05)) < gait.touchdown_angle(params())


@given(st.floats(0.0, 0.049))
def test_smoothing_strictly_monotone(s):
    assert gait.touchdown_angle(params(step_smoothing=s + 0.001)) < gait.touchdown_angle(params(step_smoothing=s))


def test_min_step_length_stance_line():
    path = gait.build_foot_path(params(step_length=0.005))
    assert path.stance_start[0] - path.stance_end[0] == pytest.approx(0.005, abs=1e-15)


def test_catmull_rom_endpoints_and_knots():
    ctl = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]
    np.testing.assert_array_equal(gait.catmull_rom(ctl, 0.0), ctl[0])
    np.testing.assert_array_equal(gait.catmull_rom(ctl, 1.0), ctl[-1])
    np.testing.assert_allclose(gait.catmull_rom(ctl, 0.5), [1.0, 1.0], atol=1e-15)


@given(st.floats(0.0, 1.0))
def test_catmull_rom_collinear(u):
    pt = gait.catmull_rom([(0, 0), (1, 0), (2, 0), (3, 0)], u)
    assert pt[1] == 0.0 and -1e-12 <= pt[0] <= 3 + 1e-12


@given(arrays(np.float64, (5, 2), elements=st.floats(-1, 1)), st.floats(0.0, 1.0))
def test_catmull_rom_matches_basis_matrix(ctl, u):
    np.testing.assert_allclose(gait.catmull_rom(ctl, u), catmull_rom_matrix(ctl, u), atol=1e-12)


def test_catmull_rom_needs_two_points():
    with pytest.raises(DomainError):
        gait.catmull_rom([(0.0, 0.0)], 0.5)


def test_catmull_rom_tangent_matches_finite_difference():
    ctl = gait.build_foot_path(params(step_smoothing=0.02)).swing_controls
    for u in (0.1, 0.4, 0.9):
        h = 1e-6
        fd = (gait.catmull_rom(ctl, u + h) - gait.catmull_rom(ctl, u - h)) / (2 * h)
        np.testing.assert_allclose(gait.catmull_rom_tangent(ctl, u), fd, atol=1e-6)


def test_stance_midpoint_and_touchdown():
    p = params()
    path = gait.build_foot_path(p)
    mid = p.lift_duration + 0.5 * (1 - p.lift_duration)
    np.testing.assert_allclose(gait.sample_foot_position(path, p, mid, y_home=0.03),
                               [0.0, 0.03, -gait.STANDING_HEIGHT], atol=1e-15)
    td = gait.sample_foot_position(path, p, p.lift_duration)
    np.testing.assert_allclose(td, [p.step_length / 2, 0.0, -gait.STANDING_HEIGHT], atol=1e-15)


@given(unit_genes)
def test_cycle_closure_and_apex(g):
    p = decode(g)
    path = gait.build_foot_path(p)
    end = gait.sample_foot_position(path, p, np.nextafter(1.0, 0.0))
    start = gait.sample_foot_position(path, p, 0.0)
    np.testing.assert_allclose(end, start, atol=1e-9)
    apex = gait.catmull_rom(path.swing_controls, 1 / 3)
    assert abs(apex[1] - p.step_height) < 1e-9


@given(unit_genes)
def test_stance_on_ground(g):
    p = decode(g)
    path = gait.build_foot_path(p)
    ph = np.linspace(p.lift_duration, 1.0, 200, endpoint=False)
    z = gait.sample_foot_position(path, p, ph)[:, 2] + gait.STANDING_HEIGHT
    assert np.max(np.abs(z)) < 1e-9


def test_dense_sweep_continuity():
    p = params(step_smoothing=0.03, wag_x_amp=0.02, wag_y_amp=0.03, wag_phase=0.1)
    path = gait.build_foot_path(p)
    phases = np.linspace(0.0, 1.0, 10_001)
    pos = gait.sample_foot_position(path, p, phases, phases)
    jumps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    period = 1.0 / p.gait_frequency
    dphase = phases[1] - phases[0]
    # bound on path speed: swing tangent magnitude over the swing time, plus wag
    u = np.linspace(0, 1, 2001)
    swing_speed = np.max(np.linalg.norm(gait.catmull_rom_tangent(path.swing_controls, u), axis=1)) / (p.lift_duration * period)
    wag_speed = 4 * np.pi * (p.wag_x_amp + p.wag_y_amp) / period
    assert jumps.max() < 2 * ((swing_speed + wag_speed) * dphase * period)


def test_wag():
    p = params(wag_y_amp=0.05)
    np.testing.assert_allclose(gait.wag_offset(p, 0.25), [0.0, 0.05], atol=1e-15)
    assert np.all(gait.wag_offset(params(), np.linspace(0, 1, 50)) == 0)


@given(unit_genes, st.floats(-3, 3))
def test_wag_periodic(g, phi):
    p = decode(g)
    np.testing.assert_allclose(gait.wag_offset(p, phi), gait.wag_offset(p, phi + 1), atol=1e-12)


def test_leg_phase_examples():
    sched = gait.LegSchedule()
    assert [float(gait.leg_phase(0.5, k, sched)) for k in range(4)] == [0.5, 0.0, 0.75, 0.25]
    for k, off in enumerate(sched.phase_offsets):
        assert gait.leg_phase(off, k, sched) == 0.0
    with pytest.raises(DomainError):
        gait.leg_phase(0.1, 4)


@given(st.floats(0.05, 0.25), st.floats(0.0, 1.0, exclude_max=True))
def test_at_most_one_leg_swings(lift, phi):
    sched = gait.LegSchedule(lift_duration=lift)
    assert sched.swing_windows_disjoint()
    assert sum(gait.leg_phase(phi, k, sched) < lift for k in range(4)) <= 1


def test_quarter_lift_always_one_swing():
    # shorter lifts leave gaps with all four feet down
    sched = gait.LegSchedule(lift_duration=0.25)
    for phi in np.linspace(0, 1, 401, endpoint=False):
        assert sum(gait.leg_phase(phi, k, sched) < 0.25 for k in range(4)) == 1


@given(unit_genes, st.floats(0, 0.025), st.floats(0, 0.095))
def test_targets_independent_of_morphology(g, fe, te):
    p = decode(g)
    q = p.replace(femur_ext=fe, tibia_ext=te)
    phases = np.linspace(0, 2, 37)
    np.testing.assert_array_equal(gait.foot_targets(p, phases)[0], gait.foot_targets(q, phases)[0])


def test_reverse_direction_mirrors_x():
    p = params(wag_x_amp=0.02)
    ph = np.linspace(0, 1, 50)
    fwd, st_f = gait.foot_targets(p, ph)
    back, st_b = gait.foot_targets(p, ph, direction=-1)
    np.testing.assert_allclose(back[..., 0], -fwd[..., 0])
    np.testing.assert_allclose(back[..., 1:], fwd[..., 1:])
    np.testing.assert_array_equal(st_f, st_b)


def test_path_points_shape():
    pts = gait.path_points(params(), n=100)
    assert pts.shape == (100, 3)
