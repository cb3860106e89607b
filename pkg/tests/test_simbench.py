import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import rigid_fit_oracle
from quadevo import actuation, gait, genome, kinematics, nsga2, simbench
from quadevo.fitness import speed_fitness
from quadevo.genome import GaitParams
from quadevo.kinematics import LegGeometry
from quadevo.simbench import ConstraintError, EvalConfig, evaluate, nominal_speed, reevaluate, simulate_pass

QUIET = EvalConfig(actuation_noise_std=0.0)


def _gait(**kw):
    base = dict(step_length=0.08, step_height=0.05, step_smoothing=0.02, gait_frequency=0.5,
                lift_duration=0.15, wag_phase=0.0, wag_x_amp=0.0, wag_y_amp=0.0, femur_ext=0.01, tibia_ext=0.05)
    base.update(kw)
    return GaitParams(**base)


def _pass(p, cfg=QUIET, direction=1):
    return simulate_pass(p, LegGeometry.from_params(p), cfg, direction)


def slow_gaits(n, seed):
    """Seeded wag-free gaits at low frequency, i.e. well inside the servo envelope."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        g = rng.uniform(0, 1, 10)
        g[3] = rng.uniform(0, 0.25)
        g[6] = g[7] = 0.0
        p = genome.decode(g)
        if genome.is_feasible(p):
            out.append(p)
    return out


def peak_commanded_rate(p, seconds=3.0, dt=0.01):
    geom = LegGeometry.from_params(p)
    targets, _ = gait.foot_targets(p, p.gait_frequency * np.arange(0, seconds, dt))
    q = kinematics.inverse_many(geom, targets)
    return np.abs(np.diff(q, axis=0)).max() / dt


def test_nominal_speed_formula():
    p = _gait(step_length=0.1, gait_frequency=1.0, lift_duration=0.2)
    assert nominal_speed(p) == pytest.approx(0.1 * 60 / 0.8)


@pytest.mark.parametrize("p", slow_gaits(8, 5), ids=lambda p: f"{nominal_speed(p):.2f}")
def test_perfect_tracking_matches_closed_form(p):
    tr = _pass(p)
    assert not tr.fell and not tr.slip_events
    assert speed_fitness(tr) == pytest.approx(nominal_speed(p), rel=0.02)


def test_displacement_per_cycle():
    p = _gait(step_length=0.1, gait_frequency=0.4, lift_duration=0.2)
    cfg = QUIET.with_(target_distance=100.0, timeout=10.0)  # exactly 4 cycles
    tr = _pass(p, cfg)
    assert tr.progress == pytest.approx(4 * 0.1 / 0.8, rel=0.02)


def test_stops_at_target_distance():
    p = _gait(step_length=0.15, gait_frequency=1.0)
    tr = _pass(p)
    assert tr.progress >= QUIET.target_distance
    assert tr.duration < QUIET.timeout


def test_timeout_for_slow_gait():
    # nominal 0.63 m/min: 0.0315 m * 0.3 Hz * 60 / (1 - 0.1)
    p = _gait(step_length=0.0315, gait_frequency=0.3, lift_duration=0.1)
    assert nominal_speed(p) == pytest.approx(0.63)
    tr = _pass(p, EvalConfig())
    assert tr.duration == pytest.approx(15.0)
    assert tr.progress == pytest.approx(0.63 / 60 * 15, rel=0.02)


def test_timestamps_uniform():
    p = _gait(gait_frequency=1.3)
    for cfg in (QUIET, QUIET.with_(control_rate=200.0), QUIET.with_(control_rate=300.0, trace_rate=50.0)):
        tr = _pass(p, cfg)
        dt = np.diff(tr.t)
        assert np.all(dt > 0)
        np.testing.assert_allclose(dt, 1.0 / cfg.trace_rate, atol=1e-9)


def test_acceleration_is_finite_difference():
    tr = _pass(_gait(wag_x_amp=0.02, wag_y_amp=0.03, gait_frequency=0.9), EvalConfig(seed=4))
    h = tr.t[1] - tr.t[0]
    fd = (tr.position[2:] - 2 * tr.position[1:-1] + tr.position[:-2]) / h**2
    np.testing.assert_allclose(tr.acceleration[1:-1], fd, atol=1e-6)


def test_deterministic():
    p = _gait(gait_frequency=1.1)
    cfg = EvalConfig(seed=9)
    a, b = _pass(p, cfg), _pass(p, cfg)
    for name in ("t", "position", "orientation", "acceleration"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert a.slip_events == b.slip_events
    assert evaluate(p, None, cfg) == evaluate(p, None, cfg)


def test_symmetric_without_noise():
    p = genome.decode(np.full(10, 0.4))
    r = evaluate(p, None, QUIET)
    assert r.speed_forward == pytest.approx(r.speed_back, abs=1e-9)
    assert r.stability_forward == pytest.approx(r.stability_back, abs=1e-9)
    assert r.speed == pytest.approx(r.speed_forward, abs=1e-9)


def test_reverse_pass_walks_backwards():
    tr = _pass(_gait(), QUIET, direction=-1)
    assert tr.position[-1, 0] < tr.position[0, 0]
    assert tr.progress > 0


def test_infeasible_refused():
    p = _gait(step_length=0.3, gait_frequency=2.0)
    with pytest.raises(ConstraintError):
        evaluate(p, None, QUIET)
    with pytest.raises(ConstraintError):
        _pass(p)


def test_result_objectives_have_right_sign():
    rng = np.random.default_rng(1)
    for i in range(5):
        r = evaluate(genome.decode(nsga2.sample_feasible(rng)), None, EvalConfig(seed=i))
        assert r.speed >= 0 and r.stability <= 0
        assert type(r.speed) is float and type(r.stability) is float


def test_standing_gait_is_nearly_perfectly_stable():
    g = np.zeros(10)
    g[3], g[4] = 0.2, 0.5
    p = genome.decode(g)
    assert p.step_length == genome.LOWER[0] and p.wag_x_amp == 0 and p.wag_y_amp == 0
    assert evaluate(p, None, QUIET).stability == pytest.approx(0.0, abs=1e-9)


def test_fall_scores_worst_case(monkeypatch):
    monkeypatch.setattr(simbench, "_kabsch", lambda body, world: None)
    r = evaluate(_gait(), None, QUIET.with_(fall_penalty=0.7))
    assert r.fell
    assert (r.speed, r.stability) == (0.0, -0.7)


def test_reevaluate_seeds():
    p = _gait(gait_frequency=1.0)
    quiet = reevaluate(p, None, QUIET, n=10)
    assert len(quiet) == 10 and all(r == quiet[0] for r in quiet)
    single = reevaluate(p, None, EvalConfig(seed=3), n=1)
    assert single == [evaluate(p, None, EvalConfig(seed=3))]
    with pytest.raises(genome.DomainError):
        reevaluate(p, None, QUIET, n=0)


def test_reevaluation_spread_is_small():
    p = genome.decode(np.full(10, 0.45))
    speeds = [r.speed for r in reevaluate(p, None, EvalConfig(), n=10)]
    assert np.std(speeds, ddof=1) / np.mean(speeds) < 0.10


def test_seeded_noise_spread():
    p = genome.decode(np.full(10, 0.45))
    spread = [evaluate(p, None, EvalConfig(seed=100 + i)).speed for i in range(30)]
    mu, sd = np.mean(spread), np.std(spread, ddof=1)
    a, b = evaluate(p, None, EvalConfig(seed=1)), evaluate(p, None, EvalConfig(seed=2))
    assert a != b
    for r in (a, b):
        assert abs(r.speed - mu) <= 3 * sd


def _over_limit_gaits(n, seed=7):
    limit = actuation.spec_for_voltage(12.0).no_load_speed
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = genome.decode(nsga2.sample_feasible(rng))
        if peak_commanded_rate(p) > limit:
            out.append(p)
    return out


@pytest.mark.slow
def test_low_voltage_slips_at_least_as_often():
    cfg = QUIET.with_(target_distance=100.0)
    for p in _over_limit_gaits(20):
        hi, lo = _pass(p, cfg.with_(voltage=14.8)), _pass(p, cfg.with_(voltage=12.0))
        assert len(lo.slip_events) >= len(hi.slip_events)


@pytest.mark.slow
def test_low_voltage_covers_no_more_ground():
    cfg = QUIET.with_(target_distance=100.0)
    worse = []
    for p in _over_limit_gaits(20):
        hi, lo = _pass(p, cfg.with_(voltage=14.8)), _pass(p, cfg.with_(voltage=12.0))
        if lo.progress > hi.progress + 1e-9:
            worse.append((round(hi.progress, 4), round(lo.progress, 4)))
    assert not worse, f"{len(worse)} of 20 gaits went further at 12 V (m at 14.8 V, m at 12 V): {worse}"


@pytest.mark.slow
def test_mean_speed_monotone_in_voltage():
    rng = np.random.default_rng(50)
    hi, lo = [], []
    for i in range(50):
        p = genome.decode(nsga2.sample_feasible(rng))
        hi.append(evaluate(p, None, EvalConfig(voltage=14.8, seed=i)).speed)
        lo.append(evaluate(p, None, EvalConfig(voltage=12.0, seed=i)).speed)
    assert np.mean(lo) <= np.mean(hi)


def _rotation(rng):
    q = rng.normal(size=4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@given(st.integers(0, 10_000), st.integers(3, 4), st.floats(0.0, 0.01))
def test_rigid_fit_matches_quaternion_oracle(seed, n, noise):
    rng = np.random.default_rng(seed)
    body = rng.normal(scale=0.3, size=(n, 3))
    R = _rotation(rng)
    world = body @ R.T + rng.normal(size=3) + rng.normal(scale=noise, size=(n, 3))
    got = simbench._kabsch(body, world)
    assert got is not None
    R_ref, t_ref = rigid_fit_oracle(body, world)
    np.testing.assert_allclose(got[0], R_ref, atol=1e-7)
    np.testing.assert_allclose(got[1], t_ref, atol=1e-7)
    assert np.linalg.det(got[0]) == pytest.approx(1.0)


def test_rigid_fit_degenerate():
    pts = np.zeros((3, 3))
    pts[:, 0] = [0.0, 1.0, 2.0]  # collinear
    assert simbench._kabsch(pts, pts) is None


def test_trace_csv(tmp_path):
    tr = _pass(_gait())
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "y", "z", "roll", "pitch", "yaw", "ax", "ay", "az"]
    assert len(rows) == len(tr.t) + 1
    np.testing.assert_array_equal(np.array(rows[1:], dtype=float)[:, 1:4], tr.position)


def test_config_validation():
    with pytest.raises(genome.DomainError):
        EvalConfig(control_rate=150.0, trace_rate=100.0)
    with pytest.raises(genome.DomainError):
        EvalConfig(actuation_noise_std=-1.0)
    with pytest.raises(genome.DomainError):
        EvalConfig(voltage=20.0)
