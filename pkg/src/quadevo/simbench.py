"""Deterministic quasi-static stand-in for the physical walking test.

Each control step the gait generator commands foot targets, IK turns them
into joint angles (plus a seeded angle error per stride), the servos chase
those angles at their voltage- and load-limited speed, and forward
kinematics gives the feet actually achieved. The body pose is then the
rigid transform that best pins the stance feet to where they were planted
on the ground. Feet that cannot be pinned within ``slip_threshold`` slide.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import actuation, fitness, gait, kinematics
from .genome import DomainError, GaitParams, is_feasible, speed_product
from .kinematics import HIP_POSITIONS, LegGeometry


class ConstraintError(ValueError):
    """Gait parameters violate the speed-product cap."""


@dataclass(frozen=True)
class EvalConfig:
    voltage: float = 14.8
    control_rate: float = 100.0
    trace_rate: float = 100.0
    target_distance: float = 1.5
    timeout: float = 15.0
    actuation_noise_std: float = 0.002
    slip_threshold: float = 0.005
    seed: int = 0
    fall_penalty: float = 0.5
    total_mass: float = actuation.ROBOT_MASS
    standing_height: float = gait.STANDING_HEIGHT

    def __post_init__(self):
        if self.control_rate <= 0 or self.trace_rate <= 0:
            raise DomainError("rates must be positive")
        if self.timeout <= 0:
            raise DomainError("timeout must be positive")
        if self.actuation_noise_std < 0:
            raise DomainError("noise std must be non-negative")
        ratio = self.control_rate / self.trace_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise DomainError("control_rate must be an integer multiple of trace_rate")
        actuation.spec_for_voltage(self.voltage)

    def with_(self, **changes) -> "EvalConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SlipEvent:
    t: float
    leg: int
    magnitude: float


@dataclass
class Trace:
    t: np.ndarray
    position: np.ndarray      # (n, 3) world, m
    orientation: np.ndarray   # (n, 3) roll, pitch, yaw, rad
    acceleration: np.ndarray  # (n, 3) m/s^2
    slip_events: list[SlipEvent] = field(default_factory=list)
    fell: bool = False
    direction: int = 1

    @property
    def progress(self) -> float:
        return float(self.direction * (self.position[-1, 0] - self.position[0, 0]))

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z", "roll", "pitch", "yaw", "ax", "ay", "az"])
            for row in np.column_stack([self.t, self.position, self.orientation, self.acceleration]):
                w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class EvaluationResult:
    speed: float
    stability: float
    distance_forward: float
    distance_back: float
    duration_forward: float
    duration_back: float
    fell: bool
    slip_count: int = 0
    speed_forward: float = 0.0
    speed_back: float = 0.0
    stability_forward: float = 0.0
    stability_back: float = 0.0


def nominal_speed(p: GaitParams) -> float:
    """Body speed (m/min) of a perfectly tracked crawl: stride / stance time."""
    return speed_product(p) / (1.0 - p.lift_duration)


def _kabsch(body_pts: np.ndarray, world_pts: np.ndarray):
    """Rotation R and translation t minimising sum |R b + t - a|^2, or None if degenerate."""
    n = len(body_pts)
    cb = body_pts.sum(axis=0) / n
    cw = world_pts.sum(axis=0) / n
    U, S, Vt = np.linalg.svd((body_pts - cb).T @ (world_pts - cw))
    if S[1] < 1e-12 * max(S[0], 1e-300):
        return None
    if _det3(Vt) * _det3(U) < 0:  # reflection: flip the weakest axis
        Vt[2] = -Vt[2]
    R = (U @ Vt).T
    return R, cw - R @ cb


def _det3(m: np.ndarray) -> float:
    (a, b, c), (d, e, f), (g, h, i) = m.tolist()
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _rpy(R: np.ndarray) -> tuple[float, float, float]:
    """ZYX Euler angles (roll, pitch, yaw) of a rotation matrix."""
    (r00, _, _), (r10, _, _), (r20, r21, r22) = R.tolist()
    return math.atan2(r21, r22), -math.asin(min(1.0, max(-1.0, r20))), math.atan2(r10, r00)


def _stride_noise(stance: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    """Per-joint angle error, redrawn for each leg whenever it lifts off."""
    liftoff = np.zeros_like(stance)
    liftoff[1:] = stance[:-1] & ~stance[1:]
    stride = np.cumsum(liftoff, axis=0)  # (n, 4)
    table = rng.normal(0.0, std, size=(int(stride.max()) + 1, 4, 3)) if std > 0 else None
    if table is None:
        return np.zeros(stance.shape + (3,))
    return table[stride, np.arange(4)[None, :]]


def simulate_pass(p: GaitParams, geom: LegGeometry, cfg: EvalConfig, direction: int = 1,
                  rng: np.random.Generator | None = None) -> Trace:
    """Walk one pass in ``direction`` (+1 forward, -1 backward)."""
    if not is_feasible(p):
        raise ConstraintError(f"speed product {speed_product(p):.3f} m/min exceeds the cap")
    if direction not in (1, -1):
        raise DomainError("direction must be +1 or -1")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0 if direction > 0 else 1]))

    dt = 1.0 / cfg.control_rate
    n_steps = int(round(cfg.timeout * cfg.control_rate))
    every = int(round(cfg.control_rate / cfg.trace_rate))
    times = np.arange(n_steps + 1) * dt
    targets, stance = gait.foot_targets(
        p, p.gait_frequency * times, standing_height=cfg.standing_height, direction=direction)
    commanded = kinematics.inverse_many(geom, targets)
    commanded = commanded + _stride_noise(stance, cfg.actuation_noise_std, rng)

    servo = actuation.spec_for_voltage(cfg.voltage)
    fk = kinematics.forward_fn(geom)
    # weight shared evenly by stance legs; lever is the foot's fore-aft
    # offset from the hip, applied to both pitch joints, roll unloaded
    n_stance = stance.sum(axis=1)
    per_leg_weight = cfg.total_mass * actuation.GRAVITY / np.maximum(n_stance, 1)
    reach = np.full((4, 3), servo.no_load_speed * dt)
    hip_x = HIP_POSITIONS[:, 0]

    q = commanded[0].copy()
    feet = HIP_POSITIONS + fk(q)
    R = np.eye(3)
    tr = np.array([0.0, 0.0, cfg.standing_height])
    anchors = feet @ R.T + tr
    anchors[:, 2] = 0.0
    planted = stance[0].copy()

    rec_t, rec_pos, rec_rpy = [0.0], [tr.copy()], [(0.0, 0.0, 0.0)]
    slips: list[SlipEvent] = []
    fell = done = False
    x0 = tr[0]
    thr = cfg.slip_threshold
    for k in range(1, n_steps + 1):
        st = stance[k]
        tau = per_leg_weight[k] * np.abs(feet[:, 0] - hip_x)
        avail = servo.no_load_speed * np.maximum(0.0, 1.0 - tau / servo.stall_torque)
        reach[:, 1] = np.where(st, avail, servo.no_load_speed) * dt
        reach[:, 2] = reach[:, 1]
        gap = commanded[k] - q
        q = q + np.minimum(np.maximum(gap, -reach), reach)
        feet = HIP_POSITIONS + fk(q)

        keep = planted & st
        if np.count_nonzero(keep) < 3:
            fell = True
            break
        pose = _kabsch(feet[keep], anchors[keep])
        if pose is None:
            fell = True
            break
        R, tr = pose
        world = feet @ R.T + tr
        resid = world[:, :2] - anchors[:, :2]
        dist = np.sqrt(resid[:, 0] ** 2 + resid[:, 1] ** 2)
        slipping = keep & (dist > thr)
        if slipping.any():
            for leg in np.flatnonzero(slipping):
                anchors[leg, :2] += resid[leg] * (1.0 - thr / dist[leg])
                slips.append(SlipEvent(k * dt, int(leg), float(dist[leg] - thr)))
        touchdown = st & ~planted
        if touchdown.any():
            anchors[touchdown, :2] = world[touchdown, :2]
        planted = st

        # finish on the next trace sample so spacing stays uniform
        done = done or direction * (tr[0] - x0) >= cfg.target_distance
        if k % every == 0:
            rec_t.append(k * dt)
            rec_pos.append(tr.copy())
            rec_rpy.append(_rpy(R))
            if done:
                break

    t = np.array(rec_t)
    pos = np.array(rec_pos)
    return Trace(t, pos, np.array(rec_rpy), _acceleration(t, pos), slips, fell, direction)


def _acceleration(t: np.ndarray, pos: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(pos)
    if len(t) < 3:
        return acc
    h = t[1] - t[0]
    acc[1:-1] = (pos[2:] - 2 * pos[1:-1] + pos[:-2]) / (h * h)
    acc[0], acc[-1] = acc[1], acc[-2]
    return acc


def evaluate(p: GaitParams, geom: LegGeometry | None, cfg: EvalConfig,
             weights: fitness.StabilityWeights = fitness.StabilityWeights()) -> EvaluationResult:
    """Walk forward then back with the same gait and average the two passes."""
    if not is_feasible(p):
        raise ConstraintError(f"speed product {speed_product(p):.3f} m/min exceeds the cap")
    if geom is None:
        geom = LegGeometry.from_params(p)
    fwd = simulate_pass(p, geom, cfg, 1)
    back = simulate_pass(p, geom, cfg, -1)
    fell = fwd.fell or back.fell
    per_pass = []
    for tr in (fwd, back):
        if tr.fell or len(tr.t) < 2:
            per_pass.append((0.0, -cfg.fall_penalty))
        else:
            per_pass.append((fitness.speed_fitness(tr), fitness.stability_fitness(tr, weights)))
    if fell:
        speed, stability = 0.0, -cfg.fall_penalty
    else:
        speed = float(0.5 * (per_pass[0][0] + per_pass[1][0]))
        stability = float(0.5 * (per_pass[0][1] + per_pass[1][1]))
    return EvaluationResult(
        speed=speed,
        stability=stability,
        distance_forward=fwd.progress,
        distance_back=back.progress,
        duration_forward=fwd.duration,
        duration_back=back.duration,
        fell=fell,
        slip_count=len(fwd.slip_events) + len(back.slip_events),
        speed_forward=per_pass[0][0],
        speed_back=per_pass[1][0],
        stability_forward=per_pass[0][1],
        stability_back=per_pass[1][1],
    )


def reevaluate(p: GaitParams, geom: LegGeometry | None, cfg: EvalConfig, n: int = 10) -> list[EvaluationResult]:
    if n < 1:
        raise DomainError("n must be at least 1")
    return [evaluate(p, geom, cfg.with_(seed=cfg.seed + i)) for i in range(n)]
