"""Kinematics of one 3-DOF mammal-type leg with reconfigurable segments.

Joint order is hip roll, hip pitch, knee pitch. Hip roll is the outermost
joint and rotates about the fore-aft (x) axis; both pitch joints rotate
about the lateral axis. With all angles zero the leg hangs straight down.

Sign conventions (hip frame: x forward, y left, z up):

* a positive pitch angle swings the distal segment forward (+x);
* a positive roll angle swings the foot to the left (+y), so roll = pi/2
  puts a straight leg at (0, +length, 0);
* the knee only bends backward, i.e. knee_pitch <= 0.

The proximal part of the thigh is a fixed 0.110 m offset; the femur and
tibia lead screws lengthen the thigh and shank respectively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .genome import DomainError, GaitParams

FIXED_OFFSET = 0.110
FEMUR_MIN, FEMUR_MAX = 0.185, 0.210
TIBIA_MIN, TIBIA_MAX = 0.255, 0.350
KNEE_LIMIT = 5 * np.pi / 6  # max backward knee flexion, rad
RECONFIG_SPEED = 0.001  # m/s per lead screw

# hip positions in the body frame, legs ordered FL, FR, HL, HR
HIP_POSITIONS = np.array([
    [0.24, 0.15, 0.0],
    [0.24, -0.15, 0.0],
    [-0.24, 0.15, 0.0],
    [-0.24, -0.15, 0.0],
])

_TOL = 1e-9


def _mm(x: float) -> float:
    return 1000.0 * x


class ReachabilityError(ValueError):
    """Target outside the leg's workspace."""

    def __init__(self, distance: float, nearest: float):
        super().__init__(f"target at {distance:.6f} m is unreachable; nearest reachable distance {nearest:.6f} m")
        self.distance = distance
        self.nearest_distance = nearest


@dataclass(frozen=True)
class LegGeometry:
    femur: float = FEMUR_MIN
    tibia: float = TIBIA_MIN
    fixed_offset: float = FIXED_OFFSET

    def __post_init__(self):
        if not (FEMUR_MIN - _TOL <= self.femur <= FEMUR_MAX + _TOL):
            raise DomainError(f"femur {self.femur} outside [{FEMUR_MIN}, {FEMUR_MAX}]")
        if not (TIBIA_MIN - _TOL <= self.tibia <= TIBIA_MAX + _TOL):
            raise DomainError(f"tibia {self.tibia} outside [{TIBIA_MIN}, {TIBIA_MAX}]")

    @classmethod
    def from_extensions(cls, femur_ext: float, tibia_ext: float) -> "LegGeometry":
        return cls(FEMUR_MIN + femur_ext, TIBIA_MIN + tibia_ext)

    @classmethod
    def from_params(cls, p: GaitParams) -> "LegGeometry":
        return cls.from_extensions(p.femur_ext, p.tibia_ext)

    @property
    def thigh(self) -> float:
        return self.fixed_offset + self.femur

    @property
    def total_length(self) -> float:
        return (_mm(self.fixed_offset) + _mm(self.femur) + _mm(self.tibia)) / 1000.0

    @property
    def min_reach(self) -> float:
        a, b = self.thigh, self.tibia
        return float(np.sqrt(a * a + b * b + 2 * a * b * np.cos(KNEE_LIMIT)))


@dataclass(frozen=True)
class JointAngles:
    hip_roll: float
    hip_pitch: float
    knee_pitch: float

    def as_array(self) -> np.ndarray:
        return np.array([self.hip_roll, self.hip_pitch, self.knee_pitch])


def forward(geom: LegGeometry, q) -> np.ndarray:
    """Foot position in the hip frame.

    ``q`` is a :class:`JointAngles` or an array whose last axis holds
    (roll, hip_pitch, knee_pitch); arrays broadcast.
    """
    q = q.as_array() if isinstance(q, JointAngles) else np.asarray(q, dtype=float)
    roll, pitch, knee = q[..., 0], q[..., 1], q[..., 2]
    # accumulate in millimetres so whole-mm segment lengths add up exactly
    a, b = _mm(geom.fixed_offset) + _mm(geom.femur), _mm(geom.tibia)
    xs = (a * np.sin(pitch) + b * np.sin(pitch + knee)) / 1000.0
    zs = (-a * np.cos(pitch) - b * np.cos(pitch + knee)) / 1000.0
    out = np.empty(np.shape(xs) + (3,))
    out[..., 0] = xs
    out[..., 1] = -np.sin(roll) * zs
    out[..., 2] = np.cos(roll) * zs
    return out


def forward_fn(geom: LegGeometry):
    """FK bound to one geometry for a tight loop over a (4, 3) joint array.

    Same arithmetic as :func:`forward`, done with scalar math to skip
    numpy's per-call overhead on tiny arrays.
    """
    a, b = _mm(geom.fixed_offset) + _mm(geom.femur), _mm(geom.tibia)
    sin, cos = math.sin, math.cos

    def fk(q: np.ndarray) -> np.ndarray:
        rows = []
        for roll, pitch, knee in q.tolist():
            z = (-a * cos(pitch) - b * cos(pitch + knee)) / 1000.0
            rows.append(((a * sin(pitch) + b * sin(pitch + knee)) / 1000.0, -sin(roll) * z, cos(roll) * z))
        return np.array(rows)

    return fk


def _solve(geom: LegGeometry, target: np.ndarray) -> np.ndarray:
    x, y, z = target[..., 0], target[..., 1], target[..., 2]
    a, b = geom.thigh, geom.tibia
    r_yz = np.hypot(y, z)
    roll = np.where(r_yz > 0.0, np.arctan2(y, -z), 0.0)
    zs = -r_yz
    d2 = x * x + zs * zs
    c = np.clip((d2 - a * a - b * b) / (2 * a * b), -1.0, 1.0)
    knee = -np.arccos(c)
    pitch = np.arctan2(x, -zs) - np.arctan2(b * np.sin(knee), a + b * np.cos(knee))
    return np.stack([roll, pitch, knee], axis=-1)


def reachable(geom: LegGeometry, target) -> np.ndarray | bool:
    d = np.linalg.norm(np.asarray(target, dtype=float), axis=-1)
    ok = (d >= geom.min_reach - _TOL) & (d <= geom.total_length + _TOL)
    return bool(ok) if np.ndim(ok) == 0 else ok


def clamp_to_reach(geom: LegGeometry, target) -> np.ndarray:
    """Radially project targets onto the reachable shell."""
    t = np.asarray(target, dtype=float)
    d = np.linalg.norm(t, axis=-1, keepdims=True)
    lo, hi = geom.min_reach, geom.total_length
    dc = np.clip(d, lo, hi)
    safe = np.where(d > 0.0, d, 1.0)
    out = t * (dc / safe)
    # the origin has no direction; push straight down
    return np.where(d > 0.0, out, np.array([0.0, 0.0, -lo]))


def inverse(geom: LegGeometry, target) -> JointAngles:
    """Joint angles placing the foot at ``target`` (backward-bending knee)."""
    t = np.asarray(target, dtype=float)
    if t.shape != (3,):
        raise DomainError("inverse expects a single 3-vector; use inverse_many for batches")
    d = float(np.linalg.norm(t))
    if not reachable(geom, t):
        nearest = min(max(d, geom.min_reach), geom.total_length)
        raise ReachabilityError(d, nearest)
    return JointAngles(*(float(v) for v in _solve(geom, t)))


def inverse_many(geom: LegGeometry, targets, clamp: bool = True) -> np.ndarray:
    """Batched IK over the last axis; unreachable targets are clamped first."""
    t = np.asarray(targets, dtype=float)
    if clamp:
        t = clamp_to_reach(geom, t)
    elif not np.all(reachable(geom, t)):
        raise ReachabilityError(float(np.max(np.linalg.norm(t, axis=-1))), geom.total_length)
    return _solve(geom, t)


def reconfigure_duration(src: LegGeometry, dst: LegGeometry) -> float:
    """Seconds to move the lead screws; both segments move in parallel."""
    return max(abs(dst.femur - src.femur), abs(dst.tibia - src.tibia)) / RECONFIG_SPEED
