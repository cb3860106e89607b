"""Voltage-dependent servo model on a linear speed-torque line."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genome import DomainError

GRAVITY = 9.81
ROBOT_MASS = 5.5  # kg

RPM = 2 * np.pi / 60
# measured operating points of the joint servos: voltage -> (no-load rad/s, stall N m)
SERVO_TABLE = {
    12.0: (63 * RPM, 6.0),
    14.8: (78 * RPM, 7.3),
}
# stall current (A) and stall power (W); documentation only
SERVO_STALL_ELECTRICAL = {12.0: (4.1, 49.2), 14.8: (5.2, 78.0)}
V_MIN, V_MAX = 12.0, 14.8


@dataclass(frozen=True)
class ServoSpec:
    voltage: float
    no_load_speed: float
    stall_torque: float


@dataclass(frozen=True)
class ServoState:
    angle: float
    commanded: float


def spec_for_voltage(v: float) -> ServoSpec:
    if not V_MIN <= v <= V_MAX:
        raise DomainError(f"supply voltage {v} V outside [{V_MIN}, {V_MAX}]")
    if v in SERVO_TABLE:
        return ServoSpec(v, *SERVO_TABLE[v])
    w = (v - V_MIN) / (V_MAX - V_MIN)
    (s0, t0), (s1, t1) = SERVO_TABLE[V_MIN], SERVO_TABLE[V_MAX]
    return ServoSpec(v, s0 + w * (s1 - s0), t0 + w * (t1 - t0))


def max_speed(spec: ServoSpec, load):
    """Available joint speed (rad/s) under ``load`` (N m); works on arrays."""
    return spec.no_load_speed * np.maximum(0.0, 1.0 - np.asarray(load, dtype=float) / spec.stall_torque)


def step_tracking(state: ServoState, commanded: float, dt: float, available: float) -> ServoState:
    reach = available * dt
    gap = commanded - state.angle
    if abs(gap) <= reach:
        return ServoState(commanded, commanded)
    return ServoState(state.angle + np.copysign(reach, gap), commanded)


def track(angle, commanded, reach):
    """Array form of :func:`step_tracking`: move at most ``reach`` toward ``commanded``."""
    return angle + np.clip(commanded - angle, -reach, reach)


def stance_load_torque(total_mass: float, n_stance: int, lever_arm):
    if n_stance < 1:
        raise DomainError("no legs in stance; the load model does not cover flight")
    return total_mass * GRAVITY / n_stance * np.asarray(lever_arm, dtype=float)
