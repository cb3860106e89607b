"""Open-loop crawl gait: foot paths, leg schedule and balancing wag.

Foot positions are expressed in each leg's hip frame (x forward, y left,
z up) and never depend on leg morphology.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genome import DomainError, GaitParams

STANDING_HEIGHT = 0.45  # m, hip above ground
LEG_NAMES = ("front_left", "front_right", "hind_left", "hind_right")


@dataclass(frozen=True)
class FootPath:
    stance_start: np.ndarray
    stance_end: np.ndarray
    swing_controls: np.ndarray  # (k, 2) points in the (x, z) plane


@dataclass(frozen=True)
class LegSchedule:
    # FL, FR, HL, HR -> lift order FL, HR, FR, HL
    phase_offsets: tuple[float, float, float, float] = (0.0, 0.5, 0.75, 0.25)
    lift_duration: float = 0.1

    def swing_windows_disjoint(self) -> bool:
        offs = sorted(self.phase_offsets)
        gaps = np.diff(offs + [offs[0] + 1.0])
        return bool(np.all(gaps >= self.lift_duration))


def build_foot_path(p: GaitParams) -> FootPath:
    L, H, S = p.step_length, p.step_height, p.step_smoothing
    controls = np.array([
        [-L / 2, 0.0],       # lift-off
        [-L / 4, H],         # apex
        [L / 2 + S, 0.1 * H],  # smoothing point stretches the front of the swing
        [L / 2, 0.0],        # touch-down
    ])
    return FootPath(
        stance_start=np.array([L / 2, 0.0]),
        stance_end=np.array([-L / 2, 0.0]),
        swing_controls=controls,
    )


def catmull_rom(controls, u):
    """Evaluate a uniform Catmull-Rom spline through ``controls``.

    Parameters
    ----------
    controls : array_like, shape (k, d)
        Control points, k >= 2. The curve passes through every one of them.
    u : float or array_like
        Curve parameter in [0, 1]; each of the k - 1 segments gets an equal
        share of the interval.

    Returns
    -------
    ndarray, shape u.shape + (d,)
    """
    P = np.asarray(controls, dtype=float)
    if P.ndim != 2 or len(P) < 2:
        raise DomainError("catmull_rom needs at least 2 control points")
    # phantom end points reflected about the end knots
    ext = np.vstack([2 * P[0] - P[1], P, 2 * P[-1] - P[-2]])
    n_seg = len(P) - 1
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    s = u * n_seg
    i = np.minimum(np.floor(s).astype(int), n_seg - 1)
    t = (s - i)[..., None]
    p0, p1, p2, p3 = ext[i], ext[i + 1], ext[i + 2], ext[i + 3]
    return 0.5 * (
        2 * p1
        + (p2 - p0) * t
        + (2 * p0 - 5 * p1 + 4 * p2 - p3) * t**2
        + (3 * p1 - p0 - 3 * p2 + p3) * t**3
    )


def catmull_rom_tangent(controls, u):
    """d/du of :func:`catmull_rom` (one-sided at segment joints)."""
    P = np.asarray(controls, dtype=float)
    ext = np.vstack([2 * P[0] - P[1], P, 2 * P[-1] - P[-2]])
    n_seg = len(P) - 1
    s = np.clip(np.asarray(u, dtype=float), 0.0, 1.0) * n_seg
    i = np.minimum(np.floor(s).astype(int), n_seg - 1)
    t = (s - i)[..., None]
    p0, p1, p2, p3 = ext[i], ext[i + 1], ext[i + 2], ext[i + 3]
    d = 0.5 * ((p2 - p0) + 2 * (2 * p0 - 5 * p1 + 4 * p2 - p3) * t + 3 * (3 * p1 - p0 - 3 * p2 + p3) * t**2)
    return d * n_seg


def touchdown_angle(p: GaitParams) -> float:
    """Angle (rad) between the swing tangent at touch-down and the ground."""
    dx, dz = catmull_rom_tangent(build_foot_path(p).swing_controls, 1.0)
    return float(np.arctan2(abs(dz), abs(dx)))


def wag_offset(p: GaitParams, global_phase):
    """Body wag (x, y) in metres; x runs at twice the gait frequency."""
    ph = np.asarray(global_phase, dtype=float) + p.wag_phase
    x = p.wag_x_amp * np.sin(4 * np.pi * ph)
    y = p.wag_y_amp * np.sin(2 * np.pi * ph)
    return np.stack([x, y], axis=-1)


def leg_phase(global_phase, leg_index: int, schedule: LegSchedule = LegSchedule()):
    if not 0 <= leg_index < 4:
        raise DomainError(f"leg_index must be 0..3, got {leg_index}")
    return np.mod(np.asarray(global_phase, dtype=float) - schedule.phase_offsets[leg_index], 1.0)


def sample_foot_position(
    path: FootPath,
    p: GaitParams,
    leg_phase,
    global_phase=0.0,
    *,
    y_home: float = 0.0,
    standing_height: float = STANDING_HEIGHT,
    direction: int = 1,
):
    """Commanded foot position in the hip frame, wag included.

    The stance occupies leg phases [lift_duration, 1) and moves the foot
    from the front to the back of the contact line at a constant rate; the
    swing occupies [0, lift_duration). The body wag shifts the body by
    :func:`wag_offset`, so feet move by its negative. ``direction=-1``
    mirrors the fore-aft axis for walking backwards.
    """
    ph = np.asarray(leg_phase, dtype=float)
    lift = p.lift_duration
    L = p.step_length
    swing = ph < lift
    u_swing = np.where(swing, ph / lift, 0.0)
    s_stance = np.where(swing, 0.0, (ph - lift) / (1.0 - lift))
    sw = catmull_rom(path.swing_controls, u_swing)
    x = np.where(swing, sw[..., 0], L / 2 - s_stance * L)
    z = np.where(swing, sw[..., 1], 0.0)
    wag = wag_offset(p, global_phase)
    x = direction * (x - wag[..., 0])
    y = y_home - wag[..., 1] + np.zeros_like(x)
    return np.stack([x, y, z - standing_height], axis=-1)


def foot_targets(
    p: GaitParams,
    global_phase,
    *,
    schedule: LegSchedule | None = None,
    standing_height: float = STANDING_HEIGHT,
    direction: int = 1,
):
    """Commanded hip-frame targets for all four legs.

    Returns ``(targets, stance)`` with shapes ``phase.shape + (4, 3)`` and
    ``phase.shape + (4,)``.
    """
    if schedule is None:
        schedule = LegSchedule(lift_duration=p.lift_duration)
    path = build_foot_path(p)
    gp = np.asarray(global_phase, dtype=float)
    targets, stance = [], []
    for k in range(4):
        lp = leg_phase(gp, k, schedule)
        targets.append(sample_foot_position(
            path, p, lp, gp, standing_height=standing_height, direction=direction))
        stance.append(lp >= p.lift_duration)
    return np.stack(targets, axis=-2), np.stack(stance, axis=-1)


def path_points(p: GaitParams, n: int = 200) -> np.ndarray:
    """One cycle of a leg's commanded path without wag as (phase, x, z) rows, for plotting/CSV export."""
    path = build_foot_path(p)
    phases = np.linspace(0.0, 1.0, n, endpoint=False)
    xyz = sample_foot_position(path, p.replace(wag_x_amp=0.0, wag_y_amp=0.0), phases)
    return np.column_stack([phases, xyz[:, 0], xyz[:, 2]])
