"""
What a lower supply voltage does to a servo
===========================================

Each joint follows a straight speed-torque line. Both ends of the line
shrink when the supply drops from 14.8 V to 12 V.
"""
import numpy as np

from quadevo import actuation

for v in (14.8, 13.4, 12.0):
    s = actuation.spec_for_voltage(v)
    print(f"{v:4.1f} V: no-load {s.no_load_speed:.2f} rad/s, stall {s.stall_torque:.2f} N m")

# %%
# Speed left over under load. A stance leg carries its share of the body
# weight on a lever equal to the foot's fore-aft offset from the hip.
torque = actuation.stance_load_torque(actuation.ROBOT_MASS, 3, np.array([0.0, 0.05, 0.10, 0.15]))
for v in (14.8, 12.0):
    print(f"{v:4.1f} V:", actuation.max_speed(actuation.spec_for_voltage(v), torque).round(2), "rad/s at",
          torque.round(2), "N m")

# %%
# A rate-limited joint chasing a step command: it closes the gap at its
# available speed and then holds.
dt, angle = 0.01, np.zeros(2)
reach = np.array([actuation.spec_for_voltage(v).no_load_speed for v in (14.8, 12.0)]) * dt
for k in range(1, 16):
    angle = actuation.track(angle, np.full(2, 1.0), reach)
    if k % 5 == 0:
        print(f"t = {k * dt:.2f} s: 14.8 V at {angle[0]:.3f} rad, 12 V at {angle[1]:.3f} rad")
