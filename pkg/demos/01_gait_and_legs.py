"""
A crawl gait, from genes to joint angles
========================================

Ten genes in [0, 1] decode to a gait and a leg shape. The gait module
turns that into foot targets, and inverse kinematics into joint angles.
"""
import numpy as np

from quadevo import gait, genome, kinematics

genes = np.full(genome.N_GENES, 0.4)
params = genome.decode(genes)
print(params)
print(f"speed product {genome.speed_product(params):.2f} m/min (cap 10), feasible: {genome.is_feasible(params)}")

# %%
# One gait cycle sampled at 100 points. Legs lift one at a time in the
# order front-left, hind-right, front-right, hind-left.
phase = np.linspace(0.0, 1.0, 100, endpoint=False)
targets, stance = gait.foot_targets(params, phase)
print("legs in stance per sample:", sorted(set(stance.sum(axis=1).tolist())))
for leg, name in enumerate(gait.LEG_NAMES):
    lift = phase[~stance[:, leg]]
    print(f"{name:12s} swings during phase {lift.min():.2f}..{lift.max():.2f}")

# %%
# Rows are (phase, x, z) in the body frame. The foot clears the ground
# by at most the step height and never dips below it.
path = gait.path_points(params, 200)
clearance = path[:, 2] + gait.STANDING_HEIGHT  # body-frame z measured from the ground
print(f"swing apex {clearance.max() * 1000:.1f} mm, lowest point {clearance.min() * 1000:.3f} mm")

# %%
# Joint angles for the front-left leg; forward kinematics recovers the targets.
geom = kinematics.LegGeometry.from_params(params)
q = kinematics.inverse_many(geom, targets[:, 0])
err = np.abs(kinematics.forward(geom, q) - targets[:, 0]).max()
print(f"leg lengths {geom.thigh:.3f} + {geom.tibia:.3f} m, FK/IK round-trip error {err:.1e} m")
print("hip pitch range (deg):", np.degrees([q[:, 1].min(), q[:, 1].max()]).round(1))
