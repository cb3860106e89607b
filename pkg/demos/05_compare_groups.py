"""
Comparing two final populations
===============================

Gene vectors are projected onto the Fisher discriminant. The two sets
of projections are then compared with a Mann-Whitney U test and Cliff's
delta, and p-values from several comparisons are Holm-adjusted.
"""
import numpy as np

from quadevo import analysis

rng = np.random.default_rng(0)
tall = rng.normal([0.3, 0.7], 0.15, size=(24, 2))   # (femur, tibia) extension genes
short = rng.normal([0.3, 0.5], 0.15, size=(24, 2))

w, pa, pb = analysis.lda_project(analysis.GroupSample("14.8V", tall), analysis.GroupSample("12.0V", short))
print("discriminant direction:", w.round(3))
mw = analysis.mann_whitney_u(pa, pb)
print(f"U = {mw.U:.0f}, p = {mw.p:.2e} ({mw.method}), Cliff's delta = {analysis.cliffs_delta(pa, pb):+.2f}")

# %%
# Small samples get the exact null distribution.
print(analysis.mann_whitney_u([1, 2, 3], [4, 5, 6]))

# %%
# Holm's step-down adjustment.
print(analysis.holm_correction([0.01, 0.04, 0.03]).round(3))
