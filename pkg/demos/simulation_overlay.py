"""Simulated election error against the exp(-rN) rate line.

Draws Mallows electorates of growing size, counts how often 2-Approval picks
the wrong winner, and fits the log-error slope over the band where the error
sits between 0.1% and 20%.
"""

import numpy as np

from ballot_rates import Goal, MallowsModel, approval_rule, model_curve, outcome_rate, overlay

model = MallowsModel(4, 0.5)
rule = approval_rule(2, 4)
goal = Goal((1, 3))

rate = outcome_rate(model, rule, goal).overall_rate
grid = np.unique(np.linspace(0.2 / rate, 9 / rate, 16).round().astype(int))
curve = model_curve(model, rule, goal, N_grid=grid, trials=2000, seed=20160000)
fit = overlay(curve, rate)

print(f"rate r = {rate:.5f}")
print(f"{'N':>6} {'miss':>8} {'exp(-rN)':>10}")
for N, value, bound in fit.rows:
    print(f"{N:>6} {value:>8.4f} {bound:>10.4f}")
if fit.slope is not None:
    print(f"fitted slope {fit.slope:.5f}, ratio to -r {fit.ratio:.3f}")
print(fit.note)
