"""How deep should an approval ballot go?

Under a Mallows model the rate-optimal K-Approval for picking one winner
moves from 1-Approval at low noise towards M/2 as voters become nearly
uniform. This script prints the best K for a few noise levels and the
number of voters each choice needs for a 1% error bound.
"""

from ballot_rates import Goal, MallowsModel, optimal_k, voters_needed

M = 20
goal = Goal.winners(1, M)

print(f"{'phi':>6} {'best K':>7} {'rate':>12} {'voters for 1%':>14}")
for phi in (0.1, 0.3, 0.6, 0.9, 0.99, 0.999):
    res = optimal_k(MallowsModel(M, phi), goal)
    print(f"{phi:>6} {res.best_K:>7} {res.best_rate:>12.3e} {voters_needed(res.best_rate, 0.01):>14}")
