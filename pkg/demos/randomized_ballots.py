"""Serving voters a random ballot depth can beat every fixed depth.

Two winners are chosen; candidates h and i win and j loses. The table holds
the probability that a voter approves exactly one candidate of each pair at
depths 3 and 4. Depth 3 separates h from j worst, depth 4 separates i from j
worst, so an even mix of the two lifts the minimum.
"""

from ballot_rates import randomization_scan
from ballot_rates.rates import SeparationTable, min_rate

table = SeparationTable(
    {(0, 2): {3: (0.277, 0.200), 4: (0.266, 0.188)}, (1, 2): {3: (0.255, 0.160), 4: (0.295, 0.217)}}
)

for K in (3, 4):
    rate, pair = min_rate(table.pure_rates(K))
    print(f"{K}-Approval: rate {rate:.7f}, pivotal pair {pair}")
rate, pair = min_rate(table.mixture_rates([(3, 0.5), (4, 0.5)]))
print(f"even 3/4 mix: rate {rate:.7f}, pivotal pair {pair}")

scan = randomization_scan(table, K_pairs=[(3, 4)])
best = scan.findings[0]
print(f"best mixing weight on depth 3: d={best.d:.3f}, rate {best.rate_mix:.7f}")
