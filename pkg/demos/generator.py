"""
Skewed workloads
================

A few heavy senders, many light ones. The generator draws per-sender
transaction counts from a Pareto law and then runs them in both modes.
"""

import numpy as np

from bvclock import GenParams, Mode, SimConfig, generate, run
from bvclock.workload import pareto_counts, top_share

# per-sender counts for 50 senders and 1000 transactions
counts = pareto_counts(50, 1000, 1.16, np.random.default_rng(7))
print("largest senders:", [int(c) for c in sorted(counts, reverse=True)[:5]])
print(f"top 20% of senders issue {top_share(counts, 0.2):.0%} of transactions")

# a small scenario with some dependencies, and a lossy network
scenario = generate(GenParams(senders=8, txs=60, dep_prob=0.3, width=8), seed=7)
for mode in Mode:
    cfg = SimConfig.for_scenario(scenario, mode=mode, seed=7, drop_probability=0.05)
    agg = run(scenario, cfg).metrics.aggregates()
    print(f"{mode.value:6} confirmed {agg['confirmed']}/{agg['submitted']}, stalled {agg['stalled']}")
