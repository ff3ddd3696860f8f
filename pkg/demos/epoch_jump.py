"""
Crossing an epoch boundary
==========================

With state (0,[1,1,0]) the next transaction (0,[1,1,1]) fills the epoch. The
two epoch-1 transactions cannot confirm until it does, whatever order they
arrive in.
"""

from pathlib import Path

from bvclock import SimConfig, epoch_jump_probe, load

scenario = load(Path(__file__).resolve().parent.parent / "scenarios" / "epoch_jump.json")

# e0 is delayed by 3 s on the network, so e1a and e1b reach validators first
probe = epoch_jump_probe(scenario, SimConfig.for_scenario(scenario))

print(f"{'label':6} {'tag':14} {'confirmable at':>15} {'confirmed at':>13}")
for entry in probe.values():
    print(
        f"{entry.label:6} {str(entry.tag):14} "
        f"{str(entry.confirmable_at):>15} {str(entry.confirmed_at):>13}"
    )

# positions are (block height, index in block); the epoch-1 pair only becomes
# confirmable after e0 has been applied
e0 = probe["e0"].confirmed_at
assert all(probe[x].confirmable_at > e0 for x in ("e1a", "e1b"))
print("epoch 1 opened only after", e0)
