"""
One account, three transactions
===============================

Alice issues t1, then t2 depending on t1, then an independent t3. We lose t1
on the network and watch what still confirms, then send t1 again.
"""

from pathlib import Path

from bvclock import Mode, SimConfig, address_from_name, load, run

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
alice = address_from_name("alice")


def show(name, mode=Mode.BVC):
    scenario = load(SCENARIOS / f"{name}.json")
    result = run(scenario, SimConfig.for_scenario(scenario, mode=mode))
    print(f"-- {name} ({mode.value})")
    for t in result.metrics.transactions:
        print(f"   {t.label}: {result.transactions[t.label].tag}  {t.status}")
    return result


# the wallet hands out the lowest free bit and ORs in the bits of dependencies
show("walkthrough")

# t1 dropped: t2 waits for its dependency, t3 does not care
show("walkthrough_drop")

# the same loss under nonces stalls everything behind the gap
show("walkthrough_drop", Mode.NONCE)

# t1 arrives late; Alice's clock walks through (0,[1,0,1]) and the full
# mask rolls over into a fresh epoch
result = show("walkthrough_resubmit")
print("   clock after each confirmation:", ", ".join(str(c) for c in result.sender_clocks(alice)))
