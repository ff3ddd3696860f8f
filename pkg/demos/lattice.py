"""
The k=3 mask lattice
====================

Every BVC mask of width 3, and which pairs are ordered.
"""

from bvclock import BitMask, compare, enumerate_lattice, join
from bvclock.cli import render_lattice
from bvclock.core import Timestamp

# the full comparability matrix, B/A/E/I for before, after, equal, incomparable
print(render_lattice(3))

# (1,0,0) happened before (1,1,0), but (1,1,0) and (1,0,1) are concurrent
a, b, c = BitMask.parse("100"), BitMask.parse("110"), BitMask.parse("101")
print("100 vs 110:", compare(Timestamp(0, a), Timestamp(0, b)).name)
print("110 vs 101:", compare(Timestamp(0, b), Timestamp(0, c)).name)

# join is the least upper bound: bitwise OR
print("join(110, 101) =", join(b, c))

# a whole epoch outranks any mask of the previous one
print("(0,111) vs (1,000):", compare(Timestamp(0, BitMask.full(3)), Timestamp(1, BitMask.zero(3))).name)

lat = enumerate_lattice(3)
print(f"{len(lat.masks)} masks, {lat.incomparable_pairs()} unordered incomparable pairs")
