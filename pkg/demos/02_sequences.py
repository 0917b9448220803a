"""
N-sequences and when two of them are the same
==============================================

An N-sequence starts at the basepoint and never jumps more than N. Two
escaping sequences are identified when a short chain of sub- and
supersequences connects them.
"""

# %%
from coarse_sigma import builtin_space, equivalent_within, interleave_merge, make_sequence
from coarse_sigma.errors import ScaleViolation
from coarse_sigma.sequences import prepend_basepoint

vase = builtin_space("vase-net", {"eps": 1})

left = [(1, 1), (0, 1), (-1, 1)] + [(-1, y) for y in range(2, 41)]
right = [(1, y) for y in range(1, 46)]

# %%
# At scale 1 the walls are two apart, so no chain can hop between them.
s1, t1 = make_sequence(vase, left, 1), make_sequence(vase, right, 1)
print("scale 1:", equivalent_within(s1, t1, budget=8))

# %%
# At scale 2 a zigzag between the walls is a common supersequence.
s2, t2 = make_sequence(vase, left, 2), make_sequence(vase, right, 2)
chain = equivalent_within(s2, t2)
print("scale 2:", chain.directions, "verified" if chain.verify() else "broken")
print("zigzag starts", chain.steps[1].points[:8])

# %%
# Pointwise-close sequences merge as t0, s0, s1, t1, t2, s2, ...
Z = builtin_space("integers")
s, t = make_sequence(Z, range(20), 1), make_sequence(Z, range(2, 22), 1)
print(interleave_merge(s, t, 2).points[:10])
try:
    interleave_merge(s, t, 1)
except ScaleViolation as exc:
    print("L = 1 is too small:", exc)

# %%
# Changing the basepoint just prepends it.
print(prepend_basepoint(make_sequence(Z, range(10), 1), 3, 3).points)
