"""
Discrete metric spaces as enumerable truncations
================================================

A space knows its basepoint and can list every point of a ball. Nothing is
infinite in memory: we only ever look at ``truncate(space, R)``.
"""

# %%
import numpy as np

from coarse_sigma import builtin_space, parse_space_spec, truncate

# %%
# The vase: two vertical walls x = -1 and x = 1 joined along y = 1,
# with the taxicab metric and basepoint (1, 1).
vase = builtin_space("vase-net", {"eps": 1})
print(vase, vase.distance((-1, 5), (1, 5)))

trunc = truncate(vase, 6)
print(len(trunc), "points within radius 6")
print(sorted(trunc.points))

# %%
# Radii are cached as a numpy array, aligned with ``trunc.points``.
print(np.column_stack([trunc.keys, trunc.radii])[:5])

# %%
# A star of k rays glued at a root. Points are (ray, depth).
star = builtin_space("star-tree", {"k": 3})
print(star.distance((1, 2), (2, 3)), star.distance((1, 2), (1, 7)))

# %%
# Explicit finite spaces come from a JSON document; a matrix that breaks
# the triangle inequality is rejected with the offending triple.
tri = parse_space_spec({"points": [[0], [1], [2]], "metric": {"matrix": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]}})
print(tri.distance(0, 2))
try:
    parse_space_spec({"metric": {"matrix": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}})
except ValueError as exc:
    print("rejected:", exc)
