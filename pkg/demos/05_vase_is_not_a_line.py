"""
The vase is not a line
======================

The vase looks like two parallel rays, so one might guess it is coarsely a
line. It is coarsely a ray: sigma is 1 for the vase and 2 for the line,
and any coarse equivalence would have to preserve it.
"""

# %%
from coarse_sigma import builtin_map, builtin_space, compare_spaces

vase = builtin_space("vase-net", {"eps": 1})
line = builtin_space("real-net", {"eps": 1})
ray = builtin_space("halfline-net", {"eps": 1})

doc = compare_spaces(vase, line)
print(doc["sigma"], doc["conclusion"])

# %%
# Against the ray, sigma agrees and the explicit maps carry ends bijectively.
f, g = builtin_map("vase-project", vase, ray, 1024), builtin_map("vase-embed", ray, vase, 1024)
doc = compare_spaces(vase, ray, f=f, g=g)
print(doc["conclusion"])
print(doc["equivalence"]["forward"]["f"], doc["equivalence"]["forward"]["commutes"])
