"""
Checking a coarse equivalence from tables
=========================================

Maps are tables over truncations. Every bound below is an exact maximum
over the table; comparing the value at R with the value at R/2 tells us
whether it is holding steady.
"""

# %%
from coarse_sigma import (
    bornology_profile,
    builtin_map,
    builtin_space,
    properness_bound_check,
    verify_coarse_equivalence,
)

line, Z = builtin_space("real-net", {"eps": 0.5}), builtin_space("integers")
f, g = builtin_map("floor", line, Z, 512), builtin_map("inclusion", Z, line, 512)

print(bornology_profile(f, [0.5, 1, 2, 4]))
plan = verify_coarse_equivalence(f, g, range(1, 9), k_source=1, k_target=1)
print(plan.verified, "D =", plan.D, "D_target =", plan.D_target, "M, L, S =", plan.M, plan.L, plan.S)

# %%
# The vase projects onto the ray; the ray embeds as the right wall.
vase, ray = builtin_space("vase-net", {"eps": 1}), builtin_space("halfline-net", {"eps": 1})
p, e = builtin_map("vase-project", vase, ray, 512), builtin_map("vase-embed", ray, vase, 512)
plan = verify_coarse_equivalence(p, e, range(1, 9), k_source=2, k_target=1)
print(plan.verified, "D =", plan.D)

rows = properness_bound_check(p, e, [0, 2, 8])
# each measured preimage diameter against its own M + 2R
print(all(r["ok"] for r in rows), "smallest slack", min(r["bound"] - r["diameter"] for r in rows))

# %%
# A constant map fails: preimages of a point are the whole truncation.
const = builtin_map("constant", Z, Z, 128)
ident = builtin_map("identity", Z, Z, 128)
for v in verify_coarse_equivalence(ident, const, [1, 2]).violations:
    print("-", v)
