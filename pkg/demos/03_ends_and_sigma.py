"""
Counting ends and watching them stabilize
=========================================

For each scale N we split the points beyond radius r into chains of
N-close points, keep the ones that reach the edge of the truncation, and
follow them outward. The number of threads that survive is the end count
at scale N; sigma is that count once it stops changing with N.
"""

# %%
from coarse_sigma import SigmaConfig, builtin_space, components_at_scale, sigma, truncate

vase = builtin_space("vase-net", {"eps": 1})
trunc = truncate(vase, 256)

# %%
for N in (1, 2):
    part = components_at_scale(trunc, N, 16)
    print(f"N={N}: {part.n_escaping} escaping component(s) beyond r=16")

# %%
# The full report: per-scale counts, the scale maps between them and K.
rep = sigma(vase)
print(rep.per_scale)
print("phi 1 -> 2:", rep.phi[1])
print("sigma =", rep.sigma, "stable from K =", rep.K)

# %%
# The CSV trace is what a plot would use.
print("\n".join(rep.to_csv().splitlines()[:6]))

# %%
for name, params in [("integers", {}), ("halfline-net", {"eps": 1}), ("star-tree", {"k": 4})]:
    r = sigma(builtin_space(name, params), SigmaConfig(r_max=512))
    print(f"{name:13s} sigma={r.sigma} K={r.K}")

# %%
# Moving the basepoint changes nothing.
print(sigma(vase, SigmaConfig(basepoint=(-1, 20))).sigma)
