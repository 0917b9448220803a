"""End-to-end workflows: comparing two spaces and the regression suite of
worked examples (line, ray, vase and the nets relating them)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .coarse_maps import (
    MapWitness,
    builtin_map,
    induced_end_map,
    properness_bound_check,
    verify_coarse_equivalence,
)
from .ends import EndsFiltration, SigmaConfig, SigmaReport, ends_filtration, phi_map, sigma
from .errors import ConsistencyError
from .metric import SpaceOracle, builtin_space, truncate

__all__ = [
    "compare_spaces",
    "end_maps",
    "random_basepoints",
    "CheckResult",
    "run_examples",
]


def _filtration(report: SigmaReport, N: float, config: SigmaConfig) -> EndsFiltration:
    if N in report.filtrations:
        return report.filtrations[N]
    if float(N).is_integer() and int(N) in report.filtrations:
        return report.filtrations[int(N)]
    trunc = next(iter(report.filtrations.values())).trunc
    return ends_filtration(trunc, N, config.filtration())


def _compose_ends(first: dict, second: dict) -> dict:
    return {e: second[first[e]] for e in first}


def end_maps(f: MapWitness, g: MapWitness, rep_x: SigmaReport, rep_y: SigmaReport,
             config: SigmaConfig) -> dict:
    """Induced end maps of a verified pair at the scales K, M, L of its plan,
    plus the check that ``g_M ∘ f_K`` agrees with the scale change ``K -> L``."""
    plan = verify_coarse_equivalence(f, g, range(1, config.n_max + 1),
                                     k_source=rep_x.K, k_target=rep_y.K)
    fx = _filtration(rep_x, plan.K, config)
    fy = _filtration(rep_y, plan.M, config)
    fl = _filtration(rep_x, plan.L, config)
    out = {"plan": plan.summary()}
    try:
        f_ind = induced_end_map(f, fx, fy, plan)
        g_ind = induced_end_map(g, fy, fl, plan)
        lo, hi = (fx, fl) if plan.K <= plan.L else (fl, fx)
        scale_change = phi_map(lo, hi).mapping
        if plan.K > plan.L:
            scale_change = {v: k for k, v in scale_change.items()}
    except ConsistencyError as exc:
        out["error"] = str(exc)
        out["bijective"] = False
        return out
    out["f"] = f_ind.verdict()
    out["g"] = g_ind.verdict()
    out["commutes"] = _compose_ends(f_ind.mapping, g_ind.mapping) == scale_change
    out["bijective"] = f_ind.bijective and g_ind.bijective
    return out


def compare_spaces(a: SpaceOracle, b: SpaceOracle, config: SigmaConfig = SigmaConfig(),
                   f: MapWitness | None = None, g: MapWitness | None = None) -> dict:
    """σ of both spaces and, when maps ``f: a -> b`` and ``g: b -> a`` are
    given, the equivalence check and induced end maps in both directions."""
    ra, rb = sigma(a, config), sigma(b, config)
    doc = {
        "spaces": [a.name, b.name],
        "sigma": [ra.sigma, rb.sigma],
        "K": [ra.K, rb.K],
        "stable": ra.stable and rb.stable,
        "reports": [ra.to_dict(), rb.to_dict()],
    }
    if not doc["stable"]:
        doc["conclusion"] = "inconclusive: sigma did not stabilize"
        return doc
    if ra.sigma != rb.sigma:
        doc["conclusion"] = (
            f"distinguished by sigma ({ra.sigma} vs {rb.sigma}): not coarsely equivalent"
        )
    else:
        doc["conclusion"] = f"sigma agrees ({ra.sigma}); invariant does not distinguish"
    if f is not None and g is not None:
        forward = end_maps(f, g, ra, rb, config)
        backward = end_maps(g, f, rb, ra, config)
        doc["equivalence"] = {"forward": forward, "backward": backward}
        verified = forward["plan"]["verified"] and backward["plan"]["verified"]
        ok = verified and forward["bijective"] and backward["bijective"]
        ok = ok and forward.get("commutes", False) and backward.get("commutes", False)
        doc["maps_verified"] = verified
        doc["end_maps_bijective"] = ok
        if ok:
            doc["conclusion"] += "; maps verified as a coarse equivalence with bijective end maps"
        elif verified:
            doc["conclusion"] += "; maps verified but end maps are not bijective"
        else:
            doc["conclusion"] += "; maps not verified as a coarse equivalence"
    return doc


def random_basepoints(space: SpaceOracle, n: int, radius: float, seed: int) -> list:
    """``n`` distinct points within ``radius`` of the basepoint (seeded, in draw order)."""
    pts = truncate(space, radius).points
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pts), size=min(n, len(pts)), replace=False)
    return [pts[k] for k in picks]


@dataclass
class CheckResult:
    name: str
    expected: object
    observed: object
    passed: bool

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: expected {self.expected}, got {self.observed}"


def _forward_plan(doc: dict) -> dict | None:
    # absent when sigma did not stabilize
    return doc.get("equivalence", {}).get("forward", {}).get("plan")


def run_examples(r_max: float = 1024, shifted: bool = False, seed: int = 0,
                 config: SigmaConfig | None = None) -> list[CheckResult]:
    """Recompute every worked example; with ``shifted`` each σ is also
    recomputed from a random basepoint within radius 32."""
    config = replace(config or SigmaConfig(), r_max=r_max)
    results = []

    def check(name, expected, observed):
        results.append(CheckResult(name, expected, observed, expected == observed))

    cases = [
        ("sigma(integers)", builtin_space("integers"), (2, 1)),
        ("sigma(halfline-net(1))", builtin_space("halfline-net", {"eps": 1}), (1, 1)),
        ("sigma(vase-net(1))", builtin_space("vase-net", {"eps": 1}), (1, 2)),
        ("sigma(real-net(1))", builtin_space("real-net", {"eps": 1}), (2, 1)),
        ("sigma(real-net(0.5))", builtin_space("real-net", {"eps": 0.5}), (2, 1)),
    ]
    for name, space, (value, K) in cases:
        rep = sigma(space, config)
        check(name + " value, K", (value, K), (rep.sigma, rep.K))
        if shifted:
            bp = random_basepoints(space, 1, 32, seed)[0]
            rep2 = sigma(space, replace(config, basepoint=bp))
            check(f"{name} from basepoint {bp!r}", value, rep2.sigma)

    vase, line = builtin_space("vase-net", {"eps": 1}), builtin_space("real-net", {"eps": 1})
    doc = compare_spaces(vase, line, config)
    check("compare(vase-net(1), real-net(1))", ([1, 2], True),
          (doc["sigma"], doc["conclusion"].startswith("distinguished")))

    R = config.r_max
    X, Y = builtin_space("real-net", {"eps": 0.5}), builtin_space("integers")
    f, g = builtin_map("floor", X, Y, R), builtin_map("inclusion", Y, X, R)
    doc = compare_spaces(X, Y, config, f, g)
    plan = _forward_plan(doc)
    check("floor/inclusion verified with D <= 0.5, f∘g exact", (True, True, 0.0),
          plan and (plan["verified"], plan["D"] <= 0.5, plan["D_target"]))
    check("floor/inclusion end maps bijective and commuting", True, doc.get("end_maps_bijective"))

    V, H = vase, builtin_space("halfline-net", {"eps": 1})
    f, g = builtin_map("vase-project", V, H, R), builtin_map("vase-embed", H, V, R)
    doc = compare_spaces(V, H, config, f, g)
    plan = _forward_plan(doc)
    check("vase projection/embedding verified with D = 2, f∘g exact", (True, 2.0, 0.0),
          plan and (plan["verified"], plan["D"], plan["D_target"]))
    check("vase end maps bijective and commuting", True, doc.get("end_maps_bijective"))
    rows = properness_bound_check(f, g, [0, 1, 2, 4, 8])
    check("vase preimage diameters within M + 2R", True, all(r["ok"] for r in rows))
    return results
