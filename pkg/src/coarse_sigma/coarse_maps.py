"""Measured coarse properties of maps tabulated on truncations.

A :class:`MapWitness` is a point table ``source truncation -> target``. All
bounds are exact maxima over the truncation, never estimates; whether a
bound "looks unbounded" is judged by comparing the truncation at ``R`` with
its restriction to ``R / 2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .ends import EndCorrespondence, EndsFiltration
from .errors import ConsistencyError, ContractError, ParameterError, SpecValidationError
from .metric import TOL, SpaceOracle, TruncatedSpace, parse_space_spec, truncate
from .sequences import NSequence, make_sequence

__all__ = [
    "MapWitness",
    "EquivalencePlan",
    "PropernessReport",
    "MAP_BUILTINS",
    "tabulate",
    "builtin_map",
    "identity_map",
    "compose",
    "map_sequence",
    "bornology_profile",
    "preimage",
    "properness_check",
    "closeness",
    "verify_coarse_equivalence",
    "proper_from_composition",
    "properness_bound_check",
    "induced_end_map",
    "parse_map_spec",
]


@dataclass(eq=False)
class MapWitness:
    name: str
    source: SpaceOracle
    target: SpaceOracle
    domain: TruncatedSpace
    table: dict
    profile: dict = field(default_factory=dict)

    def __call__(self, p):
        return self.table[p]

    @cached_property
    def image_keys(self) -> np.ndarray:
        return self.target.encode([self.table[p] for p in self.domain.points])

    def restrict(self, R: float) -> "MapWitness":
        dom = self.domain.restrict(R)
        return MapWitness(self.name, self.source, self.target, dom,
                          {p: self.table[p] for p in dom.points})


def tabulate(name: str, func: Callable, source: SpaceOracle, target: SpaceOracle,
             radius: float | None = None, domain: TruncatedSpace | None = None) -> MapWitness:
    """Tabulate ``func`` on ``truncate(source, radius)`` (or on ``domain``)."""
    if domain is None:
        if radius is None:
            raise ValueError("give either a radius or a domain")
        domain = truncate(source, radius)
    elif domain.source != source:
        raise ContractError("domain is a truncation of a different space")
    table = {}
    for p in domain.points:
        q = func(p)
        if not target.contains(q):
            raise ContractError(f"{name}: image {q!r} of {p!r} is not a point of {target.name}")
        table[p] = q
    return MapWitness(name, source, target, domain, table)


def _floor(p):
    return math.floor(float(p) + TOL)


MAP_BUILTINS: dict[str, Callable] = {
    "floor": lambda src, tgt, params: _floor,
    "inclusion": lambda src, tgt, params: (lambda p: tgt.point_from_coordinates(src.coordinates(p))),
    "vase-project": lambda src, tgt, params: (lambda p: tgt.point_from_coordinates([p[1]])),
    "vase-embed": lambda src, tgt, params: (lambda p: tgt.point_from_coordinates([1.0, float(p)])),
    "identity": lambda src, tgt, params: (lambda p: p),
    "constant": lambda src, tgt, params: (
        (lambda p, v=tgt.point_from_coordinates(params["value"]): v)
        if "value" in params else (lambda p, v=tgt.basepoint: v)
    ),
}


def builtin_map(name: str, source: SpaceOracle, target: SpaceOracle, radius: float,
                params: Mapping | None = None) -> MapWitness:
    """Tabulate a named closed-form map.

    ``floor`` and ``inclusion`` relate nets of the line, ``vase-project``
    sends ``(x, y)`` to ``y`` and ``vase-embed`` sends ``y`` to ``(1, y)``.
    """
    try:
        factory = MAP_BUILTINS[name]
    except KeyError:
        raise ParameterError(f"unknown builtin map {name!r}; expected one of {sorted(MAP_BUILTINS)}") from None
    return tabulate(name, factory(source, target, dict(params or {})), source, target, radius)


def identity_map(domain: TruncatedSpace) -> MapWitness:
    return tabulate("identity", lambda p: p, domain.source, domain.source, domain=domain)


def compose(f: MapWitness, g: MapWitness) -> MapWitness:
    """``g ∘ f`` on the domain of ``f``; ``g`` must be tabulated on every image of ``f``."""
    if f.target != g.source:
        raise ContractError(f"cannot compose {f.name}: ->{f.target.name} with {g.name}: {g.source.name}->")
    table = {}
    for p in f.domain.points:
        q = f.table[p]
        if q not in g.table:
            raise ContractError(
                f"{g.name} is not tabulated at {q!r} = {f.name}({p!r}); enlarge its truncation"
            )
        table[p] = g.table[q]
    return MapWitness(f"{g.name}∘{f.name}", f.source, g.target, f.domain, table)


def map_sequence(f: MapWitness, s: NSequence, scale: float) -> NSequence:
    """Apply ``f`` pointwise and validate the image at ``scale``."""
    return make_sequence(f.target, [f.table[p] for p in s.points], scale)


def bornology_profile(f: MapWitness, scales: Iterable[float]) -> dict[float, float]:
    """``M(N)``: the largest ``d(f x, f y)`` over truncation pairs with ``d(x, y) <= N``."""
    scales = sorted(set(float(N) for N in scales))
    if not scales:
        return {}
    i, j, d = f.domain.pairs(scales[-1])
    img = f.target.pair_dist(f.image_keys[i], f.image_keys[j]) if len(i) else np.empty(0)
    out = {}
    for N in scales:
        mask = d <= N + TOL
        out[N] = float(img[mask].max()) if mask.any() else 0.0
        f.profile[N] = out[N]
    return out


def _bound(f: MapWitness, N: float) -> float:
    if N not in f.profile:
        bornology_profile(f, [N])
    return f.profile[N]


def preimage(f: MapWitness, targets: Iterable) -> list:
    wanted = set(targets)
    return [p for p in f.domain.points if f.table[p] in wanted]


@dataclass
class PropernessReport:
    rows: list  # one dict per probe radius
    bounded: bool

    def max_diameter(self, rho: float) -> float:
        return next(r["max_diameter"] for r in self.rows if r["rho"] == rho)


def _centers(f: MapWitness, max_centers: int, seed: int) -> np.ndarray:
    inner = np.nonzero(f.domain.radii <= f.domain.radius_max / 4 + TOL)[0]
    keys = np.unique(f.image_keys[inner], axis=0)
    if len(keys) > max_centers:
        rng = np.random.default_rng(seed)
        keys = keys[np.sort(rng.choice(len(keys), size=max_centers, replace=False))]
    return keys


def properness_check(f: MapWitness, probe_radii: Sequence[float], max_centers: int = 32,
                     seed: int = 0) -> PropernessReport:
    """Diameters of preimages of target balls around images of inner points.

    A preimage reaching the outer half of the truncation for a bounded target
    set is reported as unbounded-looking; truncations cannot prove more.
    """
    centers = _centers(f, max_centers, seed)
    R = f.domain.radius_max
    rows, ok = [], True
    for rho in probe_radii:
        best, best_c, touches = 0.0, None, False
        for c in centers:
            dist = f.target.pair_dist(f.image_keys, np.repeat(c[None, :], len(f.domain), axis=0))
            pre = np.nonzero(dist <= rho + TOL)[0]
            diam = f.source.diameter(f.domain.keys[pre])
            if f.domain.radii[pre].max() >= R / 2 - TOL:
                touches = True
            if best_c is None or diam > best:
                best, best_c = diam, f.target.decode(c)
        rows.append({"rho": float(rho), "max_diameter": best, "center": best_c,
                     "bounded": not touches})
        ok = ok and not touches
    return PropernessReport(rows, ok)


def _closeness_arg(f1: MapWitness, f2: MapWitness) -> tuple[float, object]:
    if f1.domain.points != f2.domain.points or f1.source != f2.source:
        raise ContractError(f"{f1.name} and {f2.name} are tabulated on different domains")
    if f1.target != f2.target:
        raise ContractError(f"{f1.name} and {f2.name} have different targets")
    if not len(f1.domain):
        return 0.0, None
    d = f1.target.pair_dist(f1.image_keys, f2.image_keys)
    k = int(np.argmax(d))
    return float(d[k]), f1.domain.points[k]


def closeness(f1: MapWitness, f2: MapWitness) -> float:
    """Exact ``sup d(f1 x, f2 x)`` over the shared truncation."""
    return _closeness_arg(f1, f2)[0]


@dataclass
class EquivalencePlan:
    """Outcome of checking a candidate coarse equivalence, with the scales
    needed to transport ends between the two spaces.

    ``M`` and ``L`` are chosen as ``max(M_f(K), K')`` and ``max(M_g(M), D)``;
    ``S`` is the larger of the closeness of ``f∘g`` to the identity and
    ``M_f(L)``; both parts are kept.
    """

    verified: bool
    violations: list
    K: float
    K_prime: float
    M: float
    L: float
    D: float
    D_target: float
    S: float
    S_closeness: float
    S_bornology: float
    profile_f: dict
    profile_g: dict
    properness_f: PropernessReport
    properness_g: PropernessReport
    evidence: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "verified": self.verified, "violations": list(self.violations),
            "K": self.K, "K_prime": self.K_prime, "M": self.M, "L": self.L,
            "D": self.D, "D_target": self.D_target, "S": self.S,
            "S_closeness": self.S_closeness, "S_bornology": self.S_bornology,
            "profile_f": {str(k): v for k, v in sorted(self.profile_f.items())},
            "profile_g": {str(k): v for k, v in sorted(self.profile_g.items())},
            "properness_f": self.properness_f.rows, "properness_g": self.properness_g.rows,
            "evidence": self.evidence,
        }


def _grows(full: float, half: float, tol: float) -> bool:
    return full > half + tol + TOL


def verify_coarse_equivalence(
    f: MapWitness, g: MapWitness, scales: Sequence[float], *,
    k_source: float | None = None, k_target: float | None = None,
    growth_tolerance: float = 0.0, probe_radii: Sequence[float] | None = None,
) -> EquivalencePlan:
    """Check ``f: X -> Y`` and ``g: Y -> X`` for closeness of both composites to
    the identities, bornology and properness.

    ``g`` must be tabulated on every image of ``f`` and vice versa. The
    verdict is evidence from the truncations, never a proof.
    """
    if f.target != g.source or g.target != f.source:
        raise ContractError(f"{f.name} and {g.name} do not form a pair X -> Y -> X")
    scales = sorted(set(float(s) for s in scales))
    violations = []
    evidence = {}

    gf, fg = compose(f, g), compose(g, f)
    D, xw = _closeness_arg(gf, identity_map(f.domain))
    D_half = closeness(gf.restrict(f.domain.radius_max / 2),
                       identity_map(f.domain.restrict(f.domain.radius_max / 2)))
    Dt, yw = _closeness_arg(fg, identity_map(g.domain))
    Dt_half = closeness(fg.restrict(g.domain.radius_max / 2),
                        identity_map(g.domain.restrict(g.domain.radius_max / 2)))
    evidence["closeness"] = {"g∘f": [D_half, D], "f∘g": [Dt_half, Dt]}
    if _grows(D, D_half, growth_tolerance):
        violations.append(
            f"{gf.name} not close to identity: sup distance grows {D_half:g} -> {D:g} "
            f"(witness {xw!r} -> {gf.table[xw]!r})"
        )
    if _grows(Dt, Dt_half, growth_tolerance):
        violations.append(
            f"{fg.name} not close to identity: sup distance grows {Dt_half:g} -> {Dt:g} "
            f"(witness {yw!r} -> {fg.table[yw]!r})"
        )

    for h in (f, g):
        full = bornology_profile(h, scales)
        half = bornology_profile(h.restrict(h.domain.radius_max / 2), scales)
        evidence[f"bornology {h.name}"] = {str(N): [half[N], full[N]] for N in scales}
        for N in scales:
            if _grows(full[N], half[N], growth_tolerance):
                violations.append(f"{h.name} not bornologous at N={N:g}: M grows {half[N]:g} -> {full[N]:g}")
                break

    probes = list(probe_radii) if probe_radii is not None else scales
    pf, pg = properness_check(f, probes), properness_check(g, probes)
    for h, rep in ((f, pf), (g, pg)):
        if not rep.bounded:
            bad = next(r for r in rep.rows if not r["bounded"])
            violations.append(
                f"{h.name} not proper: preimage of the {bad['rho']:g}-ball around "
                f"{bad['center']!r} reaches the truncation boundary"
            )

    K = float(k_source if k_source is not None else scales[0])
    Kp = float(k_target if k_target is not None else scales[0])
    M = max(_bound(f, K), Kp)
    L = max(_bound(g, M), D)
    S_b = _bound(f, L)
    return EquivalencePlan(
        verified=not violations, violations=violations, K=K, K_prime=Kp, M=M, L=L,
        D=D, D_target=Dt, S=max(Dt, S_b), S_closeness=Dt, S_bornology=S_b,
        profile_f=dict(f.profile), profile_g=dict(g.profile),
        properness_f=pf, properness_g=pg, evidence=evidence,
    )


def proper_from_composition(R: float, M: float) -> float:
    """Diameter bound for preimages of a set of diameter ``N`` under ``f`` when
    ``g ∘ f`` is within ``R`` of the identity and ``g`` maps ``N``-close points
    ``M``-close."""
    return M + 2 * R


def properness_bound_check(f: MapWitness, g: MapWitness, probe_radii: Sequence[float],
                           max_centers: int = 32, seed: int = 0) -> list[dict]:
    """Compare measured preimage diameters of ``f`` against ``M_g(N) + 2R``.

    ``N`` is the diameter of the image of the preimage and ``R`` the measured
    closeness of ``g ∘ f`` to the identity.
    """
    R = closeness(compose(f, g), identity_map(f.domain))
    rows = []
    for rho in probe_radii:
        for c in _centers(f, max_centers, seed):
            dist = f.target.pair_dist(f.image_keys, np.repeat(c[None, :], len(f.domain), axis=0))
            pre = np.nonzero(dist <= rho + TOL)[0]
            N = f.target.diameter(f.image_keys[pre])
            measured = f.source.diameter(f.domain.keys[pre])
            bound = proper_from_composition(R, _bound(g, N))
            rows.append({"rho": float(rho), "center": f.target.decode(c), "N": N, "R": R,
                         "M": _bound(g, N), "bound": bound, "diameter": measured,
                         "ok": measured <= bound + TOL})
    return rows


def induced_end_map(f: MapWitness, src: EndsFiltration, tgt: EndsFiltration,
                    plan: EquivalencePlan | None = None) -> EndCorrespondence:
    """Send each source end to the target end containing the image of its thread.

    The image of the end's outermost component is located at the largest
    target radius it reaches; it must sit in one target component carried by
    exactly one target end.
    """
    if src.trunc.source != f.source or tgt.trunc.source != f.target:
        raise ContractError("filtrations do not match the map's source and target")
    last = src.partitions[-1]
    tthreads = tgt.threads()
    mapping = {}
    for end in src.ends:
        pts = [src.trunc.points[k] for k in last.members(end)]
        missing = [p for p in pts if p not in f.table]
        if missing:
            raise ContractError(f"{f.name} is not tabulated at {missing[0]!r}; enlarge its truncation")
        imgs = [q for q in (f.table[p] for p in pts) if q in tgt.trunc]
        if not imgs:
            raise ConsistencyError(f"image of end {end} leaves the target truncation")
        rad = np.array([tgt.trunc.radius_of(q) for q in imgs])
        js = [j for j, r in enumerate(tgt.radii) if (rad >= r - TOL).any()]
        if not js:
            raise ConsistencyError(f"image of end {end} stays inside every target radius")
        j = js[-1]
        part = tgt.partitions[j]
        comps = {part.component_of(q) for q, x in zip(imgs, rad) if x >= tgt.radii[j] - TOL}
        if len(comps) != 1:
            raise ConsistencyError(
                f"image of end {end} splits across {len(comps)} target components at "
                f"r={tgt.radii[j]:g}; raise M or R_max"
            )
        comp = comps.pop()
        owners = [e for e, row in zip(tgt.ends, tthreads) if row[j] == comp]
        if len(owners) != 1:
            raise ConsistencyError(
                f"image of end {end} lands in a component carried by {len(owners)} target ends"
            )
        mapping[end] = owners[0]
    return EndCorrespondence(mapping, len(src.ends), len(tgt.ends))


def parse_map_spec(document, radius: float) -> MapWitness:
    """Tabulate a map from its spec document.

    ``{"builtin": name, "source": space spec, "target": space spec, "params": {...}}``
    or ``{"pairs": [[src index, tgt index], ...], "source": ..., "target": ...}``
    where indices refer to points of explicit finite spaces.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecValidationError(f"map spec is not valid JSON: {exc}") from None
    if not isinstance(document, Mapping) or "source" not in document or "target" not in document:
        raise SpecValidationError("map spec needs 'source' and 'target' space specs")
    source = parse_space_spec(document["source"])
    target = parse_space_spec(document["target"])
    if "builtin" in document:
        return builtin_map(document["builtin"], source, target, radius, document.get("params"))
    if "pairs" not in document:
        raise SpecValidationError("map spec needs 'builtin' or 'pairs'")
    try:
        lookup = {int(a): int(b) for a, b in document["pairs"]}
    except (TypeError, ValueError):
        raise SpecValidationError("'pairs' must be a list of [source index, target index]") from None
    domain = truncate(source, radius)
    missing = [p for p in domain.points if p not in lookup]
    if missing:
        raise SpecValidationError(f"'pairs' does not define the map at source point {missing[0]!r}")
    return tabulate(document.get("name", "explicit"), lookup.__getitem__, source, target, domain=domain)
