"""Scale-N ends through a radius filtration.

For a truncation ``B(R_max)`` and a scale ``N`` the points at radius ``>= r``
are split into chain components (consecutive distances ``<= N``). A component
*escapes* when it reaches the outer shell ``radius >= R_max - N``. As ``r``
grows the escaping components refine; once the refinement is a bijection
over several consecutive radii the number of threads is the end count at
scale N. Comparing the end counts of consecutive scales gives the
correspondences ``N -> N + 1`` and the stabilization threshold.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConfigurationError, ConsistencyError
from .metric import TOL, SpaceOracle, TruncatedSpace, truncate

__all__ = [
    "FiltrationConfig",
    "SigmaConfig",
    "ScalePartition",
    "EndsFiltration",
    "EndCorrespondence",
    "SigmaReport",
    "components_at_scale",
    "ends_filtration",
    "phi_map",
    "detect_stability",
    "sigma",
    "end_of_points",
]


@dataclass(frozen=True)
class FiltrationConfig:
    r_max: float = 1024.0
    r0: float = 4.0
    factor: float = 2.0
    radius_window: int = 3
    escape_margin: float | None = None  # shell width; None means the scale N
    max_ends: int = 64

    def schedule(self, N: float) -> list[float]:
        """Radii ``r0 * factor**j`` up to ``r_max / 4`` (and at most ``r_max - N``)."""
        out = []
        r = self.r0
        while r <= self.r_max / 4 + TOL and r <= self.r_max - N + TOL:
            out.append(float(r))
            r *= self.factor
        return out


@dataclass(frozen=True)
class SigmaConfig:
    n_min: int = 1
    n_max: int = 8
    r_max: float = 1024.0
    r0: float = 4.0
    radius_window: int = 3
    stability_window: int = 5
    escape_margin: float | None = None
    max_ends: int = 64
    basepoint: object = None

    def filtration(self) -> FiltrationConfig:
        return FiltrationConfig(r_max=self.r_max, r0=self.r0, radius_window=self.radius_window,
                                escape_margin=self.escape_margin, max_ends=self.max_ends)


@dataclass(eq=False)
class ScalePartition:
    """Chain components of ``{p : radius(p) >= inner_radius}`` at one scale.

    ``labels[k]`` is the component of truncation point ``k`` (``-1`` below the
    inner radius); components are numbered by first appearance.
    """

    trunc: TruncatedSpace
    scale: float
    inner_radius: float
    labels: np.ndarray
    escaping: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.escaping)

    @property
    def n_escaping(self) -> int:
        return int(self.escaping.sum())

    @property
    def components(self) -> list[list]:
        out = [[] for _ in range(self.n_components)]
        for k in np.nonzero(self.labels >= 0)[0]:
            out[self.labels[k]].append(self.trunc.points[k])
        return out

    def escaping_labels(self) -> np.ndarray:
        return np.nonzero(self.escaping)[0]

    def component_of(self, p) -> int:
        return int(self.labels[self.trunc.index_of(p)])

    def members(self, label: int) -> np.ndarray:
        return np.nonzero(self.labels == label)[0]


def components_at_scale(
    trunc: TruncatedSpace, N: float, r: float, escape_margin: float | None = None
) -> ScalePartition:
    """Partition the points at radius ``>= r`` into scale-``N`` chain components."""
    margin = N if escape_margin is None else escape_margin
    if r < 0 or r > trunc.radius_max - margin + TOL:
        raise ConfigurationError(
            f"inner radius {r:g} leaves no escape shell below R_max={trunc.radius_max:g} "
            f"at margin {margin:g}"
        )
    n = len(trunc)
    radii = trunc.radii
    active = radii >= r - TOL
    i, j, _ = trunc.pairs(N)
    keep = active[i] & active[j]
    graph = coo_matrix((np.ones(int(keep.sum()), dtype=np.int8), (i[keep], j[keep])), shape=(n, n))
    _, raw = connected_components(graph, directed=False)

    labels = np.full(n, -1, dtype=np.int64)
    idx = np.nonzero(active)[0]
    if len(idx):
        uniq, first = np.unique(raw[idx], return_index=True)
        order = np.argsort(first, kind="stable")
        remap = np.empty(raw.max() + 1, dtype=np.int64)
        remap[uniq[order]] = np.arange(len(uniq))
        labels[idx] = remap[raw[idx]]
        ncomp = len(uniq)
    else:
        ncomp = 0
    escaping = np.zeros(ncomp, dtype=bool)
    shell = active & (radii >= trunc.radius_max - margin - TOL)
    escaping[labels[shell]] = True
    return ScalePartition(trunc, float(N), float(r), labels, escaping)


def _refinement(outer: ScalePartition, inner: ScalePartition) -> dict[int, int]:
    """Map each escaping component at the larger radius to its container at the smaller."""
    pts = np.nonzero(outer.labels >= 0)[0]
    pairs = np.unique(np.stack([outer.labels[pts], inner.labels[pts]], axis=1), axis=0)
    pairs = pairs[outer.escaping[pairs[:, 0]]]
    if np.any(pairs[:, 1] < 0):
        raise ConsistencyError("a point active at the larger radius is missing at the smaller one")
    children, counts = np.unique(pairs[:, 0], return_counts=True)
    if np.any(counts > 1):
        bad = int(children[counts > 1][0])
        raise ConsistencyError(
            f"component {bad} at r={outer.inner_radius:g} meets several components at "
            f"r={inner.inner_radius:g}"
        )
    return {int(c): int(p) for c, p in pairs}


def _bijective(ref: dict[int, int], inner: ScalePartition) -> bool:
    targets = list(ref.values())
    return len(set(targets)) == len(targets) and set(targets) == set(inner.escaping_labels().tolist())


@dataclass(eq=False)
class EndsFiltration:
    scale: float
    trunc: TruncatedSpace
    radii: list[float]
    partitions: list[ScalePartition]
    refinements: list[dict[int, int]]  # refinements[j]: radius j+1 -> radius j
    counts: list[int]
    stable_from: float | None
    max_ends: int = 64
    _threads: np.ndarray | None = field(default=None, repr=False)

    @property
    def conclusive(self) -> bool:
        return self.stable_from is not None

    @property
    def thread_count(self) -> int | None:
        return self.counts[-1] if self.conclusive else None

    @property
    def capped(self) -> bool:
        return self.counts[-1] > self.max_ends

    @property
    def ends(self) -> list[int]:
        """End ids: escaping component labels at the largest radius."""
        return self.partitions[-1].escaping_labels().tolist()

    def threads(self) -> np.ndarray:
        """``threads()[e, j]`` is the component carrying end ``e`` at radius index ``j``."""
        if self._threads is None:
            ends = self.ends
            table = np.empty((len(ends), len(self.radii)), dtype=np.int64)
            if ends:
                table[:, -1] = ends
                for j in range(len(self.radii) - 2, -1, -1):
                    ref = self.refinements[j]
                    table[:, j] = [ref[int(c)] for c in table[:, j + 1]]
            self._threads = table
        return self._threads

    def thread(self, end: int, j: int) -> int:
        return int(self.threads()[self.ends.index(end), j])

    def count_trace(self) -> list[tuple[float, int]]:
        return list(zip(self.radii, self.counts))


def ends_filtration(space: SpaceOracle | TruncatedSpace, N: float,
                    config: FiltrationConfig = FiltrationConfig()) -> EndsFiltration:
    """Compute partitions over the radius schedule and the refinement maps.

    A filtration whose counts never settle is returned with ``stable_from``
    set to ``None`` rather than raising.
    """
    trunc = space if isinstance(space, TruncatedSpace) else truncate(space, config.r_max)
    if trunc.radius_max + TOL < config.r_max:
        raise ConfigurationError(
            f"truncation radius {trunc.radius_max:g} is smaller than r_max {config.r_max:g}"
        )
    radii = config.schedule(N)
    if not radii:
        raise ConfigurationError(f"no admissible radii for N={N:g} and r_max={config.r_max:g}")
    parts = [components_at_scale(trunc, N, r, config.escape_margin) for r in radii]
    refs = [_refinement(parts[j + 1], parts[j]) for j in range(len(parts) - 1)]
    counts = [p.n_escaping for p in parts]

    # smallest j0 such that every step in radii[j0:] keeps the count and is bijective
    j0 = len(parts) - 1
    while j0 > 0 and counts[j0 - 1] == counts[j0] and _bijective(refs[j0 - 1], parts[j0 - 1]):
        j0 -= 1
    stable = len(parts) - j0 >= config.radius_window
    return EndsFiltration(float(N), trunc, radii, parts, refs, counts,
                          radii[j0] if stable else None, config.max_ends)


@dataclass(frozen=True)
class EndCorrespondence:
    mapping: dict
    n_source: int
    n_target: int

    @property
    def injective(self) -> bool:
        return len(set(self.mapping.values())) == len(self.mapping)

    @property
    def surjective(self) -> bool:
        return len(set(self.mapping.values())) == self.n_target

    @property
    def bijective(self) -> bool:
        return self.injective and self.surjective

    def verdict(self) -> dict:
        return {"source_ends": self.n_source, "target_ends": self.n_target,
                "injective": self.injective, "surjective": self.surjective,
                "bijective": self.bijective}


def phi_map(filtA: EndsFiltration, filtB: EndsFiltration) -> EndCorrespondence:
    """Send each end of ``filtA`` to the end of ``filtB`` whose components contain it.

    Both filtrations must share the truncation and radius schedule and
    ``filtB`` must be at least as coarse as ``filtA``.
    """
    if filtA.trunc is not filtB.trunc and filtA.trunc.points != filtB.trunc.points:
        raise ConfigurationError("filtrations are over different truncations")
    shared = [r for r in filtA.radii if r in filtB.radii]
    if not shared:
        raise ConfigurationError("filtrations share no radius")
    ta, tb = filtA.threads(), filtB.threads()
    mapping = {}
    for a, end in enumerate(filtA.ends):
        cands = set(range(len(filtB.ends)))
        for r in shared:
            ja, jb = filtA.radii.index(r), filtB.radii.index(r)
            members = filtA.partitions[ja].members(int(ta[a, ja]))
            hosts = np.unique(filtB.partitions[jb].labels[members])
            if len(hosts) != 1 or hosts[0] < 0:
                raise ConsistencyError(
                    f"end {end} at scale {filtA.scale:g} is not contained in a single "
                    f"scale-{filtB.scale:g} component at r={r:g}"
                )
            cands &= {b for b in range(len(filtB.ends)) if tb[b, jb] == hosts[0]}
        if len(cands) != 1:
            raise ConsistencyError(
                f"end {end} at scale {filtA.scale:g} matches {len(cands)} ends at scale {filtB.scale:g}"
            )
        mapping[end] = filtB.ends[cands.pop()]
    return EndCorrespondence(mapping, len(filtA.ends), len(filtB.ends))


def detect_stability(filtrations: Mapping[int, EndsFiltration], window: int = 5,
                     phis: Mapping[int, EndCorrespondence] | None = None) -> int | None:
    """Smallest K with every ``phi(N -> N+1)`` bijective for ``K <= N < N_max``.

    The stable range must contain at least ``window`` such steps.
    """
    Ns = sorted(filtrations)
    if Ns[-1] - Ns[0] < window:
        raise ConfigurationError(f"need N_max >= N_min + window ({window}), got {Ns[0]}..{Ns[-1]}")
    if phis is None:
        phis = _phis(filtrations)
    n_max = Ns[-1]
    K = None
    for N in reversed(Ns[:-1]):
        fa, fb = filtrations[N], filtrations[N + 1]
        ok = (fa.conclusive and fb.conclusive and not fa.capped
              and fa.thread_count == fb.thread_count
              and phis.get(N) is not None and phis[N].bijective)
        if not ok:
            break
        K = N
    if K is None or n_max - K < window:
        return None
    return K


def _phis(filtrations: Mapping[int, EndsFiltration]) -> dict[int, EndCorrespondence | None]:
    out = {}
    for N in sorted(filtrations):
        if N + 1 in filtrations:
            try:
                out[N] = phi_map(filtrations[N], filtrations[N + 1])
            except ConsistencyError:
                out[N] = None
    return out


def _jsonable(p):
    if isinstance(p, tuple):
        return [_jsonable(x) for x in p]
    if isinstance(p, (np.integer,)):
        return int(p)
    if isinstance(p, (np.floating,)):
        return float(p)
    return p


@dataclass
class SigmaReport:
    space: str
    basepoint: object
    config: dict
    per_scale: dict  # N -> end count, ">=cap" or None when inconclusive
    phi: dict  # N -> verdict of the correspondence N -> N+1
    K: int | None
    sigma: int | str | None
    diagnostics: dict
    filtrations: dict = field(default_factory=dict, repr=False)

    @property
    def stable(self) -> bool:
        return self.K is not None

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "basepoint": _jsonable(self.basepoint),
            "config": self.config,
            "per_scale": {str(k): v for k, v in self.per_scale.items()},
            "phi": {str(k): v for k, v in self.phi.items()},
            "K": self.K,
            "sigma": self.sigma,
            "stable": self.stable,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def csv_rows(self) -> list[tuple]:
        rows = []
        for N in sorted(self.filtrations):
            for r, c in self.filtrations[N].count_trace():
                rows.append((N, r, c))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("N", "r", "escaping_count"))
        for N, r, c in self.csv_rows():
            w.writerow((N, f"{r:g}", c))
        return buf.getvalue()


def _count_label(f: EndsFiltration):
    if not f.conclusive:
        return None
    return f">={f.max_ends}" if f.capped else f.thread_count


def sigma(space: SpaceOracle, config: SigmaConfig = SigmaConfig()) -> SigmaReport:
    """End counts for every integer scale in the configured range and the
    stabilized value when the correspondences settle into bijections."""
    if config.n_min < 1 or config.n_max < config.n_min:
        raise ConfigurationError(f"bad scale range {config.n_min}..{config.n_max}")
    if config.basepoint is not None:
        space = space.with_basepoint(config.basepoint)
    fc = config.filtration()
    trunc = truncate(space, config.r_max)
    Ns = list(range(config.n_min, config.n_max + 1))
    # largest scale first so the pair cache is filled once
    filts = {N: ends_filtration(trunc, N, fc) for N in reversed(Ns)}
    filts = {N: filts[N] for N in Ns}
    phis = _phis(filts)
    K = detect_stability(filts, config.stability_window, phis)
    value = _count_label(filts[K]) if K is not None else None
    cfg = asdict(config)
    cfg["basepoint"] = _jsonable(config.basepoint)
    diagnostics = {
        "r_max": config.r_max,
        "points": len(trunc),
        "radii": {str(N): f.radii for N, f in filts.items()},
        "stable_from": {str(N): f.stable_from for N, f in filts.items()},
        "count_trace": {str(N): f.counts for N, f in filts.items()},
        "stabilization_window": config.stability_window,
        "inconclusive": K is None,
        "assumption": "scale-N ends counted as threads of escaping chain components",
    }
    return SigmaReport(
        space=space.name,
        basepoint=space.basepoint,
        config=cfg,
        per_scale={N: _count_label(f) for N, f in filts.items()},
        phi={N: (None if c is None else c.verdict()) for N, c in phis.items()},
        K=K,
        sigma=value,
        diagnostics=diagnostics,
        filtrations=filts,
    )


def end_of_points(filt: EndsFiltration, points: Sequence) -> int | None:
    """The end carrying the tail of a point sequence, or ``None`` if undetermined.

    The tail is taken beyond the largest schedule radius the sequence
    finishes outside of; it must sit in one component traversed by exactly
    one end thread.
    """
    trunc = filt.trunc
    if any(p not in trunc for p in points):
        return None
    rad = [trunc.radius_of(p) for p in points]
    threads = filt.threads()
    for j in range(len(filt.radii) - 1, -1, -1):
        r = filt.radii[j]
        below = [k for k, x in enumerate(rad) if x < r - TOL]
        start = below[-1] + 1 if below else 0
        tail = points[start:]
        if not tail:
            continue
        labels = {filt.partitions[j].component_of(p) for p in tail}
        if len(labels) != 1:
            return None
        comp = labels.pop()
        owners = [e for e, row in zip(filt.ends, threads) if row[j] == comp]
        return owners[0] if len(owners) == 1 else None
    return None
