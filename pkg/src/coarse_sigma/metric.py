"""Countable pointed metric spaces presented as truncatable oracles.

A :class:`SpaceOracle` exposes a basepoint, a distance and a ball enumerator.
Internally each space encodes points as rows of a float array ("keys") so that
distances, neighbour pairs and diameters can be evaluated in bulk; point ids
are plain hashables (ints, floats or tuples) derived from those keys.

Typical usage::

    space = builtin_space("vase-net", {"eps": 1})
    trunc = truncate(space, 64)
"""

from __future__ import annotations

import copy
import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import OracleContractError, ParameterError, SpecValidationError

__all__ = [
    "TOL",
    "SpaceOracle",
    "LineNet",
    "VaseNet",
    "Lattice2D",
    "StarTree",
    "FiniteSpace",
    "TruncatedSpace",
    "BUILTIN_SPACES",
    "builtin_space",
    "truncate",
    "parse_space_spec",
    "load_space_spec",
]

TOL = 1e-9

PointId = Hashable

# rows per block when a pairwise computation has to fall back to brute force
_CHUNK = 2048


def _num(x: float) -> int | float:
    """Canonical scalar used inside point ids (ints where exact)."""
    x = round(float(x), 12)
    if x == 0:
        return 0
    return int(x) if x.is_integer() else x


class SpaceOracle(ABC):
    """A countable metric space with a basepoint and an effective ball enumerator.

    Subclasses enumerate balls around a fixed ``origin``; balls around any
    other basepoint are obtained by enumerating a larger origin ball and
    filtering, which is exact by the triangle inequality.
    """

    name: str

    def __init__(self, name: str, basepoint: PointId | None = None):
        self.name = name
        self._basepoint = self.origin if basepoint is None else basepoint
        if not self.contains(self._basepoint):
            raise ParameterError(f"{self._basepoint!r} is not a point of {name}")

    # -- subclass surface -------------------------------------------------

    @property
    @abstractmethod
    def origin(self) -> PointId: ...

    @abstractmethod
    def _origin_ball(self, R: float) -> list:
        """Points within ``R`` of ``origin`` in a deterministic order."""

    @abstractmethod
    def encode(self, points: Sequence[PointId]) -> np.ndarray:
        """Keys array of shape ``(n, k)`` for the given points."""

    @abstractmethod
    def decode(self, key: np.ndarray) -> PointId: ...

    @abstractmethod
    def pair_dist(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Row-wise distances between two key arrays of equal length."""

    @abstractmethod
    def contains(self, p: PointId) -> bool: ...

    def params(self) -> dict:
        return {}

    # -- public oracle ----------------------------------------------------

    @property
    def basepoint(self) -> PointId:
        return self._basepoint

    @property
    def key(self) -> tuple:
        return (type(self).__name__, self.name, json.dumps(self.params(), sort_keys=True),
                self._basepoint)

    def __eq__(self, other):
        if not isinstance(other, SpaceOracle):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} basepoint={self._basepoint!r}>"

    def distance(self, p: PointId, q: PointId) -> float:
        return float(self.pair_dist(self.encode([p]), self.encode([q]))[0])

    def ball(self, R: float) -> list:
        """All points within ``R`` of the basepoint."""
        if self._basepoint == self.origin:
            return self._origin_ball(R)
        shift = self.distance(self.origin, self._basepoint)
        cands = self._origin_ball(R + shift)
        if not cands:
            return []
        keys = self.encode(cands)
        d = self.pair_dist(keys, np.repeat(self.encode([self._basepoint]), len(cands), axis=0))
        return [p for p, dist in zip(cands, d) if dist <= R + TOL]

    def coordinates(self, p: PointId) -> np.ndarray:
        return self.encode([p])[0]

    def point_from_coordinates(self, coords) -> PointId:
        p = self.decode(np.atleast_1d(np.asarray(coords, dtype=float)))
        if not self.contains(p):
            raise ParameterError(f"{coords!r} is not a point of {self.name}")
        return p

    def with_basepoint(self, p: PointId) -> "SpaceOracle":
        if not self.contains(p):
            raise ParameterError(f"{p!r} is not a point of {self.name}")
        other = copy.copy(self)
        other._basepoint = p
        return other

    def pairs_within(self, keys: np.ndarray, N: float):
        """Index pairs ``i < j`` with ``d <= N`` plus their distances."""
        n = len(keys)
        I, J = [], []
        for start in range(0, n, _CHUNK):
            rows = np.arange(start, min(start + _CHUNK, n))
            ii = np.repeat(rows, n)
            jj = np.tile(np.arange(n), len(rows))
            keep = jj > ii
            ii, jj = ii[keep], jj[keep]
            d = self.pair_dist(keys[ii], keys[jj])
            ok = d <= N + TOL
            I.append(ii[ok])
            J.append(jj[ok])
        i = np.concatenate(I) if I else np.empty(0, dtype=np.intp)
        j = np.concatenate(J) if J else np.empty(0, dtype=np.intp)
        return i, j, self.pair_dist(keys[i], keys[j])

    def diameter(self, keys: np.ndarray) -> float:
        n = len(keys)
        if n < 2:
            return 0.0
        best = 0.0
        for start in range(0, n, _CHUNK):
            rows = np.arange(start, min(start + _CHUNK, n))
            ii = np.repeat(rows, n)
            jj = np.tile(np.arange(n), len(rows))
            best = max(best, float(self.pair_dist(keys[ii], keys[jj]).max()))
        return best


class _NormSpace(SpaceOracle):
    """Spaces whose keys are coordinates under an l1 or l2 norm."""

    _p: int = 1

    def pair_dist(self, A, B):
        diff = np.abs(np.asarray(A, dtype=float) - np.asarray(B, dtype=float))
        if self._p == 1:
            return diff.sum(axis=1)
        return np.sqrt((diff * diff).sum(axis=1))

    def pairs_within(self, keys, N):
        if len(keys) < 2:
            e = np.empty(0, dtype=np.intp)
            return e, e, np.empty(0)
        pairs = cKDTree(keys).query_pairs(N + TOL, p=self._p, output_type="ndarray")
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        i, j = pairs[:, 0].astype(np.intp), pairs[:, 1].astype(np.intp)
        return i, j, self.pair_dist(keys[i], keys[j])

    def diameter(self, keys):
        keys = np.asarray(keys, dtype=float)
        if len(keys) < 2:
            return 0.0
        if self._p == 1:
            # l1 diameter is the largest spread over all sign patterns
            d = keys.shape[1]
            best = 0.0
            for mask in range(2 ** max(d - 1, 0)):
                signs = np.array([1.0] + [(-1.0 if mask >> b & 1 else 1.0) for b in range(d - 1)])
                proj = keys @ signs
                best = max(best, float(proj.max() - proj.min()))
            return best
        return super().diameter(keys)


class LineNet(_NormSpace):
    """An ε-net of the line (``start=None``) or of the ray ``[start, ∞)``."""

    def __init__(self, name: str, eps: float = 1.0, start: float | None = None,
                 basepoint: PointId | None = None):
        if not eps > 0:
            raise ParameterError(f"eps must be positive, got {eps!r}")
        self.eps = float(eps)
        self.start = None if start is None else float(start)
        super().__init__(name, basepoint)

    def params(self):
        return {"eps": self.eps, "start": self.start}

    @property
    def origin(self):
        return 0 if self.start is None else _num(self.start)

    def _index(self, x: float) -> float:
        return (x - (self.start or 0.0)) / self.eps

    def _origin_ball(self, R):
        kmax = math.floor(R / self.eps + TOL)
        ks = range(0, kmax + 1) if self.start is not None else range(-kmax, kmax + 1)
        base = self.start or 0.0
        return [_num(base + k * self.eps) for k in ks]

    def encode(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 1)

    def decode(self, key):
        return _num(key[0])

    def contains(self, p):
        try:
            k = self._index(float(p))
        except (TypeError, ValueError):
            return False
        if abs(k - round(k)) > 1e-6:
            return False
        return self.start is None or round(k) >= 0

    def diameter(self, keys):
        keys = np.asarray(keys, dtype=float)
        return float(keys.max() - keys.min()) if len(keys) > 1 else 0.0


class VaseNet(_NormSpace):
    """ε-net of two vertical walls at x = ±1 over a base segment, taxicab metric."""

    def __init__(self, eps: float = 1.0, basepoint: PointId | None = None):
        if not eps > 0:
            raise ParameterError(f"eps must be positive, got {eps!r}")
        self.eps = float(eps)
        super().__init__("vase-net", basepoint)

    def params(self):
        return {"eps": self.eps}

    @property
    def origin(self):
        return (1, 1)

    def _origin_ball(self, R):
        eps = self.eps
        right = [(1, _num(1 + k * eps)) for k in range(math.floor(R / eps + TOL) + 1)]
        base = []
        j = 1
        while j * eps < 2 - 1e-6 and j * eps <= R + TOL:
            base.append((_num(1 - j * eps), 1))
            j += 1
        left = []
        if R >= 2 - TOL:
            left = [(-1, _num(1 + k * eps)) for k in range(math.floor((R - 2) / eps + TOL) + 1)]
        return right + base + left

    def encode(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 2)

    def decode(self, key):
        return (_num(key[0]), _num(key[1]))

    def contains(self, p):
        try:
            x, y = float(p[0]), float(p[1])
        except (TypeError, ValueError, IndexError):
            return False
        k = (y - 1) / self.eps
        if abs(x) == 1 and k > -1e-6 and abs(k - round(k)) < 1e-6:
            return True
        j = (1 - x) / self.eps
        return abs(y - 1) < 1e-12 and -1 - 1e-12 <= x <= 1 and abs(j - round(j)) < 1e-6


class Lattice2D(_NormSpace):
    """The integer lattice with the taxicab metric."""

    def __init__(self, basepoint: PointId | None = None):
        super().__init__("lattice2d", basepoint)

    @property
    def origin(self):
        return (0, 0)

    def _origin_ball(self, R):
        r = math.floor(R + TOL)
        pts = []
        for i in range(-r, r + 1):
            w = r - abs(i)
            pts.extend((i, j) for j in range(-w, w + 1))
        return pts

    def encode(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 2)

    def decode(self, key):
        return (_num(key[0]), _num(key[1]))

    def contains(self, p):
        try:
            return len(p) == 2 and all(float(c).is_integer() for c in p)
        except TypeError:
            return False


class StarTree(SpaceOracle):
    """``k`` integer rays glued at a root, path metric.

    Points are ``(ray, depth)`` with rays numbered from 1; the root is ``(0, 0)``.
    """

    def __init__(self, k: int, basepoint: PointId | None = None):
        if int(k) != k or k < 1:
            raise ParameterError(f"k must be a positive integer, got {k!r}")
        self.k = int(k)
        super().__init__("star-tree", basepoint)

    def params(self):
        return {"k": self.k}

    @property
    def origin(self):
        return (0, 0)

    def _origin_ball(self, R):
        dmax = math.floor(R + TOL)
        return [(0, 0)] + [(ray, d) for ray in range(1, self.k + 1) for d in range(1, dmax + 1)]

    def encode(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 2)

    def decode(self, key):
        return (0, 0) if key[1] == 0 else (int(key[0]), int(key[1]))

    def contains(self, p):
        try:
            ray, depth = p
        except (TypeError, ValueError):
            return False
        if (ray, depth) == (0, 0):
            return True
        return float(ray).is_integer() and 1 <= ray <= self.k and float(depth).is_integer() and depth >= 1

    def pair_dist(self, A, B):
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        same = (A[:, 0] == B[:, 0]) | (A[:, 1] == 0) | (B[:, 1] == 0)
        return np.where(same, np.abs(A[:, 1] - B[:, 1]), A[:, 1] + B[:, 1])

    def pairs_within(self, keys, N):
        keys = np.asarray(keys, dtype=float)
        n = len(keys)
        idx = np.arange(n)
        depth = keys[:, 1]
        root = idx[depth == 0]
        found = set()
        # along each ray (root included), sorted by depth
        for ray in np.unique(keys[depth > 0, 0]):
            members = np.concatenate([root, idx[(keys[:, 0] == ray) & (depth > 0)]])
            order = members[np.argsort(depth[members], kind="stable")]
            dd = depth[order]
            hi = np.searchsorted(dd, dd + N + TOL, side="right")
            for a in range(len(order)):
                for b in range(a + 1, hi[a]):
                    p, q = order[a], order[b]
                    found.add((min(p, q), max(p, q)))
        # across rays only shallow points can be within N
        shallow = idx[(depth > 0) & (depth <= N + TOL)]
        for a in range(len(shallow)):
            for b in range(a + 1, len(shallow)):
                p, q = shallow[a], shallow[b]
                if keys[p, 0] != keys[q, 0] and depth[p] + depth[q] <= N + TOL:
                    found.add((min(p, q), max(p, q)))
        if not found:
            e = np.empty(0, dtype=np.intp)
            return e, e, np.empty(0)
        arr = np.array(sorted(found), dtype=np.intp)
        i, j = arr[:, 0], arr[:, 1]
        return i, j, self.pair_dist(keys[i], keys[j])


class FiniteSpace(SpaceOracle):
    """An explicit finite metric space given by its distance matrix.

    Point ids are the indices ``0 .. n-1``; ``coords`` are kept for display only.
    """

    def __init__(self, name: str, matrix, coords=None, basepoint: int = 0):
        self.matrix = np.asarray(matrix, dtype=float)
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        super().__init__(name, basepoint)

    def params(self):
        return {"matrix": self.matrix.tolist()}

    @property
    def origin(self):
        return 0

    def _origin_ball(self, R):
        return [i for i in range(len(self.matrix)) if self.matrix[0, i] <= R + TOL]

    def encode(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 1)

    def decode(self, key):
        return int(key[0])

    def contains(self, p):
        return isinstance(p, (int, np.integer)) and 0 <= p < len(self.matrix)

    def pair_dist(self, A, B):
        a = np.asarray(A, dtype=np.intp)[:, 0]
        b = np.asarray(B, dtype=np.intp)[:, 0]
        return self.matrix[a, b]

    def coordinates(self, p):
        if self.coords is None:
            return np.array([float(p)])
        return self.coords[p]

    def point_from_coordinates(self, coords):
        c = np.atleast_1d(np.asarray(coords, dtype=float))
        if self.coords is None:
            return super().point_from_coordinates(c)
        hits = np.nonzero(np.all(np.abs(self.coords - c) < 1e-9, axis=1))[0]
        if len(hits) == 0:
            raise ParameterError(f"{coords!r} is not a point of {self.name}")
        return int(hits[0])


@dataclass(eq=False)
class TruncatedSpace:
    """The finite ball of radius ``radius_max`` around a space's basepoint."""

    source: SpaceOracle
    radius_max: float
    points: tuple
    keys: np.ndarray
    radii: np.ndarray
    _index: dict = field(repr=False)
    _pair_cache: tuple | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    def index_of(self, p: PointId) -> int:
        return self._index[p]

    def __contains__(self, p):
        return p in self._index

    def radius_of(self, p: PointId) -> float:
        return float(self.radii[self._index[p]])

    def pairs(self, N: float):
        """Index pairs ``(i, j, d)`` with ``d <= N``; cached at the largest scale seen."""
        cache = self._pair_cache
        if cache is None or cache[0] < N:
            i, j, d = self.source.pairs_within(self.keys, N)
            self._pair_cache = cache = (N, i, j, d)
        _, i, j, d = cache
        if N == cache[0]:
            return i, j, d
        keep = d <= N + TOL
        return i[keep], j[keep], d[keep]

    def restrict(self, R: float) -> "TruncatedSpace":
        if R >= self.radius_max:
            return self
        keep = np.nonzero(self.radii <= R + TOL)[0]
        pts = tuple(self.points[k] for k in keep)
        return TruncatedSpace(self.source, float(R), pts, self.keys[keep], self.radii[keep],
                              {p: n for n, p in enumerate(pts)})


def truncate(space: SpaceOracle, R: float) -> TruncatedSpace:
    """Enumerate ``space.ball(R)`` and cache each point's distance to the basepoint."""
    if not R > 0:
        raise ParameterError(f"truncation radius must be positive, got {R!r}")
    pts = tuple(space.ball(R))
    keys = space.encode(pts) if pts else np.empty((0, 1))
    base = np.repeat(space.encode([space.basepoint]), len(pts), axis=0)
    radii = space.pair_dist(keys, base) if pts else np.empty(0)
    bad = np.nonzero(radii > R + TOL)[0]
    if len(bad):
        p = pts[bad[0]]
        raise OracleContractError(
            f"{space.name}: ball({R:g}) returned {p!r} at distance {radii[bad[0]]:g}"
        )
    index = {p: n for n, p in enumerate(pts)}
    if len(index) != len(pts):
        raise OracleContractError(f"{space.name}: ball({R:g}) enumerated a point twice")
    return TruncatedSpace(space, float(R), pts, keys, radii, index)


def _pos(params: Mapping[str, Any], key: str, default: float) -> float:
    v = params.get(key, default)
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ParameterError(f"{key} must be a number, got {v!r}") from None
    if not v > 0:
        raise ParameterError(f"{key} must be positive, got {v!r}")
    return v


BUILTIN_SPACES = ("integers", "real-net", "halfline-net", "vase-net", "lattice2d", "star-tree")


def builtin_space(name: str, params: Mapping[str, Any] | None = None) -> SpaceOracle:
    """Construct one of the builtin example spaces.

    ``params`` may carry ``eps`` (nets), ``k`` (star-tree) and ``basepoint``.
    """
    params = dict(params or {})
    bp = params.pop("basepoint", None)
    if isinstance(bp, list):
        bp = tuple(bp)
    if name == "integers":
        space = LineNet("integers", 1.0)
    elif name == "real-net":
        space = LineNet("real-net", _pos(params, "eps", 1.0))
    elif name == "halfline-net":
        space = LineNet("halfline-net", _pos(params, "eps", 1.0), start=1.0)
    elif name == "vase-net":
        space = VaseNet(_pos(params, "eps", 1.0))
    elif name == "lattice2d":
        space = Lattice2D()
    elif name == "star-tree":
        k = params.get("k", 3)
        if isinstance(k, bool) or not isinstance(k, (int, float)) or int(k) != k or k < 1:
            raise ParameterError(f"k must be a positive integer, got {k!r}")
        space = StarTree(int(k))
    else:
        raise ParameterError(f"unknown builtin space {name!r}; expected one of {BUILTIN_SPACES}")
    if bp is not None:
        space = space.with_basepoint(bp)
    return space


def _validate_matrix(D: np.ndarray) -> None:
    n = len(D)
    if D.ndim != 2 or D.shape != (n, n):
        raise SpecValidationError(f"metric matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise SpecValidationError("metric matrix entries must be finite and nonnegative")
    for a in range(n):
        if abs(D[a, a]) > TOL:
            raise SpecValidationError(f"d({a},{a}) = {D[a, a]:g} is not zero")
        for b in range(a + 1, n):
            if abs(D[a, b] - D[b, a]) > TOL:
                raise SpecValidationError(f"asymmetric entries d({a},{b}) != d({b},{a})")
    # D[a, c] > D[a, b] + D[b, c] for some b
    excess = D[:, None, :] - (D[:, :, None] + D[None, :, :])
    a, b, c = np.unravel_index(np.argmax(excess), excess.shape)
    if excess[a, b, c] > TOL:
        raise SpecValidationError(
            f"triangle inequality fails on triple ({a}, {b}, {c}): "
            f"d({a},{c}) = {D[a, c]:g} > d({a},{b}) + d({b},{c}) = {D[a, b] + D[b, c]:g}"
        )


def parse_space_spec(document) -> SpaceOracle:
    """Build a space from a spec document (a mapping or a JSON string).

    Either ``{"builtin": name, "params": {...}}`` or an explicit finite space
    ``{"points": [[...], ...], "metric": "taxicab"|"euclidean"|{"matrix": ...},
    "basepoint": index}``.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecValidationError(f"space spec is not valid JSON: {exc}") from None
    if not isinstance(document, Mapping):
        raise SpecValidationError("space spec must be a JSON object")
    if "builtin" in document:
        params = document.get("params", {})
        if not isinstance(params, Mapping):
            raise SpecValidationError("'params' must be an object")
        return builtin_space(document["builtin"], params)
    metric = document.get("metric")
    points = document.get("points")
    name = document.get("name", "explicit")
    coords = None
    if points is not None:
        try:
            coords = np.asarray(points, dtype=float)
        except (TypeError, ValueError):
            raise SpecValidationError("'points' must be a list of coordinate lists") from None
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or len(coords) == 0:
            raise SpecValidationError("'points' must be a nonempty list of coordinate lists")
    if isinstance(metric, Mapping) and "matrix" in metric:
        try:
            D = np.asarray(metric["matrix"], dtype=float)
        except (TypeError, ValueError):
            raise SpecValidationError("'matrix' must be numeric") from None
        if coords is not None and len(coords) != len(D):
            raise SpecValidationError("'points' and 'matrix' disagree on the number of points")
        _validate_matrix(D)
    elif metric in ("taxicab", "euclidean"):
        if coords is None:
            raise SpecValidationError(f"metric {metric!r} needs 'points'")
        diff = np.abs(coords[:, None, :] - coords[None, :, :])
        D = diff.sum(axis=2) if metric == "taxicab" else np.sqrt((diff ** 2).sum(axis=2))
    else:
        raise SpecValidationError(f"unknown metric {metric!r}")
    bp = document.get("basepoint", 0)
    if isinstance(bp, bool) or not isinstance(bp, int) or not 0 <= bp < len(D):
        raise SpecValidationError(f"basepoint must be an index into the points, got {bp!r}")
    return FiniteSpace(name, D, coords, basepoint=bp)


def load_space_spec(path: str | Path) -> SpaceOracle:
    return parse_space_spec(Path(path).read_text())
