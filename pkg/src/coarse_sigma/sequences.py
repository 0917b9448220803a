"""Finite prefixes of N-sequences and the sub/supersequence equivalence.

An infinite based sequence is represented by a finite prefix plus its escape
radius, the furthest distance from its first point that the prefix reaches.
Two constructions relate sequence classes: prepending a new basepoint and
interleaving two sequences that stay uniformly close. ``equivalent_within``
searches for short chains of sub/supersequence steps built from them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import ContractError, HypothesisViolation, ScaleViolation
from .metric import TOL, SpaceOracle

__all__ = [
    "NSequence",
    "EquivalenceChain",
    "make_sequence",
    "rescale",
    "escapes",
    "is_subsequence",
    "is_cofinal_subsequence",
    "prepend_basepoint",
    "drop_prefix",
    "interleave_merge",
    "equivalent_within",
    "parse_sequences",
]


@dataclass(frozen=True)
class NSequence:
    scale: float
    points: tuple
    space: SpaceOracle
    escape_radius: float

    @property
    def basepoint(self) -> Hashable:
        return self.points[0]

    def __len__(self):
        return len(self.points)

    def gaps(self) -> list[float]:
        d = self.space.distance
        return [d(a, b) for a, b in zip(self.points, self.points[1:])]


def _first_violation(space, points, N):
    for i, (a, b) in enumerate(zip(points, points[1:])):
        d = space.distance(a, b)
        if d > N + TOL:
            return ScaleViolation(i, (a, b), d, N)
    return None


def make_sequence(space: SpaceOracle, points: Iterable, N: float) -> NSequence:
    """Validate ``points`` as an N-sequence and compute its escape radius.

    Raises :class:`ScaleViolation` at the first gap longer than ``N``.
    """
    points = tuple(points)
    if not points:
        raise ValueError("a sequence needs at least its basepoint")
    if not N > 0:
        raise ValueError(f"scale must be positive, got {N!r}")
    err = _first_violation(space, points, N)
    if err is not None:
        raise err
    x0 = points[0]
    radius = max(space.distance(x0, p) for p in points)
    return NSequence(float(N), points, space, radius)


def rescale(s: NSequence, n: float) -> NSequence:
    """View an N-sequence as an n-sequence; allowed whenever ``n >= N``."""
    if n + TOL < s.scale:
        err = _first_violation(s.space, s.points, n)
        if err is not None:
            raise err
    return NSequence(float(n), s.points, s.space, s.escape_radius)


def escapes(s: NSequence, R_escape: float) -> bool:
    """Finite surrogate for going to infinity: the prefix reaches ``R_escape``."""
    return s.escape_radius >= R_escape - TOL


def _check_same(s: NSequence, t: NSequence):
    if s.space != t.space:
        raise ContractError(f"sequences live in different spaces: {s.space!r} vs {t.space!r}")
    if abs(s.scale - t.scale) > TOL:
        raise ContractError(f"sequences have different scales: {s.scale:g} vs {t.scale:g}")


def _embedding_positions(short: Sequence, long: Sequence) -> list[int] | None:
    """Greedy earliest order-preserving match of ``short`` into ``long``."""
    pos, k = [], 0
    for p in short:
        while k < len(long) and long[k] != p:
            k += 1
        if k == len(long):
            return None
        pos.append(k)
        k += 1
    return pos


def _latest_last_position(short: Sequence, long: Sequence) -> int | None:
    """Largest index of ``long`` that can host ``short[-1]`` in some embedding."""
    k = len(long) - 1
    last = None
    for p in reversed(short):
        while k >= 0 and long[k] != p:
            k -= 1
        if k < 0:
            return None
        if last is None:
            last = k
        k -= 1
    return last


def is_subsequence(s: NSequence, t: NSequence) -> bool:
    """True iff ``s.points`` is an order-preserving selection of ``t.points``."""
    _check_same(s, t)
    return _embedding_positions(s.points, t.points) is not None


def is_cofinal_subsequence(s: NSequence, t: NSequence, r_escape: float) -> bool:
    """Subsequence test that also respects the tails of the infinite sequences.

    A prefix ``s`` of an escaping sequence sits inside ``t`` cofinally when
    ``s`` embeds in ``t`` and every point of ``t`` after the image of the last
    point of ``s`` stays at distance at least ``r_escape`` from the basepoint.
    Without the tail condition two prefixes heading to different ends could
    be declared related.
    """
    _check_same(s, t)
    last = _latest_last_position(s.points, t.points)
    if last is None:
        return False
    x0 = t.points[0]
    d = t.space.distance
    return all(d(x0, p) >= r_escape - TOL for p in t.points[last + 1:])


def prepend_basepoint(s: NSequence, y0: Hashable, n: float) -> NSequence:
    """The basepoint-change map: ``x0, x1, ...`` becomes ``y0, x0, x1, ...``.

    Requires ``n >= d(x0, y0)``; ``s`` is viewed at scale ``n`` first.
    """
    gap = s.space.distance(s.basepoint, y0)
    if gap > n + TOL:
        raise HypothesisViolation(
            f"cannot prepend {y0!r}: d({s.basepoint!r}, {y0!r}) = {gap:g} exceeds n = {n:g}"
        )
    s = rescale(s, n)
    return make_sequence(s.space, (y0,) + s.points, n)


def drop_prefix(s: NSequence, k: int) -> NSequence:
    """Remove the first ``k`` points, rebasing at ``s.points[k]``."""
    return make_sequence(s.space, s.points[k:], s.scale)


def _pad(points: tuple, n: int) -> tuple:
    return points + (points[-1],) * (n - len(points))


def interleave_merge(s: NSequence, t: NSequence, L: float) -> NSequence:
    """Merge two pointwise-close sequences as ``t0, s0, s1, t1, t2, s2, s3, t3, ...``.

    The shorter input is padded by repeating its last point. Both inputs are
    subsequences of the result, which is validated as an L-sequence.
    """
    if s.space != t.space:
        raise ContractError("sequences live in different spaces")
    n = max(len(s), len(t))
    a, b = _pad(s.points, n), _pad(t.points, n)
    merged = []
    for i in range(n):
        merged.extend((b[i], a[i]) if i % 2 == 0 else (a[i], b[i]))
    return make_sequence(s.space, merged, L)


@dataclass(frozen=True)
class EquivalenceChain:
    """``steps[0] = s`` and ``steps[-1] = t``; ``directions[i]`` relates steps i and i+1.

    ``"super"`` means ``steps[i+1]`` is a supersequence of ``steps[i]``;
    ``"sub"`` means it is a subsequence.
    """

    steps: tuple
    directions: tuple
    r_escape: float

    def __len__(self):
        return len(self.directions)

    def verify(self) -> bool:
        if len(self.steps) != len(self.directions) + 1:
            return False
        for (u, v), how in zip(zip(self.steps, self.steps[1:]), self.directions):
            small, big = (u, v) if how == "super" else (v, u)
            if not is_subsequence(small, big):
                return False
            if not is_cofinal_subsequence(small, big, self.r_escape):
                return False
            if big.basepoint != small.basepoint:
                return False
        return all(escapes(u, self.r_escape) for u in self.steps)


def _common_supersequence(s: NSequence, t: NSequence, r_escape: float) -> NSequence | None:
    """Search for an order-respecting shuffle of ``s`` and ``t`` that is a valid
    sequence at their common scale.

    Once either input is used up, every further point must stay outside the
    ball of radius ``r_escape`` so that both tails remain cofinal.
    """
    space, N = s.space, s.scale
    a, b = s.points, t.points
    na, nb = len(a), len(b)
    ra = [space.distance(a[0], p) for p in a]
    rb = [space.distance(a[0], p) for p in b]
    d = space.distance

    # state: (i, j, src) = consumed a[:i], b[:j], last emitted came from src
    start = (1, 1, "a")
    parent = {start: None}
    stack = [start]
    goal = None
    while stack:
        state = stack.pop()
        i, j, src = state
        if i == na and j == nb:
            goal = state
            break
        last = a[i - 1] if src == "a" else b[j - 1]
        moves = []
        if i < na and j < nb and a[i] == b[j] and d(last, a[i]) <= N + TOL:
            moves.append((i + 1, j + 1, "a"))
        if i < na and d(last, a[i]) <= N + TOL and (j < nb or ra[i] >= r_escape - TOL):
            moves.append((i + 1, j, "a"))
        if j < nb and d(last, b[j]) <= N + TOL and (i < na or rb[j] >= r_escape - TOL):
            moves.append((i, j + 1, "b"))
        # explored last-in first-out, so push the preferred move last
        for m in reversed(moves):
            if m not in parent:
                parent[m] = state
                stack.append(m)
    if goal is None:
        return None
    path = []
    state = goal
    while state is not None:
        path.append(state)
        state = parent[state]
    path.reverse()
    merged = [a[0]]
    for (pi, pj, _), (i, j, src) in zip(path, path[1:]):
        merged.append(a[i - 1] if src == "a" else b[j - 1])
    return make_sequence(space, merged, N)


def _trim_basepoint_loop(s: NSequence) -> NSequence:
    """Drop everything before the last return to the basepoint."""
    x0 = s.basepoint
    last = max(k for k, p in enumerate(s.points) if p == x0)
    if last == 0:
        return s
    return make_sequence(s.space, s.points[last:], s.scale)


def equivalent_within(
    s: NSequence, t: NSequence, budget: int = 4, *, r_escape: float | None = None
) -> EquivalenceChain | None:
    """Look for a chain of at most ``budget`` sub/supersequence steps from ``s`` to ``t``.

    Strategies, cheapest first: a direct subsequence relation; a common
    supersequence built by shuffling the two prefixes; and the same after
    cutting basepoint loops (``x0, y0, x0, x1, ...`` contains ``x0, x1, ...``).
    Returned chains are re-verified. ``None`` only means nothing was found.

    ``r_escape`` defaults to half the smaller escape radius of the two inputs.
    """
    _check_same(s, t)
    if s.basepoint != t.basepoint:
        raise ContractError(f"sequences have different basepoints: {s.basepoint!r} vs {t.basepoint!r}")
    if r_escape is None:
        r_escape = min(s.escape_radius, t.escape_radius) / 2
    if not (escapes(s, r_escape) and escapes(t, r_escape)):
        raise ContractError(f"both sequences must reach the escape radius {r_escape:g}")

    def direct(u, v):
        if is_cofinal_subsequence(u, v, r_escape):
            return [u, v], ["super"]
        if is_cofinal_subsequence(v, u, r_escape):
            return [u, v], ["sub"]
        return None

    def merged(u, v):
        w = _common_supersequence(u, v, r_escape)
        if w is None:
            return None
        return [u, w, v], ["super", "sub"]

    candidates = []
    found = direct(s, t)
    if found:
        candidates.append(found)
    if budget >= 2 and not candidates:
        found = merged(s, t)
        if found:
            candidates.append(found)
    if budget >= 3 and not candidates:
        s2, t2 = _trim_basepoint_loop(s), _trim_basepoint_loop(t)
        if (s2, t2) != (s, t):
            head, head_dir = ([s, s2], ["sub"]) if s2 is not s else ([s], [])
            tail, tail_dir = ([t2, t], ["super"]) if t2 is not t else ([t], [])
            inner = direct(s2, t2) or merged(s2, t2)
            if inner:
                steps = head[:-1] + inner[0] + tail[1:]
                dirs = head_dir + inner[1] + tail_dir
                if len(dirs) <= budget:
                    candidates.append((steps, dirs))
    for steps, dirs in candidates:
        if len(dirs) > budget:
            continue
        chain = EquivalenceChain(tuple(steps), tuple(dirs), float(r_escape))
        if chain.verify():
            return chain
    return None


def parse_sequences(document, space: SpaceOracle) -> list[NSequence]:
    """Read ``{"sequences": [{"points": [coords, ...], "scale": N}, ...]}``
    entries of a space-spec document into validated sequences."""
    out = []
    for entry in document.get("sequences", []):
        pts = [space.point_from_coordinates(c) for c in entry["points"]]
        out.append(make_sequence(space, pts, float(entry["scale"])))
    return out
