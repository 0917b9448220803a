import itertools
import json

import numpy as np
import pytest

from coarse_sigma.errors import OracleContractError, ParameterError, SpecValidationError
from coarse_sigma.metric import (
    BUILTIN_SPACES,
    LineNet,
    builtin_space,
    load_space_spec,
    parse_space_spec,
    truncate,
)

from oracles import vase_points

ALL_BUILTINS = [
    ("integers", {}),
    ("real-net", {"eps": 0.5}),
    ("real-net", {"eps": 0.3}),
    ("halfline-net", {"eps": 1}),
    ("vase-net", {"eps": 1}),
    ("vase-net", {"eps": 0.5}),
    ("lattice2d", {}),
    ("star-tree", {"k": 3}),
]


def test_vase_walls_are_two_apart():
    vase = builtin_space("vase-net", {"eps": 1})
    assert vase.distance((-1, 5), (1, 5)) == 2


def test_integer_distance():
    assert builtin_space("integers").distance(3, -4) == 7


def test_star_tree_distance_through_root():
    star = builtin_space("star-tree", {"k": 3})
    assert star.distance((1, 2), (2, 3)) == 5
    assert star.distance((1, 2), (1, 7)) == 5
    assert star.distance((0, 0), (3, 4)) == 4


@pytest.mark.parametrize("name, params", [
    ("real-net", {"eps": 0}),
    ("vase-net", {"eps": -1}),
    ("halfline-net", {"eps": "x"}),
    ("star-tree", {"k": 0}),
    ("star-tree", {"k": 1.5}),
    ("hyperbolic-plane", {}),
])
def test_rejected_parameters(name, params):
    with pytest.raises(ParameterError):
        builtin_space(name, params)


def test_truncate_counts():
    assert len(truncate(builtin_space("integers"), 5)) == 11
    assert len(truncate(builtin_space("real-net", {"eps": 0.5}), 2)) == 9


def test_truncate_vase_matches_box_scan():
    trunc = truncate(builtin_space("vase-net", {"eps": 1}), 6)
    assert len(trunc) == 13
    assert set(trunc.points) == vase_points(6)


def test_truncate_vase_half_net_matches_box_scan():
    trunc = truncate(builtin_space("vase-net", {"eps": 0.5}), 9)
    assert set(trunc.points) == vase_points(9, eps=0.5)


def test_truncate_caches_radii():
    trunc = truncate(builtin_space("vase-net", {"eps": 1}), 10)
    space = trunc.source
    for p in trunc.points:
        assert trunc.radius_of(p) == space.distance(space.basepoint, p)


def test_truncate_rejects_nonpositive_radius():
    with pytest.raises(ParameterError):
        truncate(builtin_space("integers"), 0)


class _LeakyLine(LineNet):
    def _origin_ball(self, R):
        return super()._origin_ball(R) + [int(R) + 3]


def test_truncate_detects_oracle_violation():
    with pytest.raises(OracleContractError):
        truncate(_LeakyLine("leaky", 1.0), 5)


@pytest.mark.parametrize("name, params", ALL_BUILTINS)
def test_metric_axioms_on_random_triples(name, params):
    space = builtin_space(name, params)
    pts = truncate(space, 64).points
    rng = np.random.default_rng(1234)
    exact = name in ("integers", "lattice2d", "star-tree") or params.get("eps") == 1
    tol = 0 if exact else 1e-9
    d = space.distance
    for _ in range(200):
        a, b, c = (pts[k] for k in rng.integers(len(pts), size=3))
        assert d(a, a) == 0
        assert d(a, b) == d(b, a)
        assert d(a, c) <= d(a, b) + d(b, c) + tol


@pytest.mark.parametrize("name, params", ALL_BUILTINS)
def test_balls_are_monotone_and_deterministic(name, params):
    space = builtin_space(name, params)
    radii = [4, 8, 16, 32, 64, 128]
    balls = [set(space.ball(R)) for R in radii]
    for small, big in zip(balls, balls[1:]):
        assert small <= big
    assert space.ball(16) == space.ball(16)
    for R, ball in zip(radii, balls):
        assert all(space.distance(space.basepoint, p) <= R + 1e-9 for p in ball)


@pytest.mark.parametrize("name, params, bp", [
    ("integers", {}, 7),
    ("halfline-net", {}, 12),
    ("vase-net", {"eps": 1}, (-1, 9)),
    ("lattice2d", {}, (3, -4)),
    ("star-tree", {"k": 3}, (2, 5)),
])
def test_shifted_ball_equals_filtered_big_ball(name, params, bp):
    space = builtin_space(name, params)
    shifted = space.with_basepoint(bp)
    expected = {p for p in truncate(space, 40).points if space.distance(bp, p) <= 12}
    assert set(shifted.ball(12)) == expected


def test_vase_every_left_wall_point_has_partner():
    vase = builtin_space("vase-net", {"eps": 1})
    trunc = truncate(vase, 64)
    for y in range(1, 63):
        assert (-1, y) in trunc
        assert vase.distance((-1, y), (1, y)) == 2


def test_builtin_names_listed():
    for name in BUILTIN_SPACES:
        builtin_space(name, {})


def test_spec_builtin_passthrough():
    space = parse_space_spec({"builtin": "integers"})
    assert space == builtin_space("integers")
    assert parse_space_spec('{"builtin": "vase-net", "params": {"eps": 1}}').name == "vase-net"


def test_spec_explicit_matrix_reproduced():
    matrix = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    space = parse_space_spec({"points": [[0], [1], [2]], "metric": {"matrix": matrix}, "basepoint": 1})
    assert space.basepoint == 1
    for a, b in itertools.product(range(3), repeat=2):
        assert space.distance(a, b) == matrix[a][b]


def test_spec_triangle_violation_names_triple():
    matrix = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    with pytest.raises(SpecValidationError, match=r"triple \(0, 1, 2\)"):
        parse_space_spec({"metric": {"matrix": matrix}})


@pytest.mark.parametrize("doc", [
    "not json",
    [1, 2],
    {"metric": "taxicab"},
    {"points": [[0, 0]], "metric": "chebyshev"},
    {"points": [[0], [1]], "metric": {"matrix": [[0, 1], [2, 0]]}},
    {"points": [[0], [1]], "metric": "euclidean", "basepoint": 5},
    {"builtin": "integers", "params": [1]},
])
def test_spec_malformed(doc):
    with pytest.raises((SpecValidationError, ParameterError)):
        parse_space_spec(doc if isinstance(doc, str) else json.dumps(doc))


def test_spec_coordinate_metrics():
    taxi = parse_space_spec({"points": [[0, 0], [3, 4]], "metric": "taxicab"})
    eucl = parse_space_spec({"points": [[0, 0], [3, 4]], "metric": "euclidean"})
    assert taxi.distance(0, 1) == 7
    assert eucl.distance(0, 1) == 5
    assert list(eucl.coordinates(1)) == [3, 4]


def test_load_space_spec_file(tmp_path):
    path = tmp_path / "space.json"
    path.write_text(json.dumps({"builtin": "star-tree", "params": {"k": 4}}))
    assert load_space_spec(path).k == 4


def test_builtin_basepoint_param():
    vase = builtin_space("vase-net", {"eps": 1, "basepoint": [-1, 4]})
    assert vase.basepoint == (-1, 4)
    with pytest.raises(ParameterError):
        builtin_space("vase-net", {"basepoint": [0, 4]})
