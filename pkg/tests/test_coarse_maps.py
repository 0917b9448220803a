from pathlib import Path

import numpy as np
import pytest

from coarse_sigma.coarse_maps import (
    bornology_profile,
    builtin_map,
    closeness,
    compose,
    identity_map,
    induced_end_map,
    map_sequence,
    parse_map_spec,
    preimage,
    proper_from_composition,
    properness_bound_check,
    properness_check,
    tabulate,
    verify_coarse_equivalence,
)
from coarse_sigma.ends import FiltrationConfig, end_of_points, ends_filtration
from coarse_sigma.errors import ContractError, SpecValidationError
from coarse_sigma.metric import builtin_space, truncate
from coarse_sigma.sequences import escapes, make_sequence, prepend_basepoint

from oracles import max_image_gap, taxicab

DATA = Path(__file__).parent / "data"

Z = builtin_space("integers")
R05 = builtin_space("real-net", {"eps": 0.5})
VASE = builtin_space("vase-net", {"eps": 1})
HALF = builtin_space("halfline-net", {"eps": 1})


@pytest.fixture(scope="module")
def floor_pair():
    return builtin_map("floor", R05, Z, 256), builtin_map("inclusion", Z, R05, 256)


@pytest.fixture(scope="module")
def vase_pair():
    return builtin_map("vase-project", VASE, HALF, 256), builtin_map("vase-embed", HALF, VASE, 256)


def test_floor_table():
    f = builtin_map("floor", R05, Z, 4)
    assert f(2.5) == 2 and f(-0.5) == -1 and f(3) == 3


def test_floor_profile_matches_pairwise_scan():
    f = builtin_map("floor", R05, Z, 20)
    prof = bornology_profile(f, [0.5, 1, 2])
    assert prof == {0.5: 1.0, 1.0: 1.0, 2.0: 2.0}
    pts = f.domain.points
    for N in (0.5, 1, 2):
        assert prof[float(N)] == max_image_gap(pts, R05.distance, Z.distance, f, N)


def test_identity_profile():
    f = identity_map(truncate(Z, 50))
    assert bornology_profile(f, range(1, 6)) == {float(N): float(N) for N in range(1, 6)}


def test_vase_projection_is_one_lipschitz():
    f = builtin_map("vase-project", VASE, HALF, 30)
    prof = bornology_profile(f, range(1, 6))
    assert all(prof[float(N)] <= N for N in range(1, 6))
    pts = f.domain.points
    assert prof[2.0] == max_image_gap(pts, taxicab, HALF.distance, f, 2)


def test_squaring_profile_grows():
    f = tabulate("square", lambda p: p * p, Z, Z, 64)
    assert bornology_profile(f, [1])[1.0] == 127
    assert bornology_profile(f.restrict(32), [1])[1.0] == 63


def test_tabulate_rejects_foreign_image():
    with pytest.raises(ContractError):
        tabulate("half", lambda p: p / 2, Z, Z, 4)


def test_floor_preimage_of_zero():
    f = builtin_map("floor", R05, Z, 16)
    assert preimage(f, [0]) == [0, 0.5]
    rep = properness_check(f, [0, 1])
    assert rep.bounded
    assert rep.max_diameter(0) == 0.5
    assert rep.max_diameter(1) == 2.5


def test_constant_map_is_not_proper():
    f = builtin_map("constant", Z, Z, 64)
    rep = properness_check(f, [0])
    assert not rep.bounded
    assert rep.max_diameter(0) == 128


def test_vase_embed_preserves_diameters():
    f = builtin_map("vase-embed", HALF, VASE, 64)
    for rho in (0, 1, 3, 5):
        for c in [(1, 2), (1, 5), (1, 9)]:
            pre = [f(p) for p in preimage(f, [q for q in VASE.ball(80) if VASE.distance(c, q) <= rho])]
            src = [p for p in f.domain.points if f(p) in set(pre)]
            if src:
                assert max(HALF.distance(a, b) for a in src for b in src) == \
                    max(VASE.distance(a, b) for a in pre for b in pre)


def test_closeness_values(floor_pair):
    f, g = floor_pair
    assert closeness(compose(f, g), identity_map(f.domain)) == 0.5
    assert closeness(compose(g, f), identity_map(g.domain)) == 0.0


def test_closeness_needs_same_domain(floor_pair):
    f, g = floor_pair
    with pytest.raises(ContractError):
        closeness(identity_map(truncate(Z, 10)), identity_map(truncate(Z, 12)))
    with pytest.raises(ContractError):
        compose(f, f)


def test_compose_needs_enough_table():
    f = builtin_map("inclusion", Z, R05, 64)
    g = builtin_map("floor", R05, Z, 16)
    with pytest.raises(ContractError, match="enlarge"):
        compose(f, g)


def test_verify_floor_inclusion(floor_pair):
    plan = verify_coarse_equivalence(*floor_pair, range(1, 9), k_source=1, k_target=1)
    assert plan.verified and not plan.violations
    assert (plan.D, plan.D_target) == (0.5, 0.0)
    assert (plan.M, plan.L, plan.S) == (1.0, 1.0, 1.0)


def test_verify_vase_pair(vase_pair):
    plan = verify_coarse_equivalence(*vase_pair, range(1, 9), k_source=2, k_target=1)
    assert plan.verified
    assert (plan.D, plan.D_target) == (2.0, 0.0)
    assert (plan.M, plan.L, plan.S) == (2.0, 2.0, 2.0)
    assert plan.S == max(plan.S_closeness, plan.S_bornology)


def test_verify_rejects_identity_constant():
    f = builtin_map("identity", Z, Z, 128)
    g = builtin_map("constant", Z, Z, 128)
    plan = verify_coarse_equivalence(f, g, range(1, 5))
    assert not plan.verified
    assert len(plan.violations) == 3
    assert any("not proper" in v for v in plan.violations)
    assert any("not close to identity" in v for v in plan.violations)


def test_verify_rejects_mismatched_pair(floor_pair):
    f, _ = floor_pair
    with pytest.raises(ContractError):
        verify_coarse_equivalence(f, f, [1])


def _bump(p):
    return p + (1 if p > 0 else -1) if 32 < abs(p) < 64 else p


def test_growth_tolerance_absorbs_slack():
    f = tabulate("bump", _bump, Z, Z, 64)
    g = identity_map(f.domain)
    strict = verify_coarse_equivalence(f, g, [1], probe_radii=[])
    assert not strict.verified
    assert any("not bornologous" in v for v in strict.violations)
    loose = verify_coarse_equivalence(f, g, [1], probe_radii=[], growth_tolerance=1)
    assert loose.verified


def test_proper_from_composition():
    assert proper_from_composition(R=1, M=3) == 5
    assert proper_from_composition(0, 0) == 0


def test_properness_bound_holds(vase_pair, floor_pair):
    for f, g in (vase_pair, floor_pair):
        rows = properness_bound_check(f, g, [0, 1, 2, 4])
        assert rows and all(r["ok"] for r in rows)
        assert all(r["bound"] == r["M"] + 2 * r["R"] for r in rows)


def test_composition_bound(vase_pair, floor_pair):
    for f, g in (vase_pair, floor_pair):
        gf = compose(f, g)
        pf = bornology_profile(f, range(1, 6))
        for N in range(1, 6):
            inner = bornology_profile(g, [pf[float(N)]])[pf[float(N)]]
            assert bornology_profile(gf, [N])[float(N)] <= inner


def test_map_sequence_transports_scale(vase_pair):
    f, _ = vase_pair
    s = make_sequence(VASE, [(1, 1), (0, 1), (-1, 1)] + [(-1, y) for y in range(2, 120)], 1)
    M = bornology_profile(f, [1])[1.0]
    image = map_sequence(f, s, M)
    assert image.scale == M
    assert escapes(image, 64)


def _filt(space, N, R=256):
    return ends_filtration(truncate(space, R), N, FiltrationConfig(r_max=R))


def test_induced_end_maps_floor(floor_pair):
    f, g = floor_pair
    ex, ez = _filt(R05, 1), _filt(Z, 1)
    fi, gi = induced_end_map(f, ex, ez), induced_end_map(g, ez, ex)
    assert fi.bijective and gi.bijective
    assert {e: gi.mapping[fi.mapping[e]] for e in ex.ends} == {e: e for e in ex.ends}


def test_induced_end_map_identity():
    fz = _filt(Z, 2)
    c = induced_end_map(identity_map(fz.trunc), fz, fz)
    assert c.mapping == {e: e for e in fz.ends}


def test_induced_end_maps_vase(vase_pair):
    f, g = vase_pair
    ev, eh, ev2 = _filt(VASE, 2), _filt(HALF, 2), _filt(VASE, 2)
    assert induced_end_map(f, ev, eh).bijective
    assert induced_end_map(g, eh, ev2).bijective


def test_induced_end_map_needs_matching_filtrations(floor_pair):
    f, _ = floor_pair
    with pytest.raises(ContractError):
        induced_end_map(f, _filt(Z, 1), _filt(Z, 1))


def test_end_of_image_sequence_matches_induced_map(vase_pair):
    f, _ = vase_pair
    ev, eh = _filt(VASE, 2), _filt(HALF, 2)
    ind = induced_end_map(f, ev, eh)
    s = make_sequence(VASE, [(1, y) for y in range(1, 200)], 2)
    image = map_sequence(f, s, 2)
    assert ind.mapping[end_of_points(ev, s.points)] == end_of_points(eh, image.points)


@pytest.mark.parametrize("name, src, tgt", [
    ("floor.json", "real-net", "integers"),
    ("inclusion.json", "integers", "real-net"),
    ("vase_project.json", "vase-net", "halfline-net"),
    ("vase_embed.json", "halfline-net", "vase-net"),
])
def test_map_spec_files(name, src, tgt):
    f = parse_map_spec((DATA / name).read_text(), 32)
    assert (f.source.name, f.target.name) == (src, tgt)
    assert len(f.table) == len(f.domain)


def test_map_spec_explicit_pairs():
    space = {"points": [[0], [1], [2]], "metric": "euclidean"}
    f = parse_map_spec({"source": space, "target": space, "pairs": [[0, 0], [1, 0], [2, 1]]}, 10)
    assert [f(p) for p in f.domain.points] == [0, 0, 1]
    with pytest.raises(SpecValidationError, match="does not define"):
        parse_map_spec({"source": space, "target": space, "pairs": [[0, 0]]}, 10)


@pytest.mark.parametrize("doc", [
    "{",
    {"builtin": "floor"},
    {"source": {"builtin": "integers"}, "target": {"builtin": "integers"}},
    {"source": {"builtin": "integers"}, "target": {"builtin": "integers"}, "pairs": "x"},
])
def test_map_spec_malformed(doc):
    with pytest.raises(SpecValidationError):
        parse_map_spec(doc, 8)


@pytest.mark.parametrize("pair, K, k_target, walls", [
    ("floor_pair", 1, 1, [list(np.arange(0, 200, 0.5)), list(np.arange(0, -200, -0.5))]),
    ("vase_pair", 2, 1, [[(1, y) for y in range(1, 200)],
                         [(1, 1), (0, 1), (-1, 1)] + [(-1, y) for y in range(2, 200)]]),
])
def test_diagram_commutes_on_sampled_sequences(request, pair, K, k_target, walls):
    f, g = request.getfixturevalue(pair)
    plan = verify_coarse_equivalence(f, g, range(1, 9), k_source=K, k_target=k_target)
    X = f.source
    fl = _filt(X, plan.L)
    gf = compose(f, g)
    for pts in walls:
        s = make_sequence(X, [X.point_from_coordinates(np.atleast_1d(p)) for p in pts], K)
        image = map_sequence(gf, s, plan.L)
        shifted = prepend_basepoint(s, gf(s.basepoint), plan.L)
        end = end_of_points(fl, image.points)
        assert end is not None and end == end_of_points(fl, shifted.points)
