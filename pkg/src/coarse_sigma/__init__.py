"""Coarse invariant σ of countable metric spaces: ends counted at each scale
and stabilized over scales, with checks for explicit coarse equivalences."""

from .coarse_maps import (
    EquivalencePlan,
    MapWitness,
    bornology_profile,
    builtin_map,
    closeness,
    compose,
    identity_map,
    induced_end_map,
    parse_map_spec,
    proper_from_composition,
    properness_bound_check,
    properness_check,
    tabulate,
    verify_coarse_equivalence,
)
from .ends import (
    EndsFiltration,
    FiltrationConfig,
    ScalePartition,
    SigmaConfig,
    SigmaReport,
    components_at_scale,
    detect_stability,
    ends_filtration,
    phi_map,
    sigma,
)
from .errors import *  # noqa: F401,F403
from .metric import (
    SpaceOracle,
    TruncatedSpace,
    builtin_space,
    load_space_spec,
    parse_space_spec,
    truncate,
)
from .sequences import (
    EquivalenceChain,
    NSequence,
    equivalent_within,
    escapes,
    interleave_merge,
    is_subsequence,
    make_sequence,
    prepend_basepoint,
)
from .workflows import compare_spaces, run_examples

__version__ = "0.1.0"
