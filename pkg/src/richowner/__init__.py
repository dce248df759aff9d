"""Desk-scale simulator for distributed compression over rich-owner graphs.

Three senders each hold one correlated bit string; each compresses alone by
naming a random neighbor of the string in a congestion-controlled bipartite
graph plus a residue fingerprint, and a single receiver reconstructs all
three by staged candidate enumeration.  The package provides the graph
construction and verification toolkit, the fingerprinting scheme, two
computable complexity oracles, the protocol, input scenarios, and a
reproducible experiment harness.
"""

__version__ = "0.1.0"

from .bits import BitString, bs
from .graphs import (
    GraphParams,
    LabeledBipartiteGraph,
    MergedGraph,
    SeededGraph,
    SplitGraph,
    TableGraph,
    all_to_one_graph,
    complete_graph,
    load_graph,
    save_graph,
)
from .construction import (
    ConstructionError,
    ConstructionReport,
    build_random_graph,
    construct_rich_owner_graph,
    prefix_merge,
    split_edges,
)
from .crt import HashScheme, HashTag, crt_hash, draw_hash_tag, isolation_probability
from .oracles import (
    ComplexityProfile,
    CorrelationSet,
    CountingOracle,
    ToyMachineConfig,
    ToyOracle,
    chain_rule_slack,
    counting_conditional,
    enumerate_b_set,
    named_correlation_set,
    profile_of,
    toy_complexity,
)
from .protocol import (
    Codeword,
    DecodeResult,
    DecodingPlan,
    InfeasibleRatesError,
    RateVector,
    conditional_profile,
    decode_full,
    decode_known_profile,
    decode_membership,
    derive_decoding_bounds,
    encode,
    rates_from_profile,
    rates_violating_total,
)
from .scenarios import (
    FieldElement,
    SourceDistribution,
    collinear_counts,
    collinear_members,
    converse_bound_check,
    entropy_profile,
    gf_mul,
    is_collinear,
    sample_collinear_triple,
    sample_dms,
    validate_rate_region,
)
from .verification import (
    BFamily,
    OwnerClassification,
    VerificationReport,
    check_prefix_extractor,
    classify_owner,
    extractor_error,
    rich_owner_fraction,
    worst_extractor_error,
)
