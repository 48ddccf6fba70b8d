"""Delegation resolution and simulation for liquid democracy with
multiple delegation options per voter."""

from .analysis import (
    AlphaSequence,
    FStatistic,
    alpha_sequence,
    expected_first_voter_weight,
    f_statistic,
)
from .generator import (
    ArrivalTrace,
    GeneratorParams,
    generate,
    graph_from_trace,
    identical_pair_fraction,
)
from .graph import (
    UNUSED,
    DelegationAssignment,
    Flow,
    InvalidAssignmentError,
    InvalidFlowError,
    InvalidGraphError,
    NominationGraph,
    WeightReport,
    active_nodes,
    compute_weights,
    delegation_to_flow,
    flow_to_delegation,
    graph_from_json,
    graph_to_json,
    load_graph,
    restrict_to_active,
    save_graph,
    scc_reverse_topological,
    shortest_path_assignment,
)
from .resolvers import (
    OnlineGreedy,
    ResolutionResult,
    SplittableSolution,
    resolve_approx,
    resolve_brute_force,
    resolve_greedy_generalized,
    resolve_greedy_online,
    resolve_optimal,
    resolve_random,
    resolve_shortest,
    resolve_splittable,
)

__version__ = "0.1.0"
