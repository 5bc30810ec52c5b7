"""Budgeted intervention-target design on Markov equivalence classes.

Given an essential graph and a budget k, pick k single-vertex intervention
targets maximizing the number of edge orientations learned, in the average
or worst case over the class; plus the exact counting, uniform sampling
and orientation-closure machinery the objectives are built on.
"""

from .counting import (CountingContext, count_mec, count_with_prior,
                       enumerate_mec, rooted_sizes, validate_essential_input)
from .errors import (BudgetError, CapExceededError, GraphFormatError,
                     InconsistencyError, InvalidEssentialGraphError,
                     MecDesignError, NotATreeError, NotAUcegError)
from .general_design import (DesignReport, GainEvaluator, brute_force_design,
                             exact_average_gain, greedy_design,
                             guarantee_parameters, lazy_greedy_design,
                             required_samples, worst_case_gain)
from .graphio import (graph_from_dict, graph_to_dict, graph_to_json,
                      load_dag, load_graph, parse_edge_list, save_graph)
from .graphs import (ChainComponent, Dag, PartiallyDirectedGraph,
                     chain_components, descendants, is_chordal,
                     is_markov_equivalent, skeleton, v_structures,
                     validate_chain_graph)
from .orientation import (OrientationResult, essential_graph_of, gain,
                          incident_orientations,
                          interventional_essential_graph, is_uceg,
                          meek_closure, resolved_edges, rooted_essential_graph)
from .sampling import (BulkUniformSampler, RandomSource, sample_fast,
                       sample_uniform)
from .tree_design import (ForestDecomposition, MinimaxTable, TreeComponent,
                          allocate_budget, forest_worst_case_gain,
                          minimax_forest, minimax_single_tree,
                          tree_average_gain, tree_gain, tree_greedy_average)

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "BulkUniformSampler", "CapExceededError", "ChainComponent",
    "CountingContext", "Dag", "DesignReport", "ForestDecomposition",
    "GainEvaluator", "GraphFormatError", "InconsistencyError",
    "InvalidEssentialGraphError", "MecDesignError", "MinimaxTable",
    "NotATreeError", "NotAUcegError", "OrientationResult",
    "PartiallyDirectedGraph", "RandomSource", "TreeComponent",
    "allocate_budget", "brute_force_design", "chain_components", "count_mec",
    "count_with_prior", "descendants", "enumerate_mec", "essential_graph_of",
    "exact_average_gain", "forest_worst_case_gain", "gain", "graph_from_dict",
    "graph_to_dict", "graph_to_json", "greedy_design", "guarantee_parameters",
    "incident_orientations", "interventional_essential_graph", "is_chordal",
    "is_markov_equivalent", "is_uceg", "lazy_greedy_design", "load_dag",
    "load_graph", "meek_closure", "minimax_forest", "minimax_single_tree",
    "parse_edge_list", "required_samples", "resolved_edges", "rooted_sizes",
    "rooted_essential_graph", "sample_fast", "sample_uniform", "save_graph",
    "skeleton", "tree_average_gain", "tree_gain", "tree_greedy_average",
    "v_structures", "validate_chain_graph", "validate_essential_input",
    "worst_case_gain",
]
