"""SI epidemics on graphs assisted by external infection agents.

Subpackage map: ``graphs`` (families, partitions, conductance),
``engine`` (exact event-driven SI simulation), ``policies`` (external
rate vectors), ``dominators`` (bounding processes), ``analytics``
(sweeps, scaling fits, dominance verdicts), ``cli`` (the ``sim`` tool).
"""

from .analytics import (
    ExperimentPlan,
    ScalingReport,
    concentration_probe,
    dominance_report,
    exponent_fit,
    run_plan,
)
from .dominators import (
    ClusterProcessConfig,
    ClusterTrace,
    bound_calculator,
    conductance_chain,
    diagonal_grid_clusters,
    dominance_check,
    fpp_clusters,
    line_clusters,
    shape_estimate,
    two_phase_process,
)
from .engine import EngineConfig, InfectionState, Trace, simulate, simulate_batch
from .graphs import (
    ConductanceResult,
    Graph,
    Partition,
    SpanningTree,
    bfs_tree,
    conductance_exact,
    diameter,
    gen_custom,
    gen_grid,
    gen_line,
    gen_rgg,
    gen_ring,
    partition_grid,
    partition_rgg,
    partition_ring,
    read_graph,
    write_graph,
)
from .policies import (
    PolicySpec,
    build_policy,
    dynamic_links,
    greedy_frontier_adversary,
    gsi,
    mobile_agents,
    null_policy,
    random_homogeneous,
    static_links,
)

__all__ = [
    "ClusterProcessConfig",
    "ClusterTrace",
    "ConductanceResult",
    "EngineConfig",
    "ExperimentPlan",
    "Graph",
    "InfectionState",
    "Partition",
    "PolicySpec",
    "ScalingReport",
    "SpanningTree",
    "Trace",
    "bfs_tree",
    "bound_calculator",
    "build_policy",
    "concentration_probe",
    "conductance_chain",
    "conductance_exact",
    "diagonal_grid_clusters",
    "diameter",
    "dominance_check",
    "dominance_report",
    "dynamic_links",
    "exponent_fit",
    "fpp_clusters",
    "gen_custom",
    "gen_grid",
    "gen_line",
    "gen_rgg",
    "gen_ring",
    "greedy_frontier_adversary",
    "gsi",
    "line_clusters",
    "mobile_agents",
    "null_policy",
    "partition_grid",
    "partition_rgg",
    "partition_ring",
    "random_homogeneous",
    "read_graph",
    "run_plan",
    "shape_estimate",
    "simulate",
    "simulate_batch",
    "static_links",
    "two_phase_process",
    "write_graph",
]

__version__ = "0.1.0"
