"""Topology-conditioned node-attribute distributions for attributed graphs.

The library computes, for an undirected attributed graph, how the topology
reshapes a categorical distribution over nodes: per-node "point of view"
distributions, their graph-level aggregate, and attribute means weighted by
them.  On top of that sits an unsupervised anomaly detector (a small graph
autoencoder scored against local and global reconstruction gaps), an
evaluation harness, and a symbolic desk-scale oracle for the underlying
path-set algebra.

Entry points:

* :mod:`povgraph.graph_core` -- graph/matrix data model, loaders, generators
* :mod:`povgraph.monoid_algebra` -- the ``A + B + AB`` matrix operation and
  its iterated powers
* :mod:`povgraph.smult_oracle` -- symbolic (multigraph, path-set) algebra
* :mod:`povgraph.pov_engine` -- induced weights, level-m aggregation, pov
  distributions, means, rumor-source localization
* :mod:`povgraph.id_model` -- the autoencoder detector
* :mod:`povgraph.eval_harness` -- metrics, sweeps, noise, runtime probes
* :mod:`povgraph.cli` -- the ``povgraph`` command line tool
"""

from povgraph.graph_core import (
    AttributedGraph,
    SparseMatrix,
    adjacency,
    load_attributed_graph,
    make_clustered_graph,
    make_complete_graph,
    save_attributed_graph,
)
from povgraph.monoid_algebra import circ, circ_power, mi
from povgraph.pov_engine import (
    NodeDistribution,
    PovConfig,
    PovResult,
    dmi,
    induced_weights,
    mean_graph,
    mean_node,
    pov_matrix,
    pov_node,
    rumor_localize,
)

__all__ = [
    "AttributedGraph",
    "SparseMatrix",
    "NodeDistribution",
    "PovConfig",
    "PovResult",
    "adjacency",
    "circ",
    "circ_power",
    "dmi",
    "induced_weights",
    "load_attributed_graph",
    "make_clustered_graph",
    "make_complete_graph",
    "mean_graph",
    "mean_node",
    "mi",
    "pov_matrix",
    "pov_node",
    "rumor_localize",
    "save_attributed_graph",
]

__version__ = "0.1.0"
