"""Symbolic (multigraph, path-set) algebra at desk scale.

Elements pair a directed multigraph (a bag of directed edge instances)
with a set of paths through those instances.  The product of two elements
disjoint-unions the edge instances and closes the path sets under
end-to-start composition.  This module is the exact, enumerative ground
truth that the fast matrix code in :mod:`povgraph.monoid_algebra` is
checked against, so everything here favors clarity over speed and is
protected by hard size guards.

Each edge instance carries a ``copy_tag`` recording which product factor
it came from; the m-fold power of a graph's element therefore tags its
instances 0..m-1.  Comparisons "up to relabeling" go through
:func:`canonical`, which fixes a representative by sorting instances on
(copy_tag, src, dst) and, within ties, picking the id permutation whose
relabeled path set is lexicographically smallest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from povgraph.graph_core import AttributedGraph

DEFAULT_MAX_PATHS = 10**6
LEQ_MAX_INSTANCES = 8
LEQ_MAX_BRANCHING = 10**7


class SizeGuardError(RuntimeError):
    """An element grew past the desk-scale limits of this module."""


@dataclass(frozen=True)
class DirectedEdgeInstance:
    """One directed edge occurrence; ``id`` is unique within an element."""

    id: int
    src: int
    dst: int
    copy_tag: int


@dataclass(frozen=True)
class DirectedMultigraph:
    num_nodes: int
    edge_instances: tuple[DirectedEdgeInstance, ...]

    def __post_init__(self) -> None:
        ids = [e.id for e in self.edge_instances]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate edge instance id")
        for e in self.edge_instances:
            if not (0 <= e.src < self.num_nodes and 0 <= e.dst < self.num_nodes):
                raise ValueError(f"instance {e.id}: endpoint out of range")
            if e.src == e.dst:
                raise ValueError(f"instance {e.id}: self-loop")

    def by_id(self) -> dict[int, DirectedEdgeInstance]:
        return {e.id: e for e in self.edge_instances}


@dataclass(frozen=True)
class SMultElement:
    """A multigraph together with a set of walks through it.

    Paths are tuples of edge-instance ids; consecutive instances must
    chain (the destination of one is the source of the next).
    """

    multigraph: DirectedMultigraph
    paths: frozenset[tuple[int, ...]]

    def __post_init__(self) -> None:
        table = self.multigraph.by_id()
        for p in self.paths:
            if not p:
                raise ValueError("empty path")
            for eid in p:
                if eid not in table:
                    raise ValueError(f"path references unknown instance {eid}")
            for a, b in zip(p, p[1:]):
                if table[a].dst != table[b].src:
                    raise ValueError(f"path {p} is not a chained walk")

    @property
    def num_nodes(self) -> int:
        return self.multigraph.num_nodes

    def path_src(self, p: tuple[int, ...]) -> int:
        return self.multigraph.by_id()[p[0]].src

    def path_dst(self, p: tuple[int, ...]) -> int:
        return self.multigraph.by_id()[p[-1]].dst


def identity_element(num_nodes: int) -> SMultElement:
    """The product identity: no instances, no paths."""
    return SMultElement(
        multigraph=DirectedMultigraph(num_nodes=num_nodes, edge_instances=()),
        paths=frozenset(),
    )


def _shifts(x: SMultElement) -> tuple[int, int]:
    """Offsets that place another element's ids and tags after ``x``'s."""
    if not x.multigraph.edge_instances:
        return 0, 0
    id_shift = max(e.id for e in x.multigraph.edge_instances) + 1
    tag_shift = max(e.copy_tag for e in x.multigraph.edge_instances) + 1
    return id_shift, tag_shift


def bullet(
    x: SMultElement, y: SMultElement, max_paths: int = DEFAULT_MAX_PATHS
) -> SMultElement:
    """Compose two elements: disjoint union of instances, path closure.

    ``y``'s instance ids and copy tags are shifted past ``x``'s, so the
    factors remain distinguishable in the result.  The combined path set
    is ``S`` union ``T`` union every concatenation ``pq`` with the end
    node of ``p`` equal to the start node of ``q``.
    """
    if x.num_nodes != y.num_nodes:
        raise ValueError(f"node-count mismatch: {x.num_nodes} vs {y.num_nodes}")
    id_shift, tag_shift = _shifts(x)
    table_x = x.multigraph.by_id()
    table_y = y.multigraph.by_id()

    shifted_instances = tuple(
        DirectedEdgeInstance(e.id + id_shift, e.src, e.dst, e.copy_tag + tag_shift)
        for e in y.multigraph.edge_instances
    )
    instances = x.multigraph.edge_instances + shifted_instances

    shifted_t = [tuple(eid + id_shift for eid in p) for p in y.paths]

    ends: dict[int, list[tuple[int, ...]]] = {}
    for p in x.paths:
        ends.setdefault(table_x[p[-1]].dst, []).append(p)
    starts: dict[int, list[tuple[int, ...]]] = {}
    for q, q_orig in zip(shifted_t, y.paths):
        starts.setdefault(table_y[q_orig[0]].src, []).append(q)

    n_compose = sum(
        len(ps) * len(starts.get(node, ())) for node, ps in ends.items()
    )
    if len(x.paths) + len(shifted_t) + n_compose > max_paths:
        raise SizeGuardError(
            f"composition would produce more than {max_paths} paths"
        )

    paths = set(x.paths)
    paths.update(shifted_t)
    for node, ps in ends.items():
        for q in starts.get(node, ()):
            for p in ps:
                paths.add(p + q)

    return SMultElement(
        multigraph=DirectedMultigraph(num_nodes=x.num_nodes, edge_instances=instances),
        paths=frozenset(paths),
    )


def directed_edges(g: AttributedGraph) -> list[tuple[int, int]]:
    """Both orientations of every undirected edge, in edge order."""
    out = []
    for u, v in g.edges:
        out.append((int(u), int(v)))
        out.append((int(v), int(u)))
    return out


def graph_element(g: AttributedGraph) -> SMultElement:
    """The graph as an element: all directed edges, single-edge paths."""
    instances = tuple(
        DirectedEdgeInstance(i, src, dst, 0)
        for i, (src, dst) in enumerate(directed_edges(g))
    )
    return SMultElement(
        multigraph=DirectedMultigraph(num_nodes=g.num_nodes, edge_instances=instances),
        paths=frozenset((e.id,) for e in instances),
    )


def edge_element(num_nodes: int, src: int, dst: int) -> SMultElement:
    """A single directed edge with its one-path set (a monoid generator)."""
    inst = DirectedEdgeInstance(0, src, dst, 0)
    return SMultElement(
        multigraph=DirectedMultigraph(num_nodes=num_nodes, edge_instances=(inst,)),
        paths=frozenset({(0,)}),
    )


def power_element(
    g: AttributedGraph, m: int, max_paths: int = DEFAULT_MAX_PATHS
) -> SMultElement:
    """m-fold composition of the graph's element with itself.

    The copy tag of every instance records which of the m factors it came
    from.  Guarded by ``max_paths`` since path sets grow combinatorially.
    """
    if m < 1:
        raise ValueError(f"power must be >= 1, got m={m}")
    base = graph_element(g)
    acc = base
    for _ in range(m - 1):
        acc = bullet(acc, base, max_paths=max_paths)
    return acc


def count_paths(x: SMultElement, i: int, j: int) -> int:
    """Number of paths in ``x`` that run from node i to node j."""
    n = x.num_nodes
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node pair ({i},{j}) out of range for n={n}")
    table = x.multigraph.by_id()
    return sum(
        1 for p in x.paths if table[p[0]].src == i and table[p[-1]].dst == j
    )


def count_matrix(x: SMultElement) -> np.ndarray:
    """All pairwise path counts in one pass (int64, n x n)."""
    table = x.multigraph.by_id()
    out = np.zeros((x.num_nodes, x.num_nodes), dtype=np.int64)
    for p in x.paths:
        out[table[p[0]].src, table[p[-1]].dst] += 1
    return out


def restrict(x: SMultElement, g: AttributedGraph) -> SMultElement:
    """Drop instances outside ``g``'s directed edges, and paths using them.

    ``x`` is an element over the complete graph on the same node set; the
    result lives over ``g``.  Surviving instances keep their ids, so
    restricting by a complete graph is the identity.
    """
    if x.num_nodes != g.num_nodes:
        raise ValueError(f"node-count mismatch: {x.num_nodes} vs {g.num_nodes}")
    allowed = set(directed_edges(g))
    kept = tuple(
        e for e in x.multigraph.edge_instances if (e.src, e.dst) in allowed
    )
    kept_ids = {e.id for e in kept}
    paths = frozenset(p for p in x.paths if all(eid in kept_ids for eid in p))
    return SMultElement(
        multigraph=DirectedMultigraph(num_nodes=x.num_nodes, edge_instances=kept),
        paths=paths,
    )


def embed(x: SMultElement) -> SMultElement:
    """View an element of a subgraph's algebra inside the completion's.

    Representationally the inclusion is the identity: the instances and
    paths are unchanged, only the ambient edge set grows.
    """
    return x


def canonical(x: SMultElement) -> SMultElement:
    """A fixed representative of ``x``'s relabeling class.

    Instances are sorted by (copy_tag, src, dst) and re-identified in that
    order.  Where several parallel instances share that key, every
    permutation of the tie group is tried and the one whose relabeled path
    set sorts smallest wins, making equality-up-to-relabeling decidable.
    """
    instances = sorted(
        x.multigraph.edge_instances, key=lambda e: (e.copy_tag, e.src, e.dst)
    )
    groups: list[list[int]] = []
    for pos, e in enumerate(instances):
        key = (e.copy_tag, e.src, e.dst)
        if groups and key == _group_key(instances, groups[-1]):
            groups[-1].append(pos)
        else:
            groups.append([pos])

    tie_groups = [grp for grp in groups if len(grp) > 1]
    n_perms = 1
    for grp in tie_groups:
        n_perms *= math.factorial(len(grp))
        if n_perms > 10_000:
            raise SizeGuardError("too many tie permutations for canonical form")

    best_paths: list[tuple[int, ...]] | None = None
    best_relabel: dict[int, int] | None = None
    for combo in itertools.product(
        *(itertools.permutations(grp) for grp in tie_groups)
    ):
        placement = list(range(len(instances)))
        for grp, perm in zip(tie_groups, combo):
            for slot, src_pos in zip(grp, perm):
                placement[slot] = src_pos
        relabel = {instances[src_pos].id: slot for slot, src_pos in enumerate(placement)}
        paths = sorted(tuple(relabel[eid] for eid in p) for p in x.paths)
        if best_paths is None or paths < best_paths:
            best_paths = paths
            best_relabel = relabel

    assert best_relabel is not None
    new_instances = tuple(
        DirectedEdgeInstance(best_relabel[e.id], e.src, e.dst, e.copy_tag)
        for e in sorted(x.multigraph.edge_instances, key=lambda e: best_relabel[e.id])
    )
    return SMultElement(
        multigraph=DirectedMultigraph(
            num_nodes=x.num_nodes, edge_instances=new_instances
        ),
        paths=frozenset(best_paths or ()),
    )


def _group_key(instances, group):
    e = instances[group[0]]
    return (e.copy_tag, e.src, e.dst)


def elements_equal(x: SMultElement, y: SMultElement) -> bool:
    """Equality up to relabeling of edge-instance ids."""
    if x.num_nodes != y.num_nodes:
        return False
    if len(x.multigraph.edge_instances) != len(y.multigraph.edge_instances):
        return False
    if len(x.paths) != len(y.paths):
        return False
    return canonical(x) == canonical(y)


def strip_tags(x: SMultElement) -> SMultElement:
    """Forget the factor provenance (all copy tags zeroed).

    The partial order compares elements through bare multigraph
    injections, so order-theoretic identities hold only modulo tags;
    zeroing them before :func:`canonical` gives the matching equality.
    """
    instances = tuple(
        DirectedEdgeInstance(e.id, e.src, e.dst, 0)
        for e in x.multigraph.edge_instances
    )
    return SMultElement(
        multigraph=DirectedMultigraph(num_nodes=x.num_nodes, edge_instances=instances),
        paths=x.paths,
    )


def isomorphic(x: SMultElement, y: SMultElement) -> bool:
    """Equality up to relabeling, ignoring factor tags."""
    return elements_equal(strip_tags(x), strip_tags(y))


def leq(x: SMultElement, y: SMultElement) -> bool:
    """Whether ``x`` embeds into ``y``: the partial order of the algebra.

    True iff there is an injection of ``x``'s instances into ``y``'s,
    matching on (src, dst), that carries every path of ``x`` onto a path
    of ``y``.  Pure backtracking: ``x``'s instances are tried in order of
    decreasing path participation; candidate targets in order of
    increasing path participation (least-committed targets first), then
    id.  The injection domain is capped at ``LEQ_MAX_INSTANCES``.
    """
    if x.num_nodes != y.num_nodes:
        raise ValueError(f"node-count mismatch: {x.num_nodes} vs {y.num_nodes}")
    x_instances = x.multigraph.edge_instances
    if len(x_instances) > LEQ_MAX_INSTANCES:
        raise SizeGuardError(
            f"left element has {len(x_instances)} instances"
            f" (limit {LEQ_MAX_INSTANCES})"
        )

    y_by_pair: dict[tuple[int, int], list[DirectedEdgeInstance]] = {}
    y_participation: dict[int, int] = {}
    for p in y.paths:
        for eid in p:
            y_participation[eid] = y_participation.get(eid, 0) + 1
    for e in y.multigraph.edge_instances:
        y_by_pair.setdefault((e.src, e.dst), []).append(e)
    for pair in y_by_pair:
        y_by_pair[pair].sort(key=lambda e: (y_participation.get(e.id, 0), e.id))

    x_participation: dict[int, int] = {}
    for p in x.paths:
        for eid in p:
            x_participation[eid] = x_participation.get(eid, 0) + 1
    order = sorted(
        x_instances, key=lambda e: (-x_participation.get(e.id, 0), e.id)
    )

    branching = 1
    for e in order:
        branching *= max(1, len(y_by_pair.get((e.src, e.dst), ())))
        if branching > LEQ_MAX_BRANCHING:
            raise SizeGuardError("leq search space exceeds the branching cap")

    # Paths of x indexed by the position (in `order`) of their last-assigned
    # instance, so each is checked exactly once, as early as possible.
    pos_of = {e.id: k for k, e in enumerate(order)}
    paths_ready_at: dict[int, list[tuple[int, ...]]] = {}
    for p in x.paths:
        last = max(pos_of[eid] for eid in p)
        paths_ready_at.setdefault(last, []).append(p)

    assigned: dict[int, int] = {}
    used: set[int] = set()

    def backtrack(k: int) -> bool:
        if k == len(order):
            return True
        e = order[k]
        for target in y_by_pair.get((e.src, e.dst), ()):
            if target.id in used:
                continue
            assigned[e.id] = target.id
            used.add(target.id)
            ok = all(
                tuple(assigned[eid] for eid in p) in y.paths
                for p in paths_ready_at.get(k, ())
            )
            if ok and backtrack(k + 1):
                return True
            used.discard(target.id)
            del assigned[e.id]
        return False

    return backtrack(0)
