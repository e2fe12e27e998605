"""Topology-conditioned distributions over nodes.

Given a categorical distribution P over nodes and an adjacency pattern,
each edge (i, j) receives the weight ``P_j / (1 - P_j) * prod_r (1 - P_r)**theta``.
The m-fold power of that weight matrix under the ``A + B + AB`` operation
aggregates weighted walks of length up to m; row-normalizing it yields,
per node, a categorical distribution over all nodes -- the node's view of
P as filtered through the topology -- and their average is the graph-level
view.  ``theta`` uniformly contracts the weights, damping long walks.

The power is evaluated densely for graphs up to 512 nodes and sparsely
above, with both paths required to agree to 1e-12; the sparse path keeps
every nonzero unless pruning is explicitly requested.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from povgraph.graph_core import AttributedGraph, SparseMatrix, adjacency
from povgraph.monoid_algebra import PowerOverflowError

DENSE_NODE_LIMIT = 512

# Interior clamp applied to intermediate distributions before they are fed
# back into the weight formula, which degenerates as any P_j -> 1.
CLIP_LO = 1e-9
CLIP_HI = 1.0 - 1e-6


@dataclass(frozen=True)
class NodeDistribution:
    """Categorical distribution over the nodes of one graph."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 1:
            raise ValueError("distribution must be a 1-D vector")
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, n: int) -> "NodeDistribution":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return len(self.probs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NodeDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class PovConfig:
    """Level (walk depth) and degree (contraction exponent)."""

    m: int
    theta: float

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"level m must be >= 1, got {self.m}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must be in [0, 1], got {self.theta}")


@dataclass(frozen=True)
class PovResult:
    """Weighted walk counts plus their row-normalized distributions.

    ``row_norms[i]`` is the L1 norm of row i of ``dmi`` before
    normalization; a zero flags an isolated node whose pov row was set to
    a delta at itself.
    """

    dmi: SparseMatrix
    pov: SparseMatrix
    pov_graph: NodeDistribution
    row_norms: np.ndarray


def induced_weights(
    adj: SparseMatrix, p: NodeDistribution, theta: float
) -> SparseMatrix:
    """Edge weights induced by a node distribution on an adjacency pattern.

    The weight of every stored entry (i, j) is
    ``p_j / (1 - p_j) * prod_r (1 - p_r)**theta``; the sparsity pattern is
    exactly that of ``adj``.  Requires every ``p_j`` strictly inside
    (0, 1 - 1e-9): the odds factor blows up as ``p_j -> 1`` and a zero
    would silently erase edges.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    probs = p.probs
    if adj.n != len(probs):
        raise ValueError(f"dimension mismatch: {adj.n} vs {len(probs)}")
    bad_hi = np.flatnonzero(probs >= 1.0 - 1e-9)
    if len(bad_hi):
        raise ValueError(f"p[{bad_hi[0]}] = {probs[bad_hi[0]]} too close to 1")
    bad_lo = np.flatnonzero(probs <= 0.0)
    if len(bad_lo):
        raise ValueError(f"p[{bad_lo[0]}] = {probs[bad_lo[0]]} must be positive")
    scale = float(np.prod(1.0 - probs)) ** theta
    col_weight = probs / (1.0 - probs) * scale
    data = col_weight[adj.indices]
    return SparseMatrix(
        n=adj.n, indptr=adj.indptr.copy(), indices=adj.indices.copy(), data=data
    )


def dmi(w: SparseMatrix, m: int, mode: str = "auto") -> SparseMatrix:
    """m-fold power of the weight matrix under ``A + B + AB``.

    Runs the recurrence ``R <- R + R @ W`` from ``R = W + I`` and returns
    ``R - I`` after m-1 steps; equal to ``sum_{k=1..m} C(m,k) W^k`` and to
    :func:`povgraph.monoid_algebra.circ_power`, against which it is tested
    as an independent code path.  ``mode`` picks the dense or sparse
    evaluator explicitly; ``auto`` uses dense below 512 nodes.
    """
    if m < 1:
        raise ValueError(f"level m must be >= 1, got {m}")
    if mode not in ("auto", "dense", "sparse"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "auto":
        mode = "dense" if w.n <= DENSE_NODE_LIMIT else "sparse"

    if mode == "dense":
        wd = w.to_dense().astype(np.float64)
        acc = wd + np.eye(w.n)
        for it in range(1, m):
            with np.errstate(over="ignore", invalid="ignore"):
                acc = acc + acc @ wd
            if not np.all(np.isfinite(acc)):
                raise PowerOverflowError(
                    it, f"non-finite entry at iteration {it}"
                )
        out = acc - np.eye(w.n)
        if len(w.data) == 0 or w.data.min() >= 0:
            # Growth is monotone for nonnegative weights; a negative here
            # can only be rounding noise from the identity subtraction.
            np.clip(out, 0.0, None, out=out)
        return SparseMatrix.from_dense(out)

    ws = w.to_scipy().astype(np.float64)
    eye = sp.identity(w.n, dtype=np.float64, format="csr")
    acc = (ws + eye).tocsr()
    for it in range(1, m):
        with np.errstate(over="ignore", invalid="ignore"):
            acc = acc + acc @ ws
        if not np.all(np.isfinite(acc.data)):
            raise PowerOverflowError(it, f"non-finite entry at iteration {it}")
    return SparseMatrix.from_scipy(acc - eye)


def pov_matrix(dmi_matrix: SparseMatrix) -> PovResult:
    """Row-normalize the walk counts into per-node distributions.

    Rows with no mass (isolated nodes) become a delta at the node itself
    and are flagged by a zero in ``row_norms`` so downstream consumers can
    exclude them.  The graph-level distribution is the plain average of
    all row distributions.
    """
    if len(dmi_matrix.data) and dmi_matrix.data.min() < 0:
        raise ValueError("negative entry in walk-count matrix")
    s = dmi_matrix.to_scipy().astype(np.float64)
    n = dmi_matrix.n
    norms = np.asarray(s.sum(axis=1)).ravel()
    zero_rows = np.flatnonzero(norms == 0.0)
    inv = np.ones_like(norms)
    nonzero = norms > 0.0
    inv[nonzero] = 1.0 / norms[nonzero]
    pov = sp.diags(inv) @ s
    if len(zero_rows):
        delta = sp.coo_matrix(
            (np.ones(len(zero_rows)), (zero_rows, zero_rows)), shape=(n, n)
        )
        pov = pov + delta
    pov = sp.csr_matrix(pov)
    graph_probs = np.asarray(pov.sum(axis=0)).ravel() / n
    graph_probs = graph_probs / graph_probs.sum()
    row_norms = norms.copy()
    return PovResult(
        dmi=dmi_matrix,
        pov=SparseMatrix.from_scipy(pov),
        pov_graph=NodeDistribution(graph_probs),
        row_norms=row_norms,
    )


def compute_pov(
    g: AttributedGraph, p: NodeDistribution, cfg: PovConfig, mode: str = "auto"
) -> PovResult:
    """Full pipeline: adjacency -> induced weights -> power -> normalize."""
    w = induced_weights(adjacency(g), p, cfg.theta)
    return pov_matrix(dmi(w, cfg.m, mode=mode))


def pov_node(result: PovResult, i: int) -> NodeDistribution:
    """Row i of the pov matrix as a dense distribution."""
    if not 0 <= i < result.pov.n:
        raise IndexError(f"node {i} out of range for n={result.pov.n}")
    row = result.pov.row(i).astype(np.float64)
    return NodeDistribution(row / row.sum())


def mean_node(result: PovResult, i: int, features: np.ndarray) -> np.ndarray:
    """Feature average weighted by node i's pov distribution."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != result.pov.n:
        raise ValueError(
            f"features must have {result.pov.n} rows, got {features.shape[0]}"
        )
    return pov_node(result, i).probs @ features


def mean_graph(result: PovResult, features: np.ndarray) -> np.ndarray:
    """Feature average weighted by the graph-level pov distribution."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != result.pov.n:
        raise ValueError(
            f"features must have {result.pov.n} rows, got {features.shape[0]}"
        )
    return result.pov_graph.probs @ features


def clip_interior(probs: np.ndarray) -> NodeDistribution:
    """Clamp a distribution strictly inside (0, 1) and renormalize.

    Entries are clipped to [1e-9, 1 - 1e-6] before renormalization, so the
    result always satisfies the strict-interior precondition of
    :func:`induced_weights` (the renormalized maximum stays below
    1 - 1e-9 whenever there are at least two nodes).
    """
    clipped = np.clip(np.asarray(probs, dtype=np.float64), CLIP_LO, CLIP_HI)
    return NodeDistribution(clipped / clipped.sum())


def _component_of(g: AttributedGraph, start: int) -> set[int]:
    neighbors: dict[int, list[int]] = {}
    for u, v in g.edges:
        neighbors.setdefault(int(u), []).append(int(v))
        neighbors.setdefault(int(v), []).append(int(u))
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for nxt in neighbors.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def rumor_localize(
    g: AttributedGraph, start: int, cfg: PovConfig, max_stages: int
) -> list[tuple[int, NodeDistribution]]:
    """Walk toward the most plausible origin node by iterating pov updates.

    Stage 1 starts at ``start`` with a uniform belief Q1 and computes
    P1 = pov(start, Q1).  Each later stage k, standing at node u_k,
    refreshes the belief with Q_k = pov(u_k, Q_{k-1}) and evaluates
    P_k = pov(u_k, Q_k); the next node is the argmax of P_k (ties broken
    toward the lowest index).  The walk stops when the argmax stays put or
    ``max_stages`` is reached, and returns the visited (node, P_k) pairs.

    Beliefs are clamped to the open interval before each weight build
    (see :func:`clip_interior`), since pov rows may contain exact zeros.
    """
    if not 0 <= start < g.num_nodes:
        raise IndexError(f"start node {start} out of range")
    if max_stages < 1:
        raise ValueError("max_stages must be >= 1")
    if len(_component_of(g, start)) < 2:
        raise ValueError(f"start node {start} sits in a component of size < 2")

    adj = adjacency(g)

    def pov_row_at(node: int, belief: NodeDistribution) -> NodeDistribution:
        w = induced_weights(adj, clip_interior(belief.probs), cfg.theta)
        result = pov_matrix(dmi(w, cfg.m))
        return pov_node(result, node)

    trajectory: list[tuple[int, NodeDistribution]] = []
    q = NodeDistribution.uniform(g.num_nodes)
    u = start
    for stage in range(max_stages):
        if stage == 0:
            p_stage = pov_row_at(u, q)
        else:
            q = pov_row_at(u, q)
            p_stage = pov_row_at(u, q)
        trajectory.append((u, p_stage))
        nxt = int(np.argmax(p_stage.probs))
        if nxt == u:
            break
        u = nxt
    return trajectory


def benchmark_pov(
    g: AttributedGraph, cfg: PovConfig, p: NodeDistribution | None = None
) -> tuple[PovResult, float]:
    """Run the pov pipeline once and report its wall time in seconds."""
    if p is None:
        p = NodeDistribution.uniform(g.num_nodes)
    t0 = time.perf_counter()
    result = compute_pov(g, p, cfg)
    elapsed = time.perf_counter() - t0
    return result, elapsed
