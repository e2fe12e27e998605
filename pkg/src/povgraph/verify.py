"""Cross-checking suites for the algebraic core, behind ``povgraph verify``.

Each suite pits an implementation against an independent route to the
same answer: iterated products against closed-form expansions, the sparse
path counter against exhaustive symbolic enumeration, normalized rows
against the distribution they should recover on complete graphs, and the
order/restriction machinery against its defining properties on sampled
elements.  A suite returns pass/fail plus a one-line detail; the CLI
renders the table and exits nonzero if anything failed.

``circ_fn`` is injectable purely so the test suite can plant a broken
operation and watch the right row go red.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import comb

import numpy as np

from povgraph import monoid_algebra, smult_oracle
from povgraph.graph_core import (
    AttributedGraph,
    SparseMatrix,
    adjacency,
    make_complete_graph,
)
from povgraph.pov_engine import (
    NodeDistribution,
    PovResult,
    dmi,
    induced_weights,
    pov_matrix,
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def dense_binomial_sum(b: np.ndarray, m: int) -> np.ndarray:
    """Independent oracle: sum_{k=1..m} C(m,k) b^k in dense arithmetic."""
    n = b.shape[0]
    out = np.zeros_like(b)
    power = np.eye(n)
    for k in range(1, m + 1):
        power = power @ b
        out = out + comb(m, k) * power
    return out


def random_graph(rng: np.random.Generator, n: int, edge_prob: float = 0.5) -> AttributedGraph:
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < edge_prob
    ]
    return AttributedGraph(
        num_nodes=n,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        features=np.zeros((n, 1)),
    )


def random_interior_distribution(
    rng: np.random.Generator, n: int, max_prob: float = 0.9
) -> NodeDistribution:
    while True:
        probs = rng.dirichlet(np.full(n, 2.0))
        if probs.max() < max_prob and probs.min() > 1e-6:
            return NodeDistribution(probs)


def pov_fixed_point(
    w: SparseMatrix, tol: float = 1e-12, m_max: int = 400
) -> tuple[PovResult, int]:
    """Smallest level at which successive pov rows move less than ``tol``."""
    prev = None
    for m in range(1, m_max + 1):
        result = pov_matrix(dmi(w, m))
        cur = result.pov.to_dense()
        if prev is not None and np.abs(cur - prev).sum(axis=1).max() < tol:
            return result, m
        prev = cur
    raise RuntimeError(f"pov rows did not stabilize within m={m_max}")


# ---------------------------------------------------------------------------
# sampling helpers for the symbolic suites
# ---------------------------------------------------------------------------


def _random_atom(rng: np.random.Generator, g: AttributedGraph) -> smult_oracle.SMultElement:
    """A generator element: one directed edge, or a 2-edge directed path."""
    de = smult_oracle.directed_edges(g)
    src, dst = de[rng.integers(len(de))]
    atom = smult_oracle.edge_element(g.num_nodes, src, dst)
    if rng.random() < 0.4:
        continuations = [(a, b) for (a, b) in de if a == dst]
        if continuations:
            nxt = continuations[rng.integers(len(continuations))]
            atom = smult_oracle.bullet(
                atom, smult_oracle.edge_element(g.num_nodes, nxt[0], nxt[1])
            )
    return atom


def random_element(
    rng: np.random.Generator,
    g: AttributedGraph,
    max_factors: int = 3,
    drop_paths: bool = True,
) -> smult_oracle.SMultElement:
    """Product of a few generator atoms, optionally with paths dropped.

    Dropping a random subset of paths leaves the generated submonoid and
    exercises the general (multigraph, path-set) case.
    """
    if g.num_edges == 0:
        return smult_oracle.identity_element(g.num_nodes)
    k = int(rng.integers(1, max_factors + 1))
    element = _random_atom(rng, g)
    for _ in range(k - 1):
        element = smult_oracle.bullet(element, _random_atom(rng, g))
    if drop_paths and len(element.paths) > 1 and rng.random() < 0.5:
        paths = sorted(element.paths)
        keep = [p for p in paths if rng.random() < 0.7]
        if keep:
            element = smult_oracle.SMultElement(
                multigraph=element.multigraph, paths=frozenset(keep)
            )
    return element


def _shuffle_ids(
    rng: np.random.Generator, x: smult_oracle.SMultElement
) -> smult_oracle.SMultElement:
    old = [e.id for e in x.multigraph.edge_instances]
    new = rng.permutation(len(old))
    relabel = {o: int(n) for o, n in zip(old, new)}
    instances = tuple(
        smult_oracle.DirectedEdgeInstance(relabel[e.id], e.src, e.dst, e.copy_tag)
        for e in x.multigraph.edge_instances
    )
    paths = frozenset(tuple(relabel[eid] for eid in p) for p in x.paths)
    return smult_oracle.SMultElement(
        multigraph=smult_oracle.DirectedMultigraph(
            num_nodes=x.num_nodes, edge_instances=instances
        ),
        paths=paths,
    )


def _nonempty_random_graph(rng: np.random.Generator, n: int) -> AttributedGraph:
    while True:
        g = random_graph(rng, n)
        if g.num_edges > 0:
            return g


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def suite_binomial_identity(rng: np.random.Generator, circ_fn=None, trials: int = 100):
    """Iterated products equal (I+B)^m - I and the binomial expansion."""
    circ_op = circ_fn or monoid_algebra.circ
    for trial in range(trials):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 7))
        b = rng.uniform(-0.5, 0.5, size=(n, n))
        bm = SparseMatrix.from_dense(b)
        fold = bm
        for _ in range(m - 1):
            fold = circ_op(fold, bm)
        routes = {
            "fold": fold.to_dense(),
            "recurrence": monoid_algebra.circ_power(bm, m).to_dense(),
            "closed_form": np.linalg.matrix_power(np.eye(n) + b, m) - np.eye(n),
            "binomial_sum": dense_binomial_sum(b, m),
        }
        ref = routes["binomial_sum"]
        for name, got in routes.items():
            if not np.allclose(got, ref, rtol=1e-9, atol=1e-12):
                return False, f"trial {trial}: route {name} disagrees (n={n}, m={m})"
    return True, f"{trials} random matrices, all four routes agree"


def suite_path_count_equality(rng: np.random.Generator, graphs: int = 50, m_max: int = 4):
    """Matrix walk counts equal exhaustive symbolic path enumeration."""
    for trial in range(graphs):
        n = int(rng.integers(2, 7))
        g = random_graph(rng, n)
        adj = adjacency(g)
        element = smult_oracle.graph_element(g)
        base = smult_oracle.graph_element(g)
        for m in range(1, m_max + 1):
            if m > 1:
                element = smult_oracle.bullet(element, base)
            counted = smult_oracle.count_matrix(element)
            computed = monoid_algebra.mi(adj, m).to_dense()
            if not np.array_equal(counted, computed):
                return False, f"graph {trial} (n={n}): mismatch at m={m}"
    return True, f"{graphs} random graphs, m=1..{m_max}, exact integer equality"


def suite_complete_graph_convergence(rng: np.random.Generator, per_size: int = 20):
    """On complete graphs the stabilized pov rows recover the input P."""
    worst = 0.0
    for n in (3, 5, 10):
        g = make_complete_graph(n)
        adj = adjacency(g)
        for _ in range(per_size):
            p = random_interior_distribution(rng, n)
            w = induced_weights(adj, p, theta=0.0)
            result, _m = pov_fixed_point(w)
            pov_dense = result.pov.to_dense()
            gap_rows = np.abs(pov_dense - p.probs[None, :]).sum(axis=1).max()
            gap_graph = np.abs(result.pov_graph.probs - p.probs).sum()
            worst = max(worst, gap_rows, gap_graph)
            if gap_rows >= 1e-6 or gap_graph >= 1e-6:
                return False, f"n={n}: L1 gap {max(gap_rows, gap_graph):.2e} >= 1e-6"
    return True, f"worst L1 gap to P: {worst:.2e}"


def suite_partial_order(rng: np.random.Generator, trials: int = 40):
    """Reflexive, antisymmetric mod relabeling, transitive, product-compatible."""
    for trial in range(trials):
        n = int(rng.integers(2, 6))
        g = _nonempty_random_graph(rng, n)
        x = random_element(rng, g, max_factors=2)
        y = random_element(rng, g, max_factors=2)
        z = random_element(rng, g, max_factors=2)

        if not smult_oracle.leq(x, x):
            return False, f"trial {trial}: reflexivity failed"

        shuffled = _shuffle_ids(rng, x)
        if not (smult_oracle.leq(x, shuffled) and smult_oracle.leq(shuffled, x)):
            return False, f"trial {trial}: relabeled copy not mutually comparable"
        if not smult_oracle.isomorphic(x, shuffled):
            return False, f"trial {trial}: mutual order without isomorphism"

        if smult_oracle.leq(x, y) and smult_oracle.leq(y, x):
            if not smult_oracle.isomorphic(x, y):
                return False, f"trial {trial}: antisymmetry violated"

        bigger = smult_oracle.bullet(x, y)
        biggest = smult_oracle.bullet(bigger, z)
        if not (smult_oracle.leq(x, bigger) and smult_oracle.leq(bigger, biggest)):
            return False, f"trial {trial}: chain construction not increasing"
        if not smult_oracle.leq(x, biggest):
            return False, f"trial {trial}: transitivity failed"

        if smult_oracle.leq(x, y):
            if not smult_oracle.leq(
                smult_oracle.bullet(x, z), smult_oracle.bullet(y, z)
            ):
                return False, f"trial {trial}: right product compatibility failed"
            if not smult_oracle.leq(
                smult_oracle.bullet(z, x), smult_oracle.bullet(z, y)
            ):
                return False, f"trial {trial}: left product compatibility failed"
    return True, f"{trials} sampled elements, all order laws hold"


def suite_restriction_homomorphism(rng: np.random.Generator, trials: int = 40):
    """Restriction commutes with the product and fixes the graph element."""
    for trial in range(trials):
        n = int(rng.integers(2, 6))
        g = _nonempty_random_graph(rng, n)
        complete = make_complete_graph(n)

        restricted = smult_oracle.restrict(smult_oracle.graph_element(complete), g)
        if not smult_oracle.elements_equal(restricted, smult_oracle.graph_element(g)):
            return False, f"trial {trial}: restricting the complete element missed"

        x = random_element(rng, complete, max_factors=2)
        y = random_element(rng, complete, max_factors=2)
        lhs = smult_oracle.restrict(smult_oracle.bullet(x, y), g)
        rhs = smult_oracle.bullet(
            smult_oracle.restrict(x, g), smult_oracle.restrict(y, g)
        )
        if not smult_oracle.isomorphic(lhs, rhs):
            return False, f"trial {trial}: restriction is not multiplicative"
    return True, f"{trials} sampled products preserved"


def suite_galois_adjunction(rng: np.random.Generator, trials: int = 60):
    """x embeds into a restriction iff its inclusion embeds into the original."""
    for trial in range(trials):
        n = int(rng.integers(2, 6))
        g = _nonempty_random_graph(rng, n)
        complete = make_complete_graph(n)
        x = random_element(rng, g, max_factors=2)
        y = random_element(rng, complete, max_factors=3)
        left = smult_oracle.leq(x, smult_oracle.restrict(y, g))
        right = smult_oracle.leq(smult_oracle.embed(x), y)
        if left != right:
            return False, f"trial {trial}: adjunction sides disagree ({left} vs {right})"
    return True, f"{trials} sampled pairs, both directions agree"


def suite_power_maximality(rng: np.random.Generator, graphs: int = 8, m_max: int = 3):
    """Restricted complete powers are graph powers; the power is maximal."""
    for trial in range(graphs):
        n = int(rng.integers(2, 6))
        g = _nonempty_random_graph(rng, n)
        complete = make_complete_graph(n)
        for m in range(1, m_max + 1):
            g_power = smult_oracle.power_element(g, m)
            c_power = smult_oracle.power_element(complete, m)
            if not smult_oracle.elements_equal(
                smult_oracle.restrict(c_power, g), g_power
            ):
                return False, f"graph {trial}: restricted power mismatch at m={m}"
            for _ in range(5):
                x = random_element(rng, g, max_factors=2)
                below_g = smult_oracle.leq(x, g_power)
                below_c = smult_oracle.leq(smult_oracle.embed(x), c_power)
                if below_g != below_c:
                    return False, (
                        f"graph {trial}, m={m}: maximality equivalence failed"
                    )
    return True, f"{graphs} graphs, m=1..{m_max}, powers maximal"


def suite_odds_identity(rng: np.random.Generator, trials: int = 200):
    """p/(1-p) x == p x + p (p/(1-p)) x for interior p and real x."""
    for trial in range(trials):
        p = float(rng.uniform(1e-6, 1 - 1e-6))
        x = float(rng.uniform(-1e3, 1e3))
        if x == 0.0:
            continue
        lhs = p / (1 - p) * x
        rhs = p * x + p * (p / (1 - p) * x)
        if abs(lhs - rhs) > 1e-12 * max(abs(lhs), abs(rhs), 1e-30):
            return False, f"trial {trial}: p={p}, x={x}"
    return True, f"{trials} samples within 1e-12 relative"


SUITES = {
    "binomial-identity": suite_binomial_identity,
    "path-count-equality": suite_path_count_equality,
    "complete-graph-convergence": suite_complete_graph_convergence,
    "partial-order": suite_partial_order,
    "restriction-homomorphism": suite_restriction_homomorphism,
    "galois-adjunction": suite_galois_adjunction,
    "power-maximality": suite_power_maximality,
    "odds-identity": suite_odds_identity,
}


def run_suites(
    only: str | None = None, circ_fn=None, seed: int = 0
) -> list[SuiteResult]:
    """Run all (or one) verification suites with a fixed sampling seed."""
    if only is not None and only not in SUITES:
        raise KeyError(
            f"unknown suite {only!r}; choose from {', '.join(SUITES)}"
        )
    results = []
    for name, fn in SUITES.items():
        if only is not None and name != only:
            continue
        rng = np.random.Generator(np.random.PCG64(seed))
        t0 = time.perf_counter()
        if name == "binomial-identity":
            passed, detail = fn(rng, circ_fn=circ_fn)
        else:
            passed, detail = fn(rng)
        results.append(
            SuiteResult(name, passed, detail, time.perf_counter() - t0)
        )
    return results


def broken_circ(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Deliberately wrong operation (sign flip) for mutation smoke tests."""
    sa, sb = a.to_scipy(), b.to_scipy()
    return SparseMatrix.from_scipy(sa + sb - sa @ sb)
