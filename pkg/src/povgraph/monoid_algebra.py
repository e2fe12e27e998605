"""The ``A + B + AB`` matrix operation and its iterated powers.

The operation is a monoid product on square matrices: the zero matrix is
its identity and it is associative.  Its m-fold power of a 0/1 adjacency
matrix counts, at entry (i, j), the walks from i to j of length at most m
with multiplicity C(m, k) for length k -- equivalently ``(I+A)^m - I``.

Powers of 0/1 integer matrices are evaluated in 64-bit integer arithmetic
so the counts are exact; weighted matrices run in float64.  Products are
plain row-major CSR products (deterministic), with no pruning of small
entries unless the caller asks for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from povgraph.graph_core import SparseMatrix

# Values beyond this cannot be trusted in int64 accumulation.
_INT_OVERFLOW_LIMIT = np.int64(2) ** 62


class PowerOverflowError(OverflowError):
    """Entry growth exceeded what the arithmetic mode can represent."""

    def __init__(self, iteration: int, message: str):
        super().__init__(message)
        self.iteration = iteration


def _check_entries(m: sp.csr_matrix, iteration: int) -> None:
    data = m.data
    if len(data) == 0:
        return
    if np.issubdtype(data.dtype, np.integer):
        if data.min() < 0 or data.max() > _INT_OVERFLOW_LIMIT:
            raise PowerOverflowError(
                iteration, f"integer overflow at iteration {iteration}"
            )
    elif not np.all(np.isfinite(data)):
        raise PowerOverflowError(
            iteration, f"non-finite entry at iteration {iteration}"
        )


def circ(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Exact sparse evaluation of ``a + b + a @ b``."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    sa, sb = a.to_scipy(), b.to_scipy()
    out = sa + sb + sa @ sb
    return SparseMatrix.from_scipy(out)


def circ_power(a: SparseMatrix, m: int, prune_eps: float = 0.0) -> SparseMatrix:
    """m-fold power of ``a`` under the ``A + B + AB`` operation.

    Runs the recurrence ``R <- R + R @ a`` starting from ``I + a`` and
    subtracts the identity at the end, which equals
    ``sum_{k=1..m} C(m,k) a^k``.  Integer input stays integer (exact
    counting); overflow and non-finite growth raise
    :class:`PowerOverflowError` with the failing iteration.

    ``prune_eps`` > 0 drops entries with magnitude below the threshold
    after each product; leave at 0 for exact results.
    """
    if m < 1:
        raise ValueError(f"power must be >= 1, got m={m}")
    base = a.to_scipy()
    eye = sp.identity(a.n, dtype=base.dtype, format="csr")
    acc = (eye + base).tocsr()
    for it in range(1, m):
        acc = acc + acc @ base
        if prune_eps > 0.0:
            acc.data[np.abs(acc.data) < prune_eps] = 0
            acc.eliminate_zeros()
        _check_entries(acc, it)
    out = acc - eye
    _check_entries(out, m - 1)
    return SparseMatrix.from_scipy(out)


@dataclass(frozen=True)
class CircPower:
    """A base matrix together with one of its computed iterated powers."""

    base: SparseMatrix
    m: int
    result: SparseMatrix

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"power must be >= 1, got m={self.m}")
        if self.m == 1 and self.result != self.base:
            raise ValueError("level-1 power must equal the base matrix")


def circ_power_record(a: SparseMatrix, m: int, prune_eps: float = 0.0) -> CircPower:
    """Compute :func:`circ_power` and keep the inputs alongside the result."""
    return CircPower(base=a, m=m, result=circ_power(a, m, prune_eps=prune_eps))


def mi(adj: SparseMatrix, m: int) -> SparseMatrix:
    """Level-m aggregated walk counts of a 0/1 symmetric adjacency matrix.

    Entry (i, j) counts the paths from i to j in the m-fold composition of
    the graph's directed-edge element (see :mod:`povgraph.smult_oracle`
    for the symbolic ground truth).
    """
    if not np.issubdtype(adj.data.dtype, np.integer):
        raise ValueError("adjacency must be an integer 0/1 matrix")
    if len(adj.data) and not np.all(adj.data == 1):
        raise ValueError("adjacency entries must be 0/1")
    s = adj.to_scipy()
    if (s != s.T).nnz != 0:
        raise ValueError("adjacency must be symmetric")
    if s.diagonal().any():
        raise ValueError("adjacency must have a zero diagonal")
    return circ_power(adj, m)
