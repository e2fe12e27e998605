"""Graph and sparse-matrix data model, on-disk format, synthetic generators.

Dataset directory format (all other tooling in this package reads and
writes exactly this):

* ``meta.json`` -- ``{"num_nodes": int, "num_edges": int,
  "num_features": int, "has_labels": bool, "name": str}``
* ``edges.csv`` -- header ``src,dst``, one undirected edge per line with
  ``src < dst``
* ``features.csv`` -- header ``f0,...,f{d-1}``, one row per node in node
  order, decimal text with 17 significant digits
* ``labels.csv`` -- header ``label``, values 0/1 (present iff
  ``has_labels``)

Duplicate edges, self-loops, out-of-range endpoints and non-finite feature
values are rejected at load time with the offending file and line; nothing
is silently repaired here (normalization belongs to the export utilities).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GraphLoadError(ValueError):
    """Raised when a dataset directory violates the on-disk contract."""


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable square sparse matrix in compressed row form.

    Rows hold strictly increasing column indices and no explicit zeros.
    ``data`` is either float64 or int64; integer matrices are used where
    exact path counting matters, float elsewhere.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self) -> None:
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if self.data.dtype not in (np.dtype(np.float64), np.dtype(np.int64)):
            raise ValueError(f"unsupported dtype {self.data.dtype}")
        data = np.ascontiguousarray(self.data)
        if indptr.shape != (self.n + 1,):
            raise ValueError("indptr length must be n + 1")
        if indptr[0] != 0 or indptr[-1] != len(indices) or len(indices) != len(data):
            raise ValueError("inconsistent CSR arrays")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("indptr must be nondecreasing")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n):
            raise ValueError("column index out of range")
        for i in range(self.n):
            cols = indices[indptr[i] : indptr[i + 1]]
            if len(cols) > 1 and np.any(np.diff(cols) <= 0):
                raise ValueError(f"row {i}: columns not strictly increasing")
        if data.dtype == np.float64 and not np.all(np.isfinite(data)):
            raise ValueError("non-finite value in matrix")
        if len(data) and np.any(data == 0):
            raise ValueError("explicit zero stored in matrix")
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)

    @property
    def nnz(self) -> int:
        return int(len(self.data))

    @classmethod
    def from_scipy(cls, m: sp.spmatrix | sp.sparray) -> "SparseMatrix":
        """Canonicalize any scipy sparse matrix: sum duplicates, drop zeros."""
        c = sp.csr_matrix(m)
        if c.shape[0] != c.shape[1]:
            raise ValueError("matrix must be square")
        c.sum_duplicates()
        c.eliminate_zeros()
        c.sort_indices()
        dtype = np.int64 if np.issubdtype(c.dtype, np.integer) else np.float64
        return cls(
            n=c.shape[0],
            indptr=c.indptr.astype(np.int64),
            indices=c.indices.astype(np.int64),
            data=c.data.astype(dtype),
        )

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseMatrix":
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("dense input must be a square 2-D array")
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def identity(cls, n: int, dtype=np.float64) -> "SparseMatrix":
        return cls.from_scipy(sp.identity(n, dtype=dtype, format="csr"))

    @classmethod
    def zeros(cls, n: int, dtype=np.float64) -> "SparseMatrix":
        return cls(
            n=n,
            indptr=np.zeros(n + 1, dtype=np.int64),
            indices=np.zeros(0, dtype=np.int64),
            data=np.zeros(0, dtype=dtype),
        )

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.data.copy(), self.indices.copy(), self.indptr.copy()),
            shape=(self.n, self.n),
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row(self, i: int) -> np.ndarray:
        """Row ``i`` as a dense 1-D array."""
        if not 0 <= i < self.n:
            raise IndexError(f"row {i} out of range for n={self.n}")
        out = np.zeros(self.n, dtype=self.data.dtype)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        out[self.indices[lo:hi]] = self.data[lo:hi]
        return out

    def get(self, i: int, j: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = np.searchsorted(self.indices[lo:hi], j)
        if k < hi - lo and self.indices[lo + k] == j:
            return self.data[lo + k]
        return self.data.dtype.type(0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and self.data.dtype == other.data.dtype
            and np.array_equal(self.data, other.data)
        )

    def __hash__(self):  # frozen dataclass would autogenerate a broken one
        return hash((self.n, self.nnz))


@dataclass(frozen=True)
class AttributedGraph:
    """Simple undirected graph with per-node attribute vectors.

    ``edges`` is an (E, 2) int64 array with each row ``(u, v)``, ``u < v``,
    rows sorted lexicographically.  ``labels`` is an optional 0/1 int8
    vector marking outliers.
    """

    num_nodes: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            lo = edges.min(axis=1)
            hi = edges.max(axis=1)
            if np.any(lo == hi):
                bad = int(np.flatnonzero(lo == hi)[0])
                raise ValueError(f"self-loop at node {lo[bad]}")
            edges = np.column_stack([lo, hi])
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            if np.any((np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)):
                raise ValueError("duplicate undirected edge")
            if edges.min() < 0 or edges.max() >= self.num_nodes:
                raise ValueError("edge endpoint out of range")
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != self.num_nodes:
            raise ValueError(
                f"features must have {self.num_nodes} rows, got shape {features.shape}"
            )
        if not np.all(np.isfinite(features)):
            raise ValueError("non-finite feature value")
        labels = self.labels
        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype=np.int8)
            if labels.shape != (self.num_nodes,):
                raise ValueError("labels must be a per-node vector")
            if not np.all((labels == 0) | (labels == 1)):
                raise ValueError("labels must be 0/1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def num_edges(self) -> int:
        return int(len(self.edges))

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        if self.num_nodes != other.num_nodes:
            return False
        if not np.array_equal(self.edges, other.edges):
            return False
        if not np.array_equal(self.features, other.features):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.num_nodes, self.num_edges, self.num_features))


def adjacency(g: AttributedGraph) -> SparseMatrix:
    """0/1 symmetric adjacency matrix with zero diagonal, nnz = 2|E|."""
    n = g.num_nodes
    if g.num_edges == 0:
        return SparseMatrix.zeros(n, dtype=np.int64)
    rows = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    cols = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
    vals = np.ones(2 * g.num_edges, dtype=np.int64)
    return SparseMatrix.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))


def _read_csv_rows(path: Path, expected_header: str):
    """Yield (line_number, line) for data lines; validate the header."""
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise GraphLoadError(f"{path.name}: missing file") from None
    lines = text.splitlines()
    if not lines:
        raise GraphLoadError(f"{path.name}: empty file")
    if lines[0].strip() != expected_header:
        raise GraphLoadError(
            f"{path.name}, line 1: expected header {expected_header!r}, got {lines[0].strip()!r}"
        )
    for lineno, line in enumerate(lines[1:], start=2):
        if line.strip():
            yield lineno, line.strip()


def load_attributed_graph(dir_path) -> AttributedGraph:
    """Load a dataset directory, enforcing every format invariant.

    Raises :class:`GraphLoadError` naming the offending file (and line,
    where a line makes sense).
    """
    root = Path(dir_path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise GraphLoadError("meta.json: missing file")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise GraphLoadError(f"meta.json: invalid JSON ({exc})") from None
    for key in ("num_nodes", "num_edges", "num_features", "has_labels"):
        if key not in meta:
            raise GraphLoadError(f"meta.json: missing key {key!r}")
    n = int(meta["num_nodes"])
    d = int(meta["num_features"])

    seen: set[tuple[int, int]] = set()
    edge_list = []
    for lineno, line in _read_csv_rows(root / "edges.csv", "src,dst"):
        parts = line.split(",")
        if len(parts) != 2:
            raise GraphLoadError(f"edges.csv, line {lineno}: expected 'src,dst'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphLoadError(f"edges.csv, line {lineno}: non-integer endpoint") from None
        if u == v:
            raise GraphLoadError(f"edges.csv, line {lineno}: self-loop at node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphLoadError(f"edges.csv, line {lineno}: endpoint out of range")
        if u >= v:
            raise GraphLoadError(f"edges.csv, line {lineno}: requires src < dst")
        if (u, v) in seen:
            raise GraphLoadError(f"edges.csv, line {lineno}: duplicate edge ({u},{v})")
        seen.add((u, v))
        edge_list.append((u, v))
    if len(edge_list) != int(meta["num_edges"]):
        raise GraphLoadError(
            f"edges.csv: {len(edge_list)} edges but meta.json declares {meta['num_edges']}"
        )

    header = ",".join(f"f{k}" for k in range(d))
    feats = np.empty((n, d), dtype=np.float64)
    count = 0
    for lineno, line in _read_csv_rows(root / "features.csv", header):
        if count >= n:
            raise GraphLoadError(f"features.csv, line {lineno}: more rows than nodes")
        parts = line.split(",")
        if len(parts) != d:
            raise GraphLoadError(
                f"features.csv, line {lineno}: expected {d} values, got {len(parts)}"
            )
        try:
            row = np.array([float(p) for p in parts], dtype=np.float64)
        except ValueError:
            raise GraphLoadError(f"features.csv, line {lineno}: non-numeric value") from None
        if not np.all(np.isfinite(row)):
            raise GraphLoadError(f"features.csv, line {lineno}: non-finite feature")
        feats[count] = row
        count += 1
    if count != n:
        raise GraphLoadError(f"features.csv: {count} rows but meta.json declares {n} nodes")

    labels = None
    if meta["has_labels"]:
        values = []
        for lineno, line in _read_csv_rows(root / "labels.csv", "label"):
            if line not in ("0", "1"):
                raise GraphLoadError(f"labels.csv, line {lineno}: label must be 0 or 1")
            values.append(int(line))
        if len(values) != n:
            raise GraphLoadError(
                f"labels.csv: {len(values)} rows but meta.json declares {n} nodes"
            )
        labels = np.array(values, dtype=np.int8)

    edges = np.array(edge_list, dtype=np.int64).reshape(-1, 2)
    return AttributedGraph(num_nodes=n, edges=edges, features=feats, labels=labels)


def save_attributed_graph(g: AttributedGraph, dir_path, name: str = "unnamed") -> None:
    """Write ``g`` in the dataset directory format.

    Features are written as decimal text with 17 significant digits so a
    reload reproduces the float64 payload bit for bit.
    """
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "num_nodes": g.num_nodes,
        "num_edges": g.num_edges,
        "num_features": g.num_features,
        "has_labels": g.labels is not None,
        "name": name,
    }
    (root / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    with open(root / "edges.csv", "w") as fh:
        fh.write("src,dst\n")
        for u, v in g.edges:
            fh.write(f"{u},{v}\n")
    with open(root / "features.csv", "w") as fh:
        fh.write(",".join(f"f{k}" for k in range(g.num_features)) + "\n")
        for row in g.features:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")
    if g.labels is not None:
        with open(root / "labels.csv", "w") as fh:
            fh.write("label\n")
            for y in g.labels:
                fh.write(f"{int(y)}\n")


def make_complete_graph(n: int, features: np.ndarray | None = None) -> AttributedGraph:
    """Complete graph on ``n`` nodes; one-hot rows when no features given."""
    if n < 2:
        raise ValueError(f"complete graph needs n >= 2, got {n}")
    edges = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.int64)
    if features is None:
        features = np.eye(n, dtype=np.float64)
    return AttributedGraph(num_nodes=n, edges=edges, features=np.asarray(features))


def make_clustered_graph(
    cluster_sizes: list[int],
    bridges: list[tuple[int, int]],
    seed: int,
    features: np.ndarray | None = None,
) -> AttributedGraph:
    """Clusters wired internally (spanning tree + extra edges) plus bridges.

    Node ``k`` of cluster ``c`` gets the global index ``sum(sizes[:c]) + k``.
    Each cluster is a random spanning tree over its nodes plus roughly
    ``size // 2`` extra internal edges, all drawn from ``seed``, so the edge
    set is a pure function of the arguments.
    """
    if not cluster_sizes or any(s < 1 for s in cluster_sizes):
        raise ValueError("cluster_sizes must be nonempty positive counts")
    total = int(sum(cluster_sizes))
    rng = np.random.Generator(np.random.PCG64(seed))
    edge_set: set[tuple[int, int]] = set()
    offset = 0
    for size in cluster_sizes:
        nodes = np.arange(offset, offset + size)
        perm = rng.permutation(nodes)
        for k in range(1, size):
            u = int(perm[k])
            v = int(perm[rng.integers(0, k)])
            edge_set.add((min(u, v), max(u, v)))
        extra = size // 2
        attempts = 0
        while extra > 0 and attempts < 20 * size:
            u, v = rng.integers(0, size, size=2)
            attempts += 1
            if u == v:
                continue
            e = (offset + min(u, v), offset + max(u, v))
            if e not in edge_set:
                edge_set.add(e)
                extra -= 1
        offset += size
    for u, v in bridges:
        if not (0 <= u < total and 0 <= v < total) or u == v:
            raise ValueError(f"invalid bridge ({u},{v})")
        edge_set.add((min(u, v), max(u, v)))
    edges = np.array(sorted(edge_set), dtype=np.int64).reshape(-1, 2)
    if features is None:
        features = np.ones((total, 1), dtype=np.float64)
    return AttributedGraph(num_nodes=total, edges=edges, features=np.asarray(features))
