#!/usr/bin/env python3
"""One-shot exporter: benchmark graph datasets -> neutral directory format.

Converts the public anomaly-detection benchmarks (disney, books, weibo,
reddit, enron, dgraph) from their PyGOD distribution into the dataset
directory layout consumed by the povgraph tooling:

    meta.json      {"num_nodes", "num_edges", "num_features", "has_labels", "name"}
    edges.csv      header "src,dst", one undirected edge per line, src < dst
    features.csv   header "f0,...,f{d-1}", one row per node, 17 significant digits
    labels.csv     header "label", 0/1 per node

Benchmark distributions vary in directedness conventions, so edges are
normalized here (symmetrized, deduplicated, self-loops dropped) and the
counts before/after are recorded in manifest.json next to the export,
together with a sha256 per emitted file.  Node/edge/feature/outlier counts
are compared against the published statistics for the named dataset; a
mismatch is recorded as a warning in the manifest, never silently passed.

Usage:
    export.py --name disney --out data/disney/
    export.py --name books --out data/books/ --source-file books.pt

Exit codes: 0 written, 1 source unavailable or write failure, 2 bad usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

# Published per-dataset statistics (nodes, edges, features, outliers);
# None marks values only published rounded, which are reported but not
# compared.  The large credit-network graph is attempted but optional.
EXPECTED_STATS = {
    "disney": (124, 335, 28, 6),
    "books": (1418, 3695, 21, 28),
    "weibo": (8405, 407963, 400, 868),
    "reddit": (10984, 168016, 64, 366),
    "enron": (13533, 176987, 18, 5),
    "dgraph": (None, None, 17, 15509),
}


class SourceUnavailable(RuntimeError):
    pass


def normalize_edges(edge_index: np.ndarray):
    """Symmetrize, deduplicate, and drop self-loops from a (2, E) array.

    Returns (edges sorted as (src < dst) pairs, dropped_self_loops,
    merged_duplicates).  The merged count includes reverse orientations of
    already-seen edges.
    """
    edge_index = np.asarray(edge_index, dtype=np.int64)
    if edge_index.ndim != 2 or edge_index.shape[0] != 2:
        raise ValueError(f"edge_index must be (2, E), got {edge_index.shape}")
    src, dst = edge_index[0], edge_index[1]
    self_loops = int((src == dst).sum())
    keep = src != dst
    lo = np.minimum(src[keep], dst[keep])
    hi = np.maximum(src[keep], dst[keep])
    pairs = np.column_stack([lo, hi])
    unique = np.unique(pairs, axis=0) if len(pairs) else pairs.reshape(0, 2)
    merged = int(len(pairs) - len(unique))
    return unique, self_loops, merged


def convert_arrays(
    edge_index: np.ndarray, features: np.ndarray, labels: np.ndarray | None
):
    """Normalize raw benchmark arrays into the exportable payload."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("features must be 2-D")
    n = features.shape[0]
    edges, self_loops, merged = normalize_edges(edge_index)
    if len(edges) and (edges.min() < 0 or edges.max() >= n):
        raise ValueError("edge endpoint out of range for the feature matrix")
    if labels is not None:
        labels = np.asarray(labels).astype(np.int64).ravel()
        if labels.shape != (n,):
            raise ValueError(f"labels must have {n} entries, got {labels.shape}")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be binary")
    return {
        "num_nodes": n,
        "edges": edges,
        "features": features,
        "labels": labels,
        "dropped_self_loops": self_loops,
        "merged_duplicate_edges": merged,
    }


def load_from_pygod(name: str):
    """Fetch a benchmark through the PyGOD loader (downloads on demand)."""
    try:
        import pygod
        import torch  # noqa: F401
        from pygod.utils import load_data
    except ImportError as exc:
        raise SourceUnavailable(
            f"PyGOD (and torch) must be installed to fetch '{name}': {exc}"
        ) from None
    try:
        data = load_data(name)
    except Exception as exc:  # network, cache, or packaging failures
        raise SourceUnavailable(f"could not fetch dataset '{name}': {exc}") from None
    version = getattr(pygod, "__version__", "unknown")
    return extract_from_data_object(data, name), f"pygod-{version}"


def load_from_file(path: Path, name: str):
    """Load a locally stored .pt payload of the same benchmark family."""
    try:
        import torch
    except ImportError as exc:
        raise SourceUnavailable(f"torch is required to read {path}: {exc}") from None
    try:
        data = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise SourceUnavailable(f"could not read {path}: {exc}") from None
    return extract_from_data_object(data, name)


def extract_from_data_object(data, name: str):
    """Pull edge_index/x/y arrays out of a graph-data object."""
    for field in ("edge_index", "x"):
        if not hasattr(data, field):
            raise SourceUnavailable(f"'{name}' payload has no '{field}' field")
    edge_index = np.asarray(data.edge_index.cpu().numpy())
    features = np.asarray(data.x.cpu().numpy(), dtype=np.float64)
    labels = None
    if getattr(data, "y", None) is not None:
        y = data.y
        labels = np.asarray(y.cpu().numpy()).astype(np.int64).ravel()
        labels = (labels != 0).astype(np.int64)
    return edge_index, features, labels


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def write_export(
    payload: dict,
    out_dir: Path,
    name: str,
    source: str,
    source_version: str = "unknown",
) -> dict:
    """Emit the dataset directory plus its manifest; returns the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n = payload["num_nodes"]
    edges = payload["edges"]
    features = payload["features"]
    labels = payload["labels"]

    meta = {
        "num_nodes": int(n),
        "num_edges": int(len(edges)),
        "num_features": int(features.shape[1]),
        "has_labels": labels is not None,
        "name": name,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    with open(out_dir / "edges.csv", "w") as fh:
        fh.write("src,dst\n")
        for u, v in edges:
            fh.write(f"{u},{v}\n")
    with open(out_dir / "features.csv", "w") as fh:
        fh.write(",".join(f"f{k}" for k in range(features.shape[1])) + "\n")
        for row in features:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")
    files = ["meta.json", "edges.csv", "features.csv"]
    if labels is not None:
        with open(out_dir / "labels.csv", "w") as fh:
            fh.write("label\n")
            for y in labels:
                fh.write(f"{int(y)}\n")
        files.append("labels.csv")

    num_outliers = int(labels.sum()) if labels is not None else None
    warnings = []
    expected = EXPECTED_STATS.get(name)
    if expected is not None:
        got = (meta["num_nodes"], meta["num_edges"], meta["num_features"], num_outliers)
        labels_txt = ("nodes", "edges", "features", "outliers")
        for label, want, have in zip(labels_txt, expected, got):
            if want is not None and have != want:
                warnings.append(
                    f"{label}: exported {have}, published statistics say {want}"
                )

    manifest = {
        "name": name,
        "source": source,
        "source_version": source_version,
        "num_nodes": meta["num_nodes"],
        "num_edges": meta["num_edges"],
        "num_features": meta["num_features"],
        "num_outliers": num_outliers,
        "dropped_self_loops": payload["dropped_self_loops"],
        "merged_duplicate_edges": payload["merged_duplicate_edges"],
        "count_warnings": warnings,
        "checksums": {f: sha256_of(out_dir / f) for f in files},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return manifest


def export_dataset(
    name: str, out_dir: Path, source_file: Path | None = None
) -> dict:
    if source_file is not None:
        arrays = load_from_file(source_file, name)
        source, version = "file", str(source_file)
    else:
        arrays, version = load_from_pygod(name)
        source = "pygod"
    payload = convert_arrays(*arrays)
    return write_export(payload, out_dir, name, source, source_version=version)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--name", required=True, choices=sorted(EXPECTED_STATS))
    parser.add_argument("--out", required=True, help="output dataset directory")
    parser.add_argument(
        "--source-file",
        help="read a local .pt payload instead of fetching through PyGOD",
    )
    args = parser.parse_args(argv)
    try:
        manifest = export_dataset(
            args.name,
            Path(args.out),
            Path(args.source_file) if args.source_file else None,
        )
    except SourceUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: export failed: {exc}", file=sys.stderr)
        return 1
    print(
        f"exported {manifest['name']}: {manifest['num_nodes']} nodes,"
        f" {manifest['num_edges']} edges, {manifest['num_features']} features,"
        f" {manifest['num_outliers']} outliers"
        f" (dropped {manifest['dropped_self_loops']} self-loops,"
        f" merged {manifest['merged_duplicate_edges']} duplicates)"
    )
    for warning in manifest["count_warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
