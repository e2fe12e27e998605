"""The ``povgraph`` command line tool.

Subcommands: ``compute`` (write the walk-count and pov matrices to a
binary container), ``detect`` (score a dataset and emit a JSON report),
``rumor`` (print a source-localization trajectory as JSON), ``eval``
(detector runs across seeds, CSV + JSON), ``sweep`` (gamma/lambda or
level sweeps), ``verify`` (cross-checking suites).

Exit codes: 0 success, 1 run or suite failure, 2 usage error.  Every run
is reproducible: identical argv and dataset bytes give identical output
bytes, except for wall-time columns, which are measurements.

Binary container (all integers little-endian)::

    magic   4 bytes  b"POVG"
    version u32      1
    n       u64      matrix dimension
    nnz     u64      stored entries of the walk-count matrix
    indptr  (n+1) x u64   \
    indices nnz x u64      } walk-count matrix (CSR)
    values  nnz x f64     /
    nnz_pov u64
    indptr  (n+1) x u64   \
    indices nnz_pov x u64  } row-normalized pov matrix (CSR)
    values  nnz_pov x f64 /
    row_norms n x f64     pre-normalization row sums (0 flags isolated)
    pov_graph n x f64     graph-level distribution

A JSON config file given with ``--config`` supplies any of the model
fields (``m``, ``theta``, ``hidden_channels``, ``dropout``,
``learning_rate``, ``epochs``, ``scheduler`` {``step``, ``factor``},
``gamma``, ``lambda``, ``seed``); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from povgraph.eval_harness import (
    CSV_HEADER,
    evaluate_once,
    mean_auc,
    resolved_config,
    score_metrics,
    sweep_gamma_lambda,
    sweep_m,
    write_records_csv,
    write_records_json,
)
from povgraph.graph_core import (
    AttributedGraph,
    GraphLoadError,
    SparseMatrix,
    load_attributed_graph,
)
from povgraph.id_model import IdHyperparams, Scheduler, detect
from povgraph.pov_engine import (
    NodeDistribution,
    PovConfig,
    compute_pov,
    rumor_localize,
)
from povgraph.verify import SUITES, broken_circ, run_suites

CONTAINER_MAGIC = b"POVG"
CONTAINER_VERSION = 1

MODEL_FIELDS = (
    "m",
    "theta",
    "hidden_channels",
    "dropout",
    "learning_rate",
    "epochs",
    "scheduler",
    "gamma",
    "lambda",
    "seed",
)

MODEL_DEFAULTS = {
    "m": 2,
    "theta": 1.0,
    "hidden_channels": 32,
    "dropout": 0.0,
    "learning_rate": 1e-3,
    "epochs": 100,
    "scheduler": None,
    "gamma": 0.0,
    "lambda": 1.0,
    "seed": 0,
}


class UsageError(Exception):
    """Bad flags, bad config, or missing inputs; exits with code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one dataset-consuming subcommand."""

    dataset_dir: Path
    pov: PovConfig
    model: IdHyperparams
    p_source: str
    output: Path | None


def _parse_scheduler(raw) -> Scheduler | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        parts = raw.split(",")
        if len(parts) != 2:
            raise UsageError("--scheduler expects STEP,FACTOR")
        raw = {"step": parts[0], "factor": parts[1]}
    if not isinstance(raw, dict) or set(raw) != {"step", "factor"}:
        raise UsageError("scheduler must carry exactly 'step' and 'factor'")
    try:
        return Scheduler(step=int(raw["step"]), factor=float(raw["factor"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid scheduler: {exc}") from None


def merge_model_settings(args: argparse.Namespace) -> dict:
    """Defaults, overlaid by the config file, overlaid by explicit flags."""
    settings = dict(MODEL_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
        unknown = set(loaded) - set(MODEL_FIELDS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        settings.update(loaded)
    for field in MODEL_FIELDS:
        dest = "lambda_" if field == "lambda" else field
        value = getattr(args, dest, None)
        if value is not None:
            settings[field] = value
    settings["scheduler"] = _parse_scheduler(settings["scheduler"])
    return settings


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    dataset = getattr(args, "dataset", None)
    if not dataset:
        raise UsageError("--dataset is required")
    dataset_dir = Path(dataset)
    if not dataset_dir.is_dir():
        raise UsageError(f"dataset directory not found: {dataset_dir}")
    s = merge_model_settings(args)
    try:
        pov = PovConfig(m=int(s["m"]), theta=float(s["theta"]))
        model = IdHyperparams(
            hidden_channels=int(s["hidden_channels"]),
            dropout=float(s["dropout"]),
            learning_rate=float(s["learning_rate"]),
            epochs=int(s["epochs"]),
            scheduler=s["scheduler"],
            gamma=float(s["gamma"]),
            lambda_=float(s["lambda"]),
            seed=int(s["seed"]),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid value: {exc}") from None
    p_source = getattr(args, "p", None) or "uniform"
    if p_source != "uniform" and not Path(p_source).is_file():
        raise UsageError(f"distribution file not found: {p_source}")
    output = getattr(args, "out", None)
    return RunConfig(
        dataset_dir=dataset_dir,
        pov=pov,
        model=model,
        p_source=p_source,
        output=Path(output) if output else None,
    )


def load_distribution(p_source: str, n: int) -> NodeDistribution:
    """``uniform`` or a text file with one probability per line."""
    if p_source == "uniform":
        return NodeDistribution.uniform(n)
    lines = [ln.strip() for ln in Path(p_source).read_text().splitlines() if ln.strip()]
    if len(lines) != n:
        raise UsageError(
            f"distribution file has {len(lines)} values, dataset has {n} nodes"
        )
    try:
        probs = np.array([float(x) for x in lines])
    except ValueError:
        raise UsageError("distribution file contains a non-numeric value") from None
    try:
        return NodeDistribution(probs)
    except ValueError as exc:
        raise UsageError(f"invalid distribution: {exc}") from None


def _write_csr(fh, m: SparseMatrix) -> None:
    fh.write(m.indptr.astype("<u8").tobytes())
    fh.write(m.indices.astype("<u8").tobytes())
    fh.write(m.data.astype("<f8").tobytes())


def write_pov_container(path: Path, result) -> None:
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        fh.write(struct.pack("<I", CONTAINER_VERSION))
        fh.write(struct.pack("<Q", result.dmi.n))
        fh.write(struct.pack("<Q", result.dmi.nnz))
        _write_csr(fh, result.dmi)
        fh.write(struct.pack("<Q", result.pov.nnz))
        _write_csr(fh, result.pov)
        fh.write(result.row_norms.astype("<f8").tobytes())
        fh.write(result.pov_graph.probs.astype("<f8").tobytes())


def read_pov_container(path) -> dict:
    """Parse the binary container back into arrays (for tools and tests)."""
    raw = Path(path).read_bytes()
    if raw[:4] != CONTAINER_MAGIC:
        raise ValueError("bad magic")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CONTAINER_VERSION:
        raise ValueError(f"unsupported container version {version}")
    n, nnz = struct.unpack_from("<QQ", raw, 8)
    offset = 24

    def take(count, dtype):
        nonlocal offset
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
        offset += arr.nbytes
        return arr.copy()

    def take_csr(nnz_local):
        indptr = take(n + 1, "<u8").astype(np.int64)
        indices = take(nnz_local, "<u8").astype(np.int64)
        values = take(nnz_local, "<f8")
        return SparseMatrix(n=int(n), indptr=indptr, indices=indices, data=values)

    dmi_matrix = take_csr(int(nnz))
    (nnz_pov,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    pov = take_csr(int(nnz_pov))
    row_norms = take(n, "<f8")
    pov_graph = take(n, "<f8")
    return {
        "version": version,
        "n": int(n),
        "dmi": dmi_matrix,
        "pov": pov,
        "row_norms": row_norms,
        "pov_graph": pov_graph,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _load_dataset(cfg: RunConfig) -> AttributedGraph:
    try:
        return load_attributed_graph(cfg.dataset_dir)
    except GraphLoadError as exc:
        raise UsageError(f"failed to load dataset: {exc}") from None


def _dataset_name(cfg: RunConfig) -> str:
    try:
        meta = json.loads((cfg.dataset_dir / "meta.json").read_text())
        return str(meta.get("name", cfg.dataset_dir.name))
    except (OSError, json.JSONDecodeError):
        return cfg.dataset_dir.name


def cmd_compute(args: argparse.Namespace) -> int:
    cfg = resolve_run_config(args)
    if cfg.output is None:
        raise UsageError("--out is required for compute")
    g = _load_dataset(cfg)
    p = load_distribution(cfg.p_source, g.num_nodes)
    result = compute_pov(g, p, cfg.pov)
    write_pov_container(cfg.output, result)
    if not args.quiet:
        print(
            f"wrote {cfg.output}: n={result.dmi.n}"
            f" walk-count nnz={result.dmi.nnz} pov nnz={result.pov.nnz}"
        )
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = resolve_run_config(args)
    g = _load_dataset(cfg)
    report = detect(g, cfg.pov, cfg.model)
    auc, ap = score_metrics(g, report)
    payload = {
        "dataset": _dataset_name(cfg),
        "num_nodes": g.num_nodes,
        "scores": [float(s) for s in report.scores],
        "auc": auc,
        "ap": ap,
        "config": resolved_config(cfg.pov, cfg.model),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.output is not None:
        cfg.output.write_text(text)
        if not args.quiet:
            line = f"wrote {cfg.output}"
            if auc is not None:
                line += f" (auc={auc:.4f}, ap={ap:.4f})"
            print(line)
    else:
        print(text, end="")
    return 0


def cmd_rumor(args: argparse.Namespace) -> int:
    cfg = resolve_run_config(args)
    g = _load_dataset(cfg)
    if args.start is None:
        raise UsageError("--start is required for rumor")
    try:
        trajectory = rumor_localize(
            g, int(args.start), cfg.pov, max_stages=int(args.max_stages)
        )
    except (IndexError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    payload = [
        {
            "stage": k + 1,
            "node": node,
            "distribution": [float(x) for x in dist.probs],
        }
        for k, (node, dist) in enumerate(trajectory)
    ]
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.output is not None:
        cfg.output.write_text(text)
    else:
        print(text, end="")
    return 0


def _parse_seeds(raw: str) -> list[int]:
    try:
        return [int(x) for x in raw.split(",") if x.strip() != ""]
    except ValueError:
        raise UsageError(f"bad seed list: {raw!r}") from None


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = resolve_run_config(args)
    g = _load_dataset(cfg)
    name = _dataset_name(cfg)
    seeds = _parse_seeds(args.seeds)
    if not seeds:
        raise UsageError("--seeds must name at least one seed")
    records = [evaluate_once(name, g, cfg.pov, cfg.model, seed) for seed in seeds]
    _emit_records(records, cfg.output, args.quiet)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_run_config(args)
    g = _load_dataset(cfg)
    name = _dataset_name(cfg)
    seeds = _parse_seeds(args.seeds)
    if args.kind == "gamma":
        if not args.grid:
            raise UsageError("--grid is required for a gamma sweep")
        try:
            grid = [float(x) for x in args.grid.split(",")]
        except ValueError:
            raise UsageError(f"bad grid: {args.grid!r}") from None
        records = sweep_gamma_lambda(name, g, cfg.pov, cfg.model, grid, seeds)
    else:
        if not args.m_values:
            raise UsageError("--m-values is required for an m sweep")
        try:
            m_values = [int(x) for x in args.m_values.split(",")]
        except ValueError:
            raise UsageError(f"bad m values: {args.m_values!r}") from None
        noise = None
        if args.noise_sigma2 is not None:
            noise = (args.noise_mu, args.noise_sigma2)
        records = sweep_m(
            name, g, cfg.pov, cfg.model, m_values, seeds,
            noise=noise, noise_seed=args.noise_seed,
        )
    _emit_records(records, cfg.output, args.quiet)
    return 0


def _emit_records(records, output: Path | None, quiet: bool) -> None:
    if output is not None:
        csv_path = output.with_suffix(".csv")
        json_path = output.with_suffix(".json")
        write_records_csv(records, csv_path)
        write_records_json(records, json_path)
        if not quiet:
            print(f"wrote {csv_path} and {json_path}")
    else:
        print(",".join(CSV_HEADER))
        for rec in records:
            print(",".join(str(x) for x in rec.to_row()))
    aucs = [r.auc for r in records if r.auc is not None]
    if aucs and not quiet:
        print(f"mean auc: {mean_auc(records):.4f} over {len(aucs)} records")


def cmd_verify(args: argparse.Namespace) -> int:
    circ_fn = None
    if args.inject_bug == "circ-sign":
        circ_fn = broken_circ
    seed = args.seed if args.seed is not None else 0
    try:
        results = run_suites(only=args.only, circ_fn=circ_fn, seed=seed)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.seconds:7.2f}s  {r.detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} suites failed")
        return 1
    if not args.quiet:
        print(f"all {len(results)} suites passed")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_global_flags(parser: argparse.ArgumentParser, at_root: bool) -> None:
    """Global flags work both before and after the subcommand.

    Subparser copies default to SUPPRESS so an omitted flag does not
    clobber a value parsed at the root.
    """
    kw = {} if at_root else {"default": argparse.SUPPRESS}
    parser.add_argument(
        "--seed", type=int,
        **({"default": None} if at_root else kw),
        help="base seed (model seed / suite sampling; default 0)",
    )
    parser.add_argument(
        "--threads", type=int,
        **({"default": 1} if at_root else kw),
        help="reserved for internal parallelism; results do not depend on it",
    )
    parser.add_argument(
        "--quiet", action="store_true",
        **({} if at_root else kw),
        help="suppress progress chatter",
    )


def _add_model_flags(sub: argparse.ArgumentParser, training: bool) -> None:
    sub.add_argument("--config", help="JSON config file (flags win over it)")
    sub.add_argument("--m", type=int, help="walk depth (level)")
    sub.add_argument("--theta", type=float, help="contraction degree in [0,1]")
    if training:
        sub.add_argument("--hidden-channels", dest="hidden_channels", type=int)
        sub.add_argument("--dropout", type=float)
        sub.add_argument("--learning-rate", dest="learning_rate", type=float)
        sub.add_argument("--epochs", type=int)
        sub.add_argument("--scheduler", help="STEP,FACTOR learning-rate decay")
        sub.add_argument("--gamma", type=float, help="local score coefficient")
        sub.add_argument("--lambda", dest="lambda_", type=float,
                         help="global score coefficient")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="povgraph",
        description="Topology-conditioned node distributions and anomaly scores.",
    )
    _add_global_flags(parser, at_root=True)
    subs = parser.add_subparsers(dest="command", required=True)

    def sub_parser(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subs.add_parser(name, help=help_text)
        _add_global_flags(sub, at_root=False)
        return sub

    p_compute = sub_parser("compute", "write walk-count + pov matrices")
    p_compute.add_argument("--dataset", required=True)
    _add_model_flags(p_compute, training=False)
    p_compute.add_argument("--p", help="'uniform' or a file with one probability per line")
    p_compute.add_argument("--out", required=True, help="output container path")
    p_compute.set_defaults(func=cmd_compute)

    p_detect = sub_parser("detect", "score a dataset for anomalies")
    p_detect.add_argument("--dataset", required=True)
    _add_model_flags(p_detect, training=True)
    p_detect.add_argument("--out", help="report JSON path (stdout if omitted)")
    p_detect.set_defaults(func=cmd_detect)

    p_rumor = sub_parser("rumor", "iterative source localization")
    p_rumor.add_argument("--dataset", required=True)
    _add_model_flags(p_rumor, training=False)
    p_rumor.add_argument("--start", type=int, required=True)
    p_rumor.add_argument("--max-stages", dest="max_stages", type=int, default=10)
    p_rumor.add_argument("--out", help="trajectory JSON path (stdout if omitted)")
    p_rumor.set_defaults(func=cmd_rumor)

    p_eval = sub_parser("eval", "detector runs across seeds")
    p_eval.add_argument("--dataset", required=True)
    _add_model_flags(p_eval, training=True)
    p_eval.add_argument("--seeds", default="0,1,2,3,4")
    p_eval.add_argument("--out", help="output prefix for .csv/.json")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub_parser("sweep", "gamma/lambda or level sweeps")
    p_sweep.add_argument("--dataset", required=True)
    _add_model_flags(p_sweep, training=True)
    p_sweep.add_argument("--kind", choices=("gamma", "m"), required=True)
    p_sweep.add_argument("--grid", help="comma-separated gamma values (lambda = 1-gamma)")
    p_sweep.add_argument("--m-values", dest="m_values", help="comma-separated levels")
    p_sweep.add_argument("--noise-mu", dest="noise_mu", type=float, default=0.0)
    p_sweep.add_argument("--noise-sigma2", dest="noise_sigma2", type=float)
    p_sweep.add_argument("--noise-seed", dest="noise_seed", type=int, default=0)
    p_sweep.add_argument("--seeds", default="0,1,2,3,4")
    p_sweep.add_argument("--out", help="output prefix for .csv/.json")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub_parser("verify", "run the cross-checking suites")
    p_verify.add_argument("--only", help=f"run one suite: {', '.join(SUITES)}")
    p_verify.add_argument(
        "--inject-bug", dest="inject_bug", choices=("circ-sign",),
        help="testing hook: plant a known defect and expect a failure",
    )
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 -- runtime failures exit 1
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
