"""Ranking metrics, noise injection, hyperparameter sweeps, runtime probes.

Metric conventions are pinned here so numbers are comparable across runs
and implementations: ROC-AUC is the Mann-Whitney statistic with ties
counted 1/2; average precision sweeps the score-sorted list with ties
broken by (score descending, index ascending); Gaussian noise comes from
a 64-bit PCG generator fed through Box-Muller, so a seed fully determines
the noisy features.

Sweep outputs are pure functions of (dataset, config, seed list) and are
emitted as CSV with the header
``dataset,m,theta,gamma,lambda,seed,auc,ap,wall_time_s`` plus a JSON
mirror carrying the fully resolved configuration per record.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from povgraph.graph_core import AttributedGraph
from povgraph.id_model import IdHyperparams, ScoreReport, detect
from povgraph.pov_engine import PovConfig, benchmark_pov


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Probability that a random positive outranks a random negative.

    Ties contribute 1/2 (computed via average ranks).  Requires at least
    one positive and one negative label.
    """
    labels = np.asarray(labels).astype(np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError("labels and scores must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC-AUC needs both classes present")
    ranks = rankdata(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(labels: np.ndarray, scores: np.ndarray) -> float:
    """Area under the precision-recall sweep of the ranked scores.

    The list is sorted by score descending with ties resolved by original
    index ascending (stable), and precision is accumulated at each
    positive:  AP = sum_k (recall_k - recall_{k-1}) * precision_k.
    """
    labels = np.asarray(labels).astype(np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError("labels and scores must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order]
    tp = np.cumsum(ranked)
    precision = tp / np.arange(1, len(ranked) + 1)
    return float((precision * ranked).sum() / n_pos)


def add_gaussian_noise(
    features: np.ndarray, mu: float, sigma2: float, seed: int
) -> np.ndarray:
    """Add elementwise N(mu, sigma2) noise, reproducibly.

    Draws come from PCG64(seed) mapped through the Box-Muller transform:
    for each pair of uniforms (u1, u2) with u1 shifted into (0, 1],
    ``sqrt(-2 ln u1) * (cos, sin)(2 pi u2)`` yields two normals; the
    first ``features.size`` of them are scaled by sqrt(sigma2), shifted
    by mu, and added in row-major order.
    """
    if sigma2 < 0:
        raise ValueError("variance must be nonnegative")
    features = np.asarray(features, dtype=np.float64)
    k = features.size
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = (k + 1) // 2
    u1 = 1.0 - rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2 * np.pi * u2), radius * np.sin(2 * np.pi * u2)])[:k]
    noise = mu + np.sqrt(sigma2) * z
    return features + noise.reshape(features.shape)


@dataclass(frozen=True)
class EvalRecord:
    dataset: str
    cfg: PovConfig
    hp: IdHyperparams
    seed: int
    auc: float | None
    ap: float | None
    wall_time_s: float

    def to_row(self) -> list:
        return [
            self.dataset,
            self.cfg.m,
            self.cfg.theta,
            self.hp.gamma,
            self.hp.lambda_,
            self.seed,
            "" if self.auc is None else f"{self.auc:.6f}",
            "" if self.ap is None else f"{self.ap:.6f}",
            f"{self.wall_time_s:.6f}",
        ]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "m": self.cfg.m,
            "theta": self.cfg.theta,
            "gamma": self.hp.gamma,
            "lambda": self.hp.lambda_,
            "seed": self.seed,
            "auc": self.auc,
            "ap": self.ap,
            "wall_time_s": self.wall_time_s,
            "config": resolved_config(self.cfg, self.hp),
        }


CSV_HEADER = ["dataset", "m", "theta", "gamma", "lambda", "seed", "auc", "ap", "wall_time_s"]


def resolved_config(cfg: PovConfig, hp: IdHyperparams) -> dict:
    """The full effective configuration, with on-disk field names."""
    out = {
        "m": cfg.m,
        "theta": cfg.theta,
        "hidden_channels": hp.hidden_channels,
        "dropout": hp.dropout,
        "learning_rate": hp.learning_rate,
        "epochs": hp.epochs,
        "scheduler": None
        if hp.scheduler is None
        else {"step": hp.scheduler.step, "factor": hp.scheduler.factor},
        "gamma": hp.gamma,
        "lambda": hp.lambda_,
        "seed": hp.seed,
    }
    return out


def score_metrics(g: AttributedGraph, report: ScoreReport):
    """(auc, ap) against the graph's labels; Nones when undefined."""
    if g.labels is None:
        return None, None
    labels = g.labels
    if labels.min() == labels.max():
        return None, None
    return roc_auc(labels, report.scores), average_precision(labels, report.scores)


def evaluate_once(
    dataset: str,
    g: AttributedGraph,
    cfg: PovConfig,
    hp: IdHyperparams,
    seed: int,
) -> EvalRecord:
    """One detector run at one seed, timed end to end."""
    hp_run = replace(hp, seed=seed)
    t0 = time.perf_counter()
    report = detect(g, cfg, hp_run)
    elapsed = time.perf_counter() - t0
    auc, ap = score_metrics(g, report)
    return EvalRecord(
        dataset=dataset, cfg=cfg, hp=hp_run, seed=seed, auc=auc, ap=ap,
        wall_time_s=elapsed,
    )


def sweep_gamma_lambda(
    dataset: str,
    g: AttributedGraph,
    cfg: PovConfig,
    hp: IdHyperparams,
    grid: list[float],
    seeds: list[int],
) -> list[EvalRecord]:
    """One record per (gamma, seed) with lambda fixed to 1 - gamma."""
    if not grid:
        raise ValueError("grid must be nonempty")
    records = []
    for gamma in grid:
        hp_point = replace(hp, gamma=float(gamma), lambda_=1.0 - float(gamma))
        for seed in seeds:
            records.append(evaluate_once(dataset, g, cfg, hp_point, seed))
    return records


def sweep_m(
    dataset: str,
    g: AttributedGraph,
    cfg: PovConfig,
    hp: IdHyperparams,
    m_values: list[int],
    seeds: list[int],
    noise: tuple[float, float] | None = None,
    noise_seed: int = 0,
) -> list[EvalRecord]:
    """One record per (m, seed), optionally on noise-injected features."""
    if not m_values:
        raise ValueError("m_values must be nonempty")
    if noise is not None:
        mu, sigma2 = noise
        noisy = add_gaussian_noise(g.features, mu, sigma2, noise_seed)
        g = AttributedGraph(
            num_nodes=g.num_nodes, edges=g.edges, features=noisy, labels=g.labels
        )
    records = []
    for m in m_values:
        cfg_point = PovConfig(m=int(m), theta=cfg.theta)
        for seed in seeds:
            records.append(evaluate_once(dataset, g, cfg_point, hp, seed))
    return records


def benchmark_pov_runtime(g: AttributedGraph, cfg: PovConfig) -> float:
    """Wall seconds for one weights -> power -> normalize pipeline run."""
    _, elapsed = benchmark_pov(g, cfg)
    return elapsed


def write_records_csv(records: list[EvalRecord], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(rec.to_row())


def write_records_json(records: list[EvalRecord], path) -> None:
    payload = [rec.to_dict() for rec in records]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def mean_auc(records: list[EvalRecord]) -> float:
    values = [r.auc for r in records if r.auc is not None]
    if not values:
        raise ValueError("no AUC values in records")
    return float(np.mean(values))
