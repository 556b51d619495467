"""End-to-end batch mixing: saliency -> optimization -> assembly.

Shared by the CLI and the embedding wrapper so both produce identical
numbers for identical (inputs, saliency, labels, config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchlab import stats_diversity, stats_inputs_per_output
from .energy import Hyperparams, Labeling
from .errors import DimensionMismatch
from .mixer import assemble
from .optimizer import (
    OptimizerConfig,
    build_model,
    optimize_partition,
    partition_indices,
)
from .rng import derive
from .saliency import proxy_saliency


@dataclass
class PipelineResult:
    outputs: np.ndarray        # (m, C, H, W) mixed batch, input order preserved
    soft_labels: np.ndarray    # (m, K)
    labeling: Labeling         # block-diagonal global labeling (m, n, m)
    partitions: list           # list of index arrays
    run_stats: list            # per-partition RunStats
    stats: dict


def run_comix(
    inputs: np.ndarray,
    saliency: np.ndarray | None,
    labels: np.ndarray | None,
    params: Hyperparams | None = None,
    seed: int = 0,
    max_sweeps: int = 10,
) -> PipelineResult:
    """Mix one batch; saliency defaults to the image-gradient proxy and
    labels to per-input identity classes."""
    params = params or Hyperparams()
    params.validate()
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 4:
        raise DimensionMismatch(f"inputs must be m x C x H x W, got {inputs.shape}")
    m = inputs.shape[0]
    if saliency is None:
        saliency = proxy_saliency(inputs)
    else:
        saliency = np.asarray(saliency, dtype=np.float64)
    if saliency.shape != (m,) + inputs.shape[2:]:
        raise DimensionMismatch(
            f"saliency shape {saliency.shape} does not match inputs {inputs.shape}"
        )
    if labels is None:
        labels = np.eye(m)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.ndim != 2 or labels.shape[0] != m:
        raise DimensionMismatch(f"labels shape {labels.shape} does not match m={m}")
    one_hot = (np.abs(labels.sum(axis=1) - 1.0) <= 1e-6) & (
        ((labels == 0) | (np.abs(labels - 1.0) <= 1e-6)).all(axis=1)
    )
    if not one_hot.all():
        bad = int(np.argmin(one_hot))
        raise DimensionMismatch(f"label row {bad} is not one-hot")

    parts = partition_indices(m, params.partition_size)
    outputs = np.empty_like(inputs)
    soft = np.empty((m, labels.shape[1]))
    counts_global = np.zeros((m, params.grid_side**2, m), dtype=np.int64)
    run_stats, labelings, saliency_means = [], [], []
    histogram = np.zeros(m, dtype=np.int64)
    for p_idx, part in enumerate(parts):
        model, sal_ds = build_model(saliency[part], params)
        config = OptimizerConfig(
            params=params, seed=derive(seed, p_idx), max_sweeps=max_sweeps
        )
        labeling, stats = optimize_partition(model, config)
        mixed = assemble(inputs[part], labels[part], labeling, sal_ds)
        outputs[part] = mixed.outputs
        soft[part] = mixed.soft_labels
        counts_global[np.ix_(part, np.arange(counts_global.shape[1]), part)] = (
            labeling.counts
        )
        run_stats.append(stats)
        labelings.append(labeling)
        saliency_means.append((len(part), mixed.stats["batch_saliency"]))
        hist = stats_inputs_per_output(labeling)
        histogram[: hist.shape[0]] += hist

    weight_total = sum(w for w, _ in saliency_means)
    agg = {
        "partitions": [part.tolist() for part in parts],
        "diversity": stats_diversity(labelings),
        "batch_saliency": sum(w * v for w, v in saliency_means) / weight_total,
        "inputs_per_output": histogram.tolist(),
        "cycles": [s.cycles_run for s in run_stats],
        "objective_traces": [s.objective_trace for s in run_stats],
    }
    return PipelineResult(
        outputs=outputs,
        soft_labels=soft,
        labeling=Labeling(counts_global, params.level),
        partitions=parts,
        run_stats=run_stats,
        stats=agg,
    )
