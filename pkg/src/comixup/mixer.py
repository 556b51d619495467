"""Turn an optimized labeling into mixed outputs and soft labels.

The grid labeling is replicated blockwise back to pixel resolution
(nearest neighbor keeps every pixel mask exactly on the quantized
simplex), each output pixel is the mask-weighted sum of input pixels, and
soft labels are the label matrix weighted by each output's source ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import Labeling
from .errors import DimensionMismatch


@dataclass
class MixResult:
    outputs: np.ndarray       # (m', C, H, W)
    soft_labels: np.ndarray   # (m', K)
    labeling: Labeling
    stats: dict


def upsample_labeling(labeling: Labeling, height: int, width: int) -> np.ndarray:
    """Block-replicate cell columns to dense per-pixel masks (m', m, H, W)."""
    m_out, n, m = labeling.counts.shape
    side = int(round(n ** 0.5))
    if side * side != n:
        raise DimensionMismatch(f"{n} grid cells do not form a square grid")
    if height < 1 or width < 1:
        raise DimensionMismatch("target size must be positive")
    bh = -(-height // side)
    bw = -(-width // side)
    z = labeling.z.reshape(m_out, side, side, m)
    dense = z.repeat(bh, axis=1).repeat(bw, axis=2)[:, :height, :width, :]
    return np.ascontiguousarray(dense.transpose(0, 3, 1, 2))


def assemble(
    inputs: np.ndarray,
    labels: np.ndarray,
    labeling: Labeling,
    sal_ds: np.ndarray | None = None,
) -> MixResult:
    """Mix the batch under `labeling` and attach run statistics.

    Each output pixel is a convex combination of the input pixels at the
    same location, so outputs stay inside the per-pixel input range.
    """
    from .benchlab import stats_batch_saliency, stats_diversity, stats_inputs_per_output

    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    m_out, n, m = labeling.counts.shape
    if inputs.ndim != 4 or inputs.shape[0] != m:
        raise DimensionMismatch(
            f"inputs shape {inputs.shape} does not match m={m} labeling"
        )
    if labels.ndim != 2 or labels.shape[0] != m:
        raise DimensionMismatch(f"labels shape {labels.shape} does not match m={m}")
    masks = upsample_labeling(labeling, inputs.shape[2], inputs.shape[3])
    outputs = np.einsum("jmhw,mchw->jchw", masks, inputs)
    ratios = labeling.counts.sum(axis=1) / float(labeling.level * n)  # (m', m)
    soft = ratios @ labels
    stats = {
        "diversity": stats_diversity([labeling]),
        "inputs_per_output": stats_inputs_per_output(labeling).tolist(),
    }
    if sal_ds is not None:
        stats["batch_saliency"] = stats_batch_saliency(labeling, sal_ds)
    return MixResult(outputs, soft, labeling, stats)
