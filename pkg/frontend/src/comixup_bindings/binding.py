"""Buffer view validation and the end-to-end mixing call."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from comixup.cli import CONFIG_KEYS, config_to_params
from comixup.errors import ComixError, DimensionMismatch
from comixup.pipeline import run_comix


@dataclass
class ForeignBatchView:
    """Validated, read-only view over caller-owned batch buffers.

    Buffers must be row-major and correctly shaped; C-contiguous float64
    arrays are borrowed without copying (the caller must not mutate them
    for the duration of the call), anything else is converted once on the
    way in.
    """

    inputs: np.ndarray                  # (m, C, H, W)
    saliency: np.ndarray | None = None  # (m, H, W); None -> gradient proxy
    labels: np.ndarray | None = None    # (m, K); None -> per-input identity
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = self._as_buffer(self.inputs, "inputs")
        if self.inputs.ndim != 4:
            raise DimensionMismatch(
                f"inputs must be m x C x H x W, got shape {self.inputs.shape}"
            )
        m = self.inputs.shape[0]
        if self.saliency is not None:
            self.saliency = self._as_buffer(self.saliency, "saliency")
            if self.saliency.shape != (m,) + self.inputs.shape[2:]:
                raise DimensionMismatch(
                    f"saliency shape {self.saliency.shape} does not match "
                    f"inputs {self.inputs.shape}"
                )
        if self.labels is not None:
            self.labels = self._as_buffer(self.labels, "labels")
            if self.labels.ndim != 2 or self.labels.shape[0] != m:
                raise DimensionMismatch(
                    f"labels shape {self.labels.shape} does not match m={m}"
                )
        unknown = set(self.config) - CONFIG_KEYS
        if unknown:
            raise ComixError(f"unknown config keys: {sorted(unknown)}")

    @staticmethod
    def _as_buffer(arr, name):
        arr = np.asarray(arr)
        if not np.issubdtype(arr.dtype, np.number):
            raise ComixError(f"{name} buffer must be numeric, got {arr.dtype}")
        if arr.dtype == np.float64 and arr.flags["C_CONTIGUOUS"]:
            view = arr.view()
            view.setflags(write=False)
            return view
        return np.ascontiguousarray(arr, dtype=np.float64)


def comix(inputs, saliency=None, labels=None, config=None, seed=0):
    """Optimize and mix one batch; returns (outputs, soft_labels, labeling).

    `config` takes the same keys as the CLI's JSON config; the explicit
    `seed` argument overrides any seed it carries.  Outputs are float64
    arrays of shapes (m, C, H, W), (m, K), and (m, n, m) where the
    labeling holds the quantized per-location mixing ratios.  Errors from
    the engine propagate as its exception types (all ComixError
    subclasses).  The numeric work happens inside compiled kernels that do
    not hold the interpreter lock, so independent batches may be processed
    from separate threads.
    """
    view = ForeignBatchView(inputs, saliency, labels, dict(config or {}))
    cfg = dict(view.config)
    cfg.pop("seed", None)
    max_sweeps = int(cfg.pop("max_sweeps", 10))
    params = config_to_params(cfg)
    result = run_comix(
        view.inputs, view.saliency, view.labels, params, int(seed), max_sweeps
    )
    return result.outputs, result.soft_labels, result.labeling.z
