"""Modular surrogate of the clipped compatibility term for one output.

Conditioned on the other outputs, the raw compatibility is linear in o_j:
raw = v^T o_j + c_rest with v = 2 sum_{j' != j} A o_{j'}.  The clipped term
is approximated by max(tau', v)^T o_j, which is modular in z_j, increases
with cross-output compatibility, and is flat (no extra penalty) whenever
o_j lives below the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import EnergyModel, Labeling, aggregate_all
from .errors import IndexOutOfRange


@dataclass
class ConditionedModular:
    v_minus_j: np.ndarray    # (m,) compatibility pressure from the other outputs
    tau_prime: float
    c_rest: float            # compatibility among the other outputs (constant here)
    unary_add: np.ndarray    # (n, m) location-independent addition to unary costs

    def __post_init__(self):
        self.penalty_row = np.maximum(self.tau_prime, self.v_minus_j)


def condition(model: EnergyModel, labeling: Labeling, j: int) -> ConditionedModular:
    """Freeze all outputs except j and build the modular compatibility surrogate.

    tau' = max(0, (tau_abs - c_rest) / n) makes the flat region's total
    tau' * n coincide with the conditioned clip floor.
    """
    m_out = labeling.counts.shape[0]
    if not 0 <= j < m_out:
        raise IndexOutOfRange(f"output {j} out of range for m'={m_out}")
    o = aggregate_all(labeling)
    others = o.sum(axis=0) - o[j]
    a = model.compat.a
    v = 2.0 * (a @ others)
    c_rest = float(others @ a @ others) - float(
        np.einsum("jm,mk,jk->", o, a, o) - o[j] @ a @ o[j]
    )
    tau_prime = max(0.0, (model.tau_abs - c_rest) / model.n)
    row = model.params.gamma * np.maximum(tau_prime, v)
    unary_add = np.broadcast_to(row, (model.n, model.m))
    return ConditionedModular(v, tau_prime, c_rest, unary_add)


def modular_value(cond: ConditionedModular, o_j: np.ndarray) -> float:
    """Surrogate compatibility of profile o_j (unweighted)."""
    return float(cond.penalty_row @ o_j)
