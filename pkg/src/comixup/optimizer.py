"""Coordinate-descent mixing optimizer.

Each outer cycle visits every output once: the clipped compatibility is
replaced by a modular surrogate conditioned on the other outputs, the
column prior enters as a per-state cost, and the resulting pairwise
submodular energy is minimized with alpha-beta swap moves.

Two members of the surrogate family are tried per step: the tight-floor
threshold (flat region sized to the remaining clip budget) and the fully
flat one (penalty below threshold everywhere, i.e. pure cherry-picking).
Both proposals are scored by the exact conditioned objective and a step is
accepted only when it strictly lowers it, so the total energy is
non-increasing throughout.

The first cycle restricts columns to one-hot states; later cycles open the
quantized simplex over each output's currently used inputs, which keeps
the state count at m-bar + C(m-bar, 2) for L = 2 instead of O(m^2).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .energy import (
    EnergyModel,
    Hyperparams,
    Labeling,
    aggregate,
    grid_neighbors,
    objective_eval,
    prior_logpmf_counts,
)
from .errors import DimensionMismatch
from .graphcut import swap_minimize
from .modularize import condition
from .rng import SplitMix64, derive
from .saliency import compatibility_matrix, downsample_saliency, normalize_saliency, unary_costs


@dataclass
class OptimizerConfig:
    params: Hyperparams = field(default_factory=Hyperparams)
    seed: int = 0
    max_sweeps: int = 10
    # "binary_first": one-hot first cycle, support-restricted simplex after;
    # "onehot": one-hot states in every cycle; "full": whole simplex always.
    state_mode: str = "binary_first"

    def __post_init__(self):
        self.params.validate()
        if self.state_mode not in ("binary_first", "onehot", "full"):
            raise ValueError(f"unknown state mode {self.state_mode!r}")
        if self.state_mode == "binary_first" and self.params.level >= 2 and self.params.cycles < 2:
            raise ValueError("need at least two cycles to reach multi-level states")


@dataclass
class RunStats:
    objective_trace: list
    columns_changed: list
    wall_time: float
    cycles_run: int

    def to_dict(self, with_timing: bool = False) -> dict:
        out = {
            "objective_trace": self.objective_trace,
            "columns_changed": self.columns_changed,
            "cycles_run": self.cycles_run,
        }
        if with_timing:
            out["wall_time"] = self.wall_time
        return out


def init_labeling(m: int, m_out: int, n: int, seed: int) -> Labeling:
    """Uniform categorical one-hot column per location, SplitMix64(seed) stream."""
    rng = SplitMix64(seed)
    counts = np.zeros((m_out, n, m), dtype=np.int64)
    for j in range(m_out):
        for k in range(n):
            counts[j, k, rng.next_below(m)] = 1
    return Labeling(counts, 1)


def _simplex_states(level: int, support: np.ndarray, m: int) -> np.ndarray:
    """All count vectors summing to `level` supported on `support` (lexicographic)."""
    states = []
    for combo in combinations_with_replacement(support.tolist(), level):
        row = np.zeros(m, dtype=np.int64)
        for i in combo:
            row[i] += 1
        states.append(row)
    return np.array(states, dtype=np.int64)


def allowed_states(cycle: int, o_j: np.ndarray, level: int, m: int) -> np.ndarray:
    """State count-vectors available to one output at the given cycle (1-based)."""
    if cycle <= 1:
        return np.eye(m, dtype=np.int64) * level
    support = np.flatnonzero(o_j > 0)
    return _simplex_states(level, support, m)


def _state_set(config: OptimizerConfig, cycle: int, o_j: np.ndarray, m: int) -> np.ndarray:
    level = config.params.level
    if config.state_mode == "onehot":
        return np.eye(m, dtype=np.int64) * level
    if config.state_mode == "full":
        return _simplex_states(level, np.arange(m), m)
    return allowed_states(cycle, o_j, level, m)


class _StateTables:
    """Per-state-set tables shared across coordinate steps of one run."""

    def __init__(self, model: EnergyModel, states: np.ndarray, level: int):
        p = model.params
        self.states = states
        self.svec = states / float(level)
        self.base_cost = model.unary @ self.svec.T - p.eta * prior_logpmf_counts(
            states, p.alpha, level
        )
        self.vtab = p.beta * (1.0 - self.svec @ self.svec.T)
        self.index = {
            row.tobytes(): s for s, row in enumerate(np.ascontiguousarray(states))
        }

    def assignment_of(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows)
        return np.array(
            [self.index[rows[k].tobytes()] for k in range(rows.shape[0])],
            dtype=np.int64,
        )

    def conditioned_value(self, model: EnergyModel, cond, assign: np.ndarray) -> float:
        """Exact objective restricted to output j's terms, others frozen.

        The conditioned raw compatibility is c_rest + v . o_j, so the
        clipped term is evaluated exactly without the other outputs.
        """
        p = model.params
        value = float(self.base_cost[np.arange(model.n), assign].sum())
        if model.neighbors.size:
            value += float(
                self.vtab[assign[model.neighbors[:, 0]], assign[model.neighbors[:, 1]]].sum()
            )
        o_j = self.svec[assign].sum(axis=0)
        raw = cond.c_rest + float(cond.v_minus_j @ o_j)
        return value + p.gamma * max(model.tau_abs, raw)


def solve_output(
    model: EnergyModel,
    labeling: Labeling,
    j: int,
    states: np.ndarray,
    max_sweeps: int,
    tables: _StateTables | None = None,
) -> np.ndarray:
    """One coordinate step: best strict improvement for output j, or no change.

    Proposals come from alpha-beta swaps under the thresholded and (when the
    clip budget leaves slack) the flat compatibility surrogate; both are
    scored with the exact conditioned objective.  Returns the accepted
    count rows (n x m).
    """
    p = model.params
    if tables is None:
        tables = _StateTables(model, states, labeling.level)
    cond = condition(model, labeling, j)
    init = tables.assignment_of(labeling.counts[j])
    best_assign = init
    best_value = tables.conditioned_value(model, cond, init)
    surrogates = [tables.base_cost + tables.svec @ cond.penalty_row]
    if cond.tau_prime > 0.0:
        # with slack in the clip budget, also try the pure cherry-picking step
        surrogates.append(tables.base_cost)
    for site_cost in surrogates:
        assign = swap_minimize(
            site_cost, tables.vtab, model.n, model.neighbors, init, max_sweeps
        )
        value = tables.conditioned_value(model, cond, assign)
        if value < best_value - 1e-12:
            best_assign, best_value = assign, value
    return tables.states[best_assign]


def optimize_partition(model: EnergyModel, config: OptimizerConfig) -> tuple:
    """Iterated modularization + swap minimization over all outputs."""
    p = model.params
    t0 = time.perf_counter()
    init = init_labeling(model.m, model.m_out, model.n, config.seed)
    labeling = Labeling(init.counts * p.level, p.level)
    trace, changed = [], []
    table_cache: dict = {}
    for cycle in range(1, p.cycles + 1):
        n_changed = 0
        for j in range(model.m_out):
            states = _state_set(config, cycle, aggregate(labeling, j), model.m)
            key = states.tobytes()
            tables = table_cache.get(key)
            if tables is None:
                tables = _StateTables(model, states, p.level)
                table_cache[key] = tables
            new_rows = solve_output(
                model, labeling, j, states, config.max_sweeps, tables
            )
            n_changed += int(np.any(new_rows != labeling.counts[j], axis=1).sum())
            labeling.counts[j] = new_rows
        trace.append(objective_eval(model, labeling).total)
        changed.append(n_changed)
        if n_changed == 0:
            break
    stats = RunStats(trace, changed, time.perf_counter() - t0, len(trace))
    return labeling, stats


def build_model(
    saliency_raw: np.ndarray, params: Hyperparams, m_out: int | None = None
) -> tuple:
    """Normalize + pool saliency and assemble the energy model for one partition.

    Returns (model, downsampled saliency).
    """
    sal = normalize_saliency(saliency_raw)
    sal_ds = downsample_saliency(sal, params.grid_side)
    compat = compatibility_matrix(sal_ds, params.omega)
    model = EnergyModel(
        unary=unary_costs(sal_ds),
        neighbors=grid_neighbors(params.grid_side),
        compat=compat,
        params=params,
        m_out=m_out if m_out is not None else sal.shape[0],
    )
    return model, sal_ds


def partition_indices(m: int, partition_size: int) -> list:
    """Contiguous chunks of the batch; a trailing singleton borrows one element."""
    bounds = list(range(0, m, partition_size)) + [m]
    sizes = [bounds[i + 1] - bounds[i] for i in range(len(bounds) - 1)]
    if len(sizes) > 1 and sizes[-1] == 1:
        sizes[-2] -= 1
        sizes[-1] = 2
    parts, start = [], 0
    for size in sizes:
        parts.append(np.arange(start, start + size))
        start += size
    return parts


def comix_optimize(
    saliency: np.ndarray, labels: np.ndarray, config: OptimizerConfig
) -> list:
    """Partition the batch and solve each partition independently.

    saliency: m x H x W nonnegative maps; labels: m x K one-hot rows (used
    for shape validation only — soft labels are assembled downstream).
    Returns a list of (Labeling, RunStats), one per partition, in input order.
    """
    saliency = np.asarray(saliency, dtype=np.float64)
    m = saliency.shape[0]
    if labels is not None and labels.shape[0] != m:
        raise DimensionMismatch(
            f"labels carry {labels.shape[0]} rows for {m} saliency maps"
        )
    results = []
    for p_idx, part in enumerate(partition_indices(m, config.params.partition_size)):
        model, _ = build_model(saliency[part], config.params)
        part_config = OptimizerConfig(
            params=config.params,
            seed=derive(config.seed, p_idx),
            max_sweeps=config.max_sweeps,
            state_mode=config.state_mode,
        )
        results.append(optimize_partition(model, part_config))
    return results
