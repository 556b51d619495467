"""Objective model: labelings, hyperparameters, and exact energy evaluation.

The optimization variable assigns every location of every output a mixing
column over the m inputs, quantized to multiples of 1/L.  Columns are kept
as integer counts (summing to L) so the simplex invariant is exact; the
float view divides by L on demand.

The total energy of a labeling is

    unary + beta * smoothness + gamma * max(tau_abs, pairwise compat)
          - eta * sum of column log-priors

with the prior a Dirichlet-multinomial over the quantized column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, InvalidColumn
from .saliency import CompatibilityMatrix


@dataclass
class Hyperparams:
    beta: float = 0.32           # smoothness weight
    gamma: float = 1.0           # compatibility weight
    eta: float = 0.05            # prior weight
    tau: float = 0.83            # compatibility clipping level, dimensionless
    alpha: float = 2.0           # Dirichlet concentration
    omega: float = 0.001         # off-diagonal compatibility mixing
    level: int = 2               # quantization steps L; columns live in {0, 1/L, ..., 1}
    grid_side: int = 4
    partition_size: int = 20
    cycles: int = 4

    def validate(self) -> None:
        if min(self.beta, self.gamma, self.eta, self.tau) < 0:
            raise ValueError("beta, gamma, eta, tau must be nonnegative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must lie in [0, 1]")
        if self.level < 1 or self.grid_side < 1:
            raise ValueError("level and grid_side must be >= 1")
        if self.partition_size < 1 or self.cycles < 1:
            raise ValueError("partition_size and cycles must be >= 1")


@dataclass
class Labeling:
    """Quantized mixing ratios: counts[j, k, i] in {0..L}, each column sums to L."""

    counts: np.ndarray  # int64, shape (m', n, m)
    level: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 3:
            raise InvalidColumn(f"labeling must be 3-D, got shape {self.counts.shape}")
        if np.any(self.counts < 0) or np.any(self.counts.sum(axis=2) != self.level):
            raise InvalidColumn("every column must be nonnegative counts summing to L")

    @property
    def z(self) -> np.ndarray:
        return self.counts / float(self.level)

    @property
    def shape(self) -> tuple:
        return self.counts.shape

    def copy(self) -> "Labeling":
        return Labeling(self.counts.copy(), self.level)


def labeling_from_ratios(z: np.ndarray, level: int) -> Labeling:
    """Recover integer counts from a float ratio tensor (serialization read-back)."""
    scaled = np.asarray(z, dtype=np.float64) * level
    counts = np.rint(scaled)
    if np.max(np.abs(scaled - counts)) > 1e-3:
        raise InvalidColumn("ratios are not multiples of 1/L")
    return Labeling(counts.astype(np.int64), level)


def grid_neighbors(side: int) -> np.ndarray:
    """Unordered 4-neighborhood pairs of an s x s grid, row-major, each once."""
    pairs = []
    for r in range(side):
        for c in range(side):
            k = r * side + c
            if c + 1 < side:
                pairs.append((k, k + 1))
            if r + 1 < side:
                pairs.append((k, k + side))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def chain_neighbors(n: int) -> np.ndarray:
    """Adjacent pairs of a 1-D chain (speech-style data)."""
    return np.array([(k, k + 1) for k in range(n - 1)], dtype=np.int64).reshape(-1, 2)


def tau_absolute(tau: float, n: int, m: int, m_out: int) -> float:
    """Clipping floor in raw-compatibility units.

    tau scales against the raw compatibility of the fully uniform labeling
    under an identity metric, n^2 m'(m'-1)/m, so tau in [0, 1] spans from
    "always penalize" to "uniform mixing is free".
    """
    return tau * n * n * m_out * (m_out - 1) / m


@dataclass
class EnergyModel:
    """Everything needed to evaluate the objective: costs, adjacency, metric, weights."""

    unary: np.ndarray                # (n, m) per-location per-input costs
    neighbors: np.ndarray            # (E, 2) unordered adjacent location pairs
    compat: CompatibilityMatrix
    params: Hyperparams
    m_out: int                       # number of outputs m'

    def __post_init__(self):
        self.unary = np.asarray(self.unary, dtype=np.float64)
        n, m = self.unary.shape
        if self.compat.a.shape != (m, m):
            raise DimensionMismatch("compatibility matrix does not match input count")
        if self.neighbors.size and int(self.neighbors.max()) >= n:
            raise DimensionMismatch("neighbor index out of range")
        if np.any(self.neighbors[:, 0] == self.neighbors[:, 1]):
            raise DimensionMismatch("self-adjacent location pair")
        self.n = n
        self.m = m

    @property
    def tau_abs(self) -> float:
        return tau_absolute(self.params.tau, self.n, self.m, self.m_out)


@dataclass
class EnergyBreakdown:
    unary: float
    smoothness: float
    compat_raw: float
    compat_clipped: float
    prior: float          # sum of column log-pmf values (enters total with weight -eta)
    total: float

    def to_dict(self) -> dict:
        return {
            "unary": self.unary,
            "smoothness": self.smoothness,
            "compat_raw": self.compat_raw,
            "compat_clipped": self.compat_clipped,
            "prior": self.prior,
            "total": self.total,
        }


def aggregate(labeling: Labeling, j: int) -> np.ndarray:
    """Input-source profile of output j: o_j = sum over locations of z_{j,k}."""
    if not 0 <= j < labeling.counts.shape[0]:
        raise IndexError(f"output index {j} out of range")
    return labeling.counts[j].sum(axis=0) / float(labeling.level)


def aggregate_all(labeling: Labeling) -> np.ndarray:
    """(m', m) matrix of all output profiles."""
    return labeling.counts.sum(axis=1) / float(labeling.level)


def soft_output_ratio(labeling: Labeling, j: int) -> np.ndarray:
    """o_j / n: the source ratio used for soft labels, sums to one."""
    return aggregate(labeling, j) / labeling.counts.shape[1]


def prior_logpmf_counts(counts: np.ndarray, alpha: float, level: int) -> np.ndarray:
    """Log Dirichlet-multinomial pmf of integer count columns (last axis = inputs).

    Marginalizing the Dirichlet weight of a scaled multinomial gives
    log[ L!/prod(x_i!) * G(m a)/G(L+m a) * prod G(x_i+a)/G(a) ].
    """
    counts = np.asarray(counts)
    m = counts.shape[-1]
    out = gammaln(level + 1) - gammaln(counts + 1.0).sum(axis=-1)
    out += gammaln(m * alpha) - gammaln(level + m * alpha)
    out += (gammaln(counts + alpha) - gammaln(alpha)).sum(axis=-1)
    return out


def prior_logpmf(z_col: np.ndarray, alpha: float, level: int) -> float:
    """Log prior of one mixing column given as ratios in {0, 1/L, ..., 1}."""
    z_col = np.asarray(z_col, dtype=np.float64)
    counts = np.rint(z_col * level)
    if (
        np.any(z_col < 0)
        or np.max(np.abs(z_col * level - counts)) > 1e-9
        or int(counts.sum()) != level
    ):
        raise InvalidColumn(f"column {z_col} is not an L-step simplex point")
    return float(prior_logpmf_counts(counts, alpha, level))


def smoothness(labeling: Labeling, neighbors: np.ndarray) -> float:
    """Sum over outputs and unordered neighbor pairs of (1 - z_k . z_k')."""
    if neighbors.size == 0:
        return 0.0
    z = labeling.z
    lhs = z[:, neighbors[:, 0], :]
    rhs = z[:, neighbors[:, 1], :]
    return float(((1.0 - (lhs * rhs).sum(axis=2))).sum())


def compatibility(labeling: Labeling, a: np.ndarray, tau_abs: float) -> tuple:
    """Raw and clipped pairwise output compatibility.

    raw sums o_j^T A o_j' over ordered pairs j != j'; clipping floors the
    penalty at tau_abs.
    """
    o = aggregate_all(labeling)
    total = o.sum(axis=0)
    raw = float(total @ a @ total - np.einsum("jm,mk,jk->", o, a, o))
    return raw, max(tau_abs, raw)


def objective_eval(model: EnergyModel, labeling: Labeling) -> EnergyBreakdown:
    """Exact per-term evaluation of the objective."""
    m_out, n, m = labeling.counts.shape
    if (n, m) != model.unary.shape or m_out != model.m_out:
        raise DimensionMismatch(
            f"labeling shape {labeling.counts.shape} does not match model "
            f"(m'={model.m_out}, n={model.n}, m={model.m})"
        )
    p = model.params
    z = labeling.z
    unary = float(np.einsum("km,jkm->", model.unary, z))
    smooth = smoothness(labeling, model.neighbors)
    raw, clipped = compatibility(labeling, model.compat.a, model.tau_abs)
    prior = float(prior_logpmf_counts(labeling.counts, p.alpha, p.level).sum())
    total = unary + p.beta * smooth + p.gamma * clipped - p.eta * prior
    return EnergyBreakdown(unary, smooth, raw, clipped, prior, total)
