"""Saliency normalization, grid pooling, and the input-compatibility matrix.

Saliency maps arrive as nonnegative per-pixel mass, one map per input.
Everything downstream assumes each input's map sums to one, so pooling to
the optimization grid must preserve mass (block sums, zero padding on the
bottom/right when the grid does not divide the image).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSaliency, InvalidGridSide, NegativeSaliency, NotPSD
from .rng import SplitMix64


def normalize_saliency(raw: np.ndarray) -> np.ndarray:
    """Scale each input's map to unit total mass."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 3:
        raise ValueError(f"expected m x H x W saliency, got shape {raw.shape}")
    if np.any(raw < 0):
        raise NegativeSaliency("saliency maps must be nonnegative")
    totals = raw.sum(axis=(1, 2))
    if np.any(totals <= 0):
        bad = int(np.argmin(totals))
        raise DegenerateSaliency(f"input {bad} has zero total saliency")
    return raw / totals[:, None, None]


def downsample_saliency(sal: np.ndarray, grid_side: int) -> np.ndarray:
    """Pool m x H x W maps to m x s x s by block sums (mass preserving)."""
    if grid_side < 1:
        raise InvalidGridSide(f"grid side must be >= 1, got {grid_side}")
    m, h, w = sal.shape
    hp = -(-h // grid_side) * grid_side
    wp = -(-w // grid_side) * grid_side
    if (hp, wp) != (h, w):
        padded = np.zeros((m, hp, wp), dtype=sal.dtype)
        padded[:, :h, :w] = sal
        sal = padded
    bh, bw = hp // grid_side, wp // grid_side
    return sal.reshape(m, grid_side, bh, grid_side, bw).sum(axis=(2, 4))


def proxy_saliency(inputs: np.ndarray) -> np.ndarray:
    """Image-gradient stand-in for model-derived saliency.

    Central spatial differences per channel, l2 norm across channels,
    normalized to unit mass per input.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    gy = np.gradient(inputs, axis=2)
    gx = np.gradient(inputs, axis=3)
    mag = np.sqrt((gy * gy + gx * gx).sum(axis=1))
    return normalize_saliency(mag)


def unary_costs(sal_ds: np.ndarray) -> np.ndarray:
    """Per-location labeling costs: c[k, i] = -mass of input i in cell k (row-major cells)."""
    m = sal_ds.shape[0]
    return -sal_ds.reshape(m, -1).T.copy()


@dataclass
class CompatibilityMatrix:
    """Inner-product metric between input-source profiles."""

    a: np.ndarray        # (1 - omega) I + omega * a_c
    a_c: np.ndarray      # pairwise l1 distance between most-salient cells
    omega: float


def _argmax_cell(grid: np.ndarray) -> tuple:
    # np.argmax scans row-major, so ties resolve to the smallest flat index.
    flat = int(np.argmax(grid))
    return divmod(flat, grid.shape[1])


def _min_eigenvalue_bound(a: np.ndarray) -> float:
    """Estimated lower bound on the smallest eigenvalue, cheap check first.

    Gershgorin is sufficient for the default omega; otherwise the smallest
    eigenvalue is estimated by power iteration on the shifted matrix.  The
    start vector is a fixed generic draw (a structured start such as
    all-ones can sit exactly orthogonal to the dominant eigenvector of a
    symmetric distance pattern), and the returned bound is reduced by the
    final residual norm.
    """
    off = np.abs(a).sum(axis=1) - np.abs(np.diag(a))
    gersh = float(np.min(np.diag(a) - off))
    if gersh >= 0:
        return gersh
    # shift so the smallest eigenvalue becomes the dominant one
    m = a.shape[0]
    sigma = float(np.max(np.diag(a) + off))
    shifted = sigma * np.eye(m) - a
    rng = SplitMix64(0x5EED)
    v = np.array([0.5 + rng.next_float() for _ in range(m)])
    v /= np.linalg.norm(v)
    for _ in range(100):
        w = shifted @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return sigma
        new_v = w / norm
        if np.linalg.norm(new_v - v) < 1e-9:
            v = new_v
            break
        v = new_v
    theta = float(v @ shifted @ v)
    residual = float(np.linalg.norm(shifted @ v - theta * v))
    return sigma - theta - residual


def compatibility_matrix(sal_ds: np.ndarray, omega: float) -> CompatibilityMatrix:
    """Assemble A = (1-omega) I + omega * A_c from downsampled saliency.

    A_c[i, j] is the l1 distance between the 2-D grid cells where inputs i
    and j are most salient.  omega is halved (up to 10 times) if the
    numeric PSD validation fails at the requested value.
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    m = sal_ds.shape[0]
    peaks = [_argmax_cell(sal_ds[i]) for i in range(m)]
    a_c = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = abs(peaks[i][0] - peaks[j][0]) + abs(peaks[i][1] - peaks[j][1])
            a_c[i, j] = a_c[j, i] = float(d)
    w = omega
    for _ in range(11):
        a = (1.0 - w) * np.eye(m) + w * a_c
        if _min_eigenvalue_bound(a) >= -1e-9:
            return CompatibilityMatrix(a=a, a_c=a_c, omega=w)
        w *= 0.5
    raise NotPSD(f"compatibility matrix not PSD even at omega={w}")
