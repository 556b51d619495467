"""Oracles, baselines, and batch statistics for the optimizer.

Bench instances draw unary costs i.i.d. uniform on [0, 1] with an identity
compatibility metric, which keeps exhaustive search tractable at small
sizes while exercising every objective term.  The comparison baseline is
the classic submodular-supermodular procedure: the supermodular penalty is
replaced each round by the tight modular bound along a random permutation
chain of all (output, location, input) elements and the surrogate is
minimized under the one-value-per-column constraint.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .energy import (
    EnergyModel,
    Hyperparams,
    Labeling,
    chain_neighbors,
    grid_neighbors,
    objective_eval,
    prior_logpmf_counts,
)
from .errors import TooLarge
from .graphcut import PairwiseEnergy, alpha_beta_swap
from .optimizer import OptimizerConfig, _simplex_states, init_labeling, optimize_partition
from .rng import SplitMix64, derive
from .saliency import CompatibilityMatrix


@dataclass
class BenchInstance:
    m: int
    m_out: int
    n: int
    seed: int
    params: Hyperparams = field(default_factory=Hyperparams)
    state_mode: str = "onehot"   # "onehot" or "full" (full quantized simplex)

    def model(self) -> EnergyModel:
        rng = SplitMix64(self.seed)
        unary = np.empty((self.n, self.m))
        for k in range(self.n):
            for i in range(self.m):
                unary[k, i] = rng.next_float()
        side = int(round(self.n ** 0.5))
        if side * side == self.n and side > 1:
            neighbors = grid_neighbors(side)
        else:
            neighbors = chain_neighbors(self.n)
        eye = np.eye(self.m)
        compat = CompatibilityMatrix(a=eye, a_c=np.zeros((self.m, self.m)), omega=0.0)
        return EnergyModel(
            unary=unary,
            neighbors=neighbors,
            compat=compat,
            params=self.params,
            m_out=self.m_out,
        )

    def states(self) -> np.ndarray:
        level = self.params.level
        if self.state_mode == "onehot":
            return np.eye(self.m, dtype=np.int64) * level
        return _simplex_states(level, np.arange(self.m), self.m)


@dataclass
class BenchReport:
    method_mean: dict
    method_std: dict
    rel_error: float | None
    seconds: dict


def _per_output_tables(model: EnergyModel, states: np.ndarray) -> tuple:
    """Energy and profile of every single-output labeling, vectorized.

    Returns (per_output_energy, per_output_profile, own_quad, digits) where
    labeling index a encodes column states in mixed radix base S.
    """
    p = model.params
    n, n_states = model.n, states.shape[0]
    count = n_states ** n
    idx = np.arange(count)
    digits = np.empty((count, n), dtype=np.int64)
    for k in range(n):
        digits[:, k] = (idx // (n_states ** k)) % n_states
    svec = states / float(p.level)
    cost_ks = model.unary @ svec.T                       # (n, S)
    vpot = 1.0 - svec @ svec.T                           # (S, S)
    prior = prior_logpmf_counts(states, p.alpha, p.level)
    energy = cost_ks[np.arange(n), digits].sum(axis=1)
    for k, k2 in model.neighbors:
        energy = energy + p.beta * vpot[digits[:, k], digits[:, k2]]
    energy = energy - p.eta * prior[digits].sum(axis=1)
    profile = svec[digits].sum(axis=1)                   # (count, m)
    own_quad = np.einsum("am,mk,ak->a", profile, model.compat.a, profile)
    return energy, profile, own_quad, digits


def brute_force(instance: BenchInstance) -> tuple:
    """Exhaustive minimum of the objective over the configured state set."""
    model = instance.model()
    states = instance.states()
    total = states.shape[0] ** (instance.m_out * instance.n)
    if total > 10**7:
        raise TooLarge(f"{total} labelings exceed the enumeration guard")
    p = model.params
    energy, profile, own_quad, digits = _per_output_tables(model, states)
    count = energy.shape[0]
    cross = profile @ model.compat.a @ profile.T         # (count, count)
    combos = np.indices((count,) * instance.m_out).reshape(instance.m_out, -1)
    f_base = energy[combos].sum(axis=0)
    pair = np.zeros(combos.shape[1])
    for j1 in range(instance.m_out):
        for j2 in range(j1 + 1, instance.m_out):
            pair = pair + cross[combos[j1], combos[j2]]
    f_total = f_base + p.gamma * np.maximum(model.tau_abs, 2.0 * pair)
    best = int(np.argmin(f_total))
    counts = np.empty((instance.m_out, instance.n, instance.m), dtype=np.int64)
    for j in range(instance.m_out):
        counts[j] = states[digits[combos[j, best]]]
    return float(f_total[best]), Labeling(counts, p.level)


def random_guess(instance: BenchInstance, seed: int) -> float:
    """Objective of a uniformly random labeling from the state set."""
    model = instance.model()
    states = instance.states()
    rng = SplitMix64(seed)
    counts = np.empty((instance.m_out, instance.n, instance.m), dtype=np.int64)
    for j in range(instance.m_out):
        for k in range(instance.n):
            counts[j, k] = states[rng.next_below(states.shape[0])]
    labeling = Labeling(counts, model.params.level)
    return float(objective_eval(model, labeling).total)


def algorithm_value(instance: BenchInstance, max_sweeps: int = 10) -> float:
    """Final objective of the coordinate-descent optimizer on this instance."""
    model = instance.model()
    config = OptimizerConfig(
        params=instance.params,
        seed=derive(instance.seed, 1),
        max_sweeps=max_sweeps,
        state_mode=instance.state_mode if instance.state_mode == "onehot" else "full",
    )
    labeling, stats = optimize_partition(model, config)
    return float(stats.objective_trace[-1])


def narasimhan_baseline(
    instance: BenchInstance, seed: int, max_rounds: int = 50, patience: int = 5
) -> float:
    """Submodular-supermodular procedure with permutation-chain modularization.

    Each round draws a permutation of all m' n m one-hot assignments with
    the current labeling's elements first, accumulates the marginal gains
    of the (negated) clipped compatibility along the chain, substitutes the
    resulting modular bound, and minimizes the surrogate per output.  The
    bound is tight at the current point, so the true objective never
    increases; the loop stops after `patience` consecutive permutations
    yield no improvement.
    """
    if instance.state_mode != "onehot":
        raise ValueError("the set-modularization baseline is defined on one-hot states")
    model = instance.model()
    p = model.params
    m, m_out, n = instance.m, instance.m_out, instance.n
    a = model.compat.a
    rng = SplitMix64(seed)
    assign = init_labeling(m, m_out, n, derive(instance.seed, 1)).counts.argmax(axis=2)
    states = instance.states()
    svec = states / float(p.level)
    base_cost = model.unary @ svec.T - p.eta * prior_logpmf_counts(states, p.alpha, p.level)

    def true_value(asg):
        counts = states[asg]
        return float(objective_eval(model, Labeling(counts, p.level)).total)

    f_cur = true_value(assign)
    fails = 0
    for _ in range(max_rounds):
        current = [(j, k, int(assign[j, k])) for j in range(m_out) for k in range(n)]
        rest = [
            (j, k, i)
            for j in range(m_out)
            for k in range(n)
            for i in range(m)
            if i != assign[j, k]
        ]
        rng.shuffle(current)
        rng.shuffle(rest)
        chain = current + rest
        # marginal gains of -gamma * max(tau, raw) along the prefix chain
        weights = np.zeros((m_out, n, m))
        o = np.zeros((m_out, m))
        total = np.zeros(m)
        raw = 0.0
        fc = p.gamma * max(model.tau_abs, raw)
        for (j, k, i) in chain:
            raw += 2.0 * float(a[i] @ (total - o[j]))
            o[j, i] += 1.0
            total[i] += 1.0
            fc_new = p.gamma * max(model.tau_abs, raw)
            weights[j, k, i] = -(fc_new - fc)
            fc = fc_new
        proposal = np.empty_like(assign)
        for j in range(m_out):
            site_cost = base_cost - weights[j]
            energy = PairwiseEnergy(svec, site_cost, p.beta, model.neighbors)
            proposal[j] = alpha_beta_swap(energy, assign[j], max_sweeps=10)
        f_new = true_value(proposal)
        if f_new < f_cur - 1e-12:
            assign = proposal
            f_cur = f_new
            fails = 0
        else:
            fails += 1
            if fails >= patience:
                break
    return f_cur


# ---------------------------------------------------------------------------
# mixing-quality statistics
# ---------------------------------------------------------------------------


def stats_diversity(labelings: list) -> float:
    """1 - sum_{j != j'} o~_j . o~_j' / m with o~ = o / |o|_1, averaged over partitions."""
    values = []
    for labeling in labelings:
        o = labeling.counts.sum(axis=1).astype(np.float64)
        o_tilde = o / o.sum(axis=1, keepdims=True)
        total = o_tilde.sum(axis=0)
        cross = float(total @ total - np.einsum("jm,jm->", o_tilde, o_tilde))
        values.append(1.0 - cross / labeling.counts.shape[2])
    return float(np.mean(values))


def stats_batch_saliency(labeling: Labeling, sal_ds: np.ndarray) -> float:
    """Mean saliency mass captured per output; exactly 1 for identity mixing."""
    m_out, n, m = labeling.counts.shape
    flat = sal_ds.reshape(m, -1)
    if flat.shape[1] != n:
        raise ValueError("saliency grid does not match labeling cells")
    z = labeling.z
    return float(np.einsum("jkm,mk->", z, flat) / m_out)


def stats_inputs_per_output(labeling: Labeling) -> np.ndarray:
    """Histogram over {1..m} of the number of inputs feeding each output."""
    m = labeling.counts.shape[2]
    used = (labeling.counts.sum(axis=1) > 0).sum(axis=1)
    return np.bincount(used, minlength=m + 1)[1:]


def synthetic_saliency(
    m: int, height: int, width: int, seed: int, grid_side: int = 4
) -> np.ndarray:
    """Seeded batch of blob saliency maps (raw, unnormalized).

    One concentrated Gaussian blob per input, placed inside a grid cell
    drawn from a shuffled cell order so peaks land at distinct locations,
    over a small uniform floor.  Mimics batches of single localized
    objects at varying positions.
    """
    rng = SplitMix64(seed)
    ys, xs = np.mgrid[0:height, 0:width]
    maps = np.empty((m, height, width))
    cells = list(range(grid_side * grid_side))
    rng.shuffle(cells)
    ch, cw = height / grid_side, width / grid_side
    for i in range(m):
        row, col = divmod(cells[i % len(cells)], grid_side)
        cy = (row + 0.25 + 0.5 * rng.next_float()) * ch
        cx = (col + 0.25 + 0.5 * rng.next_float()) * cw
        sigma = (0.03 + 0.07 * rng.next_float()) * max(height, width)
        blob = np.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2.0 * sigma * sigma))
        maps[i] = blob + 0.01
    return maps


# ---------------------------------------------------------------------------
# bench suites
# ---------------------------------------------------------------------------


def _bench_task(args):
    suite, m, m_out, n, seed, params = args
    instance = BenchInstance(m=m, m_out=m_out, n=n, seed=seed, params=params)
    rows = []
    t0 = time.perf_counter()
    ours = algorithm_value(instance)
    rows.append(("ours", m, m_out, n, seed, ours, time.perf_counter() - t0))
    if suite == "brute":
        t0 = time.perf_counter()
        best, _ = brute_force(instance)
        rows.append(("brute", m, m_out, n, seed, best, time.perf_counter() - t0))
    else:
        t0 = time.perf_counter()
        nara = narasimhan_baseline(instance, derive(seed, 2))
        rows.append(("narasimhan", m, m_out, n, seed, nara, time.perf_counter() - t0))
    t0 = time.perf_counter()
    rand = random_guess(instance, derive(seed, 3))
    rows.append(("random", m, m_out, n, seed, rand, time.perf_counter() - t0))
    return rows


def run_suite(
    suite: str,
    sizes: list,
    n_seeds: int,
    params: Hyperparams | None = None,
    jobs: int = 1,
    base_seed: int = 1234,
) -> tuple:
    """Run a bench suite; returns (rows, summary).

    rows: (method, m, m', n, seed, value, seconds) ordered by (size, seed).
    summary: per-size method means/stds plus relative error for brute suites.
    """
    if suite not in ("brute", "bp"):
        raise ValueError("suite must be 'brute' or 'bp'")
    params = params or Hyperparams()
    tasks = [
        (suite, m, m_out, n, derive(base_seed, idx * n_seeds + s), params)
        for idx, (m, m_out, n) in enumerate(sizes)
        for s in range(n_seeds)
    ]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            nested = pool.map(_bench_task, tasks)
    else:
        nested = [_bench_task(t) for t in tasks]
    rows = [row for group in nested for row in group]
    summary = {}
    for m, m_out, n in sizes:
        key = f"{m}x{m_out}x{n}"
        per_method = {}
        for method in ("ours", "brute", "narasimhan", "random"):
            vals = [r[5] for r in rows if r[0] == method and r[1:4] == (m, m_out, n)]
            if vals:
                per_method[method] = {
                    "mean": float(np.mean(vals)),
                    "std": float(np.std(vals)),
                    "n": len(vals),
                }
        entry = {"methods": per_method}
        if "brute" in per_method:
            gap = per_method["random"]["mean"] - per_method["brute"]["mean"]
            entry["rel_error"] = (
                (per_method["ours"]["mean"] - per_method["brute"]["mean"]) / gap
                if gap > 0
                else 0.0
            )
        summary[key] = entry
    return rows, summary
