"""Exact binary submodular minimization via max-flow, and alpha-beta swap.

The binary subproblem maps to an s-t min cut with the standard
reparameterization: for a pairwise table (A, B; C, D) with A + D <= B + C,
the energy is A + (C-A) x + (D-C) y + (B+C-A-D)(1-x) y, so excess mass goes
on terminal arcs and the cross term on an inter-site arc.  Max flow is a
BFS augmenting-path search (arcs stored in twin pairs, reverse = index^1),
which is exact and deterministic given arc insertion order.

The hot loops are numba-compiled when numba is importable and fall back to
the identical pure-Python code otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSubmodular

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True, nogil=True)
def _max_flow_kernel(first, nxt, to, cap, s, t, n_nodes):
    """Edmonds-Karp on twin-paired arcs; mutates cap into the residual."""
    parent = np.empty(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int64)
    flow = 0.0
    while True:
        for i in range(n_nodes):
            parent[i] = -1
        parent[s] = -2
        queue[0] = s
        head, tail = 0, 1
        found = False
        while head < tail and not found:
            u = queue[head]
            head += 1
            e = first[u]
            while e != -1:
                v = to[e]
                if parent[v] == -1 and cap[e] > 0.0:
                    parent[v] = e
                    if v == t:
                        found = True
                        break
                    queue[tail] = v
                    tail += 1
                e = nxt[e]
        if not found:
            return flow
        bottleneck = 1e300
        v = t
        while v != s:
            e = parent[v]
            if cap[e] < bottleneck:
                bottleneck = cap[e]
            v = to[e ^ 1]
        v = t
        while v != s:
            e = parent[v]
            cap[e] -= bottleneck
            cap[e ^ 1] += bottleneck
            v = to[e ^ 1]
        flow += bottleneck


@njit(cache=True, nogil=True)
def _source_side_kernel(first, nxt, to, cap, s, n_nodes):
    """Nodes reachable from the source in the residual graph."""
    side = np.zeros(n_nodes, dtype=np.bool_)
    queue = np.empty(n_nodes, dtype=np.int64)
    side[s] = True
    queue[0] = s
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        e = first[u]
        while e != -1:
            v = to[e]
            if cap[e] > 0.0 and not side[v]:
                side[v] = True
                queue[tail] = v
                tail += 1
            e = nxt[e]
    return side


@njit(cache=True, nogil=True)
def _fuse_kernel(theta, eu, ev, vaa, vab, vba, vbb):
    """Globally optimal two-state assignment; theta is (sites, 2)."""
    ns = theta.shape[0]
    ne = eu.shape[0]
    n_nodes = ns + 2
    s = ns
    t = ns + 1
    max_arcs = 2 * (ns + ne)
    first = np.full(n_nodes, -1, dtype=np.int64)
    nxt = np.empty(max_arcs, dtype=np.int64)
    to = np.empty(max_arcs, dtype=np.int64)
    cap = np.empty(max_arcs, dtype=np.float64)
    n_arcs = 0

    w = np.empty(ns, dtype=np.float64)
    for i in range(ns):
        w[i] = theta[i, 1] - theta[i, 0]

    for e in range(ne):
        u = eu[e]
        v = ev[e]
        w[u] += vba - vaa
        w[v] += vbb - vba
        ecap = vab + vba - vaa - vbb
        if ecap < 0.0:
            ecap = 0.0  # caller verified submodularity; clear float dust
        # arc u -> v cut when u stays on state 0 and v moves to state 1
        to[n_arcs] = v
        cap[n_arcs] = ecap
        nxt[n_arcs] = first[u]
        first[u] = n_arcs
        n_arcs += 1
        to[n_arcs] = u
        cap[n_arcs] = 0.0
        nxt[n_arcs] = first[v]
        first[v] = n_arcs
        n_arcs += 1

    for i in range(ns):
        if w[i] >= 0.0:
            a, b, c = s, i, w[i]
        else:
            a, b, c = i, t, -w[i]
        to[n_arcs] = b
        cap[n_arcs] = c
        nxt[n_arcs] = first[a]
        first[a] = n_arcs
        n_arcs += 1
        to[n_arcs] = a
        cap[n_arcs] = 0.0
        nxt[n_arcs] = first[b]
        first[b] = n_arcs
        n_arcs += 1

    _max_flow_kernel(first[:n_nodes], nxt[:n_arcs], to[:n_arcs], cap[:n_arcs], s, t, n_nodes)
    side = _source_side_kernel(first[:n_nodes], nxt[:n_arcs], to[:n_arcs], cap[:n_arcs], s, n_nodes)
    assign = np.empty(ns, dtype=np.int64)
    for i in range(ns):
        assign[i] = 0 if side[i] else 1
    return assign


@njit(cache=True, nogil=True)
def _sub_energy(theta, eu, ev, vaa, vab, vba, vbb, assign):
    total = 0.0
    for i in range(theta.shape[0]):
        total += theta[i, assign[i]]
    for e in range(eu.shape[0]):
        x = assign[eu[e]]
        y = assign[ev[e]]
        if x == 0:
            total += vaa if y == 0 else vab
        else:
            total += vba if y == 0 else vbb
    return total


@njit(cache=True, nogil=True)
def _fuse_into(theta, eu, ev, ns, ne, vaa, vab, vba, vbb,
               first, nxt, to, cap, w, parent, queue, side, proposal):
    """Workspace variant of the two-state fuse; writes into `proposal`."""
    n_nodes = ns + 2
    s = ns
    t = ns + 1
    for i in range(n_nodes):
        first[i] = -1
    n_arcs = 0
    for i in range(ns):
        w[i] = theta[i, 1] - theta[i, 0]
    ecap = vab + vba - vaa - vbb
    if ecap < 0.0:
        ecap = 0.0
    for e in range(ne):
        u = eu[e]
        v = ev[e]
        w[u] += vba - vaa
        w[v] += vbb - vba
        to[n_arcs] = v
        cap[n_arcs] = ecap
        nxt[n_arcs] = first[u]
        first[u] = n_arcs
        n_arcs += 1
        to[n_arcs] = u
        cap[n_arcs] = 0.0
        nxt[n_arcs] = first[v]
        first[v] = n_arcs
        n_arcs += 1
    for i in range(ns):
        if w[i] >= 0.0:
            a, b, c = s, i, w[i]
        else:
            a, b, c = i, t, -w[i]
        to[n_arcs] = b
        cap[n_arcs] = c
        nxt[n_arcs] = first[a]
        first[a] = n_arcs
        n_arcs += 1
        to[n_arcs] = a
        cap[n_arcs] = 0.0
        nxt[n_arcs] = first[b]
        first[b] = n_arcs
        n_arcs += 1

    # max flow (BFS augmenting paths) followed by source-side reachability
    while True:
        for i in range(n_nodes):
            parent[i] = -1
        parent[s] = -2
        queue[0] = s
        head, tail = 0, 1
        found = False
        while head < tail and not found:
            u = queue[head]
            head += 1
            e = first[u]
            while e != -1:
                v = to[e]
                if parent[v] == -1 and cap[e] > 0.0:
                    parent[v] = e
                    if v == t:
                        found = True
                        break
                    queue[tail] = v
                    tail += 1
                e = nxt[e]
        if not found:
            break
        bottleneck = 1e300
        v = t
        while v != s:
            e = parent[v]
            if cap[e] < bottleneck:
                bottleneck = cap[e]
            v = to[e ^ 1]
        v = t
        while v != s:
            e = parent[v]
            cap[e] -= bottleneck
            cap[e ^ 1] += bottleneck
            v = to[e ^ 1]
    for i in range(n_nodes):
        side[i] = False
    side[s] = True
    queue[0] = s
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        e = first[u]
        while e != -1:
            v = to[e]
            if cap[e] > 0.0 and not side[v]:
                side[v] = True
                queue[tail] = v
                tail += 1
            e = nxt[e]
    for i in range(ns):
        proposal[i] = 0 if side[i] else 1


@njit(cache=True, nogil=True)
def _abswap_kernel(site_cost, vtab, nu, nv, nbr_first, nbr_next, nbr_edge, assign, max_sweeps, tol):
    """In-place swap moves over lexicographic state pairs; returns sweep count.

    site_cost: (n, S) per-site per-state costs; vtab: (S, S) weighted pair
    potentials; (nu, nv): neighbor pair lists; nbr_* : per-site linked lists
    of incident edges (for folding fixed neighbors into sub-unaries).
    """
    n = site_cost.shape[0]
    n_states = site_cost.shape[1]
    n_edges = nu.shape[0]
    sub_idx = np.full(n, -1, dtype=np.int64)
    sub_sites = np.empty(n, dtype=np.int64)
    theta = np.empty((n, 2), dtype=np.float64)
    sub_eu = np.empty(max(n_edges, 1), dtype=np.int64)
    sub_ev = np.empty(max(n_edges, 1), dtype=np.int64)
    cur01 = np.empty(n, dtype=np.int64)
    proposal = np.empty(n, dtype=np.int64)
    # fuse workspace: graph over at most n sites + terminals
    max_arcs = 2 * (n + n_edges)
    ws_first = np.empty(n + 2, dtype=np.int64)
    ws_nxt = np.empty(max(max_arcs, 1), dtype=np.int64)
    ws_to = np.empty(max(max_arcs, 1), dtype=np.int64)
    ws_cap = np.empty(max(max_arcs, 1), dtype=np.float64)
    ws_w = np.empty(max(n, 1), dtype=np.float64)
    ws_parent = np.empty(n + 2, dtype=np.int64)
    ws_queue = np.empty(n + 2, dtype=np.int64)
    ws_side = np.empty(n + 2, dtype=np.bool_)

    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        changed = False
        for a in range(n_states):
            for b in range(a + 1, n_states):
                ns = 0
                for k in range(n):
                    if assign[k] == a or assign[k] == b:
                        sub_idx[k] = ns
                        sub_sites[ns] = k
                        ns += 1
                if ns == 0:
                    continue
                for i in range(ns):
                    k = sub_sites[i]
                    ca = site_cost[k, a]
                    cb = site_cost[k, b]
                    e = nbr_first[k]
                    while e != -1:
                        edge = nbr_edge[e]
                        other = nv[edge] if nu[edge] == k else nu[edge]
                        if sub_idx[other] == -1:
                            ca += vtab[a, assign[other]]
                            cb += vtab[b, assign[other]]
                        e = nbr_next[e]
                    theta[i, 0] = ca
                    theta[i, 1] = cb
                    cur01[i] = 0 if assign[k] == a else 1
                n_sub_edges = 0
                for e in range(n_edges):
                    iu = sub_idx[nu[e]]
                    iv = sub_idx[nv[e]]
                    if iu != -1 and iv != -1:
                        sub_eu[n_sub_edges] = iu
                        sub_ev[n_sub_edges] = iv
                        n_sub_edges += 1
                vaa = vtab[a, a]
                vab = vtab[a, b]
                vba = vtab[b, a]
                vbb = vtab[b, b]
                _fuse_into(
                    theta, sub_eu, sub_ev, ns, n_sub_edges, vaa, vab, vba, vbb,
                    ws_first, ws_nxt, ws_to, ws_cap, ws_w, ws_parent, ws_queue,
                    ws_side, proposal,
                )
                cur = _sub_energy(theta[:ns], sub_eu[:n_sub_edges], sub_ev[:n_sub_edges], vaa, vab, vba, vbb, cur01[:ns])
                new = _sub_energy(theta[:ns], sub_eu[:n_sub_edges], sub_ev[:n_sub_edges], vaa, vab, vba, vbb, proposal[:ns])
                if new < cur - tol:
                    for i in range(ns):
                        assign[sub_sites[i]] = a if proposal[i] == 0 else b
                    changed = True
                for i in range(ns):
                    sub_idx[sub_sites[i]] = -1
        if not changed:
            break
    return sweeps


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------


class FlowNetwork:
    """Directed s-t network; every added arc carries a zero-capacity twin."""

    def __init__(self, n_nodes: int, source: int, sink: int):
        if not (0 <= source < n_nodes and 0 <= sink < n_nodes and source != sink):
            raise ValueError("invalid source/sink")
        self.n_nodes = n_nodes
        self.source = source
        self.sink = sink
        self._to = []
        self._cap = []
        self._nxt = []
        self._first = [-1] * n_nodes

    def add_edge(self, u: int, v: int, capacity: float) -> None:
        if capacity < 0:
            raise ValueError("capacities must be nonnegative")
        for a, b, c in ((u, v, float(capacity)), (v, u, 0.0)):
            self._to.append(b)
            self._cap.append(c)
            self._nxt.append(self._first[a])
            self._first[a] = len(self._to) - 1

    def max_flow(self) -> tuple:
        """Returns (flow value, boolean source-side mask over nodes)."""
        first = np.asarray(self._first, dtype=np.int64)
        nxt = np.asarray(self._nxt, dtype=np.int64)
        to = np.asarray(self._to, dtype=np.int64)
        cap = np.asarray(self._cap, dtype=np.float64)
        if len(self._to) == 0:
            side = np.zeros(self.n_nodes, dtype=bool)
            side[self.source] = True
            return 0.0, side
        flow = _max_flow_kernel(first, nxt, to, cap, self.source, self.sink, self.n_nodes)
        side = _source_side_kernel(first, nxt, to, cap, self.source, self.n_nodes)
        return float(flow), np.asarray(side, dtype=bool)


@dataclass
class PairwiseEnergy:
    """Multi-state site energy with inner-product pair potential V(x, y) = 1 - x.y."""

    states: np.ndarray      # (S, m) allowed state vectors
    unary: np.ndarray       # (n, S) per-site per-state costs
    pair_weight: float
    neighbors: np.ndarray   # (E, 2) unordered site pairs

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.unary = np.asarray(self.unary, dtype=np.float64)
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64).reshape(-1, 2)
        self.n_sites = self.unary.shape[0]
        self.n_states = self.unary.shape[1]
        if self.states.shape[0] != self.n_states:
            raise ValueError("unary column count must match number of states")
        gram = self.states @ self.states.T
        self.vtab = self.pair_weight * (1.0 - gram)

    def check_submodular(self) -> None:
        """Swap inequality V(a,a)+V(b,b) <= V(a,b)+V(b,a) for every state pair."""
        v = self.vtab
        diag = np.diag(v)
        gap = (diag[:, None] + diag[None, :]) - (v + v.T)
        if np.max(gap) > 1e-9:
            a, b = np.unravel_index(np.argmax(gap), gap.shape)
            raise NotSubmodular(f"state pair ({a}, {b}) violates the swap inequality")

    def energy(self, assign: np.ndarray) -> float:
        total = float(self.unary[np.arange(self.n_sites), assign].sum())
        if self.neighbors.size:
            total += float(
                self.vtab[assign[self.neighbors[:, 0]], assign[self.neighbors[:, 1]]].sum()
            )
        return total


def _site_edge_lists(n_sites: int, neighbors: np.ndarray) -> tuple:
    """Linked lists of incident edges per site (both endpoints)."""
    n_entries = 2 * neighbors.shape[0]
    nbr_first = np.full(n_sites, -1, dtype=np.int64)
    nbr_next = np.empty(max(n_entries, 1), dtype=np.int64)
    nbr_edge = np.empty(max(n_entries, 1), dtype=np.int64)
    pos = 0
    for e in range(neighbors.shape[0]):
        for site in (neighbors[e, 0], neighbors[e, 1]):
            nbr_edge[pos] = e
            nbr_next[pos] = nbr_first[site]
            nbr_first[site] = pos
            pos += 1
    return nbr_first, nbr_next[:pos], nbr_edge[:pos]


_EDGE_CACHE: dict = {}


def _edge_arrays(n_sites: int, neighbors: np.ndarray) -> tuple:
    """Memoized (eu, ev, site edge lists) for a fixed adjacency."""
    key = (n_sites, neighbors.tobytes())
    hit = _EDGE_CACHE.get(key)
    if hit is None:
        if len(_EDGE_CACHE) > 64:
            _EDGE_CACHE.clear()
        eu = np.ascontiguousarray(neighbors[:, 0])
        ev = np.ascontiguousarray(neighbors[:, 1])
        hit = (eu, ev) + _site_edge_lists(n_sites, neighbors)
        _EDGE_CACHE[key] = hit
    return hit


def binary_fuse(energy: PairwiseEnergy) -> np.ndarray:
    """Globally optimal assignment of a two-state pairwise-submodular energy."""
    if energy.n_states != 2:
        raise ValueError("binary_fuse needs exactly two states per site")
    energy.check_submodular()
    theta = np.ascontiguousarray(energy.unary)
    eu = np.ascontiguousarray(energy.neighbors[:, 0])
    ev = np.ascontiguousarray(energy.neighbors[:, 1])
    v = energy.vtab
    return np.asarray(
        _fuse_kernel(theta, eu, ev, v[0, 0], v[0, 1], v[1, 0], v[1, 1]), dtype=np.int64
    )


def alpha_beta_swap(
    energy: PairwiseEnergy, init: np.ndarray, max_sweeps: int = 10
) -> np.ndarray:
    """Local minimization by swap moves; accepts only strict decreases.

    Sweeps state pairs lexicographically and terminates when a full sweep
    changes nothing or the sweep budget runs out.  The returned energy
    never exceeds the initial one.
    """
    energy.check_submodular()
    assign = np.array(init, dtype=np.int64).copy()
    if assign.shape[0] != energy.n_sites:
        raise ValueError("init assignment length mismatch")
    if np.any(assign < 0) or np.any(assign >= energy.n_states):
        raise ValueError("init assignment out of state range")
    eu, ev, nbr_first, nbr_next, nbr_edge = _edge_arrays(energy.n_sites, energy.neighbors)
    _abswap_kernel(
        np.ascontiguousarray(energy.unary),
        np.ascontiguousarray(energy.vtab),
        eu,
        ev,
        nbr_first,
        nbr_next,
        nbr_edge,
        assign,
        max_sweeps,
        1e-12,
    )
    return assign


def swap_minimize(
    site_cost: np.ndarray,
    vtab: np.ndarray,
    n_sites: int,
    neighbors: np.ndarray,
    init: np.ndarray,
    max_sweeps: int,
) -> np.ndarray:
    """Swap moves on precomputed tables (pair potential already weighted)."""
    eu, ev, nbr_first, nbr_next, nbr_edge = _edge_arrays(n_sites, neighbors)
    assign = np.array(init, dtype=np.int64).copy()
    _abswap_kernel(
        np.ascontiguousarray(site_cost),
        np.ascontiguousarray(vtab),
        eu,
        ev,
        nbr_first,
        nbr_next,
        nbr_edge,
        assign,
        max_sweeps,
        1e-12,
    )
    return assign
