"""Interaction graphs, α-subset clusters, the Ω/∂Ω classification and
α-percolation experiments."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.csgraph import connected_components as _cc

from . import gf2
from .codes import CssCode
from .gf2 import BinaryMatrix

STEINER_TERMINAL_LIMIT = 16
ENUMERATION_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected simple graph in CSR form."""

    indptr: np.ndarray
    indices: np.ndarray
    kind: str = "qubit-graph"
    w: int | None = None

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max(initial=0))

    @property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((np.ones(len(self.indices), np.int8), self.indices, self.indptr), shape=(self.n, self.n))

    @classmethod
    def from_adjacency(cls, a, kind: str = "graph") -> "InteractionGraph":
        a = sp.csr_matrix(a)
        a = ((a + a.T) > 0).astype(np.int8).tocsr()
        a.setdiag(0)
        a.eliminate_zeros()
        a.sort_indices()
        g = cls(a.indptr.astype(np.int64), a.indices.astype(np.int64), kind)
        return cls(g.indptr, g.indices, kind, g.max_degree)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], kind: str = "graph") -> "InteractionGraph":
        e = np.array(list(edges), dtype=np.int64).reshape(-1, 2)
        a = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        return cls.from_adjacency(a, kind)

    @classmethod
    def from_networkx(cls, g) -> "InteractionGraph":
        nodes = sorted(g.nodes())
        pos = {v: i for i, v in enumerate(nodes)}
        return cls.from_edges(len(nodes), ((pos[u], pos[v]) for u, v in g.edges()))

    def edges(self) -> list[tuple[int, int]]:
        return [(u, int(v)) for u in range(self.n) for v in self.neighbors(u) if u < v]


def qubit_graph(h: BinaryMatrix) -> InteractionGraph:
    """Bits are adjacent when some row of ``h`` contains both."""
    return InteractionGraph.from_adjacency(h.csc.T @ h.csc, "qubit-graph")


def check_graph(h: BinaryMatrix) -> InteractionGraph:
    """Rows are adjacent when they share a bit."""
    return InteractionGraph.from_adjacency(h.csr @ h.csr.T, "check-graph")


def build_graphs(c: CssCode) -> dict[str, InteractionGraph]:
    """Qubit graphs seen by X and Z errors, and the two check graphs."""
    return {
        "qubit_graph_X": qubit_graph(c.hz),
        "qubit_graph_Z": qubit_graph(c.hx),
        "check_graph_X": check_graph(c.hx),
        "check_graph_Z": check_graph(c.hz),
    }


def path_graph(n: int) -> InteractionGraph:
    return InteractionGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def random_regular_graph(degree: int, n: int, seed: int) -> InteractionGraph:
    import networkx as nx

    return InteractionGraph.from_networkx(nx.random_regular_graph(degree, n, seed=seed))


# ---------------------------------------------------------------------------
# connected components


@dataclass
class ClusterDecomposition:
    clusters: list[list[int]]

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]

    @property
    def largest(self) -> int:
        return max(self.sizes, default=0)


def _support(v, n: int) -> np.ndarray:
    if isinstance(v, (set, frozenset, list, tuple)) and (len(v) == 0 or not hasattr(v, "shape")):
        mask = np.zeros(n, bool)
        mask[list(v)] = True
        return mask
    arr = gf2.as_bits(v, n).astype(bool)
    return arr


def connected_components(g: InteractionGraph, support) -> ClusterDecomposition:
    """Components of the subgraph induced by ``support`` (0/1 vector or vertex set)."""
    mask = _support(support, g.n)
    verts = np.flatnonzero(mask)
    if len(verts) == 0:
        return ClusterDecomposition([])
    sub = g.csr[verts][:, verts]
    _, labels = _cc(sub, directed=False)
    order = np.argsort(labels, kind="stable")
    groups = np.split(verts[order], np.flatnonzero(np.diff(labels[order])) + 1)
    clusters = sorted((sorted(gr.tolist()) for gr in groups), key=lambda c: c[0])
    return ClusterDecomposition(clusters)


def _graph_components(g: InteractionGraph) -> np.ndarray:
    return _cc(g.csr, directed=False)[1]


# ---------------------------------------------------------------------------
# MaxConn_α


def _alpha(alpha) -> Fraction:
    a = Fraction(alpha).limit_denominator(10**6)
    if not 0 < a <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    return a


def is_alpha_subset(g: InteractionGraph, A: set[int], B: Iterable[int], alpha) -> bool:
    B = set(B)
    if not B:
        return False
    a = _alpha(alpha)
    if len(A & B) < a * len(B):
        return False
    return len(connected_components(g, B).clusters) == 1


@njit(cache=True)
def _steiner_tables(indptr, indices, weight, terms):
    """Node-weighted Dreyfus–Wagner over all terminal subsets.

    dp[S, v] is the least total weight of a connected set containing the
    terminals in S and vertex v.  ``split``/``pred`` record how each entry was
    obtained so the optimal set can be rebuilt.
    """
    t = terms.shape[0]
    V = weight.shape[0]
    F = 1 << t
    INF = 1 << 40
    dp = np.full((F, V), INF, np.int64)
    split = np.full((F, V), -1, np.int64)
    pred = np.full((F, V), -1, np.int64)
    for i in range(t):
        dp[1 << i, terms[i]] = weight[terms[i]]
    done = np.zeros(V, np.bool_)
    for S in range(1, F):
        if S & (S - 1):
            sub = (S - 1) & S
            while sub > 0:
                other = S ^ sub
                if sub < other:
                    for v in range(V):
                        c = dp[sub, v] + dp[other, v] - weight[v]
                        if c < dp[S, v]:
                            dp[S, v] = c
                            split[S, v] = sub
                sub = (sub - 1) & S
        for v in range(V):
            done[v] = False
        for _ in range(V):
            u = -1
            best = INF
            for v in range(V):
                if not done[v] and dp[S, v] < best:
                    best = dp[S, v]
                    u = v
            if u < 0:
                break
            done[u] = True
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                c = best + weight[v]
                if c < dp[S, v]:
                    dp[S, v] = c
                    pred[S, v] = u
                    split[S, v] = -1
    return dp, split, pred


def _steiner_rebuild(S: int, v: int, split, pred, out: set):
    stack = [(S, v)]
    while stack:
        S, v = stack.pop()
        out.add(int(v))
        if pred[S, v] >= 0:
            stack.append((S, int(pred[S, v])))
        elif split[S, v] >= 0:
            sub = int(split[S, v])
            stack.append((sub, v))
            stack.append((S ^ sub, v))


def _zero_one_dist(g: InteractionGraph, sources: Sequence[int], weight: np.ndarray) -> np.ndarray:
    """Node-weighted distances (target weight counted, sources free)."""
    dist = np.full(g.n, np.iinfo(np.int64).max, np.int64)
    dq = deque()
    for s in sources:
        dist[s] = 0
        dq.appendleft(s)
    while dq:
        u = dq.popleft()
        for v in g.neighbors(u):
            nd = dist[u] + weight[v]
            if nd < dist[v]:
                dist[v] = nd
                if weight[v] == 0:
                    dq.appendleft(int(v))
                else:
                    dq.append(int(v))
    return dist


def _pad(g: InteractionGraph, A_mask: np.ndarray, B: set[int], target: int) -> set[int]:
    """Grow connected B to ``target`` vertices, taking A-vertices first."""
    B = set(B)
    while len(B) < target:
        frontier = sorted({int(v) for u in B for v in g.neighbors(u)} - B)
        if not frontier:
            break
        pick = next((v for v in frontier if A_mask[v]), frontier[0])
        B.add(pick)
    return B


@dataclass
class MaxConnResult:
    size: int
    witness: set[int]
    exact: bool
    method: str

    def __iter__(self):
        return iter((self.size, self.witness))


def _cluster_groups(g, clusters, weight, budget):
    """Partition clusters into groups that could share one α-subset."""
    t = len(clusters)
    parent = list(range(t))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    reps = [c[0] for c in clusters]
    for i in range(t):
        if t == 1:
            break
        d = _zero_one_dist(g, clusters[i], weight)
        for j in range(i + 1, t):
            # the path cost counts the far cluster's vertices as zero
            if d[reps[j]] <= budget:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(t):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def max_conn_alpha(g: InteractionGraph, A, alpha=Fraction(1, 2), mode: str = "exact",
                   method: str = "steiner", budget: int = ENUMERATION_BUDGET) -> MaxConnResult:
    """Size of the largest connected B with |A ∩ B| ≥ α|B|, with a witness.

    exact/steiner: clusters of A are joined by node-weighted Steiner trees
    (A-vertices cost nothing); a set of clusters K is usable iff its Steiner
    cost c satisfies α(a_K + c) ≤ a_K, and then B can be padded up to
    min(component size, floor(a_K/α)).
    exact/enumerate: canonical enumeration of connected vertex sets.
    greedy: nearest-cluster absorption, a certified lower bound.
    """
    a = _alpha(alpha)
    A_mask = _support(A, g.n)
    if not A_mask.any():
        return MaxConnResult(0, set(), True, mode)
    if mode == "greedy":
        return _max_conn_greedy(g, A_mask, a)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if method == "enumerate":
        return _max_conn_enumerate(g, A_mask, a, budget)
    if method != "steiner":
        raise ValueError(f"unknown method {method!r}")
    return _max_conn_steiner(g, A_mask, a)


def _max_conn_steiner(g, A_mask, a: Fraction) -> MaxConnResult:
    clusters = connected_components(g, A_mask).clusters
    weight = (~A_mask).astype(np.int64)
    comp = _graph_components(g)
    comp_size = np.bincount(comp)
    total_a = int(A_mask.sum())
    budget = math.floor(total_a * (1 - a) / a)
    best = (0, None, None)  # value, (group, mask), tables
    for group in _cluster_groups(g, clusters, weight, budget):
        cl = [clusters[i] for i in group]
        if len(cl) > STEINER_TERMINAL_LIMIT:
            raise BudgetExceeded(f"{len(cl)} interacting clusters exceed Steiner limit")
        sizes = np.array([len(c) for c in cl], np.int64)
        csize = int(comp_size[comp[cl[0][0]]])
        terms = np.array([c[0] for c in cl], np.int64)
        dp, split, pred = _steiner_tables(g.indptr, g.indices, weight, terms)
        cost = dp.min(axis=1)
        for S in range(1, 1 << len(cl)):
            ak = int(sizes[[i for i in range(len(cl)) if S >> i & 1]].sum())
            if cost[S] * a.numerator <= ak * (a.denominator - a.numerator):
                val = min(csize, ak * a.denominator // a.numerator)
                if val > best[0]:
                    best = (val, (cl, S), (dp, split, pred))
    val, (cl, S), (dp, split, pred) = best
    v = int(np.argmin(dp[S]))
    B: set[int] = set()
    _steiner_rebuild(S, v, split, pred, B)
    for i, c in enumerate(cl):
        if S >> i & 1:
            B.update(c)
    B = _pad(g, A_mask, B, val)
    return MaxConnResult(val, B, True, "steiner")


def _max_conn_greedy(g, A_mask, a: Fraction) -> MaxConnResult:
    clusters = connected_components(g, A_mask).clusters
    weight = (~A_mask).astype(np.int64)
    comp = _graph_components(g)
    comp_size = np.bincount(comp)
    best_val, best_B = 0, set()
    for start in clusters:
        B = set(start)
        na = len(B)
        cost = 0
        absorbed = {tuple(start)}
        while True:
            dist = _zero_one_dist(g, sorted(B), weight)
            # nearest cluster not yet inside B
            cand = None
            for c in clusters:
                if tuple(c) in absorbed:
                    continue
                d = int(dist[c[0]])
                if d == np.iinfo(np.int64).max:
                    continue
                if cand is None or d < cand[0]:
                    cand = (d, c)
            if cand is None:
                break
            d, c = cand
            path = _trace_path(g, B, c[0], weight)
            newB = B | set(path) | set(c)
            new_a = int(A_mask[list(newB)].sum())
            new_cost = len(newB) - new_a
            if new_cost * a.numerator <= new_a * (a.denominator - a.numerator):
                B, na, cost = newB, new_a, new_cost
                for cc in clusters:
                    if set(cc) <= B:
                        absorbed.add(tuple(cc))
            else:
                break
        val = min(int(comp_size[comp[start[0]]]), na * a.denominator // a.numerator)
        if val > best_val:
            best_val, best_B = val, _pad(g, A_mask, B, val)
    return MaxConnResult(best_val, best_B, False, "greedy")


def _trace_path(g, B: set[int], target: int, weight) -> list[int]:
    """Cheapest node-weighted path from B to target (0-1 BFS with parents)."""
    dist = {v: 0 for v in B}
    parent: dict[int, int] = {}
    dq = deque(sorted(B))
    while dq:
        u = dq.popleft()
        if u == target:
            break
        for v in g.neighbors(u):
            v = int(v)
            nd = dist[u] + int(weight[v])
            if nd < dist.get(v, 1 << 60):
                dist[v] = nd
                parent[v] = u
                if weight[v] == 0:
                    dq.appendleft(v)
                else:
                    dq.append(v)
    path = []
    v = target
    while v not in B:
        path.append(v)
        v = parent[v]
    return path


def connected_subsets(g: InteractionGraph, budget: int = ENUMERATION_BUDGET):
    """Yield every connected vertex set once, as an int bitmask.

    Each set is grown from its smallest vertex; a vertex joins the extension
    only through the first chosen vertex adjacent to it.
    """
    nbr = [0] * g.n
    for v in range(g.n):
        for u in g.neighbors(v):
            nbr[v] |= 1 << int(u)
    count = 0

    def extend(S, ext, closed, root):
        nonlocal count
        count += 1
        if count > budget:
            raise BudgetExceeded("connected-subset enumeration budget exceeded")
        yield S
        while ext:
            low = ext & -ext
            w = low.bit_length() - 1
            ext ^= low
            new = nbr[w] & ~closed & ~((1 << (root + 1)) - 1)
            yield from extend(S | low, ext | new, closed | new, root)

    for r in range(g.n):
        start = nbr[r] & ~((1 << (r + 1)) - 1)
        yield from extend(1 << r, start, start | (1 << r) | ((1 << r) - 1), r)


def _max_conn_enumerate(g, A_mask, a: Fraction, budget) -> MaxConnResult:
    amask = sum(1 << int(v) for v in np.flatnonzero(A_mask))
    best, best_S = 0, 0
    for S in connected_subsets(g, budget):
        size = S.bit_count()
        if size > best and (S & amask).bit_count() * a.denominator >= a.numerator * size:
            best, best_S = size, S
    wit = {i for i in range(g.n) if best_S >> i & 1}
    return MaxConnResult(best, wit, True, "enumerate")


# ---------------------------------------------------------------------------
# Ω / ∂Ω


class Region(str, Enum):
    INSIDE = "Inside"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"


RWProvider = Callable[[np.ndarray], np.ndarray]


def identity_reduction(x: np.ndarray) -> np.ndarray:
    return x


def _as_provider(rw) -> RWProvider:
    if rw is None:
        return identity_reduction
    if hasattr(rw, "representative"):
        return rw.representative
    return rw


def is_inside(x0, x, g: InteractionGraph, rw, delta_probe: int) -> bool:
    e = gf2.as_bits(x, g.n) ^ gf2.as_bits(x0, g.n)
    red = _as_provider(rw)(e)
    return 2 * max_conn_alpha(g, red, Fraction(1, 2)).size <= delta_probe


def boundary_radius(delta_probe: int) -> int:
    """Largest Hamming distance d with d < δ/4."""
    return math.ceil(delta_probe / 4) - 1


def omega_membership(x0, x, g: InteractionGraph, rw=None, delta_probe: int = 8,
                     boundary: str = "exact", budget: int = 10**6) -> Region:
    """Classify x relative to the component Ω around x0.

    Inside: MaxConn_{1/2} of the reduced difference is at most δ/2.
    Boundary: not inside, but some inside configuration lies at Hamming
    distance < δ/4.  boundary="exact" searches that ball directly;
    boundary="reduction" uses the mass removed by ``reduce_to_omega`` instead,
    which is cheaper but can only under-report the boundary.
    """
    x0 = gf2.as_bits(x0, g.n)
    x = gf2.as_bits(x, g.n)
    if is_inside(x0, x, g, rw, delta_probe):
        return Region.INSIDE
    if boundary == "exact":
        R = boundary_radius(delta_probe)
        size = sum(math.comb(g.n, j) for j in range(1, R + 1))
        if size > budget:
            raise BudgetExceeded(f"Hamming ball of {size} points exceeds budget")
        for j in range(1, R + 1):
            for flips in combinations(range(g.n), j):
                y = x.copy()
                y[list(flips)] ^= 1
                if is_inside(x0, y, g, rw, delta_probe):
                    return Region.BOUNDARY
        return Region.OUTSIDE
    if boundary == "reduction":
        z, removed = reduce_to_omega(x, x0, g, rw, Fraction(1, 2), delta_probe / 2)
        if int((z ^ x).sum()) < delta_probe / 4:
            return Region.BOUNDARY
        return Region.OUTSIDE
    raise ValueError(f"unknown boundary mode {boundary!r}")


def classify_all(g: InteractionGraph, x0, delta_probe: int, rw=None) -> np.ndarray:
    """Region codes (0 inside, 1 boundary, 2 outside) for all 2^n configurations.

    Configurations are indexed by integers with bit i = coordinate i.
    """
    n = g.n
    if n > 24:
        raise BudgetExceeded("full classification needs n <= 24")
    x0 = gf2.as_bits(x0, n)
    N = 1 << n
    bits = ((np.arange(N)[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    inside = np.array([is_inside(x0, bits[i], g, rw, delta_probe) for i in range(N)])
    R = boundary_radius(delta_probe)
    near = np.zeros(N, bool)
    idx = np.arange(N)
    for j in range(1, R + 1):
        for flips in combinations(range(n), j):
            mask = sum(1 << f for f in flips)
            near |= inside[idx ^ mask]
    region = np.full(N, 2, np.int8)
    region[near] = 1
    region[inside] = 0
    return region


def reduce_to_omega(y, x0, g: InteractionGraph, rw=None, alpha=Fraction(1, 2), threshold: float = 4):
    """Strip maximal connected α-subsets of the reduced difference y - x0
    until MaxConn_α is at most ``threshold``.  Returns (z, removed sets)."""
    x0 = gf2.as_bits(x0, g.n)
    y = gf2.as_bits(y, g.n).copy()
    reduce = _as_provider(rw)
    removed: list[set[int]] = []
    while True:
        e = reduce(y ^ x0).copy()
        res = max_conn_alpha(g, e, alpha)
        if res.size <= threshold:
            return x0 ^ e, removed
        e[list(res.witness)] = 0
        removed.append(res.witness)
        y = x0 ^ e


# ---------------------------------------------------------------------------
# α-percolation


def binary_entropy_bits(a: float) -> float:
    if a in (0, 1):
        return 0.0
    return -a * math.log2(a) - (1 - a) * math.log2(1 - a)


@dataclass
class PercolationParams:
    p: float
    alpha: Fraction
    trials: int
    t_grid: list[int]
    w: int = 3
    q: float = field(init=False)
    phi: float = field(init=False)

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        self.alpha = _alpha(self.alpha)
        self.phi = percolation_phi(self.w)
        self.q = percolation_q(self.p, float(self.alpha), self.w)


def percolation_phi(w: int) -> float:
    if w < 3:
        raise ValueError("degree bound must be at least 3")
    return (w - 1) * (1 + 1 / (w - 2)) ** (w - 2)


def percolation_q(p: float, alpha: float, w: int) -> float:
    """(1-p)^{w-1-α} p^α 2^{h(α)} Φ, with h the binary entropy in bits."""
    return (1 - p) ** (w - 1 - alpha) * p ** alpha * 2 ** binary_entropy_bits(alpha) * percolation_phi(w)


def percolation_bound(n_vertices: int, w: int, q: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if q >= 1:
        return np.full(t.shape, np.nan)
    return n_vertices * ((w - 1) / (w - 2)) ** 2 * q ** t / (1 - q)


@dataclass
class TailTable:
    t: list[int]
    empirical: list[float]
    theory: list[float]
    trials: int
    p: float
    alpha: Fraction
    q: float
    bound_applicable: bool
    exact_trials: int
    seed: int | None = None
    values: list[int] = field(default_factory=list)

    def rows(self):
        for t, e, b in zip(self.t, self.empirical, self.theory):
            yield {"t": t, "empirical_tail": e, "theory_bound": b, "trials": self.trials,
                   "p": self.p, "alpha": str(self.alpha), "seed": self.seed}

    def violations(self) -> list[int]:
        if not self.bound_applicable:
            return []
        return [t for t, e, b in zip(self.t, self.empirical, self.theory) if e > b]


def percolation_experiment(g: InteractionGraph, pp: PercolationParams, rng: np.random.Generator,
                           seed: int | None = None) -> TailTable:
    """Empirical P[MaxConn_α ≥ t] for i.i.d. site occupation, next to the bound."""
    w = max(pp.w, g.max_degree)
    q = percolation_q(pp.p, float(pp.alpha), w)
    values = []
    exact_trials = 0
    for _ in range(pp.trials):
        occ = rng.random(g.n) < pp.p
        try:
            res = max_conn_alpha(g, occ, pp.alpha, "exact")
        except BudgetExceeded:
            res = max_conn_alpha(g, occ, pp.alpha, "greedy")
        exact_trials += res.exact
        values.append(res.size)
    vals = np.array(values)
    emp = [float(np.mean(vals >= t)) for t in pp.t_grid]
    theory = percolation_bound(g.n, w, q, pp.t_grid).tolist()
    return TailTable(list(pp.t_grid), emp, theory, pp.trials, pp.p, pp.alpha, q, q < 1, exact_trials,
                     seed, values)
