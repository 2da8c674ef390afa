"""Reduced weights, confinement scans, distance bounds and Knill–Laflamme checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from numba import njit

from . import gf2
from .codes import CssCode, PauliErrorPair
from .gf2 import BinaryMatrix

EXACT_RANK_LIMIT = 24
ENUMERATION_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    pass


@njit(cache=True)
def _popcount64(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((v * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True)
def _gray_coset_min(x, basis):
    """Minimum weight of x + span(basis) by a Gray-code walk; returns (w, mask)."""
    r = basis.shape[0]
    nw = x.shape[0]
    cur = x.copy()
    best = 0
    for j in range(nw):
        best += _popcount64(cur[j])
    best_code = 0
    code = 0
    for step in range(1, 1 << r):
        # bit that flips between consecutive Gray codes
        t = step
        b = 0
        while (t & 1) == 0:
            t >>= 1
            b += 1
        code ^= 1 << b
        wgt = 0
        for j in range(nw):
            cur[j] ^= basis[b, j]
            wgt += _popcount64(cur[j])
        if wgt < best:
            best = wgt
            best_code = code
    return best, best_code


@njit(cache=True)
def _gray_low_weight(basis, max_w, out):
    """Collect nonzero span elements of weight <= max_w into ``out`` (rows of
    packed words); returns how many were found, counting past capacity."""
    r = basis.shape[0]
    nw = basis.shape[1]
    cur = np.zeros(nw, np.uint64)
    found = 0
    for step in range(1, 1 << r):
        t = step
        b = 0
        while (t & 1) == 0:
            t >>= 1
            b += 1
        wgt = 0
        for j in range(nw):
            cur[j] ^= basis[b, j]
            wgt += _popcount64(cur[j])
        if wgt <= max_w:
            if found < out.shape[0]:
                out[found] = cur
            found += 1
    return found


@dataclass
class ReducedWeightResult:
    input_weight: int
    reduced_weight: int
    minimizer: np.ndarray
    exact: bool


class ReducedWeight:
    """Reduced-weight provider for errors modulo the row space of ``dual``.

    ``dual`` holds the stabilizer rows acting on the error type being reduced
    (hx rows for X-type errors).  ``mode`` is "exact", "greedy" or "auto";
    auto picks exact when the rank fits the enumeration budget.
    """

    def __init__(self, dual: BinaryMatrix, mode: str = "auto"):
        self.dual = dual
        self.n = dual.cols
        rr = gf2.row_reduce(dual, track=False) if dual.rows else None
        self.rank = rr.rank if rr is not None else 0
        if mode == "auto":
            mode = "exact" if self.rank <= EXACT_RANK_LIMIT else "greedy"
        if mode == "exact" and self.rank > EXACT_RANK_LIMIT:
            raise BudgetExceeded(f"rank {self.rank} exceeds exact limit {EXACT_RANK_LIMIT}")
        if mode not in ("exact", "greedy"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self._basis = rr.rref_words[: self.rank].copy() if rr is not None else np.zeros((0, gf2.n_words(self.n)), np.uint64)
        self._row_w = dual.row_weights().astype(np.int64)
        self._short: np.ndarray | None = None
        self._short_cap = 0

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def prepare_short(self, max_weight: int, capacity: int = 1 << 20) -> bool:
        """Cache every stabilizer of weight < 2*max_weight.

        If |x| <= max_weight and |x + s| < |x| then |s| < 2|x|, so the cache
        settles ‖x‖ exactly for such x without walking the whole span.
        Returns False (and caches nothing) when the rank or count is too large.
        """
        if self.rank > EXACT_RANK_LIMIT:
            return False
        if self.rank == 0:
            self._short = np.zeros((0, gf2.n_words(self.n)), np.uint64)
            self._short_cap = max_weight
            return True
        out = np.zeros((capacity, self._basis.shape[1]), np.uint64)
        found = _gray_low_weight(self._basis, 2 * max_weight - 1, out)
        if found > capacity:
            return False
        self._short = out[:found].copy()
        self._short_cap = max_weight
        return True

    def __call__(self, x) -> ReducedWeightResult:
        x = gf2.as_bits(x, self.n)
        if self._short is not None and int(x.sum()) <= self._short_cap:
            return self._from_short(x)
        if self.mode == "exact":
            return self._exact(x)
        return self._greedy(x)

    def _from_short(self, x):
        w0 = int(x.sum())
        if not len(self._short):
            return ReducedWeightResult(w0, w0, x.copy(), True)
        px = gf2.pack_bits(x)
        w = np.bitwise_count(self._short ^ px).sum(axis=1)
        i = int(np.argmin(w))
        if w[i] >= w0:
            return ReducedWeightResult(w0, w0, x.copy(), True)
        return ReducedWeightResult(w0, int(w[i]), gf2.unpack_bits(self._short[i] ^ px, self.n), True)

    def representative(self, x) -> np.ndarray:
        return self(x).minimizer

    def _exact(self, x):
        w0 = int(x.sum())
        if self.rank == 0:
            return ReducedWeightResult(w0, w0, x.copy(), True)
        best, code = _gray_coset_min(gf2.pack_bits(x), self._basis)
        shift = np.zeros(gf2.n_words(self.n), np.uint64)
        for b in range(self.rank):
            if (code >> b) & 1:
                shift ^= self._basis[b]
        y = gf2.unpack_bits(gf2.pack_bits(x) ^ shift, self.n)
        return ReducedWeightResult(w0, int(best), y, True)

    def _greedy(self, x):
        """Steepest single-row descent; ties go to the lowest row index."""
        y = x.copy()
        w0 = int(x.sum())
        if self.dual.rows == 0:
            return ReducedWeightResult(w0, w0, y, False)
        csr = self.dual.csr
        while True:
            overlap = csr @ y.astype(np.int64)
            delta = self._row_w - 2 * overlap
            i = int(np.argmin(delta))
            if delta[i] >= 0:
                break
            y[self.dual.row_support(i)] ^= 1
        return ReducedWeightResult(w0, int(y.sum()), y, False)


def reduced_weight(h_dual_rows: BinaryMatrix, x, mode: str = "exact") -> ReducedWeightResult:
    return ReducedWeight(h_dual_rows, mode)(x)


def _side_mats(c: CssCode, side: str) -> tuple[BinaryMatrix, BinaryMatrix]:
    """(syndrome matrix, stabilizer rows) for the chosen error type."""
    side = side.upper()
    if side == "X":
        return c.hz, c.hx
    if side == "Z":
        return c.hx, c.hz
    raise ValueError("side must be 'X' or 'Z'")


# ---------------------------------------------------------------------------
# confinement scan


@dataclass
class ConfinementReport:
    gamma_hat: dict[int, Fraction]
    witnesses: dict[int, list[int]]
    probe_cap: int
    exhaustive: bool
    reduced_exact: bool
    violations: list[dict] = field(default_factory=list)
    scanned: int = 0
    side: str = "X"
    mode: str = "exact"
    seed: int | None = None

    def records(self) -> list[dict]:
        out = []
        for w in sorted(self.gamma_hat):
            out.append({"reduced_weight": w, "min_ratio": float(self.gamma_hat[w]),
                        "min_ratio_exact": str(self.gamma_hat[w]),
                        "witness_indices": self.witnesses[w], "mode": self.mode,
                        "side": self.side, "seed": self.seed})
        return out


def random_connected_support(adj: list[np.ndarray], size: int, rng: np.random.Generator) -> list[int]:
    """Grow a connected vertex set by random BFS-frontier additions."""
    n = len(adj)
    start = int(rng.integers(n))
    chosen = [start]
    seen = {start}
    frontier = [int(v) for v in adj[start] if v != start]
    fset = set(frontier)
    while len(chosen) < size and frontier:
        j = int(rng.integers(len(frontier)))
        v = frontier[j]
        frontier[j] = frontier[-1]
        frontier.pop()
        fset.discard(v)
        if v in seen:
            continue
        seen.add(v)
        chosen.append(v)
        for u in adj[v]:
            u = int(u)
            if u not in seen and u not in fset:
                frontier.append(u)
                fset.add(u)
    return sorted(chosen)


def qubit_adjacency(h: BinaryMatrix) -> list[np.ndarray]:
    """Neighbours of each bit: bits sharing at least one row of ``h``."""
    a = (h.csc.T @ h.csc).tocsr()
    a.setdiag(0)
    a.eliminate_zeros()
    return [a.indices[a.indptr[i]:a.indptr[i + 1]].copy() for i in range(h.cols)]


def confinement_scan(c: CssCode, side: str = "X", weight_cap: int = 2, mode: str = "exact",
                     gamma: float | None = None, samples: int = 1000, rng: np.random.Generator | None = None,
                     seed: int | None = None, budget: int = ENUMERATION_BUDGET,
                     reduced: ReducedWeight | None = None) -> ConfinementReport:
    """Minimum |H x| / ‖x‖ per reduced weight over scanned errors x."""
    h, dual = _side_mats(c, side)
    rw = reduced if reduced is not None else ReducedWeight(dual, "auto")
    short = rw.prepare_short(weight_cap)
    n = c.n
    best: dict[int, Fraction] = {}
    wit: dict[int, list[int]] = {}
    violations: list[dict] = []
    scanned = 0

    def record(support):
        nonlocal scanned
        x = np.zeros(n, np.uint8)
        x[list(support)] = 1
        red = rw(x).reduced_weight
        scanned += 1
        if red == 0:
            return
        s = int(gf2.mat_vec(h, x).sum())
        ratio = Fraction(s, red)
        if red not in best or ratio < best[red]:
            best[red] = ratio
            wit[red] = list(map(int, support))
        if gamma is not None and ratio < gamma:
            violations.append({"reduced_weight": red, "syndrome_weight": s, "ratio": float(ratio),
                               "witness_indices": list(map(int, support))})

    if mode == "exact":
        total = sum(math.comb(n, w) for w in range(1, weight_cap + 1))
        if total > budget:
            raise BudgetExceeded(f"{total} errors exceed budget {budget}")
        for w in range(1, weight_cap + 1):
            for support in combinations(range(n), w):
                record(support)
        exhaustive = True
    elif mode == "sampled":
        if rng is None:
            rng = np.random.default_rng(seed)
        adj = qubit_adjacency(h)
        for _ in range(samples):
            size = int(rng.integers(1, weight_cap + 1))
            record(random_connected_support(adj, size, rng))
        exhaustive = False
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ConfinementReport(best, wit, weight_cap, exhaustive, rw.exact or short, violations, scanned,
                             side.upper(), mode, seed)


# ---------------------------------------------------------------------------
# enumeration kernels shared by the distance and KL checks


@njit(cache=True)
def _first_nontrivial(cols_syn, cols_log, n, w):
    """First weight-w support (lexicographic) whose syndrome vanishes while
    some logical pairing is odd.  Columns are packed words per bit."""
    idx = np.arange(w)
    ns = cols_syn.shape[1]
    nl = cols_log.shape[1]
    acc_s = np.zeros(ns, np.uint64)
    acc_l = np.zeros(nl, np.uint64)
    count = 0
    while True:
        for j in range(ns):
            acc_s[j] = 0
        for j in range(nl):
            acc_l[j] = 0
        for t in range(w):
            for j in range(ns):
                acc_s[j] ^= cols_syn[idx[t], j]
            for j in range(nl):
                acc_l[j] ^= cols_log[idx[t], j]
        count += 1
        zero = True
        for j in range(ns):
            if acc_s[j] != 0:
                zero = False
                break
        if zero:
            for j in range(nl):
                if acc_l[j] != 0:
                    return idx.copy(), count
        # next combination
        i = w - 1
        while i >= 0 and idx[i] == n - w + i:
            i -= 1
        if i < 0:
            return np.empty(0, np.int64), count
        idx[i] += 1
        for t in range(i + 1, w):
            idx[t] = idx[t - 1] + 1


@njit(cache=True)
def _first_pauli_violation(xs, xl, zs, zl, n, w):
    """Over supports of size w and all 3^w Pauli labellings, the first P with
    zero syndrome and a nonzero logical action.  Label 0=X, 1=Y, 2=Z."""
    idx = np.arange(w)
    nxs, nxl, nzs, nzl = xs.shape[1], xl.shape[1], zs.shape[1], zl.shape[1]
    a_s = np.zeros(nxs, np.uint64)
    a_l = np.zeros(nxl, np.uint64)
    b_s = np.zeros(nzs, np.uint64)
    b_l = np.zeros(nzl, np.uint64)
    lab = np.zeros(w, np.int64)
    count = 0
    while True:
        for pat in range(3 ** w):
            p = pat
            for t in range(w):
                lab[t] = p % 3
                p //= 3
            a_s[:] = 0
            a_l[:] = 0
            b_s[:] = 0
            b_l[:] = 0
            for t in range(w):
                q = idx[t]
                if lab[t] != 2:
                    for j in range(nxs):
                        a_s[j] ^= xs[q, j]
                    for j in range(nxl):
                        a_l[j] ^= xl[q, j]
                if lab[t] != 0:
                    for j in range(nzs):
                        b_s[j] ^= zs[q, j]
                    for j in range(nzl):
                        b_l[j] ^= zl[q, j]
            count += 1
            ok = True
            for j in range(nxs):
                if a_s[j] != 0:
                    ok = False
            for j in range(nzs):
                if b_s[j] != 0:
                    ok = False
            if ok:
                nontrivial = False
                for j in range(nxl):
                    if a_l[j] != 0:
                        nontrivial = True
                for j in range(nzl):
                    if b_l[j] != 0:
                        nontrivial = True
                if nontrivial:
                    return idx.copy(), lab.copy(), count
        i = w - 1
        while i >= 0 and idx[i] == n - w + i:
            i -= 1
        if i < 0:
            return np.empty(0, np.int64), np.empty(0, np.int64), count
        idx[i] += 1
        for t in range(i + 1, w):
            idx[t] = idx[t - 1] + 1


def _packed_columns(m: np.ndarray) -> np.ndarray:
    """Pack the columns of a dense (rows, n) 0/1 array: result (n, words)."""
    m = np.asarray(m, np.uint8)
    if m.shape[0] == 0:
        return np.zeros((m.shape[1], 1), np.uint64)
    return gf2.pack_bits(np.ascontiguousarray(m.T))


def _side_columns(c: CssCode, side: str):
    """Packed syndrome columns and logical-pairing columns for one error type."""
    h, _ = _side_mats(c, side)
    partner = c.logical_z if side.upper() == "X" else c.logical_x
    return _packed_columns(h.dense()), _packed_columns(partner)


# ---------------------------------------------------------------------------
# distance


@dataclass
class DistanceBound:
    upper: int
    lower: int
    methods: dict
    witness: list[int] | None = None
    witness_side: str | None = None


def exhaustive_min_logical(c: CssCode, side: str, cap: int, budget: int = ENUMERATION_BUDGET):
    """Smallest weight ≤ cap of a nontrivial logical of the given type.

    Returns (weight or None, support or None, errors enumerated).
    """
    syn, log = _side_columns(c, side)
    used = 0
    for w in range(1, cap + 1):
        used += math.comb(c.n, w)
        if used > budget:
            raise BudgetExceeded(f"enumeration of weight {w} exceeds budget {budget}")
        idx, _ = _first_nontrivial(syn, log, c.n, w)
        if len(idx):
            return w, idx.tolist(), used
    return None, None, used


def distance_probe(c: CssCode, trials: int = 100, rng: np.random.Generator | None = None,
                   exhaustive_cap: int | None = None, budget: int = ENUMERATION_BUDGET) -> DistanceBound:
    """Upper bound from randomized coset search; lower bound by enumeration."""
    if c.k < 1:
        raise ValueError("code has no logical qubits")
    rng = np.random.default_rng() if rng is None else rng
    methods: dict = {"upper": "random-coset-greedy", "lower": "exhaustive"}
    best_u, best_sup, best_side = c.n + 1, None, None
    for side in ("X", "Z"):
        _, dual = _side_mats(c, side)
        logs = c.logical_x if side == "X" else c.logical_z
        rw = ReducedWeight(dual, "greedy")
        stab = dual.dense()
        for t in range(trials):
            coeff = rng.integers(0, 2, len(logs)).astype(np.uint8)
            if not coeff.any():
                coeff[t % len(logs)] = 1
            v = ((coeff.astype(np.int64) @ logs.astype(np.int64)) & 1).astype(np.uint8)
            if len(stab):
                mix = rng.integers(0, 2, len(stab)).astype(np.int64)
                v ^= ((mix @ stab.astype(np.int64)) & 1).astype(np.uint8)
            y = rw(v).minimizer
            wy = int(y.sum())
            if wy < best_u:
                best_u, best_sup, best_side = wy, np.flatnonzero(y).tolist(), side
    cap = best_u if exhaustive_cap is None else min(exhaustive_cap, best_u)
    lower = 1
    found = None
    for side in ("X", "Z"):
        # shrink the cap as soon as one side certifies a smaller weight
        try:
            w, sup, _ = exhaustive_min_logical(c, side, cap, budget)
        except BudgetExceeded:
            methods["lower"] = "exhaustive-partial"
            w, sup = None, None
            cap_ok = 0
            used = 0
            for ww in range(1, cap + 1):
                used += math.comb(c.n, ww)
                if used > budget:
                    break
                cap_ok = ww
            cap = cap_ok
            w, sup, _ = exhaustive_min_logical(c, side, cap, budget)
        if w is not None and (found is None or w < found[0]):
            found = (w, sup, side)
            cap = w
    if found is not None:
        lower = found[0]
        if found[0] <= best_u:
            best_u, best_sup, best_side = found[0], found[1], found[2]
    else:
        lower = cap + 1
    return DistanceBound(best_u, min(lower, best_u), methods, best_sup, best_side)


# ---------------------------------------------------------------------------
# Knill–Laflamme


@dataclass
class KLReport:
    max_pauli_weight: int
    passed_weights: list[int]
    first_violation: int | None
    witness: dict | None
    method: str
    enumerated: int
    frame_phase: list[int]

    @property
    def passes(self) -> bool:
        return self.first_violation is None

    def profile(self) -> tuple:
        return (self.max_pauli_weight, tuple(self.passed_weights), self.first_violation)


def kl_check(c: CssCode, base: PauliErrorPair | None = None, max_pauli_weight: int = 2,
             method: str = "auto", budget: int = ENUMERATION_BUDGET) -> KLReport:
    """Knill–Laflamme check of the shifted code span{L_l |x0, z0>}.

    A Pauli P can distinguish or connect the shifted codewords only if it has
    zero syndrome and acts as a nontrivial logical.  The frame (x0, z0) only
    conjugates the stabilizer group by a Pauli, which changes stabilizer signs
    but not which supports are stabilizers, so membership is tested on
    supports.  ``frame_phase`` records those signs for the stabilizer
    generators.
    """
    if c.k < 1:
        raise ValueError("code has no logical qubits")
    if base is None:
        base = PauliErrorPair.zero(c)
    # sign picked up by each generator under the frame: hx rows see z0, hz rows see x0
    frame = np.concatenate([base.sz, base.sx]).astype(int).tolist()
    xs, xl = _side_columns(c, "X")
    zs, zl = _side_columns(c, "Z")
    passed: list[int] = []
    enumerated = 0
    if method == "auto":
        total = sum(3**w * math.comb(c.n, w) for w in range(1, max_pauli_weight + 1))
        method = "pauli" if total <= budget else "css-parts"
    for w in range(1, max_pauli_weight + 1):
        if method == "pauli":
            enumerated += 3**w * math.comb(c.n, w)
            if enumerated > budget:
                raise BudgetExceeded(f"Pauli enumeration at weight {w} exceeds budget")
            idx, lab, _ = _first_pauli_violation(xs, xl, zs, zl, c.n, w)
            if len(idx):
                wit = {"support": idx.tolist(), "labels": ["XYZ"[v] for v in lab.tolist()]}
                return KLReport(max_pauli_weight, passed, w, wit, method, enumerated, frame)
        elif method == "css-parts":
            # a minimal nontrivial logical of a CSS code can be taken pure X or pure Z
            enumerated += 2 * math.comb(c.n, w)
            if enumerated > budget:
                raise BudgetExceeded(f"enumeration at weight {w} exceeds budget")
            for side, (s, l) in (("X", (xs, xl)), ("Z", (zs, zl))):
                idx, _ = _first_nontrivial(s, l, c.n, w)
                if len(idx):
                    wit = {"support": idx.tolist(), "labels": [side] * w}
                    return KLReport(max_pauli_weight, passed, w, wit, method, enumerated, frame)
        else:
            raise ValueError(f"unknown method {method!r}")
        passed.append(w)
    return KLReport(max_pauli_weight, passed, None, None, method, enumerated, frame)
