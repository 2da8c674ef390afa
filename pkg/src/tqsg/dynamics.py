"""Gibbs sampling and local dynamics for CSS Hamiltonians E = |hz x| + |hx z|."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numba import njit
from scipy.special import logsumexp

from . import gf2, graphs
from .codes import CssCode, PauliErrorPair
from .confinement import ReducedWeight, qubit_adjacency
from .gf2 import BinaryMatrix
from .thermo import mean_energy_density, violation_probability


# ---------------------------------------------------------------------------
# exact sampler


def sample_syndrome_iid(beta: float, m: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Independent check violations with probability e^{-β}/(1+e^{-β})."""
    p = float(violation_probability(beta))
    shape = (m,) if size is None else (size, m)
    return (rng.random(shape) < p).astype(np.uint8)


class SyndromeInverter:
    """Map syndrome pairs to errors: hz x = sx, hx z = sz.

    Hypergraph products of full-rank inputs use the Kronecker form
    x = (I ⊗ R2) sx, z = (R1 ⊗ I) sz on the left sector; everything else goes
    through the recorded row reductions of hz and hx.
    """

    def __init__(self, c: CssCode):
        self.code = c
        self._kron = c.right_inverses
        if self._kron is None:
            self._rz = c.reduction_z
            self._rx = c.reduction_x
        else:
            c1, c2 = c.inputs
            self.n1, self.m1, self.n2, self.m2 = c1.n, c1.m, c2.n, c2.m
            r1, r2 = self._kron
            self._r1 = r1.astype(np.float32)
            self._r2t = r2.T.astype(np.float32)

    def invert_x(self, sx: np.ndarray) -> np.ndarray:
        """sx has shape (mz,) or (batch, mz); returns matching x."""
        single = sx.ndim == 1
        sx = np.atleast_2d(sx)
        if self._kron is None:
            x = gf2.solve_many(self._rz, sx.T).T
        else:
            s = sx.reshape(len(sx), self.n1, self.m2).astype(np.float32)
            left = (s @ self._r2t).astype(np.int64) & 1
            x = np.zeros((len(sx), self.code.n), np.uint8)
            x[:, : self.n1 * self.n2] = left.reshape(len(sx), -1)
        return x[0] if single else x

    def invert_z(self, sz: np.ndarray) -> np.ndarray:
        single = sz.ndim == 1
        sz = np.atleast_2d(sz)
        if self._kron is None:
            z = gf2.solve_many(self._rx, sz.T).T
        else:
            s = sz.reshape(len(sz), self.m1, self.n2).astype(np.float32)
            left = (self._r1 @ s).astype(np.int64) & 1
            z = np.zeros((len(sz), self.code.n), np.uint8)
            z[:, : self.n1 * self.n2] = left.reshape(len(sz), -1)
        return z[0] if single else z


def syndrome_to_error(c: CssCode, sx, sz, inverter: SyndromeInverter | None = None) -> PauliErrorPair:
    inv = inverter or SyndromeInverter(c)
    sx = gf2.as_bits(sx, c.hz.rows)
    sz = gf2.as_bits(sz, c.hx.rows)
    x = inv.invert_x(sx)
    z = inv.invert_z(sz)
    e = PauliErrorPair(x, z, gf2.mat_vec(c.hz, x), gf2.mat_vec(c.hx, z))
    if not (np.array_equal(e.sx, sx) and np.array_equal(e.sz, sz)):
        raise gf2.NoSolution("syndrome pair outside the image of (hz, hx)")
    return e


class ExactSampler:
    """Gibbs sampling for redundancy-free codes via i.i.d. syndromes."""

    def __init__(self, c: CssCode, check: bool = True):
        if check and not c.redundancy_free:
            raise ValueError("exact sampling by i.i.d. syndromes needs a redundancy-free code")
        self.code = c
        self.inverter = SyndromeInverter(c)

    def sample(self, beta: float, rng: np.random.Generator) -> PauliErrorPair:
        c = self.code
        sx = sample_syndrome_iid(beta, c.hz.rows, rng)
        sz = sample_syndrome_iid(beta, c.hx.rows, rng)
        return syndrome_to_error(c, sx, sz, self.inverter)

    def energies(self, beta: float, count: int, rng: np.random.Generator, batch: int = 100) -> np.ndarray:
        """Energies of ``count`` samples, recomputed from the inverted errors."""
        c = self.code
        out = np.empty(count, np.int64)
        done = 0
        while done < count:
            b = min(batch, count - done)
            sx = sample_syndrome_iid(beta, c.hz.rows, rng, b)
            sz = sample_syndrome_iid(beta, c.hx.rows, rng, b)
            x = self.inverter.invert_x(sx)
            z = self.inverter.invert_z(sz)
            ex = ((c.hz.csr @ x.T.astype(np.int64)) & 1).sum(axis=0)
            ez = ((c.hx.csr @ z.T.astype(np.int64)) & 1).sum(axis=0)
            if not (np.array_equal(ex, sx.sum(axis=1)) and np.array_equal(ez, sz.sum(axis=1))):
                raise AssertionError("inverted errors do not reproduce their syndromes")
            out[done:done + b] = ex + ez
            done += b
        return out


# ---------------------------------------------------------------------------
# Metropolis


@njit(cache=True)
def _seed_numba(seed):
    np.random.seed(seed)


@njit(cache=True)
def _metropolis(x, z, sx, sz, hz_ptr, hz_idx, hx_ptr, hx_idx, accept_p, offset, nsweeps, energy_trace):
    """Single-flip Metropolis; 2n proposals per sweep.

    A proposal picks a qubit and a flavor uniformly; flipping x_q toggles the
    hz checks in column q, flipping z_q toggles the hx checks in column q.
    accept_p[dE + offset] = min(1, exp(-β dE)).
    """
    n = x.shape[0]
    e = 0
    for i in range(sx.shape[0]):
        e += sx[i]
    for i in range(sz.shape[0]):
        e += sz[i]
    accepted = 0
    for sweep in range(nsweeps):
        for _ in range(2 * n):
            q = np.random.randint(0, n)
            flavor = np.random.randint(0, 2)
            if flavor == 0:
                d = 0
                for k in range(hz_ptr[q], hz_ptr[q + 1]):
                    d += 1 - 2 * sx[hz_idx[k]]
                if d <= 0 or np.random.random() < accept_p[d + offset]:
                    x[q] ^= 1
                    for k in range(hz_ptr[q], hz_ptr[q + 1]):
                        sx[hz_idx[k]] ^= 1
                    e += d
                    accepted += 1
            else:
                d = 0
                for k in range(hx_ptr[q], hx_ptr[q + 1]):
                    d += 1 - 2 * sz[hx_idx[k]]
                if d <= 0 or np.random.random() < accept_p[d + offset]:
                    z[q] ^= 1
                    for k in range(hx_ptr[q], hx_ptr[q + 1]):
                        sz[hx_idx[k]] ^= 1
                    e += d
                    accepted += 1
        if energy_trace.shape[0] > 0:
            energy_trace[sweep] = e
    return accepted, e


@njit(cache=True)
def _metropolis_histogram(x, z, sx, sz, hz_ptr, hz_idx, hx_ptr, hx_idx, accept_p, offset, nsweeps, hist):
    """Metropolis on a small code, histogramming the label x + 2^n z after
    every sweep."""
    n = x.shape[0]
    accepted = 0
    label = 0
    for i in range(n):
        label |= np.int64(x[i]) << i
        label |= np.int64(z[i]) << (i + n)
    for sweep in range(nsweeps):
        for _ in range(2 * n):
            q = np.random.randint(0, n)
            flavor = np.random.randint(0, 2)
            if flavor == 0:
                d = 0
                for k in range(hz_ptr[q], hz_ptr[q + 1]):
                    d += 1 - 2 * sx[hz_idx[k]]
                if d <= 0 or np.random.random() < accept_p[d + offset]:
                    x[q] ^= 1
                    label ^= np.int64(1) << q
                    for k in range(hz_ptr[q], hz_ptr[q + 1]):
                        sx[hz_idx[k]] ^= 1
                    accepted += 1
            else:
                d = 0
                for k in range(hx_ptr[q], hx_ptr[q + 1]):
                    d += 1 - 2 * sz[hx_idx[k]]
                if d <= 0 or np.random.random() < accept_p[d + offset]:
                    z[q] ^= 1
                    label ^= np.int64(1) << (q + n)
                    for k in range(hx_ptr[q], hx_ptr[q + 1]):
                        sz[hx_idx[k]] ^= 1
                    accepted += 1
        hist[label] += 1
    return accepted


def acceptance_table(beta: float, max_delta: int) -> tuple[np.ndarray, int]:
    d = np.arange(-max_delta, max_delta + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        p = np.where(d <= 0, 1.0, np.exp(-beta * np.maximum(d, 0)) if np.isfinite(beta) else 0.0)
    if not np.isfinite(beta):
        p = np.where(d <= 0, 1.0, 0.0)
    return p.astype(np.float64), max_delta


def _seed_from(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**32 - 1))


@dataclass
class SweepStats:
    sweeps: int
    proposals: int
    accepted: int
    energies: np.ndarray

    @property
    def acceptance(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


class MetropolisChain:
    """Owns one chain's state and its check incidence arrays."""

    def __init__(self, c: CssCode, state: PauliErrorPair | None = None):
        self.code = c
        hz_csc, hx_csc = c.hz.csc, c.hx.csc
        self._hz = (hz_csc.indptr.astype(np.int64), hz_csc.indices.astype(np.int64))
        self._hx = (hx_csc.indptr.astype(np.int64), hx_csc.indices.astype(np.int64))
        self.max_delta = int(max(np.diff(self._hz[0]).max(initial=0), np.diff(self._hx[0]).max(initial=0)))
        self.state = state.copy() if state is not None else PauliErrorPair.zero(c)

    def run(self, beta: float, sweeps: int, rng: np.random.Generator, record: bool = False) -> SweepStats:
        table, off = acceptance_table(beta, self.max_delta)
        trace = np.zeros(sweeps if record else 0, np.int64)
        _seed_numba(_seed_from(rng))
        s = self.state
        acc, _ = _metropolis(s.x, s.z, s.sx, s.sz, *self._hz, *self._hx, table, off, sweeps, trace)
        return SweepStats(sweeps, 2 * self.code.n * sweeps, int(acc), trace)

    def histogram(self, beta: float, sweeps: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
        n = self.code.n
        if n > 12:
            raise ValueError("label histogram needs n <= 12")
        table, off = acceptance_table(beta, self.max_delta)
        hist = np.zeros(1 << (2 * n), np.int64)
        _seed_numba(_seed_from(rng))
        s = self.state
        acc = _metropolis_histogram(s.x, s.z, s.sx, s.sz, *self._hz, *self._hx, table, off, sweeps, hist)
        return hist, int(acc)

    def revalidate(self) -> bool:
        return self.state.consistent(self.code)


def metropolis_sweep(state: PauliErrorPair, c: CssCode, beta: float, rng: np.random.Generator,
                     sweeps: int = 1) -> tuple[PauliErrorPair, SweepStats]:
    chain = MetropolisChain(c, state)
    stats = chain.run(beta, sweeps, rng)
    return chain.state, stats


# ---------------------------------------------------------------------------
# exact enumeration helpers for tiny codes


def label_energies(c: CssCode) -> np.ndarray:
    """Energy of every label x + 2^n z (n <= 12)."""
    n = c.n
    if n > 12:
        raise ValueError("enumeration needs n <= 12")
    bits = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.int64)
    ex = ((bits @ c.hz.dense().T.astype(np.int64)) & 1).sum(axis=1)
    ez = ((bits @ c.hx.dense().T.astype(np.int64)) & 1).sum(axis=1)
    # label = x + 2^n z, so z indexes rows and x indexes columns
    return (ex[None, :] + ez[:, None]).reshape(-1)


def gibbs_distribution(c: CssCode, beta: float) -> np.ndarray:
    e = label_energies(c).astype(float)
    logw = -beta * e
    return np.exp(logw - logsumexp(logw))


def transition_matrix(c: CssCode, beta: float):
    """Single-proposal Metropolis kernel on all 2^{2n} labels (sparse CSR)."""
    import scipy.sparse as sp

    n = c.n
    E = label_energies(c)
    N = len(E)
    labels = np.arange(N)
    rows, cols, vals = [], [], []
    stay = np.ones(N)
    for bit in range(2 * n):
        nxt = labels ^ (1 << bit)
        d = E[nxt] - E
        with np.errstate(over="ignore"):
            p = np.where(d <= 0, 1.0, np.exp(-beta * np.maximum(d, 0))) / (2 * n)
        rows.append(labels)
        cols.append(nxt)
        vals.append(p)
        stay -= p
    rows.append(labels)
    cols.append(labels)
    vals.append(stay)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))


def coset_classes(c: CssCode) -> np.ndarray:
    """Class id of every label: (x mod rowspace hx, z mod rowspace hz)."""
    n = c.n
    if n > 12:
        raise ValueError("needs n <= 12")

    def canon(stab: BinaryMatrix) -> np.ndarray:
        ids = np.empty(1 << n, np.int64)
        seen: dict[int, int] = {}
        span = _span(stab)
        for v in range(1 << n):
            members = span ^ v
            key = int(members.min())
            ids[v] = seen.setdefault(key, len(seen))
        return ids

    cx = canon(c.hx)
    cz = canon(c.hz)
    nz = cz.max() + 1
    lab = np.arange(1 << (2 * n))
    return cx[lab & ((1 << n) - 1)] * nz + cz[lab >> n]


def _span(m: BinaryMatrix) -> np.ndarray:
    """All elements of the row space as integers (bit i = column i)."""
    rr = gf2.row_reduce(m, track=False)
    dense = gf2.unpack_bits(rr.rref_words[: rr.rank], rr.cols)
    gens = [int(sum(1 << int(i) for i in np.flatnonzero(r))) for r in dense]
    span = np.zeros(1 << len(gens), np.int64)
    for i, gval in enumerate(gens):
        span[1 << i: 1 << (i + 1)] = span[: 1 << i] ^ gval
    return span


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# ---------------------------------------------------------------------------
# protocols


@dataclass
class Schedule:
    mode: str
    T_grid: list[float]
    sweeps_per_step: int = 1000
    measure_after: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("heating", "annealing"):
            raise ValueError("mode must be heating or annealing")
        T = np.asarray(self.T_grid, dtype=float)
        if len(T) > 1:
            steps = np.diff(T)
            if self.mode == "heating" and not np.all(steps > 0):
                raise ValueError("heating grid must ascend")
            if self.mode == "annealing" and not np.all(steps < 0):
                raise ValueError("annealing grid must descend")


@dataclass
class ExperimentTrace:
    columns: list[str]
    records: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, **row):
        self.records.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])


def _beta_of(T: float) -> float:
    return 0.0 if math.isinf(T) else (math.inf if T == 0 else 1.0 / T)


def run_protocol(c: CssCode, s: Schedule, init: str | PauliErrorPair = "auto",
                 rng: np.random.Generator | None = None) -> ExperimentTrace:
    """Heating from a ground state or annealing from a uniformly random state.

    At each temperature: ``sweeps_per_step`` sweeps, then the energy density
    is averaged over ``measure_after`` further sweeps.
    """
    rng = np.random.default_rng(s.seed) if rng is None else rng
    if init == "auto":
        init = "ground" if s.mode == "heating" else "random"
    if isinstance(init, PauliErrorPair):
        state = init
    elif init == "ground":
        state = PauliErrorPair.zero(c)
    elif init == "random":
        state = PauliErrorPair.from_errors(c, rng.integers(0, 2, c.n), rng.integers(0, 2, c.n))
    else:
        raise ValueError(f"unknown init {init!r}")
    chain = MetropolisChain(c, state)
    trace = ExperimentTrace(["step", "T", "beta", "energy_density", "energy_density_se", "acceptance",
                             "seed", "protocol"], meta={"n": c.n, "k": c.k, "schedule": s.__dict__})
    for step, T in enumerate(s.T_grid):
        beta = _beta_of(float(T))
        chain.run(beta, s.sweeps_per_step, rng)
        stats = chain.run(beta, s.measure_after, rng, record=True)
        dens = stats.energies / c.n
        trace.append(step=step, T=float(T), beta=beta, energy_density=float(dens.mean()),
                     energy_density_se=_batch_se(dens), acceptance=stats.acceptance, seed=s.seed,
                     protocol=s.mode)
    if not chain.revalidate():
        raise AssertionError("incremental syndromes drifted from recomputed ones")
    trace.meta["final_state"] = chain.state
    return trace


def _batch_se(series: np.ndarray, batches: int = 10) -> float:
    if len(series) < 2 * batches:
        return float(series.std(ddof=1) / math.sqrt(len(series))) if len(series) > 1 else 0.0
    means = np.array([b.mean() for b in np.array_split(series, batches)])
    return float(means.std(ddof=1) / math.sqrt(batches))


@dataclass
class BranchSummary:
    T: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    seeds: int


def summarize_branch(traces: Sequence[ExperimentTrace]) -> BranchSummary:
    """Mean and standard error across seeds at each grid point."""
    T = traces[0].column("T")
    vals = np.array([t.column("energy_density") for t in traces])
    if len(traces) > 1:
        se = vals.std(axis=0, ddof=1) / math.sqrt(len(traces))
    else:
        se = traces[0].column("energy_density_se")
    return BranchSummary(T, vals.mean(axis=0), se, len(traces))


def detect_T_mem(heating: BranchSummary, r: float) -> float | None:
    """First heating point whose energy density exceeds half of ε(T)."""
    for T, e in zip(heating.T, heating.mean):
        eq = float(mean_energy_density(_beta_of(T), r))
        if e > 0.5 * eq:
            return float(T)
    return None


def detect_T_G(annealing: BranchSummary, r: float, n_se: float = 5.0) -> float | None:
    """First annealing point (descending T) above ε(T) by n_se standard errors."""
    for T, e, se in zip(annealing.T, annealing.mean, annealing.se):
        eq = float(mean_energy_density(_beta_of(T), r))
        if e > eq + n_se * se:
            return float(T)
    return None


def hysteresis_separation(heating: BranchSummary, annealing: BranchSummary, n_se: float = 5.0):
    """Per-temperature gap (annealing minus heating) in combined standard errors,
    and the longest run of consecutive grid points with gap >= n_se."""
    h = {float(T): (m, s) for T, m, s in zip(heating.T, heating.mean, heating.se)}
    rows = []
    for T, m, s in sorted(zip(annealing.T, annealing.mean, annealing.se)):
        if float(T) not in h:
            continue
        hm, hs = h[float(T)]
        se = math.hypot(s, hs)
        z = (m - hm) / se if se > 0 else (math.inf if m > hm else 0.0)
        rows.append({"T": float(T), "annealing": float(m), "heating": float(hm), "gap_se": z})
    best = run = 0
    for row in rows:
        run = run + 1 if row["gap_se"] >= n_se else 0
        best = max(best, run)
    return rows, best


# ---------------------------------------------------------------------------
# bottleneck ratio


@dataclass
class BottleneckResult:
    beta: float
    log_w_omega: float
    log_w_boundary: float
    log_w_outside: float
    method: str
    sigma: float | None = None
    seed: int | None = None
    counts: dict | None = None

    @property
    def log_ratio(self) -> float:
        return self.log_w_boundary - self.log_w_omega

    @property
    def ratio(self) -> float:
        return math.exp(self.log_ratio)

    def record(self) -> dict:
        return {"beta": self.beta, "log_w_omega": self.log_w_omega, "log_w_boundary": self.log_w_boundary,
                "log_ratio": self.log_ratio, "ratio": self.ratio, "sigma": self.sigma,
                "mode": self.method, "seed": self.seed}


def combined_quantum_ratio(x_side: BottleneckResult, z_side: BottleneckResult) -> float:
    """Product of the two classical ratios, returned as a log."""
    return x_side.log_ratio + z_side.log_ratio


class BottleneckInstance:
    """Classical Hamiltonian E(x) = |h x| with a reference x0 and Ω/∂Ω labels."""

    def __init__(self, h: BinaryMatrix, x0=None, delta_probe: int = 8, rw=None):
        self.h = h
        self.n = h.cols
        if self.n > 20:
            raise ValueError("full enumeration needs n <= 20")
        self.x0 = np.zeros(self.n, np.uint8) if x0 is None else gf2.as_bits(x0, self.n)
        self.delta_probe = delta_probe
        self.graph = graphs.qubit_graph(h)
        self.rw = rw
        N = 1 << self.n
        bits = ((np.arange(N)[:, None] >> np.arange(self.n)) & 1).astype(np.int64)
        self.energy = ((bits @ h.dense().T.astype(np.int64)) & 1).sum(axis=1)
        self.region = graphs.classify_all(self.graph, self.x0, delta_probe, rw)

    def exact(self, beta: float) -> BottleneckResult:
        logw = -beta * self.energy.astype(float)
        parts = [logsumexp(logw[self.region == r]) if np.any(self.region == r) else -math.inf for r in (0, 1, 2)]
        return BottleneckResult(beta, parts[0], parts[1], parts[2], "exact-enumeration",
                                counts={r.value: int(np.sum(self.region == i))
                                        for i, r in enumerate(graphs.Region)})

    def mc(self, beta: float, steps: int, rng: np.random.Generator, batches: int = 50,
           seed: int | None = None) -> BottleneckResult:
        """Metropolis restricted to Ω ∪ ∂Ω (Outside proposals rejected)."""
        start = int(sum(int(b) << i for i, b in enumerate(self.x0)))
        table, off = acceptance_table(beta, int(self.h.rows))
        _seed_numba(_seed_from(rng))
        counts = _constrained_chain(start, self.n, self.energy, self.region, table, off, steps, batches)
        f = counts[:, 1] / counts.sum(axis=1)
        fbar = counts[:, 1].sum() / counts.sum()
        sf = f.std(ddof=1) / math.sqrt(batches)
        ratio = fbar / (1 - fbar)
        sigma = sf / (1 - fbar) ** 2
        lw_b = math.log(fbar) if fbar > 0 else -math.inf
        return BottleneckResult(beta, math.log(1 - fbar), lw_b, -math.inf, "constrained-mc",
                                sigma=float(sigma), seed=seed,
                                counts={"inside": int(counts[:, 0].sum()), "boundary": int(counts[:, 1].sum())})


@njit(cache=True)
def _constrained_chain(start, n, energy, region, accept_p, offset, steps, batches):
    counts = np.zeros((batches, 2), np.int64)
    per = steps // batches
    s = start
    for b in range(batches):
        for _ in range(per):
            t = s ^ (1 << np.random.randint(0, n))
            if region[t] != 2:
                d = energy[t] - energy[s]
                if d <= 0 or np.random.random() < accept_p[d + offset]:
                    s = t
            counts[b, region[s]] += 1
    return counts


def bottleneck_ratio(h: BinaryMatrix, x0, delta_probe: int, beta: float, mode: str = "exact",
                     rng: np.random.Generator | None = None, steps: int = 2_000_000,
                     instance: BottleneckInstance | None = None) -> BottleneckResult:
    inst = instance or BottleneckInstance(h, x0, delta_probe)
    if mode == "exact":
        return inst.exact(beta)
    if mode == "mc":
        return inst.mc(beta, steps, rng or np.random.default_rng())
    raise ValueError(f"unknown mode {mode!r}")


def bundled_instance_matrix() -> BinaryMatrix:
    """The shipped 14-bit test instance: 11 checks, check i on bits {i, i+1, i+3}."""
    from importlib.resources import files

    text = files("tqsg.data").joinpath("bottleneck14.gf2").read_text()
    return gf2.loads(text[text.index("gf2 "):])


# ---------------------------------------------------------------------------
# barrier probe


@dataclass
class BarrierTable:
    rows: list[dict]
    bins: list[dict]
    min_ratio_slope: Fraction | None
    lsq_slope: float | None
    excluded_negative: int

    def bound_lines(self, gamma: float, eps: float, n: int) -> list[dict]:
        return [{"reduced": b["reduced"], "linear": (gamma - eps) * b["reduced"],
                 "triangle": gamma * b["reduced"] - 2 * eps * n} for b in self.bins]


def barrier_probe(c: CssCode, x0: PauliErrorPair, growth_steps: int, trials: int, rng: np.random.Generator,
                  side: str = "X", reduced: ReducedWeight | None = None) -> BarrierTable:
    """Grow connected single-flavor perturbations x from a random seed qubit and
    record (‖x‖, ΔE = E(x0 + x) - E(x0)) after every growth step."""
    h, dual = (c.hz, c.hx) if side.upper() == "X" else (c.hx, c.hz)
    base = x0.x if side.upper() == "X" else x0.z
    s0 = gf2.mat_vec(h, base).astype(np.int64)
    e0 = int(s0.sum())
    rw = reduced or ReducedWeight(dual, "auto")
    adj = qubit_adjacency(h)
    csc = h.csc
    rows = []
    for trial in range(trials):
        start = int(rng.integers(c.n))
        x = np.zeros(c.n, np.uint8)
        syn = s0.copy()
        chosen = [start]
        inset = {start}
        frontier = [int(v) for v in adj[start]]
        for step in range(growth_steps):
            q = chosen[-1]
            x[q] = 1
            syn[csc.indices[csc.indptr[q]:csc.indptr[q + 1]]] ^= 1
            red = rw(x).reduced_weight
            rows.append({"trial": trial, "size": step + 1, "reduced": red, "dE": int(syn.sum()) - e0})
            frontier = [v for v in frontier if v not in inset]
            if not frontier:
                break
            v = frontier.pop(int(rng.integers(len(frontier))))
            chosen.append(v)
            inset.add(v)
            frontier.extend(int(u) for u in adj[v] if int(u) not in inset)
    bins: dict[int, int] = {}
    for r in rows:
        bins[r["reduced"]] = min(bins.get(r["reduced"], 1 << 60), r["dE"])
    good = [r for r in rows if r["dE"] >= 0 and r["reduced"] > 0]
    excluded = sum(1 for r in rows if r["dE"] < 0)
    min_slope = min((Fraction(r["dE"], r["reduced"]) for r in good), default=None)
    if good:
        xs = np.array([r["reduced"] for r in good], float)
        ys = np.array([r["dE"] for r in good], float)
        lsq = float(xs @ ys / (xs @ xs))
    else:
        lsq = None
    bin_rows = [{"reduced": k, "min_dE": v} for k, v in sorted(bins.items())]
    return BarrierTable(rows, bin_rows, min_slope, lsq, excluded)


# ---------------------------------------------------------------------------
# memory trial


class Decoder:
    """Syndrome decoder used to read off the logical frame of a fluctuation.

    Tiny codes use an exact minimum-weight table; larger ones use greedy bit
    flipping, which may fail to clear the syndrome.
    """

    def __init__(self, h: BinaryMatrix, exact_limit: int = 16):
        self.h = h
        self.exact = h.cols <= exact_limit
        if self.exact:
            n = h.cols
            bits = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.int64)
            syn = (bits @ h.dense().T.astype(np.int64)) & 1
            key = syn @ (1 << np.arange(h.rows, dtype=np.int64))
            weight = bits.sum(axis=1)
            order = np.lexsort((np.arange(1 << n), weight))
            self._table: dict[int, int] = {}
            for idx in order:
                self._table.setdefault(int(key[idx]), int(idx))
            self._pow = 1 << np.arange(h.rows, dtype=np.int64)
        else:
            self._colw = h.col_weights().astype(np.int64)

    def decode(self, s: np.ndarray) -> np.ndarray | None:
        s = np.asarray(s, np.int64)
        n = self.h.cols
        if self.exact:
            idx = self._table.get(int(s @ self._pow))
            if idx is None:
                return None
            return ((idx >> np.arange(n)) & 1).astype(np.uint8)
        corr = np.zeros(n, np.uint8)
        s = s.copy()
        csr_t = self.h.csc.T.tocsr()
        while s.any():
            overlap = csr_t @ s
            gain = 2 * overlap - self._colw
            q = int(np.argmax(gain))
            if gain[q] <= 0:
                return None
            corr[q] ^= 1
            s[self.h.csc.indices[self.h.csc.indptr[q]:self.h.csc.indptr[q + 1]]] ^= 1
        return corr


@dataclass
class RetentionReport:
    beta: float
    chain_sweeps: int
    frame_x_retained: bool
    frame_z_retained: bool
    decoder_failed: bool
    inside: bool | None
    initial_frame: dict

    @property
    def retained(self) -> bool:
        return self.frame_x_retained and self.frame_z_retained


def logical_frame(c: CssCode, e: PauliErrorPair) -> dict:
    """Pairings of (x, z) with the logical bases (x against logical_z, z against logical_x)."""
    fx = (c.logical_z.astype(np.int64) @ e.x.astype(np.int64)) & 1
    fz = (c.logical_x.astype(np.int64) @ e.z.astype(np.int64)) & 1
    return {"x": fx.astype(int).tolist(), "z": fz.astype(int).tolist()}


def emergent_memory_trial(c: CssCode, beta: float, chain_sweeps: int, rng: np.random.Generator,
                          sampler: ExactSampler | None = None, decoders: tuple[Decoder, Decoder] | None = None,
                          delta_probe: int | None = None, check_omega: bool | None = None) -> RetentionReport:
    """Sample x0 from Gibbs, evolve with Metropolis at the same β, and test
    whether the fluctuation x - x0 decodes back to the starting frame."""
    sampler = sampler or ExactSampler(c)
    dx, dz = decoders or (Decoder(c.hz), Decoder(c.hx))
    x0 = sampler.sample(beta, rng)
    frame0 = logical_frame(c, x0)
    chain = MetropolisChain(c, x0)
    chain.run(beta, chain_sweeps, rng)
    ex = chain.state.x ^ x0.x
    ez = chain.state.z ^ x0.z
    cx = dx.decode(gf2.mat_vec(c.hz, ex))
    cz = dz.decode(gf2.mat_vec(c.hx, ez))
    failed = cx is None or cz is None
    keep_x = cx is not None and not ((c.logical_z.astype(np.int64) @ (ex ^ cx).astype(np.int64)) & 1).any()
    keep_z = cz is not None and not ((c.logical_x.astype(np.int64) @ (ez ^ cz).astype(np.int64)) & 1).any()
    if check_omega is None:
        check_omega = c.n <= 400
    inside = None
    if check_omega:
        dp = delta_probe if delta_probe is not None else max(4, c.n // 16)
        gx = graphs.qubit_graph(c.hz)
        gz = graphs.qubit_graph(c.hx)
        rwx, rwz = ReducedWeight(c.hx, "auto"), ReducedWeight(c.hz, "auto")
        inside = (graphs.is_inside(x0.x, chain.state.x, gx, rwx, dp)
                  and graphs.is_inside(x0.z, chain.state.z, gz, rwz, dp))
    return RetentionReport(beta, chain_sweeps, bool(keep_x), bool(keep_z), failed, inside, frame0)
