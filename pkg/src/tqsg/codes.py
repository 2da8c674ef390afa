"""Classical Gallager codes, CSS codes and the hypergraph product."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import gf2
from .gf2 import BinaryMatrix, DimensionMismatch, RowReduction

PRNG_NAME = f"numpy.PCG64/numpy-{np.__version__}"


class InvalidParameters(ValueError):
    pass


@dataclass(frozen=True)
class GallagerParams:
    n: int
    w_bit: int
    w_check: int
    seed: int = 0

    def __post_init__(self):
        if self.w_check <= 0 or self.n % self.w_check:
            raise InvalidParameters(f"w_check={self.w_check} must divide n={self.n}")
        if not self.w_check > self.w_bit >= 2:
            raise InvalidParameters("need w_check > w_bit >= 2")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameters("seed must be a 64-bit unsigned integer")

    @property
    def m(self) -> int:
        return self.n * self.w_bit // self.w_check


def k_des(n: int, w_bit: int, w_check: int) -> int:
    """Design logical count n(1 - w_bit/w_check), one less when w_bit is even."""
    base = n * (w_check - w_bit)
    if base % w_check:
        raise InvalidParameters("n(1 - w_bit/w_check) is not an integer")
    return base // w_check - (1 if w_bit % 2 == 0 else 0)


class ClassicalCode:
    """Classical linear code ker(h)."""

    def __init__(self, h: BinaryMatrix, w_bit: int | None = None, w_check: int | None = None,
                 seed: int | None = None):
        self.h = h
        self.n = h.cols
        self.m = h.rows
        self.w_bit = int(h.col_weights().max(initial=0)) if w_bit is None else w_bit
        self.w_check = int(h.row_weights().max(initial=0)) if w_check is None else w_check
        self.seed = seed

    @cached_property
    def rank(self) -> int:
        return gf2.rank(self.h)

    @property
    def k(self) -> int:
        return self.n - self.rank

    @property
    def k_transpose(self) -> int:
        return self.m - self.rank

    @property
    def full_rank(self) -> bool:
        return self.rank == self.m

    @cached_property
    def reduction(self) -> RowReduction:
        return gf2.row_reduce(self.h)

    @cached_property
    def reduction_t(self) -> RowReduction:
        return gf2.row_reduce(self.h.T)

    def __repr__(self):
        return f"ClassicalCode(n={self.n}, m={self.m}, k={self.k})"


def sample_gallager(p: GallagerParams, rng: np.random.Generator | None = None) -> ClassicalCode:
    """Draw H from the (n, w_bit, w_check) ensemble.

    Block 0 holds w_check consecutive ones per row; every further block is a
    uniformly random column permutation of it.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(p.seed))
    b = p.n // p.w_check
    cols = np.arange(p.n)
    base_rows = cols // p.w_check           # row of block 0 owning each column
    rows, indices = [], []
    for blk in range(p.w_bit):
        perm = cols if blk == 0 else rng.permutation(p.n)
        # column perm[j] inherits the one of column j
        rows.append(blk * b + base_rows)
        indices.append(perm)
    r = np.concatenate(rows)
    c = np.concatenate(indices)
    order = np.lexsort((c, r))
    indptr = np.zeros(p.m + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(np.bincount(r, minlength=p.m))
    h = BinaryMatrix(p.m, p.n, indptr, c[order])
    return ClassicalCode(h, p.w_bit, p.w_check, p.seed)


def remove_redundant_rows(c: ClassicalCode) -> ClassicalCode:
    """Drop dependent checks, keeping the first independent rows in order."""
    rr = gf2.row_reduce(c.h.T, track=False)
    keep = np.sort(rr.pivot_cols)
    h = BinaryMatrix.from_rows([c.h.row_support(i) for i in keep], c.n)
    return ClassicalCode(h, c.w_bit, c.w_check, c.seed)


def repetition_code(length: int, cyclic: bool = False) -> ClassicalCode:
    rows = [[i, i + 1] for i in range(length - 1)]
    if cyclic:
        rows.append([0, length - 1])
    return ClassicalCode(BinaryMatrix.from_rows(rows, length))


def hamming_code(r: int = 3) -> ClassicalCode:
    n = 2**r - 1
    cols = np.arange(1, n + 1)
    h = ((cols[None, :] >> np.arange(r)[:, None]) & 1).astype(np.uint8)
    return ClassicalCode(BinaryMatrix.from_dense(h))


# ---------------------------------------------------------------------------


class CssCode:
    """CSS code from H_X and H_Z with hx · hzᵀ = 0.

    ``logical_x`` spans ker hz / Im hxᵀ and ``logical_z`` spans
    ker hx / Im hzᵀ; the two bases are paired so that their overlap matrix is
    the identity.
    """

    def __init__(self, hx: BinaryMatrix, hz: BinaryMatrix, *, meta: dict | None = None,
                 logicals: tuple[np.ndarray, np.ndarray] | None = None, check: bool = True):
        if hx.cols != hz.cols:
            raise DimensionMismatch("hx and hz need the same number of columns")
        self.hx = hx
        self.hz = hz
        self.n = hx.cols
        self.meta = dict(meta or {})
        self._logicals = logicals
        if check and not (hx @ hz.T).is_zero():
            raise ValueError("hx · hzᵀ != 0")

    @cached_property
    def rank_x(self) -> int:
        return gf2.rank(self.hx)

    @cached_property
    def rank_z(self) -> int:
        return gf2.rank(self.hz)

    @property
    def k(self) -> int:
        return self.n - self.rank_x - self.rank_z

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def m(self) -> int:
        return self.hx.rows + self.hz.rows

    @property
    def redundancy_free(self) -> bool:
        return self.rank_x == self.hx.rows and self.rank_z == self.hz.rows

    @property
    def logical_x(self) -> np.ndarray:
        return self._logical_pair[0]

    @property
    def logical_z(self) -> np.ndarray:
        return self._logical_pair[1]

    @cached_property
    def _logical_pair(self) -> tuple[np.ndarray, np.ndarray]:
        if self._logicals is not None:
            return self._logicals
        return _generic_logicals(self.hx, self.hz)

    @cached_property
    def reduction_x(self) -> RowReduction:
        return gf2.row_reduce(self.hx)

    @cached_property
    def reduction_z(self) -> RowReduction:
        return gf2.row_reduce(self.hz)

    @property
    def right_inverses(self):
        return None

    def __repr__(self):
        return f"CssCode(n={self.n}, mx={self.hx.rows}, mz={self.hz.rows})"


def _independent_mod(space: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Candidates reduced modulo span(space), keeping an independent subset."""
    n = candidates.shape[1]
    basis: dict[int, np.ndarray] = {}

    def reduce(v):
        v = v.copy()
        while True:
            nz = np.flatnonzero(v)
            if not len(nz):
                return v, -1
            lead = nz[0]
            if lead not in basis:
                return v, lead
            v ^= basis[lead]

    for row in space:
        v, lead = reduce(row)
        if lead >= 0:
            basis[lead] = v
    out = []
    for row in candidates:
        v, lead = reduce(row)
        if lead >= 0:
            basis[lead] = v
            out.append(v)
    return np.array(out, dtype=np.uint8).reshape(len(out), n)


def pair_logicals(lx: np.ndarray, lz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rebase lz so that lx · lzᵀ = I."""
    if len(lx) == 0:
        return lx, lz
    overlap = (lx.astype(np.int64) @ lz.T.astype(np.int64)) & 1
    inv = gf2.inverse(overlap).dense().astype(np.int64)
    lz2 = ((inv.T @ lz.astype(np.int64)) & 1).astype(np.uint8)
    return lx, lz2


def _generic_logicals(hx: BinaryMatrix, hz: BinaryMatrix):
    lx = _independent_mod(hx.dense(), gf2.kernel_matrix(hz))
    lz = _independent_mod(hz.dense(), gf2.kernel_matrix(hx))
    if len(lx) != len(lz):
        raise ValueError("inconsistent logical counts")
    return pair_logicals(lx, lz)


def logical_basis(c: CssCode) -> tuple[np.ndarray, np.ndarray]:
    return c.logical_x, c.logical_z


# ---------------------------------------------------------------------------


class HgpCode(CssCode):
    """Hypergraph product of two classical codes.

    Keeps the inputs so logical bases and syndrome inversion can use the
    Kronecker structure instead of eliminating the full N-column matrices.
    """

    def __init__(self, c1: ClassicalCode, c2: ClassicalCode):
        h1, h2 = c1.h, c2.h
        n1, m1, n2, m2 = c1.n, c1.m, c2.n, c2.m
        i_n1, i_n2 = BinaryMatrix.identity(n1), BinaryMatrix.identity(n2)
        i_m1, i_m2 = BinaryMatrix.identity(m1), BinaryMatrix.identity(m2)
        hx = gf2.hstack([gf2.kron(h1, i_n2), gf2.kron(i_m1, h2.T)])
        hz = gf2.hstack([gf2.kron(i_n1, h2), gf2.kron(h1.T, i_m2)])
        meta = {"kind": "hgp", "n1": n1, "m1": m1, "n2": n2, "m2": m2,
                "seed": c1.seed, "wbit": c1.w_bit, "wcheck": c1.w_check}
        super().__init__(hx, hz, meta=meta, check=False)
        self.inputs = (c1, c2)

    @cached_property
    def rank_x(self) -> int:
        c1, c2 = self.inputs
        if c1.full_rank:
            return self.hx.rows
        return gf2.rank(self.hx)

    @cached_property
    def rank_z(self) -> int:
        c1, c2 = self.inputs
        if c2.full_rank:
            return self.hz.rows
        return gf2.rank(self.hz)

    @cached_property
    def _logical_pair(self):
        return hgp_logicals(*self.inputs)

    @cached_property
    def right_inverses(self):
        """(R1, R2) with H1 R1 = I and H2 R2 = I, or None if an input is rank deficient."""
        c1, c2 = self.inputs
        if not (c1.full_rank and c2.full_rank):
            return None
        r1 = gf2.solve_many(c1.reduction, np.eye(c1.m, dtype=np.uint8))
        r2 = gf2.solve_many(c2.reduction, np.eye(c2.m, dtype=np.uint8))
        return r1, r2


def hypergraph_product(c1: ClassicalCode, c2: ClassicalCode) -> HgpCode:
    """H_X = (H1⊗I_n2 | I_m1⊗H2ᵀ),  H_Z = (I_n1⊗H2 | H1ᵀ⊗I_m2)."""
    return HgpCode(c1, c2)


def hgp_logicals(c1: ClassicalCode, c2: ClassicalCode) -> tuple[np.ndarray, np.ndarray]:
    """Product-form logical bases of the hypergraph product.

    Left sector: X = e_i ⊗ b (i free in H1, b ∈ ker H2), Z = a ⊗ e_j.
    Right sector: X = d ⊗ e_j (d ∈ ker H1ᵀ, j free in H2ᵀ), Z = e_i ⊗ c.
    Free columns come from the RREF so the overlap is already the identity.
    """
    n1, m1, n2, m2 = c1.n, c1.m, c2.n, c2.m
    N = n1 * n2 + m1 * m2
    ker1, ker2 = gf2.kernel_matrix(c1.h), gf2.kernel_matrix(c2.h)
    free1, free2 = c1.reduction.free_cols(), c2.reduction.free_cols()
    ker1t, ker2t = gf2.kernel_matrix(c1.h.T), gf2.kernel_matrix(c2.h.T)
    free1t, free2t = c1.reduction_t.free_cols(), c2.reduction_t.free_cols()
    lx, lz = [], []
    for i, f1 in enumerate(free1):
        for j, f2 in enumerate(free2):
            x = np.zeros(N, dtype=np.uint8)
            x[: n1 * n2] = np.kron(np.eye(n1, dtype=np.uint8)[f1], ker2[j])
            z = np.zeros(N, dtype=np.uint8)
            z[: n1 * n2] = np.kron(ker1[i], np.eye(n2, dtype=np.uint8)[f2])
            lx.append(x)
            lz.append(z)
    for i, g1 in enumerate(free1t):
        for j, g2 in enumerate(free2t):
            x = np.zeros(N, dtype=np.uint8)
            x[n1 * n2:] = np.kron(ker1t[i], np.eye(m2, dtype=np.uint8)[g2])
            z = np.zeros(N, dtype=np.uint8)
            z[n1 * n2:] = np.kron(np.eye(m1, dtype=np.uint8)[g1], ker2t[j])
            lx.append(x)
            lz.append(z)
    return (np.array(lx, dtype=np.uint8).reshape(-1, N), np.array(lz, dtype=np.uint8).reshape(-1, N))


# ---------------------------------------------------------------------------


@dataclass
class PauliErrorPair:
    """Error (x, z) together with its syndromes sx = hz·x, sz = hx·z."""

    x: np.ndarray
    z: np.ndarray
    sx: np.ndarray
    sz: np.ndarray

    @property
    def energy(self) -> int:
        return int(self.sx.sum()) + int(self.sz.sum())

    @classmethod
    def from_errors(cls, c: CssCode, x, z) -> "PauliErrorPair":
        x = gf2.as_bits(x, c.n).copy()
        z = gf2.as_bits(z, c.n).copy()
        return cls(x, z, gf2.mat_vec(c.hz, x), gf2.mat_vec(c.hx, z))

    @classmethod
    def zero(cls, c: CssCode) -> "PauliErrorPair":
        return cls.from_errors(c, np.zeros(c.n, np.uint8), np.zeros(c.n, np.uint8))

    def consistent(self, c: CssCode) -> bool:
        return (np.array_equal(gf2.mat_vec(c.hz, self.x), self.sx)
                and np.array_equal(gf2.mat_vec(c.hx, self.z), self.sz))

    def copy(self) -> "PauliErrorPair":
        return PauliErrorPair(self.x.copy(), self.z.copy(), self.sx.copy(), self.sz.copy())


def energy(c: CssCode, e) -> int:
    """|hz·x| + |hx·z| for a PauliErrorPair or an (x, z) tuple."""
    x, z = (e.x, e.z) if isinstance(e, PauliErrorPair) else e
    x = gf2.as_bits(x, c.n)
    z = gf2.as_bits(z, c.n)
    return int(gf2.mat_vec(c.hz, x).sum()) + int(gf2.mat_vec(c.hx, z).sum())


@dataclass
class ValidationReport:
    commutes: bool
    offending: list[tuple[int, int]]
    max_row_weight_x: int
    max_col_weight_x: int
    max_row_weight_z: int
    max_col_weight_z: int
    rank_x: int
    rank_z: int
    n: int
    k: int
    redundancy_free: bool

    @property
    def ok(self) -> bool:
        return self.commutes and self.k == self.n - self.rank_x - self.rank_z

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["offending"] = [list(p) for p in self.offending]
        d["ok"] = self.ok
        return d


def validate_css(c: CssCode, max_offending: int = 100) -> ValidationReport:
    prod = (c.hx.csr @ c.hz.csr.T).tocoo()
    odd = (prod.data % 2) == 1
    pairs = sorted(zip(prod.row[odd].tolist(), prod.col[odd].tolist()))
    rx, rz = gf2.rank(c.hx), gf2.rank(c.hz)
    return ValidationReport(
        commutes=not pairs,
        offending=pairs[:max_offending],
        max_row_weight_x=int(c.hx.row_weights().max(initial=0)),
        max_col_weight_x=int(c.hx.col_weights().max(initial=0)),
        max_row_weight_z=int(c.hz.row_weights().max(initial=0)),
        max_col_weight_z=int(c.hz.col_weights().max(initial=0)),
        rank_x=rx,
        rank_z=rz,
        n=c.n,
        k=c.n - rx - rz,
        redundancy_free=(rx == c.hx.rows and rz == c.hz.rows),
    )
