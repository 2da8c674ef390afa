"""Linear algebra over GF(2).

Matrices are stored as sorted per-row column supports (CSR layout).  Elimination
runs on a bit-packed dense mirror of uint64 words that is built on demand.
Vectors at the public interface are numpy uint8 arrays holding 0/1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

WORD = 64


class NoSolution(ValueError):
    """Raised when a syndrome lies outside the image of the matrix."""


class DimensionMismatch(ValueError):
    pass


def n_words(nbits: int) -> int:
    return (nbits + WORD - 1) // WORD


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8) & 1
    nbits = bits.shape[-1]
    nw = n_words(nbits)
    padded = np.zeros(bits.shape[:-1] + (nw * WORD,), dtype=np.uint8)
    padded[..., :nbits] = bits
    as_bytes = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(as_bytes).view(np.uint64).reshape(bits.shape[:-1] + (nw,))


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype=np.uint64)
    as_bytes = words.view(np.uint8).reshape(words.shape[:-1] + (words.shape[-1] * 8,))
    return np.unpackbits(as_bytes, axis=-1, count=nbits, bitorder="little")


class BitVector:
    """Packed bit vector; bits past ``len`` are always zero."""

    __slots__ = ("len", "words")

    def __init__(self, length: int, words: np.ndarray | None = None):
        self.len = int(length)
        if words is None:
            words = np.zeros(n_words(self.len), dtype=np.uint64)
        self.words = np.asarray(words, dtype=np.uint64)
        if self.words.shape != (n_words(self.len),):
            raise DimensionMismatch("word count does not match length")
        tail = self.len % WORD
        if tail and int(self.words[-1]) >> tail:
            raise ValueError("bits beyond len must be zero")

    @classmethod
    def from_array(cls, bits) -> "BitVector":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(bits.shape[0], pack_bits(bits))

    @classmethod
    def from_indices(cls, length: int, idx: Iterable[int]) -> "BitVector":
        bits = np.zeros(length, dtype=np.uint8)
        bits[list(idx)] = 1
        return cls.from_array(bits)

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.words, self.len)

    def support(self) -> list[int]:
        return np.flatnonzero(self.to_array()).tolist()

    def weight(self) -> int:
        return int(sum(bin(int(w)).count("1") for w in self.words))

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.len != self.len:
            raise DimensionMismatch("length mismatch")
        return BitVector(self.len, self.words ^ other.words)

    def __eq__(self, other) -> bool:
        return isinstance(other, BitVector) and other.len == self.len and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.len, self.words.tobytes()))

    def __repr__(self):
        return f"BitVector({self.len}, {self.support()})"


def as_bits(v, length: int | None = None) -> np.ndarray:
    """Coerce a BitVector or array-like to a uint8 0/1 array."""
    if isinstance(v, BitVector):
        arr = v.to_array()
    else:
        arr = np.asarray(v, dtype=np.uint8) & 1
    if length is not None and arr.shape[-1] != length:
        raise DimensionMismatch(f"expected length {length}, got {arr.shape[-1]}")
    return arr


class BinaryMatrix:
    """Sparse GF(2) matrix with sorted, duplicate-free row supports."""

    def __init__(self, rows: int, cols: int, indptr, indices, check: bool = True):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        if check:
            if self.indptr.shape != (self.rows + 1,) or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
                raise ValueError("malformed indptr")
            if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.cols):
                raise ValueError("column index out of range")
            d = np.diff(self.indices)
            starts = self.indptr[1:-1]
            # within each row the support must be strictly increasing
            ok = np.ones(len(d), dtype=bool)
            if len(d):
                ok = d > 0
                boundary = starts[(starts > 0) & (starts < len(self.indices))] - 1
                ok[boundary] = True
            if not ok.all():
                raise ValueError("row supports must be sorted and duplicate-free")
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    # construction -------------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Iterable[int]], cols: int) -> "BinaryMatrix":
        supports = [sorted(set(int(c) for c in r)) for r in rows]
        indptr = np.zeros(len(supports) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(s) for s in supports])
        indices = np.fromiter((c for s in supports for c in s), dtype=np.int64, count=int(indptr[-1]))
        return cls(len(supports), cols, indptr, indices)

    @classmethod
    def from_dense(cls, a) -> "BinaryMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.uint8) & 1)
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def from_scipy(cls, m) -> "BinaryMatrix":
        """Build from a sparse matrix, reducing entries mod 2."""
        m = sp.csr_matrix(m, dtype=np.int64)
        m.sum_duplicates()
        m.data %= 2
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, check=False)

    @classmethod
    def from_packed(cls, words: np.ndarray, cols: int) -> "BinaryMatrix":
        return cls.from_dense(unpack_bits(words, cols))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls(rows, cols, np.zeros(rows + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n))

    # views --------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def row_support(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def row_supports(self) -> list[list[int]]:
        return [self.row_support(i).tolist() for i in range(self.rows)]

    @cached_property
    def csr(self) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)

    @cached_property
    def csc(self) -> sp.csc_matrix:
        return self.csr.tocsc()

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        out[np.repeat(np.arange(self.rows), np.diff(self.indptr)), self.indices] = 1
        return out

    def packed(self) -> np.ndarray:
        """Fresh packed-word copy, shape (rows, ceil(cols/64))."""
        out = np.zeros((self.rows, n_words(self.cols)), dtype=np.uint64)
        if self.nnz:
            r = np.repeat(np.arange(self.rows), np.diff(self.indptr))
            np.bitwise_or.at(out, (r, self.indices // WORD),
                             np.left_shift(np.uint64(1), (self.indices % WORD).astype(np.uint64)))
        return out

    def row_weights(self) -> np.ndarray:
        return np.diff(self.indptr)

    def col_weights(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.cols)

    @property
    def T(self) -> "BinaryMatrix":
        return BinaryMatrix.from_scipy(self.csr.T)

    def __matmul__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.shape} @ {other.shape}")
        return BinaryMatrix.from_scipy(self.csr @ other.csr)

    def __eq__(self, other) -> bool:
        return (isinstance(other, BinaryMatrix) and self.shape == other.shape
                and np.array_equal(self.indptr, other.indptr) and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.shape, self.indices.tobytes(), self.indptr.tobytes()))

    def __repr__(self):
        return f"BinaryMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    def is_zero(self) -> bool:
        return self.nnz == 0


def hstack(blocks: Sequence[BinaryMatrix]) -> BinaryMatrix:
    return BinaryMatrix.from_scipy(sp.hstack([b.csr for b in blocks], format="csr"))


def vstack(blocks: Sequence[BinaryMatrix]) -> BinaryMatrix:
    return BinaryMatrix.from_scipy(sp.vstack([b.csr for b in blocks], format="csr"))


def kron(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    return BinaryMatrix.from_scipy(sp.kron(a.csr, b.csr, format="csr"))


# ---------------------------------------------------------------------------
# packed elimination kernels


@njit(cache=True)
def _eliminate(words, ncols, full, transform):
    """In-place elimination of ``words``; mirrors row ops on ``transform``.

    With ``full`` the result is reduced row echelon form, otherwise only the
    rows below each pivot are cleared.  Columns are processed one word at a
    time so the pivot search reads a contiguous copy of that word column.
    """
    r = words.shape[0]
    nw = words.shape[1]
    tw = transform.shape[1]
    track = transform.shape[0] == r and tw > 0
    pivots = np.empty(min(r, ncols), dtype=np.int64)
    rank = 0
    colword = np.empty(r, dtype=np.uint64)
    for w in range(nw):
        if rank == r:
            break
        for i in range(r):
            colword[i] = words[i, w]
        hi = min(WORD, ncols - w * WORD)
        for b in range(hi):
            if rank == r:
                break
            bit = np.uint64(1) << np.uint64(b)
            p = -1
            for i in range(rank, r):
                if colword[i] & bit:
                    p = i
                    break
            if p < 0:
                continue
            if p != rank:
                for j in range(w, nw):
                    t = words[p, j]
                    words[p, j] = words[rank, j]
                    words[rank, j] = t
                t = colword[p]
                colword[p] = colword[rank]
                colword[rank] = t
                if track:
                    for j in range(tw):
                        t = transform[p, j]
                        transform[p, j] = transform[rank, j]
                        transform[rank, j] = t
            start = 0 if full else rank + 1
            for i in range(start, r):
                if i != rank and (colword[i] & bit):
                    for j in range(w, nw):
                        words[i, j] ^= words[rank, j]
                    colword[i] ^= colword[rank]
                    if track:
                        for j in range(tw):
                            transform[i, j] ^= transform[rank, j]
            pivots[rank] = w * WORD + b
            rank += 1
    return rank, pivots[:rank].copy()


@njit(cache=True)
def _packed_matvec(words, v):
    r = words.shape[0]
    out = np.zeros(r, dtype=np.uint8)
    for i in range(r):
        acc = np.uint64(0)
        for j in range(words.shape[1]):
            acc ^= words[i, j] & v[j]
        # parity of a 64-bit word
        acc ^= acc >> np.uint64(32)
        acc ^= acc >> np.uint64(16)
        acc ^= acc >> np.uint64(8)
        acc ^= acc >> np.uint64(4)
        acc ^= acc >> np.uint64(2)
        acc ^= acc >> np.uint64(1)
        out[i] = np.uint8(acc & np.uint64(1))
    return out


_EMPTY = np.zeros((0, 0), dtype=np.uint64)


def _identity_packed(r: int) -> np.ndarray:
    t = np.zeros((r, n_words(r)), dtype=np.uint64)
    idx = np.arange(r)
    t[idx, idx // WORD] = np.left_shift(np.uint64(1), (idx % WORD).astype(np.uint64))
    return t


def _packed_of(m) -> tuple[np.ndarray, int, int]:
    if isinstance(m, BinaryMatrix):
        return m.packed(), m.rows, m.cols
    a = np.atleast_2d(np.asarray(m, dtype=np.uint8))
    return pack_bits(a), a.shape[0], a.shape[1]


@dataclass(frozen=True)
class RowReduction:
    """Reduced row echelon form of a matrix plus the row operations used.

    ``row_transform`` is an invertible rows x rows matrix with
    ``row_transform @ original == rref``.
    """

    rref_words: np.ndarray
    transform_words: np.ndarray
    pivot_cols: np.ndarray
    rank: int
    rows: int
    cols: int

    @property
    def rref(self) -> BinaryMatrix:
        return BinaryMatrix.from_packed(self.rref_words, self.cols)

    @property
    def row_transform(self) -> BinaryMatrix:
        return BinaryMatrix.from_packed(self.transform_words, self.rows)

    @cached_property
    def _pivot_rows_dense(self) -> np.ndarray:
        return unpack_bits(self.transform_words[: self.rank], self.rows)

    def free_cols(self) -> np.ndarray:
        mask = np.ones(self.cols, dtype=bool)
        mask[self.pivot_cols] = False
        return np.flatnonzero(mask)

    def in_image(self, s) -> bool:
        s = as_bits(s, self.rows)
        if self.rank == self.rows:
            return True
        t = _packed_matvec(self.transform_words[self.rank:], pack_bits(s))
        return not t.any()


def row_reduce(m, track: bool = True) -> RowReduction:
    """Full reduction to RREF, recording the transform when ``track``."""
    words, r, c = _packed_of(m)
    transform = _identity_packed(r) if track else _EMPTY
    rank, piv = _eliminate(words, c, True, transform)
    return RowReduction(words, transform, piv, int(rank), r, c)


def rank(m) -> int:
    """Row rank over GF(2)."""
    words, r, c = _packed_of(m)
    if r == 0 or c == 0:
        return 0
    rk, _ = _eliminate(words, c, False, _EMPTY)
    return int(rk)


def kernel_basis(m) -> list[np.ndarray]:
    """Basis of {v : m v = 0}, one vector per free column of the RREF."""
    rr = row_reduce(m, track=False)
    return _kernel_from_rref(rr)


def kernel_matrix(m) -> np.ndarray:
    """Kernel basis as the rows of a dense uint8 array."""
    rr = row_reduce(m, track=False)
    basis = _kernel_from_rref(rr)
    if not basis:
        return np.zeros((0, rr.cols), dtype=np.uint8)
    return np.array(basis, dtype=np.uint8)


def _kernel_from_rref(rr: RowReduction) -> list[np.ndarray]:
    free = rr.free_cols()
    if len(free) == 0:
        return []
    dense = unpack_bits(rr.rref_words[: rr.rank], rr.cols)
    out = np.zeros((len(free), rr.cols), dtype=np.uint8)
    out[np.arange(len(free)), free] = 1
    # v[pivot_i] = R[i, f] for the free column f
    out[:, rr.pivot_cols] = dense[:, free].T
    return list(out)


def mat_vec(m: BinaryMatrix, v) -> np.ndarray:
    """m · v over GF(2).  ``v`` may also be a (cols, k) batch."""
    v = as_bits(v) if not isinstance(v, np.ndarray) or v.dtype != np.uint8 else v
    if v.shape[0] != m.cols:
        raise DimensionMismatch(f"vector length {v.shape[0]} != cols {m.cols}")
    return ((m.csr @ v.astype(np.int64)) & 1).astype(np.uint8)


def solve(rr: RowReduction, s) -> np.ndarray:
    """Pivot-column solution x of H x = s; raises NoSolution outside Im H."""
    s = as_bits(s, rr.rows)
    t = _packed_matvec(rr.transform_words, pack_bits(s)) if rr.rows else np.zeros(0, np.uint8)
    if t[rr.rank:].any():
        raise NoSolution("syndrome is not in the image")
    x = np.zeros(rr.cols, dtype=np.uint8)
    x[rr.pivot_cols] = t[: rr.rank]
    return x


def solve_many(rr: RowReduction, s: np.ndarray) -> np.ndarray:
    """Column-batched solve: s has shape (rows, k); returns (cols, k)."""
    s = np.asarray(s, dtype=np.float64)
    # float products are exact here: every partial sum is an integer <= rows
    t = (rr._pivot_rows_dense.astype(np.float64) @ s).astype(np.int64) & 1
    if rr.rank < rr.rows:
        rest = unpack_bits(rr.transform_words[rr.rank:], rr.rows).astype(np.float64)
        if ((rest @ s).astype(np.int64) & 1).any():
            raise NoSolution("syndrome batch is not in the image")
    x = np.zeros((rr.cols, s.shape[1]), dtype=np.uint8)
    x[rr.pivot_cols] = t
    return x


def inverse(m) -> BinaryMatrix:
    """Inverse of a square full-rank matrix."""
    rr = row_reduce(m)
    if rr.rows != rr.cols or rr.rank != rr.rows:
        raise NoSolution("matrix is not invertible")
    return rr.row_transform


def in_rowspace(rr: RowReduction, v) -> bool:
    """Whether v lies in the row space of the reduced matrix."""
    v = as_bits(v, rr.cols).copy()
    dense = unpack_bits(rr.rref_words[: rr.rank], rr.cols)
    for i, p in enumerate(rr.pivot_cols):
        if v[p]:
            v ^= dense[i]
    return not v.any()


# ---------------------------------------------------------------------------
# file format


def write_matrix(m: BinaryMatrix, fh) -> None:
    fh.write(f"gf2 {m.rows} {m.cols}\n")
    for i in range(m.rows):
        fh.write(" ".join(map(str, m.row_support(i).tolist())) + "\n")


def read_matrix(lines) -> BinaryMatrix:
    """Parse a gf2 block from an iterator of lines."""
    it = iter(lines)
    header = next(it).split()
    if len(header) != 3 or header[0] != "gf2":
        raise ValueError(f"bad gf2 header: {' '.join(header)!r}")
    rows, cols = int(header[1]), int(header[2])
    supports = []
    for _ in range(rows):
        line = next(it)
        supports.append([int(t) for t in line.split()])
    for s in supports:
        if s != sorted(set(s)):
            raise ValueError("row supports must be sorted and duplicate-free")
    return BinaryMatrix.from_rows(supports, cols)


def dumps(m: BinaryMatrix) -> str:
    import io

    buf = io.StringIO()
    write_matrix(m, buf)
    return buf.getvalue()


def loads(text: str) -> BinaryMatrix:
    return read_matrix(text.split("\n"))
