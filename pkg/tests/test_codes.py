from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tqsg import codes, gf2
from tqsg.codes import GallagerParams, InvalidParameters, PauliErrorPair
from tqsg.gf2 import BinaryMatrix


@pytest.mark.parametrize("n,wb,wc", [(30, 2, 3), (60, 3, 4), (150, 14, 15)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gallager_weights_and_rank(n, wb, wc, seed):
    c = codes.sample_gallager(GallagerParams(n, wb, wc, seed))
    assert c.h.shape == (n * wb // wc, n)
    assert set(c.h.row_weights().tolist()) == {wc}
    assert set(c.h.col_weights().tolist()) == {wb}
    assert c.k >= n - c.m


def test_gallager_deterministic_per_seed():
    a = codes.sample_gallager(GallagerParams(60, 3, 4, 9))
    b = codes.sample_gallager(GallagerParams(60, 3, 4, 9))
    c = codes.sample_gallager(GallagerParams(60, 3, 4, 10))
    assert a.h == b.h
    assert a.h != c.h


def test_even_wbit_always_has_a_redundant_row():
    # every column has two ones, so the sum of all rows is zero
    for seed in range(5):
        c = codes.sample_gallager(GallagerParams(30, 2, 3, seed))
        assert c.rank <= c.m - 1


@pytest.mark.parametrize("args,expected", [((30, 2, 3), 9), ((150, 14, 15), 9)])
def test_k_des_values(args, expected):
    assert codes.k_des(*args) == expected


@pytest.mark.parametrize("bad", [(30, 3, 3), (31, 2, 3), (30, 1, 3), (30, 2, 0)])
def test_invalid_params(bad):
    with pytest.raises(InvalidParameters):
        GallagerParams(*bad)


def test_remove_redundant_rows_keeps_code():
    c = codes.sample_gallager(GallagerParams(60, 3, 4, 3))
    p = codes.remove_redundant_rows(c)
    assert p.full_rank and p.rank == c.rank
    kc = gf2.kernel_matrix(c.h)
    assert not ((p.h.dense().astype(int) @ kc.T.astype(int)) & 1).any()


def kunneth(c1, c2):
    return c1.k * c2.k + c1.k_transpose * c2.k_transpose


@pytest.mark.parametrize("name,c1,c2,N,k", [
    ("five", codes.repetition_code(2), codes.repetition_code(2), 5, 1),
    ("toric", codes.repetition_code(4, True), codes.repetition_code(4, True), 32, 2),
    ("hamming", codes.hamming_code(3), codes.hamming_code(3), 58, 16),
])
def test_hgp_small_codes(name, c1, c2, N, k):
    q = codes.hypergraph_product(c1, c2)
    rep = codes.validate_css(q)
    assert rep.commutes and q.n == N
    assert q.k == k == kunneth(c1, c2)
    assert rep.k == q.k
    lx, lz = q.logical_x, q.logical_z
    assert lx.shape == lz.shape == (k, N)
    assert np.array_equal((lx.astype(int) @ lz.T.astype(int)) & 1, np.eye(k, dtype=int))
    assert not ((q.hz.dense().astype(int) @ lx.T.astype(int)) & 1).any()
    assert not ((q.hx.dense().astype(int) @ lz.T.astype(int)) & 1).any()
    # logicals are outside the stabilizer row spaces
    assert gf2.rank(gf2.vstack([q.hx, BinaryMatrix.from_dense(lx)])) == q.rank_x + k


def test_hgp_generic_logicals_agree_with_product_form(hamming_hgp):
    generic = codes.CssCode(hamming_hgp.hx, hamming_hgp.hz)
    assert generic.k == hamming_hgp.k
    # both span the same space modulo stabilizers
    stacked = gf2.vstack([hamming_hgp.hx, BinaryMatrix.from_dense(generic.logical_x)])
    both = gf2.vstack([stacked, BinaryMatrix.from_dense(hamming_hgp.logical_x)])
    assert gf2.rank(both) == gf2.rank(stacked)


def test_hgp_shape_of_gallager_product():
    c = codes.sample_gallager(GallagerParams(30, 2, 3, 4))
    q = codes.hypergraph_product(c, c)
    assert q.n == 30 ** 2 + 20 ** 2
    assert q.k == kunneth(c, c) == q.n - gf2.rank(q.hx) - gf2.rank(q.hz)
    assert not q.redundancy_free


def test_pruned_product_is_redundancy_free(pruned_hgp_small):
    q = pruned_hgp_small
    assert q.redundancy_free
    assert q.k == q.n - q.m
    assert gf2.rank(q.hx) == q.hx.rows


def test_right_inverses(pruned_hgp_small):
    (c1, c2), (r1, r2) = pruned_hgp_small.inputs, pruned_hgp_small.right_inverses
    assert np.array_equal((c1.h.dense().astype(int) @ r1) & 1, np.eye(c1.m, dtype=int))
    assert np.array_equal((c2.h.dense().astype(int) @ r2) & 1, np.eye(c2.m, dtype=int))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pauli_pair_energy(seed):
    q = codes.hypergraph_product(codes.hamming_code(3), codes.repetition_code(3))
    r = np.random.default_rng(seed)
    x, z = r.integers(0, 2, q.n), r.integers(0, 2, q.n)
    e = PauliErrorPair.from_errors(q, x, z)
    assert e.consistent(q)
    assert e.energy == codes.energy(q, (x, z)) == int(e.sx.sum() + e.sz.sum())


def test_validate_reports_offending_pairs():
    hx = BinaryMatrix.from_rows([[0, 1]], 3)
    hz = BinaryMatrix.from_rows([[1, 2]], 3)
    rep = codes.validate_css(codes.CssCode(hx, hz, check=False))
    assert not rep.ok and rep.offending == [(0, 0)]
    with pytest.raises(ValueError):
        codes.CssCode(hx, hz)
