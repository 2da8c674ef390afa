from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tqsg import codes, confinement, dynamics
from tqsg.codes import PauliErrorPair
from tqsg.confinement import ReducedWeight
from tqsg.gf2 import BinaryMatrix


def brute_reduced(dual: np.ndarray, x: np.ndarray) -> int:
    best = int(x.sum())
    for coeff in product([0, 1], repeat=len(dual)):
        y = (x + np.array(coeff) @ dual) % 2
        best = min(best, int(y.sum()))
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reduced_weight_exact_matches_brute_force(seed):
    r = np.random.default_rng(seed)
    rows, n = int(r.integers(1, 8)), int(r.integers(4, 16))
    dual = r.integers(0, 2, (rows, n)).astype(np.uint8)
    rw = ReducedWeight(BinaryMatrix.from_dense(dual), "exact")
    x = r.integers(0, 2, n).astype(np.uint8)
    res = rw(x)
    assert res.reduced_weight == brute_reduced(dual, x)
    assert int(res.minimizer.sum()) == res.reduced_weight
    # minimizer is in the same coset
    diff = (res.minimizer ^ x).astype(int)
    assert brute_reduced(dual, diff) == 0
    g = ReducedWeight(BinaryMatrix.from_dense(dual), "greedy")(x)
    assert g.reduced_weight >= res.reduced_weight


def test_short_cache_agrees_with_full_walk(hamming_hgp, rng):
    full = ReducedWeight(hamming_hgp.hx, "exact")
    cached = ReducedWeight(hamming_hgp.hx, "exact")
    assert cached.prepare_short(4)
    for _ in range(300):
        w = int(rng.integers(1, 5))
        x = np.zeros(hamming_hgp.n, np.uint8)
        x[rng.choice(hamming_hgp.n, w, replace=False)] = 1
        assert cached(x).reduced_weight == full(x).reduced_weight


def test_stabilizer_has_zero_reduced_weight(toric4):
    rw = ReducedWeight(toric4.hx, "exact")
    assert rw(toric4.hx.dense()[3]).reduced_weight == 0


def test_five_qubit_gamma_hat(five_qubit):
    rep = confinement.confinement_scan(five_qubit, "X", weight_cap=2)
    assert rep.gamma_hat == {1: Fraction(1), 2: Fraction(0)}
    assert rep.exhaustive and rep.reduced_exact
    rec = rep.records()
    assert rec[1]["min_ratio"] == 0.0 and len(rec[1]["witness_indices"]) == 2


def test_confinement_violations_reported(five_qubit):
    rep = confinement.confinement_scan(five_qubit, "Z", weight_cap=2, gamma=0.5)
    assert rep.violations and all(v["ratio"] < 0.5 for v in rep.violations)


def test_confinement_budget(hamming_hgp):
    with pytest.raises(confinement.BudgetExceeded):
        confinement.confinement_scan(hamming_hgp, weight_cap=5, budget=1000)


def test_sampled_scan_is_seeded(toric4):
    a = confinement.confinement_scan(toric4, mode="sampled", weight_cap=4, samples=200, seed=3)
    b = confinement.confinement_scan(toric4, mode="sampled", weight_cap=4, samples=200, seed=3)
    assert a.gamma_hat == b.gamma_hat and not a.exhaustive


@pytest.mark.parametrize("fixture,d", [("five_qubit", 2), ("toric4", 4), ("hamming_hgp", 3)])
def test_distance(request, fixture, d):
    c = request.getfixturevalue(fixture)
    b = confinement.distance_probe(c, trials=50, rng=np.random.default_rng(0))
    assert b.upper == b.lower == d
    x = np.zeros(c.n, np.uint8)
    x[b.witness] = 1
    # witness is a logical of the stated type
    h, partner = (c.hz, c.logical_z) if b.witness_side == "X" else (c.hx, c.logical_x)
    assert not ((h.dense().astype(int) @ x) & 1).any()
    assert ((partner.astype(int) @ x) & 1).any()


def brute_kl_first_failure(c, wmax):
    """Smallest Pauli weight with zero syndrome and nontrivial logical action."""
    hx, hz = c.hx.dense().astype(int), c.hz.dense().astype(int)
    lx, lz = c.logical_x.astype(int), c.logical_z.astype(int)
    for w in range(1, wmax + 1):
        for sup in combinations(range(c.n), w):
            for labels in product("XYZ", repeat=w):
                x = np.zeros(c.n, int)
                z = np.zeros(c.n, int)
                for q, l in zip(sup, labels):
                    x[q] = l in "XY"
                    z[q] = l in "ZY"
                if ((hz @ x) % 2).any() or ((hx @ z) % 2).any():
                    continue
                if ((lz @ x) % 2).any() or ((lx @ z) % 2).any():
                    return w
    return None


@pytest.mark.parametrize("fixture,d", [("five_qubit", 2), ("toric4", 4)])
def test_kl_first_failure_matches_brute_force(request, fixture, d):
    c = request.getfixturevalue(fixture)
    rep = confinement.kl_check(c, max_pauli_weight=d + 1, method="pauli")
    assert rep.first_violation == d == brute_kl_first_failure(c, d)
    assert rep.passed_weights == list(range(1, d))


def test_kl_profile_independent_of_base(hamming_hgp, rng):
    ref = confinement.kl_check(hamming_hgp, max_pauli_weight=3).profile()
    inv = dynamics.SyndromeInverter(hamming_hgp)
    for _ in range(3):
        sx = rng.integers(0, 2, hamming_hgp.hz.rows).astype(np.uint8)
        sz = rng.integers(0, 2, hamming_hgp.hx.rows).astype(np.uint8)
        base = dynamics.syndrome_to_error(hamming_hgp, sx, sz, inv)
        rep = confinement.kl_check(hamming_hgp, base, max_pauli_weight=3)
        assert rep.profile() == ref
        assert rep.frame_phase == np.concatenate([base.sz, base.sx]).tolist()
