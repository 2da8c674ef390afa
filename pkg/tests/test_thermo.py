from __future__ import annotations

import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tqsg import codes, thermo
from tqsg.thermo import ThermoParams


def brute_log_z(c, beta):
    """Sum over all 4^n Pauli labels, grouped by X and Z parts."""
    def part(h):
        d = h.dense().astype(int)
        e = np.array([int(((d @ np.array(v)) % 2).sum()) for v in product([0, 1], repeat=h.cols)])
        return np.bincount(e)
    ex, ez = part(c.hz), part(c.hx)
    zx = math.fsum(cnt * math.exp(-beta * e) for e, cnt in enumerate(ex))
    zz = math.fsum(cnt * math.exp(-beta * e) for e, cnt in enumerate(ez))
    # each of the 2^n eigenstates of the Hamiltonian is hit by 2^n Pauli labels
    return math.log(zx) + math.log(zz) - c.n * math.log(2)


@pytest.mark.parametrize("beta", [0.3, 1.0, 3.0])
def test_log_partition_matches_enumeration(five_qubit, toy8, beta):
    for c in (five_qubit, toy8):
        p = ThermoParams.from_code(c, beta)
        assert thermo.log_partition(p) == pytest.approx(brute_log_z(c, beta), rel=1e-12)


def test_redundant_code_rejected(toric4):
    with pytest.raises(thermo.RedundancyError):
        thermo.log_partition(ThermoParams.from_code(toric4, 1.0))
    with pytest.raises(thermo.RedundancyError):
        ThermoParams(beta=1.0, n=32, m=32, k=2)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 8.0), st.integers(1, 50), st.integers(0, 50))
def test_energy_is_minus_log_z_derivative(beta, m, k):
    n = m + k
    h = 1e-5
    lz = lambda b: thermo.log_partition(ThermoParams(beta=b, n=n, m=m, k=k))
    deriv = -(lz(beta + h) - lz(beta - h)) / (2 * h)
    assert deriv == pytest.approx(n * thermo.mean_energy_density(beta, k / n), rel=1e-7)


def test_violation_probability_limits():
    assert thermo.violation_probability(0.0) == 0.5
    assert thermo.violation_probability(np.inf) == 0.0
    assert thermo.violation_probability(1.0) == pytest.approx(math.exp(-1) / (1 + math.exp(-1)))


def test_upsilon():
    assert thermo.upsilon(0.0) == 1.0
    assert thermo.upsilon(0.5) == pytest.approx(2.0)
    with pytest.raises(thermo.UpsilonDomainError):
        thermo.log_upsilon(1.5)


def test_f_positive_and_increasing():
    # r = 1/421 and gamma = 3 are the quoted instantiation values
    T = np.arange(1, 9) * 0.05
    f = thermo.f_of_T(T, 1 / 421, 3.0)
    assert (f > 0).all() and (np.diff(f) > 0).all()
    assert thermo.f_of_T(0.0, 1 / 421, 3.0) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.4), st.floats(3.0, 10.0), st.floats(0.1, 5.0))
def test_f_increases_with_gamma(T, gamma, extra):
    assert thermo.f_of_T(T, 1 / 421, gamma + extra) > thermo.f_of_T(T, 1 / 421, gamma)


def test_sconf_density_tends_to_rate():
    r = 1 / 15
    assert thermo.sconf_lower_bound(1e3, r, 3.0, 1000) / 1000 == pytest.approx(r, abs=1e-6)


def test_upsilon_domain_error_for_small_gamma():
    with pytest.raises(thermo.UpsilonDomainError):
        thermo.f_of_T(10.0, 0.0, 0.5)


@pytest.mark.parametrize("n", [10, 40, 100, 400])
@pytest.mark.parametrize("rho", [0.05, 0.1, 0.2, 0.3, 0.45])
def test_hamming_ball_bound(n, rho):
    exact, bound = thermo.hamming_ball(n, rho)
    assert exact == sum(math.comb(n, l) for l in range(int(math.floor(rho * n + 1e-12)) + 1))
    assert exact <= 1.05 * bound


def test_hoeffding_report_no_violations(rng):
    p = ThermoParams(beta=1.0, n=120, m=100, k=20)
    e = rng.binomial(100, float(thermo.violation_probability(1.0)), 20000)
    rep = thermo.energy_concentration_check(p, e)
    assert rep.violations == 0
    assert rep.mean_empirical == pytest.approx(rep.mean_theory, rel=0.01)


def test_hoeffding_single_outlier_is_not_significant():
    p = ThermoParams(beta=1.0, n=120, m=100, k=20)
    mean = 100 * float(thermo.violation_probability(1.0))
    # one draw far in the tail: raw count flags it, the binomial test does not
    e = np.full(100, round(mean))
    e[0] = round(mean) + 22   # bound there is about 1e-4, below 1/100
    rep = thermo.energy_concentration_check(p, e)
    assert rep.violations > 0
    assert rep.significant_violations() == 0


def test_hoeffding_heavy_tail_is_significant():
    p = ThermoParams(beta=1.0, n=120, m=100, k=20)
    e = np.where(np.arange(1000) % 2, 0, 100)   # every draw at an extreme
    rep = thermo.energy_concentration_check(p, e)
    assert rep.significant_violations() > 0
