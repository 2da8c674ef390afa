"""Closed-form equilibrium quantities for redundancy-free CSS Hamiltonians.

Natural logarithms throughout; callers convert bases when writing tables.
Checks carry unit energy, so beta is dimensionless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import entr, expit
from scipy.stats import binom

LOG_BASE = "e"


class RedundancyError(ValueError):
    """The closed forms need full-rank check matrices."""


class UpsilonDomainError(ValueError):
    """Argument of Υ left [0, 1); typically gamma is too small for this T."""


@dataclass(frozen=True)
class ThermoParams:
    beta: float
    n: int
    m: int
    k: int
    r: float | None = None
    gamma: float | None = None
    redundancy_free: bool = True

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.redundancy_free and self.k != self.n - self.m:
            raise RedundancyError(f"k={self.k} but n - m = {self.n - self.m}")

    @classmethod
    def from_code(cls, code, beta: float, gamma: float | None = None) -> "ThermoParams":
        return cls(beta=beta, n=code.n, m=code.m, k=code.k, r=code.k / code.n, gamma=gamma,
                   redundancy_free=code.redundancy_free)


def violation_probability(beta) -> np.ndarray | float:
    """Probability e^{-β}/(1+e^{-β}) that a single check is violated."""
    return expit(-np.asarray(beta, dtype=float))


def log_partition(p: ThermoParams) -> float:
    """ln Z = k ln 2 + m ln(1 + e^{-β})."""
    if not p.redundancy_free:
        raise RedundancyError("closed-form partition function needs a redundancy-free code")
    return p.k * math.log(2.0) + p.m * float(np.log1p(np.exp(-p.beta)))


def mean_energy_density(beta, r):
    """ε(β) = (1 - r) / (1 + e^β)."""
    return (1.0 - np.asarray(r, dtype=float)) * expit(-np.asarray(beta, dtype=float))


def log_upsilon(rho):
    """ln Υ(ρ) = -ρ ln ρ - (1-ρ) ln(1-ρ), extended continuously to 0 and 1."""
    rho = np.asarray(rho, dtype=float)
    if np.any((rho < 0) | (rho > 1)):
        raise UpsilonDomainError(f"rho outside [0, 1]: {rho}")
    out = entr(rho) + entr(1.0 - rho)
    return float(out) if out.ndim == 0 else out


def upsilon(rho):
    """Υ(ρ) = ρ^{-ρ} (1-ρ)^{ρ-1}."""
    return np.exp(log_upsilon(rho))


def _beta_terms(beta, r, gamma):
    beta = np.asarray(beta, dtype=float)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    fermi = expit(-beta)                      # 1 / (1 + e^β)
    rho = 2.0 * (1.0 - r) * fermi / gamma
    if np.any(rho >= 1.0):
        raise UpsilonDomainError(f"Υ argument {np.max(rho)} >= 1; gamma={gamma} too small")
    # β/(1+e^β) → 0 as β → ∞; keep inf out of the product
    with np.errstate(invalid="ignore"):
        kin = np.where(np.isinf(beta), 0.0, beta * fermi)
    entropy = (1.0 - r) * (np.log1p(np.exp(-beta)) + kin)
    return entropy - log_upsilon(rho)


def f_of_T(T, r: float, gamma: float):
    """f(T) = (1-r)[ln(1+e^{-1/T}) + 1/(T(1+e^{1/T}))] - ln Υ(2(1-r)/(γ(1+e^{1/T})))."""
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise ValueError("T must be non-negative")
    with np.errstate(divide="ignore"):
        beta = np.where(T == 0, np.inf, 1.0 / np.where(T == 0, 1.0, T))
    out = _beta_terms(beta, r, gamma)
    return float(out) if np.ndim(out) == 0 else out


def sconf_lower_bound(beta, r: float, gamma: float, n: int):
    """n [r + (1-r)(ln(1+e^{-β}) + β/(1+e^β)) - ln Υ(2(1-r)/(γ(1+e^β)))].

    The (1 ± κ) asymptotic slack is not folded in.
    """
    out = n * (r + _beta_terms(beta, r, gamma))
    return float(out) if np.ndim(out) == 0 else out


def hamming_ball(n: int, rho: float) -> tuple[int, float]:
    """Exact |{x : |x| <= ρn}| and the (κ = 0) upper-bound expression."""
    radius = math.floor(rho * n + 1e-12)
    exact = sum(math.comb(n, l) for l in range(radius + 1))
    if rho <= 0:
        bound = 0.0
    elif rho >= 1:
        bound = math.inf
    else:
        bound = math.sqrt(n / (2 * math.pi)) * math.sqrt(rho / (1 - rho)) * math.exp(n * log_upsilon(rho))
    return exact, bound


def hoeffding_bound(t, m: int):
    """2 exp(-2 t² / m) for a sum of m variables in [0, 1]."""
    return 2.0 * np.exp(-2.0 * np.asarray(t, dtype=float) ** 2 / m)


@dataclass
class ConcentrationReport:
    t_grid: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    mean_theory: float
    mean_empirical: float
    samples: int

    @property
    def violations(self) -> int:
        return int(np.sum(self.empirical > self.bound))

    def significant_violations(self, level: float = 1e-3) -> int:
        """Grid points where the exceedance count is implausible under the bound.

        A bound below 1/samples is broken by a single unlucky draw, so the
        raw count above is only meaningful at large sample sizes.
        """
        counts = np.rint(self.empirical * self.samples).astype(np.int64)
        pv = binom.sf(counts - 1, self.samples, np.minimum(self.bound, 1.0))
        return int(np.sum((self.empirical > self.bound) & (pv < level)))

    def rows(self):
        for t, e, b in zip(self.t_grid, self.empirical, self.bound):
            yield {"t": float(t), "empirical": float(e), "bound": float(b)}


def energy_concentration_check(p: ThermoParams, energies, t_grid=None) -> ConcentrationReport:
    """Empirical P[|E - <E>| >= t] against the Hoeffding bound."""
    if not p.redundancy_free:
        raise RedundancyError("i.i.d. syndrome model needs a redundancy-free code")
    energies = np.asarray(energies, dtype=float)
    mean = p.m * float(violation_probability(p.beta))
    if t_grid is None:
        t_grid = np.linspace(0.0, 3.0 * math.sqrt(p.m), 31)
    t_grid = np.asarray(t_grid, dtype=float)
    dev = np.abs(energies - mean)
    emp = np.array([np.mean(dev >= t) for t in t_grid])
    return ConcentrationReport(t_grid, emp, hoeffding_bound(t_grid, p.m), mean, float(energies.mean()),
                               len(energies))
