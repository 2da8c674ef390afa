"""Confinement ratios of the Hamming product code and an alpha-percolation tail table."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from tqsg import codes, confinement, graphs

ham = codes.hamming_code(3)
q = codes.hypergraph_product(ham, ham)
rep = confinement.confinement_scan(q, "X", weight_cap=3)
for w, g in sorted(rep.gamma_hat.items()):
    print(f"reduced weight {w}: min |Hx|/|x| = {g}")

kl = confinement.kl_check(q, None, 4, method="pauli")
print("first KL failure at weight", kl.first_violation)

g = graphs.random_regular_graph(3, 200, seed=4)
pp = graphs.PercolationParams(0.01, Fraction(1, 2), 1000, list(range(1, 11)), w=3)
tab = graphs.percolation_experiment(g, pp, np.random.default_rng(4), 4)
print("q =", round(tab.q, 4))
for row in list(tab.rows())[:6]:
    print(row)
