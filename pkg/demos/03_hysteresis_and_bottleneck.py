"""Heat from the ground state and anneal from infinite temperature on a small code,
then look at the bottleneck ratio on the shipped 14-bit instance.

At N = 5449 both branches track the equilibrium curve down to T = 0.4: barriers
this small are crossed within a few hundred sweeps. The acceptance suite runs the
same protocol at N = 38629, where the branches split."""
from __future__ import annotations

import numpy as np

from tqsg import codes, dynamics as D, thermo
from tqsg.codes import GallagerParams

cc = codes.remove_redundant_rows(codes.sample_gallager(GallagerParams(60, 3, 4, 1)))
q = codes.hypergraph_product(cc, cc)
grid = [0.4, 0.6, 0.8, 1.0, 1.4, 2.0]
heat = D.run_protocol(q, D.Schedule("heating", grid, 200, 50), rng=np.random.default_rng(1))
ann = D.run_protocol(q, D.Schedule("annealing", grid[::-1], 200, 50), rng=np.random.default_rng(2))
eq = {T: float(thermo.mean_energy_density(1 / T, q.rate)) for T in grid}
a = {r["T"]: r["energy_density"] for r in ann.records}
print(" T     heating  annealing  equilibrium")
for r in heat.records:
    T = r["T"]
    print(f"{T:4.1f}  {r['energy_density']:8.4f}  {a[T]:9.4f}  {eq[T]:11.4f}")

inst = D.BottleneckInstance(D.bundled_instance_matrix(), None, 8)
for beta in (0.5, 1.0, 2.0, 3.0):
    print(f"beta={beta}: exact bottleneck ratio {inst.exact(beta).ratio:.4f}")
