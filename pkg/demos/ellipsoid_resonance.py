"""Resonance sum and Morse counts on one irrational ellipsoid in R^6.

Run with ``python3 demos/ellipsoid_resonance.py``.
"""
import numpy as np

from closedchar import floquet as fq
from closedchar import geometry as g
from closedchar import index as ix
from closedchar import orbits as ob
from closedchar import resonance as rs

r = np.array([1.0, 1.2345, 1.5678])
body = g.Ellipsoid(r)
Hm = g.HomogeneousHamiltonian(body, 1.5)

items, morse = [], []
for j, orb in enumerate(ob.ellipsoid_orbits(body, samples=64)):
    md = fq.linearize(Hm, orb, 96)
    prof = ix.iteration_profile(md.path, 4, direct_max=2)
    rows = ix.ekeland_index(prof)
    chi = rs.nondegenerate_chi(rows)
    print(f"y{j + 1}: tau = {orb.tau:.6f}  i_hat = {prof.mean_index:.6f}  chi_hat = {chi}"
          f"  {fq.classify(md).label}")
    items.append((f"y{j + 1}", prof.mean_index, chi))

    # deep tables for the Morse series come from the stored circle function
    probe = rs.MorseOrbit([], prof.K, None, prof.mean_index, 3)
    deep = prof.extended(rs.required_depth(probe, 2001))
    rows = ix.ekeland_index(deep)
    morse.append(rs.MorseOrbit(rows, deep.K, rs.nondegenerate_critical_types(rows, 3, deep.K),
                               deep.mean_index, 3))

report = rs.resonance_sum(items, 3)
print(f"\nsum chi_hat / i_hat = {report.total:.15f}  (residual {report.residual:.1e})")

slope, values = rs.morse_slope(morse)
for I, v in zip((250, 500, 1000, 2000), values):
    print(f"I = {I:5d}  M^I(-1) = {v:5d}  ratio {v / I:.4f}")
print(f"slope {slope:.6f}, per-degree bound {rs.morse_bound(morse):.1f}")
