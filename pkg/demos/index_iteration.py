"""Iterated index of a path ending at N1(1,1) + N1(1,-1) + N1(1,-1).

The direct index of each iterate is compared with the sum of omega-indices
over the roots of unity, and with the closed form 4m - 1.
"""
import numpy as np

from closedchar import index as ix
from closedchar import symplectic as sp
from closedchar.paths import iterate_path, normal_form_path

forms = [sp.N1(1.0, 1.0), sp.N1(1.0, -1.0), sp.N1(1.0, -1.0)]
path = normal_form_path(forms, windings=[1, 1, 0])
cf = ix.circle_index_function(path)

print(" m  direct  roots  4m-1  nu")
for m in range(1, 13):
    i_dir, nu = ix.omega_index(iterate_path(path, m), 1.0)
    i_sum = sum(ix.omega_index(path, np.exp(2j * np.pi * k / m))[0] for k in range(m))
    print(f"{m:2d}  {i_dir:6d}  {i_sum:5d}  {4 * m - 1:4d}  {nu:2d}")

print(f"\nmean index {cf.mean():.6f}")
print("splitting numbers at 1:", ix.splitting_numbers(path.endpoint, 1.0, path))
