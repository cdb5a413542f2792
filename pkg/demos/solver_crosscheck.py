"""Shooting and dual action periods checked against the analytic ones on an ellipsoid in R^4."""
import numpy as np

from closedchar import geometry as g
from closedchar import orbits as ob

body = g.Ellipsoid([1.0, 1.37])
analytic = [o.tau for o in ob.ellipsoid_orbits(body, samples=128)]

seeds = ob.shooting_seeds(body, k_random=4, seed=0)
shot = ob.deduplicate(ob.find_orbits_by_shooting(body, 1.5 * max(analytic), seeds, samples=128))

a = 3 * max(analytic)
vartheta = 0.9 * min(min(analytic), min(body.r) ** 2) / a
Hm, dual = ob.dual_action_orbits(body, a, vartheta=vartheta, n_modes=16, samples=128)

print("analytic   ", np.round(analytic, 10))
print("shooting   ", np.round(sorted(o.tau for o in shot), 10))
print("dual action", np.round(sorted(d.orbit.tau for d in dual), 10))
for d in dual:
    print(f"  tau {d.orbit.tau:.8f}  psi {d.psi:.6f}")
print("monotonicity audit:", ob.monotonicity_audit(Hm, [d.orbit.tau for d in dual])["violations"] or "clean")
