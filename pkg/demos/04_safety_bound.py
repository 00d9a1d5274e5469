"""
How much data does a guarantee cost?
====================================

The admissible loss zeta shrinks as the count threshold grows.  Here we
tabulate it for the dimensions of the rock-paper-scissors benchmark and
invert it to find the threshold that reaches a target loss.
"""

from pspi.bounds import n_wedge_bound, zeta_bound

S, A = 1321, 3
delta, v_max, gamma = 0.05, 1.0, 0.95

for n in (10, 50, 200, 1000, 5000):
    print(f"N={n:5d}  zeta={zeta_bound(n, delta, v_max, gamma, 0.0, S, A):8.3f}")

for target in (40.0, 20.0, 10.0):
    res = n_wedge_bound(target, delta, v_max, gamma, S, A)
    print(f"zeta <= {target:4.1f} needs N >= {res.n_wedge} (closed-form upper bound {res.upper_bound:.0f})")
