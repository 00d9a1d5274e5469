"""
Pruning queries for an SMT solver
=================================

The Bellman equations of a parametric model, together with the parameter
constraints, form an existential formula over the reals.  Adding one extra
inequality asks whether a pair can ever be optimal; an unsat answer means
it never is.  This demo needs the ``z3`` executable on PATH.
"""

import shutil

from pspi.game import aval_cval
from pspi.pmdp import instantiate
from pspi.smt import aval_q_prunable, export_query, qq_prunable
from pspi.solve import value_iteration
from pspi.toy_models import qq_pruning_model

# Two routes to a +20 sink: action a needs two successes of probability p,
# action b only one.  Failure ends in a -5 sink.
m = qq_pruning_model()
print("aVal(s0) =", aval_cval(m).aval[0])

# Q-values for a few values of p: b wins every time.
for p in (0.1, 0.5, 0.9):
    q = value_iteration(instantiate(m, {"p": p})).Q[0]
    print(f"p={p}: Q(s0,a)={q[0]:7.3f}  Q(s0,b)={q[1]:7.3f}")

# The query the solver sees for "can (s0, a) reach V(s0)?".
print(export_query(m, 0, 0, "q-q"))

if shutil.which("z3") is None:
    raise SystemExit("z3 not found; skipping the solver calls")

# Comparing against aVal is too weak here: Q(s0,a) can exceed -45.
print("aval-q prunes (s0,a):", aval_q_prunable(m, 0, 0)[0])
# Comparing against V(s0) itself succeeds, since p > p^2 on (0, 1).
print("q-q prunes (s0,a):  ", qq_prunable(m, 0, 0)[0])
print("q-q prunes (s0,b):  ", qq_prunable(m, 0, 1)[0])
