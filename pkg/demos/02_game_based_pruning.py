"""
Pruning with worst- and best-case game values
=============================================

Nature is turned into a player who picks successors from the support graph.
Playing against the agent gives aVal, playing with it gives cVal; both bound
the true value under every valuation of the parameters.
"""

from pspi.bench import get_spec
from pspi.game import aval_cval, aval_cval_prune, improving_transitions, strict_bound_states
from pspi.toy_models import two_case_pruning_model

m = two_case_pruning_model()
gv = aval_cval(m)
for s, name in enumerate(m.states):
    print(f"{name}: aVal={gv.aval[s]:8.2f}  cVal={gv.cval[s]:8.2f}")

# Transitions along which the antagonistic value strictly improves.
for s, a, t in sorted(improving_transitions(m, gv)):
    print("improving:", m.states[s], m.actions[a], "->", m.states[t])

# From s0 the worst-case optimal player hits one of them almost surely, which
# licenses removing actions whose best case merely ties aVal.
print("strict bound holds at s0:", bool(strict_bound_states(m, gv)[0]))

pruned, result = aval_cval_prune(m)
print(result.report(m))

# The same preprocessing on two benchmark models.
for name in ("taxi", "pacman"):
    model = get_spec(name).build()
    _, res = aval_cval_prune(model)
    print(f"{name}: removed {len(res.removed)} of {len(model.trans)} pairs in {res.rounds} rounds")
