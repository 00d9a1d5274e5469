"""
Pooling counts across shared labels
===================================

A 5x5 grid where every move slips with the same probability ``x``.  The
behaviour policy is near-optimal; we collect a few hundred steps and compare
how many state-action pairs each method still treats as uncertain.
"""

import numpy as np

from pspi.bench import behavior_policy, get_spec
from pspi.harness import evaluate_policy_true, sample_dataset
from pspi.parametric import label_classes, pooled_counts
from pspi.pmdp import skeleton_mdp
from pspi.spibb import count, mle_mdp, spibb_policy, uncertainty_set

spec = get_spec("gridworld")
model = spec.build()
true = spec.true_mdp(model)
pi_b = behavior_policy(true, spec.alpha)
print("behaviour policy value:", round(evaluate_policy_true(true, pi_b), 3))

# Label classes: every pair whose successors carry {x, 1-x} lands in one class.
classes = label_classes(model)
print("enabled pairs:", int(true.enabled.sum()), " label classes:", classes.n_sa_classes)

# Collect data and count.
data = sample_dataset(true, pi_b, 300, seed=1, horizon=spec.horizon)
raw = count(data, model.n_states, model.n_actions)
pooled = pooled_counts(raw, classes)
skeleton = skeleton_mdp(model)

n_wedge = 30
for name, c in (("SPIBB", raw), ("pSPIBB", pooled)):
    u = uncertainty_set(c, n_wedge, skeleton)
    pi = spibb_policy(mle_mdp(c, skeleton), pi_b, u)
    print(f"{name:7s} uncertain pairs: {len(u):3d}   true value: {evaluate_policy_true(true, pi):.3f}")

# Pooling never adds uncertainty: the pSPIBB set is contained in the SPIBB one.
assert uncertainty_set(pooled, n_wedge, skeleton).issubset(uncertainty_set(raw, n_wedge, skeleton))

# Every slipping move shares one pooled estimate of x (true value 0.2).
mle = mle_mdp(pooled, skeleton)
s, a = next((s, a) for s, a in zip(*np.nonzero(mle.enabled)) if mle.P[s, a, s] > 0)
print("pooled estimate of the slip probability:", round(float(mle.P[s, a, s]), 3))
