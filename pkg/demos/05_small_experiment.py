"""
A desk-sized data-efficiency run
================================

A handful of seeds on the grid world, comparing plain SPIBB with pSPIBB
after game-based pruning.  The result is the same CSV the ``experiment``
subcommand writes.
"""

from pspi.harness import ExperimentConfig, emit_csv, run_experiment

cfg = ExperimentConfig("gridworld", methods=(("spibb", "none"), ("pspibb", "game")),
                       n_wedge=20, sizes=(10, 100, 1000), n_seeds=8, seed=3)
points, seeds = run_experiment(cfg)
print(emit_csv(points))

# Every run stays inside the safety envelope baseline - zeta.
worst = min(perf - (r.baseline - r.zeta[k]) for r in seeds for k, perf in r.performance.items())
print("smallest slack to the safety envelope:", round(worst, 3))
