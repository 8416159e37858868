"""Certifying the bound's conditions for a configured GA.

A runtime bound is only as good as its preconditions.  The condition report
checks, for a concrete configuration:

  C1  mutation lifts a level-j genotype above j with probability >= s_j
  C2  mutation keeps a genotype above its level with probability >= p0
  C3  crossover hands the higher parent's membership on with floor eps1 > 0
  C4  the selection pressure clears the required line below gamma0
  C5  the population size reaches the bound's minimum

C1-C3 are certified exactly (flip-count convolutions, closed forms and
structural sub-events); C4 sweeps the exact rank-model pressure over a
grid.  The quantification is over constructed worst-representative
populations, not all populations.

Run:  python demos/05_condition_checking.py
"""

import dataclasses

import numpy as np

from levelga import (SelectionMechanism, canonical_partition, condition_report,
                     estimate_upgrade_probabilities, preset_config)


def show(report):
    for row in report.to_rows():
        print(f"  {row['name']}: satisfied={row['satisfied']!s:<5} "
              f"margin={row['margin']:+.4g}  ({row['method']})")
    print(f"  => passed={report.passed}")
    for w in report.warnings:
        print(f"  warning: {w}")


print("A certified configuration (onemax n=20, published intensities)")
print("--------------------------------------------------------------")
out = preset_config("onemax", 20, delta=0.1, chi=1.0)
show(condition_report(out.config, delta=0.1))
print()

print("Halving the tournament size breaks the pressure condition")
print("----------------------------------------------------------")
weak = dataclasses.replace(out.config, selection=SelectionMechanism("tournament", k=12))
show(condition_report(weak, delta=0.1))
print()

print("A gate that never opens breaks the crossover floor (sorting, pc=1)")
print("-------------------------------------------------------------------")
sorting = preset_config("sorting", 8, delta=1.0, pc=0.5).config
closed = dataclasses.replace(
    sorting, crossover=dataclasses.replace(sorting.crossover, pc=1.0))
show(condition_report(closed, delta=1.0))
print()

print("Sampled upgrade probabilities on constructed populations")
print("---------------------------------------------------------")
config = out.config
partition = canonical_partition(config.problem)
gamma0 = condition_report(config, delta=0.1).gamma0
est = estimate_upgrade_probabilities(config, partition, j=10, gamma0=gamma0,
                                     gamma=gamma0, trials=100_000,
                                     rng=np.random.default_rng(0))
print(f"level 10, gamma0={gamma0:.4f}:")
print(f"  full pipeline, block at level 10 only:   {est.pipeline_plain.value:.5f}")
print(f"  full pipeline, gamma0-fraction above:    {est.pipeline_seeded.value:.5f} "
      f"(needs >= (1+delta) gamma = {1.1 * gamma0:.5f})")
print(f"  mutation-only upgrade:                   {est.mutation_upgrade.value:.5f}")
print(f"  mutation-only stay:                      {est.mutation_stay.value:.5f}")
