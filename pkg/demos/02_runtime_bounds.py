"""Closed-form expected-runtime bounds.

The bound machinery takes a level partition of the search space and, for
each level, a floor on the probability that one offspring sample lands
strictly above it.  Together with a population-size requirement it yields an
upper bound on the expected number of fitness evaluations until the top
level is reached.

Two input forms exist:

* level form   -- floors z_j for the full sampling pipeline,
* GA form      -- operator constants (mutation floors s_j, no-change
                  probability p0, crossover keep floor eps1) that compose
                  through the selection pressure into the same machinery.

Run:  python demos/02_runtime_bounds.py
"""

import numpy as np

from levelga import (LevelProbabilities, benchmark_level_probs, ga_bound, level_bound,
                     preset_config, ProblemSpec, run_replicates)

print("Level form")
print("----------")
z = LevelProbabilities(values=np.full(10, 0.05))
report = level_bound(lam=2_000, z=z, delta=1.0, gamma0=0.25)
print(f"m={report.m} levels, floors 0.05 everywhere, delta=1, gamma0=0.25")
print(f"derived constants: a={report.a:.4g}, eps={report.eps_or_psi}, c={report.c:.4g}")
print(f"population must satisfy lambda >= {report.lambda_min}; "
      f"requested lambda={report.lam} ok={report.lambda_ok}")
print(f"expected-evaluation bound: {report.bound:.4g}")
print()

print("GA form on a benchmark")
print("----------------------")
spec = ProblemSpec("onemax", 100)
levels = benchmark_level_probs(spec, chi=1.0)
print(f"onemax n=100: s_1={levels.values[0]:.4g} ... s_n={levels.values[-1]:.4g}, "
      f"p0={levels.p0:.4f}, eps1={levels.eps1}")
ga = ga_bound(lam=500_000, s=levels, delta=0.1, gamma0=0.0416)
print(f"lambda_min={ga.lambda_min}, bound={ga.bound:.4g} evaluations")
print(f"implied full-pipeline floors z_j = gamma0 (1+delta) s_j / p0: "
      f"z_1={ga.implied_z[0]:.4g}, z_n={ga.implied_z[-1]:.4g}")
print()

print("Ready-to-run parameterizations")
print("------------------------------")
# The preset picks the smallest selection intensity meeting the published
# inequality and the minimum admissible population size.
for preset, kwargs in [("onemax", dict(delta=0.1, chi=1.0)),
                       ("sorting", dict(delta=1.0, pc=0.5))]:
    out = preset_config(preset, 50 if preset == "onemax" else 8, **kwargs)
    cfg = out.config
    print(f"{preset}: k={cfg.selection.k}, lambda={cfg.lam}, "
          f"gamma0={out.report.gamma0:.5f}, bound={out.report.bound:.3g}")
print()

print("Bound vs reality")
print("----------------")
out = preset_config("sorting", 8, delta=1.0, pc=0.5, replicates=10, seed=3)
stats = run_replicates(out.config)
print(f"sorting n=8: measured mean {stats.mean_evals:,.0f} evaluations "
      f"vs bound {out.report.bound:.3g} "
      f"(ratio {stats.mean_evals / out.report.bound:.2e})")
print("the bound is loose by design; it certifies an upper envelope, not a fit")
