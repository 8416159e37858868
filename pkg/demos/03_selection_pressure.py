"""Selection pressure: closed forms, floors, estimates, thresholds.

The selective pressure at rank fraction gamma is the probability that one
selection act returns a member at least as fit as the ceil(gamma * lambda)
ranked one.  The runtime bounds need it to grow at least like
gamma * sqrt((1+delta) / (p0 eps1 gamma0)) below gamma0; the threshold
construction picks the smallest mechanism intensity for which that holds.

Run:  python demos/03_selection_pressure.py
"""

import math

import numpy as np

from levelga import (SelectionMechanism, estimate_selective_pressure,
                     exact_selective_pressure, ranked_population, selection_threshold,
                     selective_pressure, selective_pressure_floor)

print("Closed forms and their conservative floors")
print("------------------------------------------")
print(f"{'gamma':>6} {'tour k=8':>9} {'floor':>7} {'(mu,l)=1/4':>11} {'exp eta=8':>10} {'floor':>7}")
t8 = SelectionMechanism("tournament", k=8)
m4 = SelectionMechanism("mu_lambda", mu=25)
e8 = SelectionMechanism("exp_ranking", eta=8.0)
for gamma in (0.02, 0.05, 0.1, 0.25, 0.5, 1.0):
    print(f"{gamma:>6.2f} {selective_pressure(t8, gamma):>9.4f} "
          f"{selective_pressure_floor(t8, gamma):>7.4f} "
          f"{selective_pressure(m4, gamma, lam=100):>11.4f} "
          f"{selective_pressure(e8, gamma):>10.4f} "
          f"{selective_pressure_floor(e8, gamma):>7.4f}")
print()

print("Monte Carlo vs exhaustive enumeration")
print("-------------------------------------")
pop = ranked_population(6)
mech = SelectionMechanism("tournament", k=3)
rng = np.random.default_rng(0)
for gamma in (1 / 6, 0.5, 1.0):
    exact = exact_selective_pressure(mech, 6, gamma)  # enumerates all 6^3 draws
    est = estimate_selective_pressure(mech, pop, gamma, trials=200_000, rng=rng)
    print(f"gamma={gamma:.3f}: exact={exact:.5f}, "
          f"estimate={est.value:.5f} +/- {est.ci_halfwidth:.5f}")
print()

print("Intensity thresholds for the pressure condition")
print("-----------------------------------------------")
# With eps1 = 1/2 (crossover keep floor) and p0 = 1/e (no-change probability)
eps1, p0 = 0.5, math.exp(-1.0)
for delta in (0.1, 1.0):
    th_t = selection_threshold("tournament", eps1, p0, delta)
    th_m = selection_threshold("mu_lambda", eps1, p0, delta)
    print(f"delta={delta}: tournament k >= {th_t.threshold:.2f} "
          f"(gamma0={th_t.gamma0:.4f}); "
          f"truncation lambda/mu >= {th_m.threshold:.2f} (gamma0={th_m.gamma0:.4f})")
print()
print("below the threshold the pressure line gamma * sqrt((1+delta)/(p0 eps1 gamma0))")
print("overtakes the mechanism's curve inside (0, gamma0) and the certificate fails")
