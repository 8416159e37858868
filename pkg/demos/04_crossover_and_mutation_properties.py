"""Crossover preservation properties and mutation constants.

The GA bounds only need three structural facts about variation:

* crossover of two parents with equal all-ones prefix never shortens it,
  and mixed prefixes are extended with probability at least 1/2;
* the chosen offspring reaches the parents' average one-count rounded up
  with probability at least 1/2 (the two children conserve the total);
* mutation leaves a genotype unchanged with a known floor (no bit flipped,
  or zero exchanges), and upgrades a level with a computable floor.

Run:  python demos/04_crossover_and_mutation_properties.py
"""

import math

import numpy as np

from levelga import check_crossover_property
from levelga.operators import (crossover_two_offspring, mutate_bitwise_batch,
                               mutate_exchange_batch)

rng = np.random.default_rng(1)

print("Prefix preservation (exact enumeration)")
print("---------------------------------------")
u = np.array([1, 1, 0, 1, 0, 0], dtype=np.uint8)
v = np.array([1, 1, 0, 0, 1, 1], dtype=np.uint8)
same = check_crossover_property(u, v, "i", kind="uniform")
print(f"equal prefixes (len 2): P(child prefix >= 2) = {same.probability} (exact)")
w = np.array([1, 1, 1, 1, 0, 0], dtype=np.uint8)
mixed = check_crossover_property(w, v, "ii", kind="uniform")
print(f"mixed prefixes (4 vs 2): P(child prefix > 2) = {mixed.probability:.4f} >= 1/2")
print()

print("One-count conservation and the majority child")
print("---------------------------------------------")
a = np.array([1, 1, 1, 1, 0, 0, 0, 0], dtype=np.uint8)
b = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=np.uint8)
for kind in ("uniform", "one_point"):
    x1, x2 = crossover_two_offspring(kind, a, b, rng)
    total = int(x1.sum() + x2.sum())
    res = check_crossover_property(a, b, "iii", kind=kind)
    print(f"{kind:>9}: children one-counts sum to {total} (= parents), "
          f"P(child >= average) = {res.probability:.4f}")
print()

print("Mutation constants")
print("------------------")
n, chi, trials = 10, 1.0, 500_000
X = np.tile(rng.integers(0, 2, n, dtype=np.uint8), (trials, 1))
out = mutate_bitwise_batch(X, chi, rng)
no_flip = (out == X).all(axis=1).mean()
print(f"bitwise chi/n = {chi / n}: measured P(no change) = {no_flip:.5f} "
      f"vs (1 - chi/n)^n = {(1 - chi / n) ** n:.5f}")
flips = (out != X).sum(axis=1)
print(f"mean flips {flips.mean():.4f} vs chi = {chi}")

P = np.tile(np.arange(1, 51, dtype=np.int32), (trials, 1))
ident = (mutate_exchange_batch(P, rng) == P).all(axis=1).mean()
print(f"exchange mutation: measured P(identity) = {ident:.5f} vs 1/e = {math.exp(-1):.5f}")
