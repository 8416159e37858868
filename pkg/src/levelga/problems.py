"""Benchmark fitness functions and their canonical level partitions.

Three benchmarks are provided:

* ``onemax``       -- number of one-bits in a bitstring of length n.
* ``leadingones``  -- length of the maximal all-ones prefix of a bitstring.
* ``inv_sorting``  -- number of index pairs (i, j), i < j, that a permutation
  of 1..n places in increasing order; maximised (= C(n, 2)) by the identity.

Bitstrings are numpy ``uint8`` vectors of 0/1; permutations are integer
vectors containing each of 1..n exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError

BIT_KINDS = ("onemax", "leadingones")
PERM_KINDS = ("inv_sorting",)
KIND_ALIASES = {"inv": "inv_sorting"}


@dataclass(frozen=True)
class ProblemSpec:
    """A benchmark instance: which function, and the genome length n."""

    kind: str
    n: int

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in BIT_KINDS + PERM_KINDS:
            raise ConfigError(f"unknown problem kind {self.kind!r}; "
                              f"expected one of {BIT_KINDS + PERM_KINDS}")
        if self.n < 1:
            raise ConfigError(f"problem size n must be >= 1, got {self.n}")

    @property
    def representation(self) -> str:
        return "bits" if self.kind in BIT_KINDS else "perm"

    @property
    def num_levels(self) -> int:
        """Number of non-top levels m of the canonical partition."""
        if self.kind in BIT_KINDS:
            return self.n
        return self.n * (self.n - 1) // 2

    @property
    def max_fitness(self) -> int:
        return self.num_levels


def _as_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    return x[None, :] if x.ndim == 1 else x


def validate_genotype(spec: ProblemSpec, x: np.ndarray) -> np.ndarray:
    """Check a single genotype against the spec's representation invariants."""
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != spec.n:
        raise ValueError(f"genotype must have length {spec.n}, got shape {x.shape}")
    if spec.representation == "bits":
        if not np.isin(x, (0, 1)).all():
            raise ValueError("bit genotype must contain only 0/1 values")
    else:
        if not np.array_equal(np.sort(x), np.arange(1, spec.n + 1)):
            raise ValueError("permutation genotype must contain each of 1..n exactly once")
    return x


def evaluate_batch(spec: ProblemSpec, members: np.ndarray) -> np.ndarray:
    """Fitness of each row of ``members``; returns an int64 vector."""
    members = _as_matrix(members)
    n = spec.n
    if members.shape[1] != n:
        raise ValueError(f"expected genomes of length {n}, got {members.shape[1]}")
    if spec.kind == "onemax":
        return members.sum(axis=1, dtype=np.int64)
    if spec.kind == "leadingones":
        has_zero = (members == 0).any(axis=1)
        first_zero = (members == 0).argmax(axis=1)
        return np.where(has_zero, first_zero, n).astype(np.int64)
    # inv_sorting: count pairs i < j with pi(i) < pi(j), chunked to bound the
    # O(rows * n^2) comparison tensor.
    rows = members.shape[0]
    out = np.empty(rows, dtype=np.int64)
    chunk = max(1, int(2e7) // max(1, n * n))
    iu, ju = np.triu_indices(n, k=1)
    for lo in range(0, rows, chunk):
        block = members[lo:lo + chunk]
        out[lo:lo + chunk] = (block[:, iu] < block[:, ju]).sum(axis=1, dtype=np.int64)
    return out


def evaluate(spec: ProblemSpec, x: np.ndarray) -> int:
    """Fitness of a single genotype (raises on representation mismatch)."""
    validate_genotype(spec, x)
    return int(evaluate_batch(spec, np.asarray(x)[None, :])[0])


@dataclass(frozen=True)
class LevelPartition:
    """Ordered partition of the search space into levels 1..m+1.

    ``level_of`` maps one genotype to its level index; ``level_from_fitness``
    is the vectorised fitness -> level map, available whenever the partition
    is fitness-based (all canonical partitions are).
    """

    m: int
    level_of: Callable[[np.ndarray], int]
    level_from_fitness: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"partition must have m >= 1, got {self.m}")

    @property
    def top_level(self) -> int:
        return self.m + 1


def canonical_partition(spec: ProblemSpec) -> LevelPartition:
    """Group solutions by fitness value: level(x) = fitness(x) + 1.

    onemax / leadingones: m = n levels below the optimum; inv_sorting:
    m = C(n, 2). Level m+1 holds exactly the optima.
    """
    def from_fitness(fit: np.ndarray) -> np.ndarray:
        return np.asarray(fit, dtype=np.int64) + 1

    def of(x: np.ndarray) -> int:
        return evaluate(spec, x) + 1

    return LevelPartition(m=spec.num_levels, level_of=of, level_from_fitness=from_fitness)
