"""Selection, crossover and mutation operators.

Selection works on a rank order (best first) with ties broken uniformly at
random once per population, so tied members are exchangeable and the induced
distribution is monotone in fitness.  Crossover of bitstrings comes in a
two-offspring form (both children), a one-offspring form (uniform choice of
one child), and a gated wrapper that applies crossover only with probability
``pc`` and otherwise hands back one of the parents.  Bitwise mutation flips
each position independently with probability ``chi``/n; exchange mutation
applies a Poisson(1) number of random transpositions to a permutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError

SELECTION_KINDS = ("tournament", "mu_lambda", "exp_ranking")
CROSSOVER_KINDS = ("one_point", "uniform")
MUTATION_KINDS = ("bitwise", "exchange")


@dataclass(frozen=True)
class SelectionMechanism:
    """One of k-tournament, (mu, lambda)-truncation or exponential ranking.

    Exactly the parameter of the active kind is required: ``k`` for
    tournament, ``mu`` for mu_lambda, ``eta`` for exp_ranking.
    """

    kind: str
    k: Optional[int] = None
    mu: Optional[int] = None
    eta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SELECTION_KINDS:
            raise ConfigError(f"unknown selection kind {self.kind!r}")
        if self.kind == "tournament":
            if self.k is None or self.k < 1:
                raise ConfigError("tournament selection requires k >= 1")
        elif self.kind == "mu_lambda":
            if self.mu is None or self.mu < 1:
                raise ConfigError("mu_lambda selection requires mu >= 1")
        else:
            if self.eta is None or not self.eta > 0:
                raise ConfigError("exp_ranking selection requires eta > 0")

    def validate_for(self, lam: int) -> None:
        if self.kind == "mu_lambda" and self.mu > lam:
            raise ConfigError(f"mu must be <= lambda, got mu={self.mu}, lambda={lam}")


@dataclass(frozen=True)
class CrossoverSpec:
    """Crossover kind plus the gate probability pc of applying it at all."""

    kind: str
    pc: float = 1.0

    def __post_init__(self):
        if self.kind not in CROSSOVER_KINDS:
            raise ConfigError(f"unknown crossover kind {self.kind!r}")
        if not 0.0 <= self.pc <= 1.0:
            raise ConfigError(f"crossover probability pc must be in [0, 1], got {self.pc}")


@dataclass(frozen=True)
class MutationSpec:
    """Bitwise mutation at rate chi/n, or Poisson(1) pairwise exchanges."""

    kind: str
    chi: Optional[float] = None
    poisson_mean: float = 1.0

    def __post_init__(self):
        if self.kind not in MUTATION_KINDS:
            raise ConfigError(f"unknown mutation kind {self.kind!r}")
        if self.kind == "bitwise":
            if self.chi is None or self.chi < 0:
                raise ConfigError("bitwise mutation requires chi >= 0")
        else:
            if self.poisson_mean != 1.0:
                raise ConfigError("exchange mutation uses a fixed Poisson mean of 1")

    def validate_for(self, n: int) -> None:
        if self.kind == "bitwise" and self.chi / n > 1.0:
            raise ConfigError(f"bitwise rate chi/n must be <= 1, got chi={self.chi}, n={n}")


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------

def select_ranks(mech: SelectionMechanism, lam: int, size: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Sample ``size`` selected ranks (0 = best) under a distinct-rank order.

    Tournament uses the inverse CDF of the best of k uniform rank draws,
    which selects the same member as drawing k individuals with replacement
    and keeping the fittest.  mu_lambda draws uniformly from the top mu
    ranks.  Exponential ranking inverts the cumulative ranking density and
    takes the ceiling to a rank.
    """
    mech.validate_for(lam)
    if mech.kind == "tournament":
        u = rng.random(size)
        ranks = np.floor(lam * (1.0 - u ** (1.0 / mech.k))).astype(np.int64)
        return np.minimum(ranks, lam - 1)
    if mech.kind == "mu_lambda":
        return rng.integers(0, mech.mu, size=size, dtype=np.int64)
    eta = mech.eta
    u = rng.random(size)
    g = -np.log1p(-u * (1.0 - math.exp(-eta))) / eta
    ranks = np.ceil(g * lam).astype(np.int64)
    return np.clip(ranks, 1, lam) - 1


def select_indices(mech: SelectionMechanism, population, size: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Vectorised selection of ``size`` parent indices from a population."""
    ranks = select_ranks(mech, len(population), size, rng)
    return population.order[ranks]


def select_index(mech: SelectionMechanism, population, rng: np.random.Generator) -> int:
    """Select a single parent index.

    The tournament branch literally draws k entrants with replacement and
    returns the one with the best rank; the distribution is identical to the
    inverse-CDF shortcut used by the batch path.
    """
    lam = len(population)
    mech.validate_for(lam)
    if mech.kind == "tournament":
        entrants = rng.integers(0, lam, size=mech.k)
        ranks = population.rank_of[entrants]
        return int(entrants[np.argmin(ranks)])
    return int(select_indices(mech, population, 1, rng)[0])


def selective_pressure(mech: SelectionMechanism, gamma: float, lam: Optional[int] = None) -> float:
    """Continuous-model probability of selecting within the best gamma-fraction.

    tournament: 1 - (1-gamma)^k; mu_lambda: min(1, lam*gamma/mu);
    exp_ranking: the cumulative ranking density (e^eta/(e^eta-1))(1-e^(-eta*gamma)).
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    if mech.kind == "tournament":
        return 1.0 - (1.0 - gamma) ** mech.k
    if mech.kind == "mu_lambda":
        if lam is None:
            raise ValueError("mu_lambda pressure needs the population size lam")
        return min(1.0, lam * gamma / mech.mu)
    eta = mech.eta
    return (math.exp(eta) / math.expm1(eta)) * -math.expm1(-eta * gamma)


def selective_pressure_floor(mech: SelectionMechanism, gamma: float,
                             lam: Optional[int] = None) -> float:
    """Conservative algebraic lower bound on the selective pressure.

    This is the form the selection-threshold derivations use: tournament
    1 - 1/(gamma*k + 1) and exp_ranking 1 - 1/(1 + eta*gamma); the mu_lambda
    pressure is already exact so its floor coincides with the closed form.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    if mech.kind == "tournament":
        return 1.0 - 1.0 / (gamma * mech.k + 1.0)
    if mech.kind == "exp_ranking":
        return 1.0 - 1.0 / (1.0 + mech.eta * gamma)
    return selective_pressure(mech, gamma, lam)


# ---------------------------------------------------------------------------
# Crossover (bitstrings)
# ---------------------------------------------------------------------------

def _check_bit_parents(u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=np.uint8)
    v = np.asarray(v, dtype=np.uint8)
    if u.shape != v.shape:
        raise ValueError(f"parent lengths differ: {u.shape} vs {v.shape}")
    return u, v


def crossover_two_offspring(kind: str, u: np.ndarray, v: np.ndarray,
                            rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Standard two-offspring crossover of bitstrings.

    one_point draws an interior cut and swaps the suffixes; uniform swaps
    each position independently with probability 1/2.  Both kinds conserve
    the total number of one-bits across the two children.
    """
    u, v = _check_bit_parents(u, v)
    n = u.shape[0]
    if kind == "one_point":
        if n < 2:
            return u.copy(), v.copy()
        cut = int(rng.integers(1, n))
        x1 = np.concatenate([u[:cut], v[cut:]])
        x2 = np.concatenate([v[:cut], u[cut:]])
        return x1, x2
    if kind == "uniform":
        swap = rng.integers(0, 2, size=n, dtype=np.uint8).astype(bool)
        x1 = np.where(swap, v, u)
        x2 = np.where(swap, u, v)
        return x1, x2
    raise ConfigError(f"unknown crossover kind {kind!r}")


def one_offspring_crossover(kind: str, u: np.ndarray, v: np.ndarray,
                            rng: np.random.Generator) -> np.ndarray:
    """Two-offspring crossover followed by a uniform choice of one child."""
    x1, x2 = crossover_two_offspring(kind, u, v, rng)
    return x1 if rng.integers(0, 2) == 0 else x2


def crossover_two_offspring_perm(kind: str, u: np.ndarray, v: np.ndarray,
                                 rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Permutation-safe analogues of the two standard crossovers.

    one_point: cut-and-crossfill order crossover; the child keeps one
    parent's prefix and fills the tail with the other parent's remaining
    values in their order of appearance.  uniform: a random position mask is
    kept from one parent and the holes are filled with the other parent's
    missing values, again in order.  Identical parents reproduce themselves.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"parent lengths differ: {u.shape} vs {v.shape}")
    n = u.shape[0]
    if kind == "one_point":
        if n < 2:
            return u.copy(), v.copy()
        cut = int(rng.integers(1, n))
        x1 = np.concatenate([u[:cut], v[~np.isin(v, u[:cut])]])
        x2 = np.concatenate([v[:cut], u[~np.isin(u, v[:cut])]])
        return x1, x2
    if kind == "uniform":
        keep = rng.integers(0, 2, size=n, dtype=np.uint8).astype(bool)
        x1 = u.copy()
        x1[~keep] = v[~np.isin(v, u[keep])]
        x2 = v.copy()
        x2[~keep] = u[~np.isin(u, v[keep])]
        return x1, x2
    raise ConfigError(f"unknown crossover kind {kind!r}")


def gated_crossover(u: np.ndarray, v: np.ndarray, spec: CrossoverSpec,
                    rng: np.random.Generator, representation: str = "bits") -> np.ndarray:
    """Apply one-offspring crossover with probability pc, else return a parent.

    When the gate stays closed, u and v are each handed back with
    probability 1/2 (as a copy).
    """
    if rng.random() < spec.pc:
        if representation == "bits":
            return one_offspring_crossover(spec.kind, u, v, rng)
        x1, x2 = crossover_two_offspring_perm(spec.kind, u, v, rng)
        return x1 if rng.integers(0, 2) == 0 else x2
    return (u if rng.integers(0, 2) == 0 else v).copy()


# ---------------------------------------------------------------------------
# Mutation
# ---------------------------------------------------------------------------

def mutate_bitwise(x: np.ndarray, chi: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability chi/n."""
    x = np.asarray(x, dtype=np.uint8)
    n = x.shape[0]
    p = chi / n
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"bitwise rate chi/n must be in [0, 1], got {p}")
    flips = rng.random(n) < p
    return x ^ flips.astype(np.uint8)


def sample_exchange_count(rng: np.random.Generator) -> int:
    """Poisson(1) swap count via the exact running-product inversion."""
    threshold = math.exp(-1.0)
    count = -1
    prod = 1.0
    while prod > threshold:
        prod *= rng.random()
        count += 1
    return count


def mutate_exchange(perm: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Apply N ~ Poisson(1) transpositions of uniformly chosen index pairs.

    For n < 2 no valid pair exists and the operator degenerates to the
    identity.
    """
    out = np.asarray(perm).copy()
    n = out.shape[0]
    count = sample_exchange_count(rng)
    if n < 2:
        return out
    for _ in range(count):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        if j >= i:
            j += 1
        out[i], out[j] = out[j], out[i]
    return out


# ---------------------------------------------------------------------------
# Batch forms (vectorised over rows; used by estimators and tests)
# ---------------------------------------------------------------------------

def crossover_two_offspring_batch(kind: str, U: np.ndarray, V: np.ndarray,
                                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise two-offspring crossover of bit matrices."""
    U = np.asarray(U, dtype=np.uint8)
    V = np.asarray(V, dtype=np.uint8)
    rows, n = U.shape
    if kind == "uniform":
        swap = rng.integers(0, 2, size=(rows, n), dtype=np.uint8)
        diff = (U ^ V) & swap
        return U ^ diff, V ^ diff
    if kind == "one_point":
        if n < 2:
            return U.copy(), V.copy()
        cuts = rng.integers(1, n, size=rows)
        suffix = (np.arange(n)[None, :] >= cuts[:, None]).astype(np.uint8)
        diff = (U ^ V) & suffix
        return U ^ diff, V ^ diff
    raise ConfigError(f"unknown crossover kind {kind!r}")


def one_offspring_crossover_batch(kind: str, U: np.ndarray, V: np.ndarray,
                                  rng: np.random.Generator) -> np.ndarray:
    """Row-wise one-offspring crossover of bit matrices."""
    x1, x2 = crossover_two_offspring_batch(kind, U, V, rng)
    pick = rng.integers(0, 2, size=U.shape[0], dtype=np.uint8).astype(bool)
    return np.where(pick[:, None], x2, x1)


def mutate_bitwise_batch(X: np.ndarray, chi: float, rng: np.random.Generator) -> np.ndarray:
    """Row-wise bitwise mutation of a bit matrix."""
    X = np.asarray(X, dtype=np.uint8)
    rows, n = X.shape
    p = chi / n
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"bitwise rate chi/n must be in [0, 1], got {p}")
    if p == 0.0:
        return X.copy()
    return X ^ (rng.random((rows, n)) < p).astype(np.uint8)


def mutate_exchange_batch(P: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Row-wise exchange mutation of a permutation matrix.

    Swap rounds are vectorised: round r applies one transposition to every
    row whose Poisson(1) draw is at least r.
    """
    out = np.asarray(P).copy()
    rows, n = out.shape
    counts = rng.poisson(1.0, size=rows)
    if n < 2:
        return out
    for r in range(1, int(counts.max()) + 1 if rows else 0):
        active = np.nonzero(counts >= r)[0]
        if active.size == 0:
            break
        i = rng.integers(0, n, size=active.size)
        j = rng.integers(0, n - 1, size=active.size)
        j = j + (j >= i)
        vi = out[active, i].copy()
        out[active, i] = out[active, j]
        out[active, j] = vi
    return out
