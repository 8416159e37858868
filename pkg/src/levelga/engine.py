"""Generation loop: independent offspring sampling until the top level is hit.

Every offspring of a generation is sampled independently from the same parent
population through the select -> select -> crossover -> mutate pipeline, and
the run stops at the first generation whose population contains a member of
the top level.  Runtime is counted in fitness evaluations at generation
granularity: the initial population costs ``lam`` evaluations and each
further generation ``lam`` more, so the reported count is always a multiple
of ``lam``.

Bitstring populations are processed in a packed ``uint64`` representation
internally (64 positions per word); the public ``Population`` type always
carries the plain per-position matrix.  Batch sampling draws from the run's
generator in a fixed order (all parent ranks, then gate/crossover draws,
then mutation), which makes runs bit-for-bit reproducible for a fixed seed.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .config import GAConfig
from .errors import ConfigError
from .operators import (CrossoverSpec, SelectionMechanism, gated_crossover,
                        mutate_bitwise, mutate_exchange, select_index, select_ranks)
from .problems import LevelPartition, ProblemSpec, canonical_partition, evaluate_batch

_FULL = np.uint64(0xFFFFFFFFFFFFFFFF)
_ONE = np.uint64(1)
_TIE_BITS = 40  # tie-break entropy appended below the fitness in the sort key


def _rng_from(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed_or_rng)))


def _rank_order(fitness: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices sorted best-first; ties shuffled uniformly via a random key."""
    lam = fitness.shape[0]
    key = (fitness.astype(np.int64) << _TIE_BITS) | rng.integers(0, 1 << _TIE_BITS, lam)
    return np.argsort(key)[::-1].copy()


@dataclass
class Population:
    """Fixed-size parent pool with cached fitness and a tie-shuffled ranking."""

    members: np.ndarray          # (lam, n) uint8 bits or integer permutation rows
    fitness: np.ndarray          # (lam,) int64
    order: np.ndarray            # (lam,) indices, best first
    _rank_of: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.members.shape[0]

    @property
    def rank_of(self) -> np.ndarray:
        """rank_of[i] = 0-based rank of member i (0 = best)."""
        if self._rank_of is None:
            ranks = np.empty(len(self), dtype=np.int64)
            ranks[self.order] = np.arange(len(self))
            self._rank_of = ranks
        return self._rank_of

    @classmethod
    def from_members(cls, members: np.ndarray, problem: ProblemSpec,
                     rng: np.random.Generator) -> "Population":
        members = np.atleast_2d(np.asarray(members))
        fitness = evaluate_batch(problem, members)
        return cls(members=members, fitness=fitness, order=_rank_order(fitness, rng))

    def best_fitness(self) -> int:
        return int(self.fitness.max())


@dataclass(frozen=True)
class RunResult:
    """Outcome of one run: evaluation count, success flag and per-generation trace."""

    evaluations: int
    success: bool
    generations: int
    best_level_trace: np.ndarray

    @property
    def best_level_final(self) -> int:
        return int(self.best_level_trace[-1])


# ---------------------------------------------------------------------------
# Packed bitstring helpers
# ---------------------------------------------------------------------------

def _words_per_row(n: int) -> int:
    return (n + 63) // 64


def pack_bits(members: np.ndarray) -> np.ndarray:
    """Pack a (rows, n) 0/1 matrix into (rows, ceil(n/64)) uint64 words.

    Position p lives in word p // 64 at bit p % 64; pad bits are zero.
    """
    members = np.atleast_2d(np.asarray(members, dtype=np.uint8))
    rows, n = members.shape
    w = _words_per_row(n)
    packed = np.packbits(members, axis=1, bitorder="little")
    if packed.shape[1] < 8 * w:
        packed = np.pad(packed, ((0, 0), (0, 8 * w - packed.shape[1])))
    words = np.ascontiguousarray(packed).view(np.uint64)
    if sys.byteorder == "big":  # bit-index math above assumes little-endian words
        words = words.byteswap()
    return words


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    if sys.byteorder == "big":
        words = words.byteswap()
    raw = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :n]


def _pad_mask(n: int) -> np.ndarray:
    """Per-word mask of the valid (non-pad) positions."""
    w = _words_per_row(n)
    mask = np.full(w, _FULL, dtype=np.uint64)
    rem = n % 64
    if rem:
        mask[-1] = (_ONE << np.uint64(rem)) - _ONE
    return mask


def _popcount_rows(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=1, dtype=np.int64)


def _leading_ones_rows(words: np.ndarray, n: int) -> np.ndarray:
    """Length of the all-ones prefix (position order = bit order)."""
    inv = ~words
    lsb = inv & (np.uint64(0) - inv)
    ones = np.bitwise_count(np.subtract(lsb, _ONE, dtype=np.uint64)).astype(np.int64)
    ones[inv == 0] = 64
    out = np.zeros(words.shape[0], dtype=np.int64)
    alive = np.ones(words.shape[0], dtype=bool)
    for w in range(words.shape[1]):
        col = ones[:, w] if ones.ndim == 2 else ones
        out += np.where(alive, col, 0)
        alive &= col == 64
    return np.minimum(out, n)


def _packed_fitness(words: np.ndarray, problem: ProblemSpec) -> np.ndarray:
    if problem.kind == "onemax":
        return _popcount_rows(words)
    if problem.kind == "leadingones":
        return _leading_ones_rows(words, problem.n)
    return evaluate_batch(problem, unpack_bits(words, problem.n))


def _prefix_masks(cuts: np.ndarray, w: int) -> np.ndarray:
    """(rows, w) word masks selecting positions < cut in each row."""
    shift = cuts[:, None].astype(np.int64) - 64 * np.arange(w)[None, :]
    shift = np.clip(shift, 0, 64)
    small = np.minimum(shift, 63).astype(np.uint64)
    return np.where(shift >= 64, _FULL, (_ONE << small) - _ONE)


def _random_words(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 1 << 64, size=shape, dtype=np.uint64)


def _crossover_bits_packed(spec: CrossoverSpec, Uw: np.ndarray, Vw: np.ndarray,
                           n: int, rng: np.random.Generator) -> np.ndarray:
    """One-offspring (possibly gated) crossover on packed rows."""
    rows, w = Uw.shape
    gate = None
    if spec.pc < 1.0:
        gate = rng.random(rows) < spec.pc
        keep_v = rng.integers(0, 2, size=rows, dtype=np.uint8).astype(bool)
        fallback = np.where(keep_v[:, None], Vw, Uw)
        if spec.pc == 0.0:
            return fallback
    if spec.kind == "uniform":
        # choosing uniformly between the two complementary children equals a
        # fresh independent per-position pick
        mask = _random_words(rng, (rows, w))
        child = Uw ^ ((Uw ^ Vw) & mask)
    else:
        side = rng.integers(0, 2, size=rows, dtype=np.uint8).astype(bool)
        A = np.where(side[:, None], Vw, Uw)
        if n < 2:
            child = A
        else:
            cuts = rng.integers(1, n, size=rows)
            pm = _prefix_masks(cuts, w)
            B = np.where(side[:, None], Uw, Vw)
            child = (A & pm) | (B & ~pm)
    if gate is not None:
        child = np.where(gate[:, None], child, fallback)
    return child


def _mutate_bits_packed(words: np.ndarray, n: int, chi: float,
                        rng: np.random.Generator) -> None:
    """In-place independent bit flips at rate chi/n on packed rows."""
    rows, w = words.shape
    p = chi / n
    if p == 0.0:
        return
    if p > 0.25:
        flips = (rng.random((rows, n)) < p).astype(np.uint8)
        words ^= pack_bits(flips)
        return
    cells = rows * n
    m = int(rng.binomial(cells, p))
    chosen = np.unique(rng.integers(0, cells, size=m)) if m else np.empty(0, np.int64)
    while chosen.size < m:
        extra = rng.integers(0, cells, size=m - chosen.size)
        chosen = np.unique(np.concatenate([chosen, extra]))
    if chosen.size == 0:
        return
    row = chosen // n
    pos = chosen % n
    np.bitwise_xor.at(words.reshape(-1), row * w + (pos >> 6),
                      _ONE << (pos & 63).astype(np.uint64))


# ---------------------------------------------------------------------------
# Permutation batch kernels
# ---------------------------------------------------------------------------

def _inverse_perm_rows(P: np.ndarray) -> np.ndarray:
    rows, n = P.shape
    inv = np.empty_like(P)
    inv[np.arange(rows)[:, None], P - 1] = np.arange(n)[None, :]
    return inv


def _order_fill(A: np.ndarray, B: np.ndarray, keep_a: np.ndarray) -> np.ndarray:
    """Keep A's values where ``keep_a`` is set; fill holes with B's missing
    values in B order.  Fully vectorised via stable argsorts."""
    rows, n = A.shape
    ridx = np.arange(rows)[:, None]
    inv_a = _inverse_perm_rows(A)
    pos_in_a = inv_a[ridx, B - 1]
    fill_v = ~np.take_along_axis(keep_a, pos_in_a, axis=1)
    colperm = np.argsort(keep_a, axis=1, kind="stable")       # holes first, ascending
    vperm = np.argsort(~fill_v, axis=1, kind="stable")        # fill values first, B order
    t = n - keep_a.sum(axis=1)
    slot = np.arange(n)[None, :]
    source = np.where(slot < t[:, None],
                      np.take_along_axis(B, vperm, axis=1),
                      np.take_along_axis(A, colperm, axis=1))
    child = np.empty_like(A)
    np.put_along_axis(child, colperm, source, axis=1)
    return child


def _crossover_perm_batch(spec: CrossoverSpec, U: np.ndarray, V: np.ndarray,
                          rng: np.random.Generator) -> np.ndarray:
    """One-offspring (possibly gated) permutation crossover, row-wise."""
    rows, n = U.shape
    gate = None
    if spec.pc < 1.0:
        gate = rng.random(rows) < spec.pc
        keep_v = rng.integers(0, 2, size=rows, dtype=np.uint8).astype(bool)
        fallback = np.where(keep_v[:, None], V, U)
        if spec.pc == 0.0:
            return fallback
    side = rng.integers(0, 2, size=rows, dtype=np.uint8).astype(bool)
    A = np.where(side[:, None], V, U)
    B = np.where(side[:, None], U, V)
    if spec.kind == "one_point" and n >= 2:
        cuts = rng.integers(1, n, size=rows)
        keep_a = np.arange(n)[None, :] < cuts[:, None]
    elif spec.kind == "uniform":
        keep_a = rng.integers(0, 2, size=(rows, n), dtype=np.uint8).astype(bool)
    else:
        keep_a = np.ones((rows, n), dtype=bool)
    child = _order_fill(A, B, keep_a)
    if gate is not None:
        child = np.where(gate[:, None], child, fallback)
    return child


def _mutate_perm_batch(P: np.ndarray, rng: np.random.Generator) -> None:
    """In-place exchange mutation: Poisson(1) transpositions per row."""
    rows, n = P.shape
    counts = rng.poisson(1.0, size=rows)
    if n < 2 or rows == 0:
        return
    for r in range(1, int(counts.max()) + 1):
        active = np.nonzero(counts >= r)[0]
        if active.size == 0:
            break
        i = rng.integers(0, n, size=active.size)
        j = rng.integers(0, n - 1, size=active.size)
        j = j + (j >= i)
        vi = P[active, i].copy()
        P[active, i] = P[active, j]
        P[active, j] = vi


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def init_population(problem: ProblemSpec, lam: int, rng) -> Population:
    """lam genotypes sampled independently and uniformly from the space."""
    if lam < 1:
        raise ConfigError(f"lambda must be >= 1, got {lam}")
    if problem.n < 1:
        raise ConfigError(f"problem size n must be >= 1, got {problem.n}")
    rng = _rng_from(rng)
    if problem.representation == "bits":
        members = rng.integers(0, 2, size=(lam, problem.n), dtype=np.uint8)
    else:
        members = np.tile(np.arange(1, problem.n + 1, dtype=np.int32), (lam, 1))
        members = rng.permuted(members, axis=1)
    return Population.from_members(members, problem, rng)


def sample_offspring(population: Population, config: GAConfig, rng) -> np.ndarray:
    """One offspring: select two parents, cross them, mutate the result.

    This is the scalar reference pipeline; the batch path used by
    :func:`evolve_generation` draws differently but induces the same
    offspring distribution.
    """
    rng = _rng_from(rng)
    u = population.members[select_index(config.selection, population, rng)]
    v = population.members[select_index(config.selection, population, rng)]
    rep = config.problem.representation
    child = gated_crossover(u, v, config.crossover, rng, representation=rep)
    if config.mutation.kind == "bitwise":
        return mutate_bitwise(child, config.mutation.chi, rng)
    return mutate_exchange(child, rng)


def _parents(population_order: np.ndarray, mech: SelectionMechanism, lam: int,
             count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    ranks = select_ranks(mech, lam, 2 * count, rng)
    idx = population_order[ranks]
    return idx[:count], idx[count:]


def _offspring_bits_packed(words: np.ndarray, order: np.ndarray, config: GAConfig,
                           rng: np.random.Generator, count: int) -> np.ndarray:
    lam = words.shape[0]
    ui, vi = _parents(order, config.selection, lam, count, rng)
    child = _crossover_bits_packed(config.crossover, words[ui], words[vi],
                                   config.problem.n, rng)
    _mutate_bits_packed(child, config.problem.n, config.mutation.chi, rng)
    return child


def _offspring_perm(members: np.ndarray, order: np.ndarray, config: GAConfig,
                    rng: np.random.Generator, count: int) -> np.ndarray:
    lam = members.shape[0]
    ui, vi = _parents(order, config.selection, lam, count, rng)
    child = _crossover_perm_batch(config.crossover, members[ui], members[vi], rng)
    _mutate_perm_batch(child, rng)
    return child


def sample_offspring_batch(population: Population, config: GAConfig, rng,
                           count: int) -> Tuple[np.ndarray, np.ndarray]:
    """``count`` independent offspring of one parent population.

    Returns (members, fitness); offspring never observe each other.
    """
    rng = _rng_from(rng)
    if config.problem.representation == "bits":
        words = pack_bits(population.members)
        child = _offspring_bits_packed(words, population.order, config, rng, count)
        return unpack_bits(child, config.problem.n), _packed_fitness(child, config.problem)
    child = _offspring_perm(population.members, population.order, config, rng, count)
    return child, evaluate_batch(config.problem, child)


def evolve_generation(population: Population, config: GAConfig, rng) -> Population:
    """Next generation: lam independent samples from the same parent pool."""
    rng = _rng_from(rng)
    members, fitness = sample_offspring_batch(population, config, rng, len(population))
    return Population(members=members, fitness=fitness, order=_rank_order(fitness, rng))


def run_until_target(config: GAConfig, partition: Optional[LevelPartition] = None,
                     max_evals: Optional[int] = None, rng=None,
                     return_population: bool = False):
    """Iterate generations until some member reaches the top level.

    The initial population counts as the first generation (lam evaluations).
    Exhausting ``max_evals`` without a hit is a normal unsuccessful result.
    """
    if partition is None:
        partition = canonical_partition(config.problem)
    if max_evals is None:
        max_evals = config.max_evals
    if max_evals < config.lam:
        raise ConfigError(f"max_evals must be >= lambda, got {max_evals}")
    rng = _rng_from(rng if rng is not None else config.seed)

    problem = config.problem
    lam = config.lam
    packed = problem.representation == "bits"

    pop = init_population(problem, lam, rng)
    state = pack_bits(pop.members) if packed else pop.members
    fitness, order = pop.fitness, pop.order

    def best_level(fit: np.ndarray, members_state) -> int:
        if partition.level_from_fitness is not None:
            return int(partition.level_from_fitness(fit).max())
        members = unpack_bits(members_state, problem.n) if packed else members_state
        return max(partition.level_of(m) for m in members)

    trace = [best_level(fitness, state)]
    evals = lam
    success = trace[-1] >= partition.top_level
    while not success and evals + lam <= max_evals:
        if packed:
            child = _offspring_bits_packed(state, order, config, rng, lam)
            fitness = _packed_fitness(child, problem)
        else:
            child = _offspring_perm(state, order, config, rng, lam)
            fitness = evaluate_batch(problem, child)
        state = child
        order = _rank_order(fitness, rng)
        evals += lam
        trace.append(best_level(fitness, state))
        success = trace[-1] >= partition.top_level

    result = RunResult(evaluations=evals, success=success, generations=evals // lam,
                       best_level_trace=np.asarray(trace, dtype=np.int64))
    if return_population:
        members = unpack_bits(state, problem.n) if packed else state
        return result, Population(members=members, fitness=fitness, order=order)
    return result
