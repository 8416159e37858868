"""Generation loop: contracts, distributions, reproducibility."""

import math

import numpy as np
import pytest

from levelga import (ConfigError, CrossoverSpec, GAConfig, MutationSpec, ProblemSpec,
                     SelectionMechanism, canonical_partition, evaluate_batch,
                     evolve_generation, init_population, run_until_target,
                     sample_offspring, sample_offspring_batch)
from levelga.engine import Population, pack_bits, unpack_bits


def bits_config(n=4, lam=4, k=2, pc=1.0, chi=1.0, kind="uniform", **kw):
    return GAConfig(problem=ProblemSpec("onemax", n), lam=lam,
                    selection=SelectionMechanism("tournament", k=k),
                    crossover=CrossoverSpec(kind, pc=pc),
                    mutation=MutationSpec("bitwise", chi=chi), **kw)


# ---------------------------------------------------------------------------
# Packed representation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 7, 63, 64, 65, 100, 130])
def test_pack_roundtrip(n):
    rng = np.random.default_rng(n)
    X = rng.integers(0, 2, size=(37, n), dtype=np.uint8)
    assert np.array_equal(unpack_bits(pack_bits(X), n), X)


@pytest.mark.parametrize("kind", ["onemax", "leadingones"])
@pytest.mark.parametrize("n", [1, 5, 64, 65, 130])
def test_packed_fitness_matches_plain(kind, n):
    from levelga.engine import _packed_fitness
    spec = ProblemSpec(kind, n)
    rng = np.random.default_rng(n + 1)
    X = rng.integers(0, 2, size=(200, n), dtype=np.uint8)
    X[0] = 1
    X[1] = 0
    assert np.array_equal(_packed_fitness(pack_bits(X), spec), evaluate_batch(spec, X))


# ---------------------------------------------------------------------------
# init_population
# ---------------------------------------------------------------------------

def test_init_sizes_and_values():
    pop = init_population(ProblemSpec("onemax", 5), 10, np.random.default_rng(0))
    assert len(pop) == 10
    assert pop.members.shape == (10, 5)
    assert set(np.unique(pop.members)) <= {0, 1}
    assert np.array_equal(pop.fitness, pop.members.sum(axis=1))


def test_init_uniform_single_bit():
    rng = np.random.default_rng(1)
    means = [init_population(ProblemSpec("onemax", 1), 4, rng).members.mean()
             for _ in range(2_000)]
    assert np.mean(means) == pytest.approx(0.5, abs=3 * math.sqrt(0.25 / 8_000))


def test_init_uniform_over_small_permutations():
    # lam independent rows stand in for independently seeded single-member runs
    pop = init_population(ProblemSpec("inv_sorting", 3), 60_000, np.random.default_rng(2))
    codes = {}
    for row in pop.members:
        key = tuple(row.tolist())
        codes[key] = codes.get(key, 0) + 1
    assert len(codes) == 6
    sigma = math.sqrt((1 / 6) * (5 / 6) / 60_000)
    for count in codes.values():
        assert count / 60_000 == pytest.approx(1 / 6, abs=3 * sigma)


def test_init_rejects_degenerate_sizes():
    with pytest.raises(ConfigError):
        init_population(ProblemSpec("onemax", 5), 0, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        ProblemSpec("onemax", 0)


# ---------------------------------------------------------------------------
# sample_offspring / evolve_generation
# ---------------------------------------------------------------------------

def test_identity_pipeline_single_member():
    spec = ProblemSpec("onemax", 3)
    members = np.array([[1, 1, 1]], dtype=np.uint8)
    rng = np.random.default_rng(3)
    pop = Population.from_members(members, spec, rng)
    config = bits_config(n=3, lam=1, chi=0.0)
    for _ in range(30):
        assert np.array_equal(sample_offspring(pop, config, rng), [1, 1, 1])


def test_crossover_of_identical_population_is_identity():
    spec = ProblemSpec("onemax", 6)
    x = np.array([1, 0, 1, 1, 0, 0], dtype=np.uint8)
    rng = np.random.default_rng(4)
    pop = Population.from_members(np.tile(x, (5, 1)), spec, rng)
    config = bits_config(n=6, lam=5, chi=0.0)
    for _ in range(30):
        assert np.array_equal(sample_offspring(pop, config, rng), x)
    nxt = evolve_generation(pop, config, rng)
    assert np.array_equal(nxt.members, pop.members)


def test_generation_size_contract():
    rng = np.random.default_rng(5)
    config = bits_config(n=8, lam=7)
    pop = init_population(config.problem, config.lam, rng)
    for _ in range(3):
        pop = evolve_generation(pop, config, rng)
        assert len(pop) == 7
        assert np.array_equal(pop.fitness, evaluate_batch(config.problem, pop.members))


def test_pure_selection_closure():
    # chi = 0 and pc = 0: every offspring is a copy of some current member
    rng = np.random.default_rng(6)
    config = bits_config(n=10, lam=6, pc=0.0, chi=0.0)
    pop = init_population(config.problem, config.lam, rng)
    parents = {tuple(r) for r in pop.members}
    nxt = evolve_generation(pop, config, rng)
    assert {tuple(r) for r in nxt.members} <= parents


def exact_pair_distribution():
    # population {00, 11}, uniform parents, uniform crossover, no mutation:
    # P(00) = P(11) = 3/8, P(01) = P(10) = 1/8
    return {(0, 0): 3 / 8, (0, 1): 1 / 8, (1, 0): 1 / 8, (1, 1): 3 / 8}


def test_offspring_distribution_matches_enumeration():
    spec = ProblemSpec("onemax", 2)
    rng = np.random.default_rng(7)
    pop = Population.from_members(np.array([[0, 0], [1, 1]], dtype=np.uint8), spec, rng)
    config = GAConfig(problem=spec, lam=2,
                      selection=SelectionMechanism("mu_lambda", mu=2),
                      crossover=CrossoverSpec("uniform", pc=1.0),
                      mutation=MutationSpec("bitwise", chi=0.0))
    exact = exact_pair_distribution()
    trials = 120_000
    kids, _ = sample_offspring_batch(pop, config, rng, trials)
    for code, p in exact.items():
        freq = (kids == np.array(code)).all(axis=1).mean()
        assert freq == pytest.approx(p, abs=3 * math.sqrt(p * (1 - p) / trials))
    scalar = np.stack([sample_offspring(pop, config, rng) for _ in range(30_000)])
    for code, p in exact.items():
        freq = (scalar == np.array(code)).all(axis=1).mean()
        assert freq == pytest.approx(p, abs=3 * math.sqrt(p * (1 - p) / 30_000))


def test_offspring_independence_chi_square():
    # lam = 2: the joint law of (child 0, child 1) factorises into the product
    # of identical marginals
    spec = ProblemSpec("onemax", 1)
    rng = np.random.default_rng(8)
    pop = Population.from_members(np.array([[0], [1]], dtype=np.uint8), spec, rng)
    config = GAConfig(problem=spec, lam=2,
                      selection=SelectionMechanism("tournament", k=2),
                      crossover=CrossoverSpec("uniform", pc=1.0),
                      mutation=MutationSpec("bitwise", chi=0.0))
    trials = 100_000
    joint = np.zeros((2, 2))
    for _ in range(trials):
        nxt = evolve_generation(pop, config, rng)
        joint[nxt.members[0, 0], nxt.members[1, 0]] += 1
    joint /= trials
    marg0 = joint.sum(axis=1)
    marg1 = joint.sum(axis=0)
    assert marg0[1] == pytest.approx(marg1[1], abs=0.01)
    chi2 = trials * sum(
        (joint[i, j] - marg0[i] * marg1[j]) ** 2 / (marg0[i] * marg1[j])
        for i in range(2) for j in range(2))
    assert chi2 < 6.63  # chi-square(1) at the 1% level


# ---------------------------------------------------------------------------
# run_until_target
# ---------------------------------------------------------------------------

def test_tiny_space_succeeds_quickly():
    config = bits_config(n=1, lam=2, seed=123, max_evals=10_000)
    result = run_until_target(config)
    assert result.success
    assert result.evaluations % 2 == 0
    assert result.evaluations <= 20


def test_optimum_in_initial_population():
    config = bits_config(n=1, lam=8, seed=0, max_evals=10_000)
    result = run_until_target(config)
    # eight random bits contain a 1 for this seed: only the initial
    # generation is charged
    assert result.success
    assert result.evaluations == 8
    assert result.generations == 1
    assert result.best_level_trace.tolist() == [2]


def test_budget_exhaustion_is_normal_result():
    config = bits_config(n=30, lam=4, seed=5, max_evals=4)
    result = run_until_target(config)
    assert not result.success
    assert result.evaluations == 4
    assert result.generations == 1


def test_budget_below_lambda_rejected():
    config = bits_config(n=4, lam=4)
    with pytest.raises(ConfigError):
        run_until_target(config, max_evals=3)


def test_evaluations_multiple_of_lambda_and_trace_levels():
    config = bits_config(n=8, lam=5, k=3, seed=11, max_evals=50_000)
    partition = canonical_partition(config.problem)
    result = run_until_target(config)
    assert result.evaluations % 5 == 0
    assert result.evaluations == result.generations * 5
    assert len(result.best_level_trace) == result.generations
    assert all(1 <= lvl <= partition.m + 1 for lvl in result.best_level_trace)
    assert result.success and result.best_level_final == partition.m + 1


def test_run_reproducible_bit_for_bit():
    config = bits_config(n=12, lam=6, seed=42, max_evals=100_000)
    a, pop_a = run_until_target(config, return_population=True)
    b, pop_b = run_until_target(config, return_population=True)
    assert a.evaluations == b.evaluations
    assert a.generations == b.generations
    assert np.array_equal(a.best_level_trace, b.best_level_trace)
    assert np.array_equal(pop_a.members, pop_b.members)
    c = run_until_target(config.with_seed(43))
    assert (c.evaluations != a.evaluations
            or not np.array_equal(c.best_level_trace, a.best_level_trace)
            or True)  # different seed may coincide by chance; only determinism is contractual


def test_run_with_custom_coarse_partition():
    # a two-level partition: everything below the optimum is level 1
    spec = ProblemSpec("onemax", 6)
    from levelga import LevelPartition
    part = LevelPartition(m=1,
                          level_of=lambda x: 2 if x.sum() == 6 else 1,
                          level_from_fitness=lambda f: np.where(f == 6, 2, 1))
    config = bits_config(n=6, lam=8, seed=2, max_evals=10 ** 6)
    result = run_until_target(config, partition=part)
    assert result.success
    assert result.best_level_final == 2
    assert set(result.best_level_trace.tolist()) <= {1, 2}


def test_run_perm_problem():
    config = GAConfig(problem=ProblemSpec("inv_sorting", 5), lam=40,
                      selection=SelectionMechanism("tournament", k=8),
                      crossover=CrossoverSpec("one_point", pc=0.5),
                      mutation=MutationSpec("exchange"), seed=7, max_evals=10 ** 6)
    result = run_until_target(config)
    assert result.success
    assert result.evaluations % 40 == 0


def test_evolve_matches_run_generation_stream():
    # one evolve_generation call consumes the generator exactly like one
    # internal generation step
    config = bits_config(n=20, lam=9, seed=3, max_evals=10 ** 6)
    rng1 = np.random.default_rng(99)
    pop = init_population(config.problem, config.lam, rng1)
    nxt = evolve_generation(pop, config, rng1)
    probe1 = rng1.random()
    rng2 = np.random.default_rng(99)
    pop2 = init_population(config.problem, config.lam, rng2)
    nxt2 = evolve_generation(pop2, config, rng2)
    probe2 = rng2.random()
    assert np.array_equal(nxt.members, nxt2.members)
    assert probe1 == probe2
