"""Closed-form runtime bounds, selection thresholds and benchmark constants.

Two bound forms are implemented.  The *level* form takes per-level success
probabilities ``z_j`` of the full sampling distribution; the *GA* form takes
the operator-level constants (mutation upgrade floors ``s_j``, the no-change
probability ``p0`` and the crossover keep probability ``eps1``) and composes
them through the selection pressure into the same machinery.  Both share the
derived constants

    a   = delta^2 * gamma0 / (2 * (1 + delta))
    eps = min(delta / 2, 1 / 2)            (called psi in the GA form)
    c   = eps^4 / 24

and a minimum admissible population size; the expected-evaluation bound is

    (2 / (c * eps)) * (m * lam * (1 + ln(1 + c * lam)) + <level sum>).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .config import GAConfig
from .errors import ConfigError
from .operators import CrossoverSpec, MutationSpec, SelectionMechanism
from .problems import ProblemSpec

PRESETS = ("onemax", "leadingones", "sorting")


@dataclass(frozen=True)
class LevelProbabilities:
    """Per-level lower bounds plus the operator constants they compose with.

    ``values[j-1]`` is the probability floor for level index j in 1..m; for
    the level form p0 and eps1 are unused and default to 1.
    """

    values: np.ndarray
    p0: float = 1.0
    eps1: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 1:
            raise ConfigError("level probabilities must be a non-empty vector")
        if not ((values > 0.0) & (values <= 1.0)).all():
            raise ConfigError("level probabilities must lie in (0, 1]")
        for name, v in (("p0", self.p0), ("eps1", self.eps1)):
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {v}")

    @property
    def m(self) -> int:
        return int(self.values.size)

    @property
    def floor(self) -> float:
        return float(self.values.min())


@dataclass(frozen=True)
class BoundReport:
    """Derived constants, the minimum population size and the runtime bound."""

    kind: str                     # "level" or "ga"
    m: int
    lam: int
    delta: float
    gamma0: float
    a: float
    eps_or_psi: float
    c: float
    lambda_min: int
    bound: float
    lambda_ok: bool
    z0_slope_ok: bool             # linear (1+delta)*gamma growth profile certified
    level_probs: LevelProbabilities
    implied_z: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "m": self.m,
            "lambda": self.lam,
            "delta": self.delta,
            "gamma0": self.gamma0,
            "a": self.a,
            "eps_or_psi": self.eps_or_psi,
            "c": self.c,
            "lambda_min": self.lambda_min,
            "bound": self.bound,
            "lambda_ok": self.lambda_ok,
            "z0_slope_ok": self.z0_slope_ok,
            "level_floor": self.level_probs.floor,
            "p0": self.level_probs.p0,
            "eps1": self.level_probs.eps1,
        }
        return out


def _derived_constants(delta: float, gamma0: float) -> Tuple[float, float, float]:
    if delta <= 0.0:
        raise ConfigError(f"delta must be > 0, got {delta}")
    if not 0.0 < gamma0 < 1.0:
        raise ConfigError(f"gamma0 must lie in (0, 1), got {gamma0}")
    a = delta * delta * gamma0 / (2.0 * (1.0 + delta))
    eps = min(delta / 2.0, 0.5)
    c = eps ** 4 / 24.0
    return a, eps, c


def _bound_value(m: int, lam: int, c: float, eps: float, level_sum: float) -> float:
    return (2.0 / (c * eps)) * (m * lam * (1.0 + math.log1p(c * lam)) + level_sum)


def level_bound(lam: int, z: LevelProbabilities, delta: float, gamma0: float) -> BoundReport:
    """Runtime bound from per-level success probabilities of the sampler.

    The population-size requirement is
    lam >= (2/a) * ln(16 m / (a c eps z_floor)).
    """
    a, eps, c = _derived_constants(delta, gamma0)
    m = z.m
    lambda_min = math.ceil((2.0 / a) * math.log(16.0 * m / (a * c * eps * z.floor)))
    bound = _bound_value(m, lam, c, eps, float(np.sum(1.0 / z.values)))
    return BoundReport(kind="level", m=m, lam=lam, delta=delta, gamma0=gamma0, a=a,
                       eps_or_psi=eps, c=c, lambda_min=lambda_min, bound=bound,
                       lambda_ok=lam >= lambda_min, z0_slope_ok=True, level_probs=z)


def ga_bound(lam: int, s: LevelProbabilities, delta: float, gamma0: float) -> BoundReport:
    """Runtime bound composed from mutation/crossover constants.

    Uses the population-size requirement
    lam >= (2/a) * ln(32 m p0 / ((delta gamma0)^2 c s_floor psi)) and the
    level sum (p0 / ((1+delta) gamma0)) * sum_j 1/s_j.  The report also
    carries the implied full-pipeline floors z_j = gamma0 (1+delta) s_j / p0.
    """
    a, psi, c = _derived_constants(delta, gamma0)
    m = s.m
    lambda_min = math.ceil((2.0 / a) * math.log(
        32.0 * m * s.p0 / ((delta * gamma0) ** 2 * c * s.floor * psi)))
    level_sum = (s.p0 / ((1.0 + delta) * gamma0)) * float(np.sum(1.0 / s.values))
    bound = _bound_value(m, lam, c, psi, level_sum)
    implied_z = gamma0 * (1.0 + delta) * s.values / s.p0
    return BoundReport(kind="ga", m=m, lam=lam, delta=delta, gamma0=gamma0, a=a,
                       eps_or_psi=psi, c=c, lambda_min=lambda_min, bound=bound,
                       lambda_ok=lam >= lambda_min, z0_slope_ok=True, level_probs=s,
                       implied_z=implied_z)


# ---------------------------------------------------------------------------
# Selection thresholds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionThreshold:
    """Minimum selection intensity (k, lambda/mu ratio, or eta) and the
    matching gamma0 for which the pressure condition is certified."""

    kind: str
    threshold: float
    gamma0: float


def selection_threshold(kind: str, eps1: float, p0: float, delta: float) -> SelectionThreshold:
    """Intensity needed for the pressure condition, per mechanism.

    tournament / exp_ranking require k (resp. eta) >= 4(1+delta)/(eps1 p0)
    with gamma0 = eps1 p0 / (4 (1+delta)); mu_lambda requires
    lambda/mu >= (1+delta)/(eps1 p0) with gamma0 = mu/lambda (reported as the
    reciprocal of the threshold ratio).
    """
    if not 0.0 < eps1 <= 1.0 or not 0.0 < p0 <= 1.0:
        raise ConfigError(f"eps1 and p0 must lie in (0, 1], got {eps1}, {p0}")
    if delta <= 0.0:
        raise ConfigError(f"delta must be > 0, got {delta}")
    if kind in ("tournament", "exp_ranking"):
        threshold = 4.0 * (1.0 + delta) / (eps1 * p0)
        return SelectionThreshold(kind=kind, threshold=threshold, gamma0=1.0 / threshold)
    if kind == "mu_lambda":
        threshold = (1.0 + delta) / (eps1 * p0)
        return SelectionThreshold(kind=kind, threshold=threshold, gamma0=1.0 / threshold)
    raise ConfigError(f"unknown selection kind {kind!r}")


# ---------------------------------------------------------------------------
# Benchmark constants
# ---------------------------------------------------------------------------

def benchmark_level_probs(problem: ProblemSpec, chi: Optional[float] = None,
                          pc: Optional[float] = None) -> LevelProbabilities:
    """Per-level upgrade floors s_j, no-change probability p0 and crossover
    keep probability eps1 for a benchmark.

    onemax:       s_j = (n-j+1) (chi/n) (1-chi/n)^(n-1) p0, p0 = (1-chi/n)^n
    leadingones:  s_j = (chi/n) (1-chi/n)^(n-1), same p0
    inv_sorting:  s_j = max(m-j, 1) p0 / (e m), p0 = 1/e, eps1 = (1-pc)/2

    Bitstring benchmarks keep eps1 = 1/2 (one-offspring crossover hands the
    fitter parent's prefix/majority on at least half the outcomes, gate open
    or closed).  The sorting floor at j = m keeps the factor at 1 instead of
    0 so that every level floor stays positive.
    """
    m = problem.num_levels
    j = np.arange(1, m + 1, dtype=float)
    if problem.representation == "bits":
        if chi is None or chi <= 0:
            raise ConfigError("bitstring benchmarks need chi > 0")
        n = problem.n
        p = chi / n
        if p > 1.0:
            raise ConfigError(f"chi/n must be <= 1, got {p}")
        p0 = (1.0 - p) ** n
        base = p * (1.0 - p) ** (n - 1)
        if problem.kind == "onemax":
            values = (n - j + 1.0) * base * p0
        else:
            values = np.full(m, base)
        return LevelProbabilities(values=values, p0=p0, eps1=0.5)
    if pc is None:
        raise ConfigError("the sorting benchmark needs the crossover gate pc")
    if not 0.0 <= pc < 1.0:
        raise ConfigError(f"pc must lie in [0, 1) for the sorting constants, got {pc}")
    p0 = math.exp(-1.0)
    values = np.maximum(m - j, 1.0) * p0 / (math.e * m)
    return LevelProbabilities(values=values, p0=p0, eps1=(1.0 - pc) / 2.0)


def benchmark_level_prob(problem: ProblemSpec, j: int, chi: Optional[float] = None,
                         pc: Optional[float] = None) -> Tuple[float, float, float]:
    """(s_j, p0, eps1) for a single level index j in 1..m."""
    probs = benchmark_level_probs(problem, chi=chi, pc=pc)
    if not 1 <= j <= probs.m:
        raise ConfigError(f"level index must lie in 1..{probs.m}, got {j}")
    return float(probs.values[j - 1]), probs.p0, probs.eps1


# ---------------------------------------------------------------------------
# Ready-to-run parameterizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PresetOutcome:
    config: GAConfig
    report: BoundReport
    threshold: SelectionThreshold
    warnings: Tuple[str, ...] = ()


def finite_n_floor(chi: float, delta: float) -> float:
    """Smallest n at which the e^chi slack still covers delta/2 of the margin.

    Below this, the selection intensities derived with the e^chi shorthand
    certify the pressure condition only for a reduced delta' = delta/2; the
    preset reports it as a warning rather than a failure.
    """
    ratio = ((1.0 + delta / 2.0) / (1.0 + delta)) ** (1.0 / chi)
    return chi / (1.0 - ratio)


def _selection_for(mech: str, intensity: float, lam: int) -> Tuple[SelectionMechanism, float]:
    """Smallest admissible mechanism parameter; returns it with the realised
    top fraction (mu/lam) for mu_lambda, else 0."""
    if mech == "tournament":
        return SelectionMechanism(kind="tournament", k=math.ceil(intensity)), 0.0
    if mech == "exp_ranking":
        return SelectionMechanism(kind="exp_ranking", eta=intensity), 0.0
    if mech == "mu_lambda":
        mu = max(1, math.floor(lam / intensity))
        return SelectionMechanism(kind="mu_lambda", mu=mu), mu / lam
    raise ConfigError(f"unknown selection kind {mech!r}")


def preset_config(preset: str, n: int, mech: str = "tournament", delta: float = 0.1,
                  chi: float = 1.0, pc: float = 0.5, lam: Optional[int] = None,
                  seed: int = 0, replicates: int = 1,
                  max_evals: Optional[int] = None) -> PresetOutcome:
    """A GAConfig meeting the published parameterization, plus its bound.

    ``preset`` picks the benchmark: onemax / leadingones (bitwise mutation at
    rate chi/n, ungated uniform crossover, intensity >= 8(1+delta)e^chi or
    ratio >= 2(1+delta)e^chi) or sorting (Poisson exchange mutation, gated
    order crossover with pc in [0,1), intensity >= 8e(1+delta)/(1-pc) or
    ratio >= 2e(1+delta)/(1-pc)).  The population size is the larger of the
    caller's lam and the minimum from the bound machinery.
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    if delta <= 0.0:
        raise ConfigError(f"delta must be > 0, got {delta}")
    warnings: List[str] = []

    if preset in ("onemax", "leadingones"):
        problem = ProblemSpec(kind=preset, n=n)
        levels = benchmark_level_probs(problem, chi=chi)
        boost = math.exp(chi)
        intensity = (8.0 if mech != "mu_lambda" else 2.0) * (1.0 + delta) * boost
        crossover = CrossoverSpec(kind="uniform", pc=1.0)
        mutation = MutationSpec(kind="bitwise", chi=chi)
        n_floor = finite_n_floor(chi, delta)
        if n < n_floor:
            warnings.append(f"n={n} is below the finite-size floor {n_floor:.1f}; "
                            f"the pressure margin is certified for delta'={delta / 2} only")
    else:
        if not 0.0 <= pc < 1.0:
            raise ConfigError(f"the sorting preset needs pc in [0, 1), got {pc}")
        problem = ProblemSpec(kind="inv_sorting", n=n)
        levels = benchmark_level_probs(problem, pc=pc)
        intensity = (8.0 if mech != "mu_lambda" else 2.0) * math.e * (1.0 + delta) / (1.0 - pc)
        crossover = CrossoverSpec(kind="one_point", pc=pc)
        mutation = MutationSpec(kind="exchange")

    threshold = selection_threshold(mech, levels.eps1, levels.p0, delta)
    if mech == "mu_lambda":
        gamma0 = 1.0 / intensity
    else:
        gamma0 = threshold.gamma0

    probe = ga_bound(lam=1, s=levels, delta=delta, gamma0=gamma0)
    lam_final = max(probe.lambda_min, lam or 1)
    report = ga_bound(lam=lam_final, s=levels, delta=delta, gamma0=gamma0)
    selection, _ = _selection_for(mech, intensity, lam_final)

    if max_evals is None:
        max_evals = max(int(math.ceil(10.0 * report.bound)), lam_final)
    config = GAConfig(problem=problem, lam=lam_final, selection=selection,
                      crossover=crossover, mutation=mutation, seed=seed,
                      max_evals=max_evals, replicates=replicates)
    return PresetOutcome(config=config, report=report,
                         threshold=SelectionThreshold(kind=mech, threshold=intensity,
                                                      gamma0=gamma0),
                         warnings=tuple(warnings))
