"""Command-line front end.

Subcommands:

    run       replicated GA experiments, per-run CSV or JSON output
    bound     closed-form runtime bound report for a preset parameterization
    estimate  selection pressure / level upgrade / crossover property estimators
    verify    condition report for a configured GA
    sweep     cartesian product of parameter lists, one CSV row per cell

Exit codes: 0 on success, 2 on configuration errors, 3 on I/O errors.
"""

from __future__ import annotations

import argparse
import sys
from itertools import product
from typing import List, Optional

import numpy as np

from . import bounds, estimators
from .config import (GAConfig, add_config_arguments, config_from_namespace,
                     parse_crossover, parse_mutation, parse_problem, parse_selection)
from .errors import ConfigError
from .experiment import bound_vs_empirical_report, emit_results, run_replicates
from .operators import selective_pressure
from .problems import canonical_partition


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", default=None, help="destination path (default: stdout)")
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")


def _add_preset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", required=True, choices=bounds.PRESETS)
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--mech", default="tournament",
                        choices=("tournament", "mu_lambda", "exp_ranking"))
    parser.add_argument("--delta", type=float, default=0.1)
    parser.add_argument("--chi", type=float, default=1.0)
    parser.add_argument("--pc", type=float, default=0.5)
    parser.add_argument("--lambda", dest="lam", type=int, default=None,
                        help="population size floor (raised to the bound minimum)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levelga", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run replicated GA experiments")
    add_config_arguments(p_run)
    _add_output_args(p_run)

    p_bound = sub.add_parser("bound", help="closed-form runtime bound report")
    _add_preset_args(p_bound)
    p_bound.add_argument("--replicates", type=int, default=0,
                         help="run this many replicates and join the empirical mean "
                              "against the bound")
    p_bound.add_argument("--seed", type=int, default=0)
    p_bound.add_argument("--trials", type=int, default=100_000,
                         help="condition-check trials for the empirical report")
    _add_output_args(p_bound)

    p_est = sub.add_parser("estimate", help="Monte Carlo / exact estimators")
    est_sub = p_est.add_subparsers(dest="estimator", required=True)

    e_beta = est_sub.add_parser("pressure", help="selection pressure at a rank fraction")
    e_beta.add_argument("--selection", required=True)
    e_beta.add_argument("--lambda", dest="lam", type=int, required=True)
    e_beta.add_argument("--gamma", type=float, required=True)
    e_beta.add_argument("--trials", type=int, default=100_000)
    e_beta.add_argument("--seed", type=int, default=0)
    e_beta.add_argument("--exact", action="store_true",
                        help="also report the enumerated exact value (small lambda)")
    _add_output_args(e_beta)

    e_up = est_sub.add_parser("upgrade", help="level upgrade probabilities")
    add_config_arguments(e_up)
    e_up.add_argument("--level", type=int, required=True)
    e_up.add_argument("--gamma0", type=float, required=True)
    e_up.add_argument("--gamma", type=float, default=None)
    e_up.add_argument("--trials", type=int, default=100_000)
    _add_output_args(e_up)

    e_x = est_sub.add_parser("crossover", help="crossover preservation properties")
    e_x.add_argument("--case", required=True, choices=("i", "ii", "iii"))
    e_x.add_argument("--u", required=True, help="parent bitstring, e.g. 1100")
    e_x.add_argument("--v", required=True)
    e_x.add_argument("--kind", default="uniform", choices=("uniform", "one_point"))
    e_x.add_argument("--trials", type=int, default=100_000)
    e_x.add_argument("--seed", type=int, default=0)
    _add_output_args(e_x)

    p_verify = sub.add_parser("verify", help="condition report for a configured GA")
    verify_mode = p_verify.add_mutually_exclusive_group(required=True)
    verify_mode.add_argument("--preset", choices=bounds.PRESETS)
    verify_mode.add_argument("--problem")
    p_verify.add_argument("--n", type=int)
    p_verify.add_argument("--mech", default="tournament",
                          choices=("tournament", "mu_lambda", "exp_ranking"))
    p_verify.add_argument("--delta", type=float, default=0.1)
    p_verify.add_argument("--chi", type=float, default=1.0)
    p_verify.add_argument("--pc", type=float, default=0.5)
    p_verify.add_argument("--lambda", dest="lam", type=int, default=None)
    p_verify.add_argument("--selection")
    p_verify.add_argument("--crossover")
    p_verify.add_argument("--mutation")
    p_verify.add_argument("--trials", type=int, default=100_000)
    _add_output_args(p_verify)

    p_sweep = sub.add_parser("sweep", help="cartesian product of parameter lists")
    p_sweep.add_argument("--problem", required=True,
                         help="';'-separated list of problem specs")
    p_sweep.add_argument("--lambda", dest="lam", required=True,
                         help="comma-separated list of population sizes")
    p_sweep.add_argument("--selection", required=True, help="';'-separated list")
    p_sweep.add_argument("--crossover", required=True, help="';'-separated list")
    p_sweep.add_argument("--mutation", required=True, help="';'-separated list")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--max-evals", dest="max_evals", type=int, default=10 ** 9)
    p_sweep.add_argument("--replicates", type=int, default=1)
    _add_output_args(p_sweep)

    return parser


def _cmd_run(ns) -> None:
    config = config_from_namespace(ns)
    stats = run_replicates(config)
    emit_results(stats, ns.fmt, ns.output)


def _cmd_bound(ns) -> None:
    outcome = bounds.preset_config(ns.preset, ns.n, mech=ns.mech, delta=ns.delta,
                                   chi=ns.chi, pc=ns.pc, lam=ns.lam, seed=ns.seed,
                                   replicates=max(ns.replicates, 1))
    record = outcome.report.to_dict()
    record["selection"] = ns.mech
    record["selection_intensity"] = outcome.threshold.threshold
    record["warnings"] = "; ".join(outcome.warnings)
    if ns.replicates > 0:
        stats = run_replicates(outcome.config)
        conditions = estimators.condition_report(outcome.config, ns.delta, trials=ns.trials)
        record.update(bound_vs_empirical_report(outcome.report, stats, conditions))
    emit_results(record, ns.fmt, ns.output)


def _cmd_estimate_pressure(ns) -> None:
    mech = parse_selection(ns.selection)
    rng = np.random.default_rng(ns.seed)
    population = estimators.ranked_population(ns.lam)
    est = estimators.estimate_selective_pressure(mech, population, ns.gamma, ns.trials, rng)
    record = {"estimator": "pressure", "lambda": ns.lam, "gamma": ns.gamma,
              "trials": ns.trials, "value": est.value, "ci_halfwidth": est.ci_halfwidth}
    if ns.exact:
        record["exact"] = estimators.exact_selective_pressure(mech, ns.lam, ns.gamma)
    record["closed_form"] = selective_pressure(mech, ns.gamma, ns.lam)
    emit_results(record, ns.fmt, ns.output)


def _cmd_estimate_upgrade(ns) -> None:
    config = config_from_namespace(ns)
    partition = canonical_partition(config.problem)
    gamma = ns.gamma if ns.gamma is not None else ns.gamma0 / 2
    rng = np.random.default_rng(config.seed)
    est = estimators.estimate_upgrade_probabilities(config, partition, ns.level,
                                                    ns.gamma0, gamma, ns.trials, rng)
    record = {"estimator": "upgrade", "level": ns.level, "gamma0": ns.gamma0,
              "gamma": gamma, "trials": ns.trials,
              "pipeline_plain": est.pipeline_plain.value,
              "pipeline_seeded": est.pipeline_seeded.value,
              "mutation_upgrade": est.mutation_upgrade.value,
              "mutation_stay": est.mutation_stay.value,
              "ci_halfwidth": est.pipeline_plain.ci_halfwidth}
    emit_results(record, ns.fmt, ns.output)


def _parse_bits(text: str) -> np.ndarray:
    if not text or set(text) - {"0", "1"}:
        raise ConfigError(f"parent must be a 0/1 string, got {text!r}")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


def _cmd_estimate_crossover(ns) -> None:
    u = _parse_bits(ns.u)
    v = _parse_bits(ns.v)
    check = estimators.check_crossover_property(u, v, ns.case, kind=ns.kind,
                                                trials=ns.trials,
                                                rng=np.random.default_rng(ns.seed))
    record = {"estimator": "crossover", "case": ns.case, "kind": ns.kind,
              "probability": check.probability, "threshold": check.threshold,
              "exact": check.exact, "satisfied": check.satisfied,
              "ci_halfwidth": check.ci_halfwidth}
    emit_results(record, ns.fmt, ns.output)


def _cmd_verify(ns) -> None:
    if ns.preset is not None:
        if ns.n is None:
            raise ConfigError("verify --preset needs --n")
        outcome = bounds.preset_config(ns.preset, ns.n, mech=ns.mech, delta=ns.delta,
                                       chi=ns.chi, pc=ns.pc, lam=ns.lam)
        config = outcome.config
    else:
        missing = [flag for flag, val in (("--lambda", ns.lam), ("--selection", ns.selection),
                                          ("--crossover", ns.crossover),
                                          ("--mutation", ns.mutation)) if val is None]
        if missing:
            raise ConfigError(f"verify --problem needs {', '.join(missing)}")
        config = GAConfig(problem=parse_problem(ns.problem), lam=ns.lam,
                          selection=parse_selection(ns.selection),
                          crossover=parse_crossover(ns.crossover),
                          mutation=parse_mutation(ns.mutation))
    report = estimators.condition_report(config, ns.delta, trials=ns.trials)
    rows = report.to_rows()
    summary = {"passed": report.passed, "gamma0": report.gamma0,
               "lambda_min": report.lambda_min, "warnings": "; ".join(report.warnings)}
    if ns.fmt == "json":
        emit_results({"conditions": rows, **summary}, "json", ns.output)
    else:
        emit_results(rows + [dict(name="summary", required="", value="",
                                  margin="", satisfied=report.passed,
                                  method="; ".join(report.warnings) or "ok",
                                  ci_halfwidth="")], "csv", ns.output)


def _split_list(text: str, sep: str) -> List[str]:
    return [piece for piece in (p.strip() for p in text.split(sep)) if piece]


def _cmd_sweep(ns) -> None:
    problems = _split_list(ns.problem, ";")
    lams = [int(v) for v in _split_list(ns.lam, ",")]
    selections = _split_list(ns.selection, ";")
    crossovers = _split_list(ns.crossover, ";")
    mutations = _split_list(ns.mutation, ";")
    rows = []
    for prob, lam, sel, xo, mut in product(problems, lams, selections, crossovers, mutations):
        config = GAConfig(problem=parse_problem(prob), lam=lam,
                          selection=parse_selection(sel), crossover=parse_crossover(xo),
                          mutation=parse_mutation(mut), seed=ns.seed,
                          max_evals=ns.max_evals, replicates=ns.replicates)
        stats = run_replicates(config)
        rows.append({"problem": prob, "lambda": lam, "selection": sel,
                     "crossover": xo, "mutation": mut, **stats.to_flat_dict()})
    emit_results(rows, ns.fmt, ns.output)


_COMMANDS = {
    "run": _cmd_run,
    "bound": _cmd_bound,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command == "estimate":
            handler = {"pressure": _cmd_estimate_pressure,
                       "upgrade": _cmd_estimate_upgrade,
                       "crossover": _cmd_estimate_crossover}[ns.estimator]
            handler(ns)
        else:
            _COMMANDS[ns.command](ns)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
