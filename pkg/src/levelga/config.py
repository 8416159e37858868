"""Run configuration: the GAConfig record and its shell-friendly grammar.

Operator specs are written as ``name:key=value,key=value`` (no spaces), e.g.

    --problem onemax:n=100 --selection tournament:k=24
    --crossover uniform:pc=1.0 --mutation bitwise:chi=1.0

``parse_config`` accepts an argv-style token list (optionally preceded by a
subcommand word) and/or a config-file text whose whitespace-separated tokens
are prepended to the argv.
"""

from __future__ import annotations

import argparse
import shlex
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ConfigError
from .operators import CrossoverSpec, MutationSpec, SelectionMechanism
from .problems import ProblemSpec

MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class GAConfig:
    """Everything that pins down one replicated experiment."""

    problem: ProblemSpec
    lam: int
    selection: SelectionMechanism
    crossover: CrossoverSpec
    mutation: MutationSpec
    seed: int = 0
    max_evals: int = 10 ** 9
    replicates: int = 1

    def __post_init__(self):
        if self.lam < 1:
            raise ConfigError(f"lambda must be >= 1, got {self.lam}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.max_evals < self.lam:
            raise ConfigError(f"max_evals must be >= lambda, got {self.max_evals}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        self.selection.validate_for(self.lam)
        rep = self.problem.representation
        if rep == "bits" and self.mutation.kind != "bitwise":
            raise ConfigError(f"{self.problem.kind} uses bitstrings; mutation must be "
                              f"'bitwise', got {self.mutation.kind!r}")
        if rep == "perm" and self.mutation.kind != "exchange":
            raise ConfigError(f"{self.problem.kind} uses permutations; mutation must be "
                              f"'exchange', got {self.mutation.kind!r}")
        if self.mutation.kind == "bitwise":
            self.mutation.validate_for(self.problem.n)

    def with_seed(self, seed: int) -> "GAConfig":
        return replace(self, seed=seed)


# ---------------------------------------------------------------------------
# Spec-string grammar
# ---------------------------------------------------------------------------

def parse_spec_string(text: str) -> Tuple[str, Dict[str, str]]:
    """Split ``name:key=value,key=value`` into the name and a key/value map."""
    text = text.strip()
    if not text:
        raise ConfigError("empty operator spec")
    name, _, rest = text.partition(":")
    params: Dict[str, str] = {}
    if rest:
        for piece in rest.split(","):
            key, sep, value = piece.partition("=")
            if not sep or not key or not value:
                raise ConfigError(f"malformed spec {text!r}: expected name:key=value,...")
            if key in params:
                raise ConfigError(f"duplicate key {key!r} in spec {text!r}")
            params[key] = value
    return name, params


def _take_number(params: Dict[str, str], key: str, spec: str, kind: type):
    if key not in params:
        raise ConfigError(f"spec {spec!r} is missing required key {key!r}")
    raw = params.pop(key)
    try:
        if kind is int:
            value = int(raw)
        else:
            value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r} in spec {spec!r} must be a number, got {raw!r}") from exc
    return value


def _reject_unknown(params: Dict[str, str], spec: str) -> None:
    if params:
        raise ConfigError(f"unknown keys {sorted(params)} in spec {spec!r}")


def parse_problem(text: str) -> ProblemSpec:
    name, params = parse_spec_string(text)
    n = _take_number(params, "n", text, int)
    _reject_unknown(params, text)
    return ProblemSpec(kind=name, n=n)


def parse_selection(text: str) -> SelectionMechanism:
    name, params = parse_spec_string(text)
    if name == "tournament":
        mech = SelectionMechanism(kind=name, k=_take_number(params, "k", text, int))
    elif name == "mu_lambda":
        mech = SelectionMechanism(kind=name, mu=_take_number(params, "mu", text, int))
    elif name == "exp_ranking":
        mech = SelectionMechanism(kind=name, eta=_take_number(params, "eta", text, float))
    else:
        raise ConfigError(f"unknown selection kind {name!r} in {text!r}")
    _reject_unknown(params, text)
    return mech


def parse_crossover(text: str) -> CrossoverSpec:
    name, params = parse_spec_string(text)
    pc = _take_number(params, "pc", text, float) if "pc" in params else 1.0
    _reject_unknown(params, text)
    return CrossoverSpec(kind=name, pc=pc)


def parse_mutation(text: str) -> MutationSpec:
    name, params = parse_spec_string(text)
    if name == "bitwise":
        spec = MutationSpec(kind=name, chi=_take_number(params, "chi", text, float))
    elif name == "exchange":
        spec = MutationSpec(kind=name)
    else:
        raise ConfigError(f"unknown mutation kind {name!r} in {text!r}")
    _reject_unknown(params, text)
    return spec


def render_spec(obj) -> str:
    """Inverse of the spec-string parsers (canonical form)."""
    if isinstance(obj, ProblemSpec):
        return f"{obj.kind}:n={obj.n}"
    if isinstance(obj, SelectionMechanism):
        if obj.kind == "tournament":
            return f"tournament:k={obj.k}"
        if obj.kind == "mu_lambda":
            return f"mu_lambda:mu={obj.mu}"
        return f"exp_ranking:eta={obj.eta!r}"
    if isinstance(obj, CrossoverSpec):
        return f"{obj.kind}:pc={obj.pc!r}"
    if isinstance(obj, MutationSpec):
        if obj.kind == "bitwise":
            return f"bitwise:chi={obj.chi!r}"
        return "exchange"
    raise TypeError(f"cannot render {type(obj).__name__}")


def render_argv(config: GAConfig) -> List[str]:
    """Argv token list that parses back to an identical config."""
    return [
        "--problem", render_spec(config.problem),
        "--lambda", str(config.lam),
        "--selection", render_spec(config.selection),
        "--crossover", render_spec(config.crossover),
        "--mutation", render_spec(config.mutation),
        "--seed", str(config.seed),
        "--max-evals", str(config.max_evals),
        "--replicates", str(config.replicates),
    ]


# ---------------------------------------------------------------------------
# Argv parsing
# ---------------------------------------------------------------------------

def add_config_arguments(parser: argparse.ArgumentParser, require: bool = True) -> None:
    parser.add_argument("--problem", required=require, help="e.g. onemax:n=100, leadingones:n=50, inv:n=8")
    parser.add_argument("--lambda", dest="lam", type=int, required=require, help="population size")
    parser.add_argument("--selection", required=require,
                        help="tournament:k=K | mu_lambda:mu=M | exp_ranking:eta=E")
    parser.add_argument("--crossover", required=require, help="uniform:pc=P | one_point:pc=P")
    parser.add_argument("--mutation", required=require, help="bitwise:chi=C | exchange")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-evals", dest="max_evals", type=int, default=10 ** 9)
    parser.add_argument("--replicates", type=int, default=1)


def config_from_namespace(ns: argparse.Namespace) -> GAConfig:
    return GAConfig(
        problem=parse_problem(ns.problem),
        lam=ns.lam,
        selection=parse_selection(ns.selection),
        crossover=parse_crossover(ns.crossover),
        mutation=parse_mutation(ns.mutation),
        seed=ns.seed,
        max_evals=ns.max_evals,
        replicates=ns.replicates,
    )


class _StrictParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_config(argv: Optional[Sequence[str]] = None, text: Optional[str] = None) -> GAConfig:
    """Build a validated GAConfig from argv tokens and/or config-file text.

    A leading ``run`` token is tolerated so that full command lines can be
    passed through unchanged.  Unknown flags are rejected.
    """
    tokens: List[str] = []
    if text is not None:
        tokens.extend(shlex.split(text, comments=True))
    if argv is not None:
        tokens.extend(argv)
    if tokens and tokens[0] == "run":
        tokens = tokens[1:]
    parser = _StrictParser(prog="levelga run", add_help=False)
    add_config_arguments(parser)
    ns, extras = parser.parse_known_args(tokens)
    if extras:
        raise ConfigError(f"unknown arguments: {extras}")
    return config_from_namespace(ns)
