"""Replicated experiment execution and result emission.

Each replicate runs on its own random stream spawned from the root seed via
a counter-keyed seed sequence, so streams are independent, pairwise distinct
and reproducible regardless of execution order.  Summary statistics are
computed over successful runs only; the success rate is reported alongside
because a budget-capped failure would otherwise bias the conditional mean.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .bounds import BoundReport
from .config import GAConfig
from .engine import RunResult, run_until_target
from .estimators import ConditionReport
from .problems import LevelPartition, canonical_partition

CSV_COLUMNS = ("run_index", "seed", "success", "evaluations", "generations",
               "best_level_final")


def replicate_stream(root_seed: int, index: int) -> Tuple[np.random.Generator, int]:
    """Generator for replicate ``index`` plus a 64-bit stream fingerprint."""
    ss = np.random.SeedSequence(entropy=root_seed, spawn_key=(index,))
    fingerprint = int(ss.generate_state(1, dtype=np.uint64)[0])
    return np.random.Generator(np.random.PCG64(ss)), fingerprint


@dataclass(frozen=True)
class ExperimentStats:
    """Aggregate over replicates; mean/std cover successful runs only."""

    mean_evals: float
    std_evals: float
    ci95_halfwidth: float
    success_rate: float
    per_run: Tuple[dict, ...]

    @property
    def replicates(self) -> int:
        return len(self.per_run)

    def to_flat_dict(self) -> dict:
        return {
            "mean_evals": self.mean_evals,
            "std_evals": self.std_evals,
            "ci95_halfwidth": self.ci95_halfwidth,
            "success_rate": self.success_rate,
            "replicates": self.replicates,
        }


def run_replicates(config: GAConfig, partition: Optional[LevelPartition] = None) -> ExperimentStats:
    """Execute ``config.replicates`` independent runs and aggregate them."""
    if partition is None:
        partition = canonical_partition(config.problem)
    rows: List[dict] = []
    evals: List[int] = []
    for index in range(config.replicates):
        rng, fingerprint = replicate_stream(config.seed, index)
        result: RunResult = run_until_target(config, partition=partition, rng=rng)
        rows.append({
            "run_index": index,
            "seed": fingerprint,
            "success": int(result.success),
            "evaluations": result.evaluations,
            "generations": result.generations,
            "best_level_final": result.best_level_final,
        })
        if result.success:
            evals.append(result.evaluations)
    if evals:
        arr = np.asarray(evals, dtype=float)
        mean = float(arr.mean())
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        ci = 1.96 * std / math.sqrt(arr.size) if arr.size > 1 else 0.0
    else:
        mean = std = ci = float("nan")
    return ExperimentStats(mean_evals=mean, std_evals=std, ci95_halfwidth=ci,
                           success_rate=len(evals) / config.replicates,
                           per_run=tuple(rows))


def bound_vs_empirical_report(report: BoundReport, stats: ExperimentStats,
                              conditions: Optional[ConditionReport] = None) -> dict:
    """Join the closed-form bound with the measured runtimes."""
    out = {
        "empirical_mean": stats.mean_evals,
        "bound": report.bound,
        "ratio": stats.mean_evals / report.bound if report.bound > 0 else float("nan"),
        "success_rate": stats.success_rate,
        "replicates": stats.replicates,
        "lambda": report.lam,
        "lambda_min": report.lambda_min,
        "conditions_pass": conditions.passed if conditions is not None else None,
    }
    return out


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def _stats_csv(stats: ExperimentStats, stream) -> None:
    writer = csv.writer(stream)
    writer.writerow(CSV_COLUMNS)
    for row in stats.per_run:
        writer.writerow([row[c] for c in CSV_COLUMNS])


def _dict_csv(record: dict, stream) -> None:
    writer = csv.writer(stream)
    keys = list(record.keys())
    writer.writerow(keys)
    writer.writerow([_jsonable(record[k]) for k in keys])


def _rows_csv(rows: Sequence[dict], stream) -> None:
    keys = list(rows[0].keys())
    writer = csv.writer(stream)
    writer.writerow(keys)
    for row in rows:
        writer.writerow([_jsonable(row[k]) for k in keys])


def render_results(payload: Union[ExperimentStats, dict, Sequence[dict]],
                   fmt: str = "csv") -> str:
    """Render stats, a flat report or a row list as CSV or JSON text."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    if fmt == "json":
        if isinstance(payload, ExperimentStats):
            doc = dict(payload.to_flat_dict())
            doc["per_run"] = [dict(r) for r in payload.per_run]
        elif isinstance(payload, dict):
            doc = {k: _jsonable(v) for k, v in payload.items()}
        else:
            doc = [{k: _jsonable(v) for k, v in row.items()} for row in payload]
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    stream = io.StringIO()
    if isinstance(payload, ExperimentStats):
        _stats_csv(payload, stream)
    elif isinstance(payload, dict):
        _dict_csv(payload, stream)
    else:
        _rows_csv(list(payload), stream)
    return stream.getvalue()


def emit_results(payload, fmt: str = "csv", destination: Optional[str] = None) -> None:
    """Write rendered results to a path, or stdout when no path is given."""
    text = render_results(payload, fmt)
    if destination is None or destination == "-":
        sys.stdout.write(text)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {destination!r}: {exc}") from exc
