"""Output formatting: explain lines, JSON-lines results, bench CSV and metadata."""

import csv
import json
import math
import sys
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, TextIO

from rich.console import Console
from rich.table import Table

from .estimator import RunRecord

BENCH_COLUMNS = (
    "instance_id",
    "seed",
    "method",
    "c",
    "delta",
    "T",
    "k_hat",
    "estimate_log10",
    "lb_log10",
    "ub_log10",
    "score_log10",
    "oracle_calls",
    "nodes",
    "wall_ms",
    "status",
)


@dataclass(frozen=True)
class MethodResult:
    """Outcome of one method run, common to estimators and baselines.

    Log10 fields are None when the method does not produce them and -inf
    for a zero value.
    """

    method: str
    status: str
    decision: Optional[tuple[int, ...]] = None
    T: Optional[int] = None
    k_hat: Optional[int] = None
    estimate_log10: Optional[float] = None
    lb_log10: Optional[float] = None
    ub_log10: Optional[float] = None
    score_log10: Optional[float] = None
    oracle_calls: int = 0
    nodes: int = 0
    wall_ms: float = 0.0
    possibly_zero: bool = False
    records: tuple[RunRecord, ...] = field(default=(), repr=False)
    message: Optional[str] = None


def print_explain(message: str, explain: bool) -> None:
    """Print explanation message to stderr if explain mode is enabled.

    Args:
        message: The explanation message to print
        explain: Whether explain mode is enabled
    """
    if explain:
        print(f"EXPLAIN: {message}", file=sys.stderr)


def describe_record(record: RunRecord) -> str:
    """One-line account of an oracle decision."""
    outcome = "unknown" if record.outcome is None else str(record.outcome).lower()
    objective = "none" if record.objective is None else str(record.objective)
    return (
        f"k={record.k} trial={record.trial} objective={objective}/{record.T} "
        f"threshold={record.threshold} outcome={outcome} status={record.status.value} "
        f"nodes={record.nodes}"
    )


def decision_string(decision: Optional[Sequence[int]]) -> Optional[str]:
    """Decision bits as a 0/1 string, bit j at position j."""
    if decision is None:
        return None
    return "".join(str(bit) for bit in decision)


def _json_real(value: Optional[float]) -> Any:
    if value is None:
        return None
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return round(value, 6)


def record_json(record: RunRecord, timings: bool) -> str:
    data: dict[str, Any] = {
        "type": "record",
        "k": record.k,
        "trial": record.trial,
        "T": record.T,
        "threshold": record.threshold,
        "outcome": record.outcome,
        "objective": record.objective,
        "decision": decision_string(record.decision),
        "status": record.status.value,
        "nodes": record.nodes,
    }
    if timings:
        data["wall_ms"] = round(record.wall_ms, 3)
    return json.dumps(data)


def result_json(result: MethodResult, context: dict[str, Any], timings: bool) -> str:
    """One JSON object per method run; ``context`` carries run parameters."""
    data: dict[str, Any] = {"type": "result", **context, "method": result.method}
    data.update(
        {
            "T": result.T,
            "k_hat": result.k_hat,
            "estimate_log10": _json_real(result.estimate_log10),
            "lb_log10": _json_real(result.lb_log10),
            "ub_log10": _json_real(result.ub_log10),
            "score_log10": _json_real(result.score_log10),
            "decision": decision_string(result.decision),
            "oracle_calls": result.oracle_calls,
            "nodes": result.nodes,
            "possibly_zero": result.possibly_zero,
            "status": result.status,
        }
    )
    if timings:
        data["wall_ms"] = round(result.wall_ms, 3)
    return json.dumps(data)


def _csv_real(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return f"{value:.6f}"


def bench_row(
    instance_id: str,
    seed: int,
    c: int,
    delta: float,
    result: MethodResult,
    timings: bool,
) -> list[str]:
    return [
        instance_id,
        str(seed),
        result.method,
        str(c),
        repr(delta),
        "" if result.T is None else str(result.T),
        "" if result.k_hat is None else str(result.k_hat),
        _csv_real(result.estimate_log10),
        _csv_real(result.lb_log10),
        _csv_real(result.ub_log10),
        _csv_real(result.score_log10),
        str(result.oracle_calls),
        str(result.nodes),
        f"{result.wall_ms:.3f}" if timings else "",
        result.status,
    ]


def write_csv(rows: Iterable[Sequence[str]], stream: TextIO) -> None:
    """Header plus rows, quoted as RFC 4180 requires."""
    writer = csv.writer(stream)
    writer.writerow(BENCH_COLUMNS)
    writer.writerows(rows)


def print_summary(console: Console, result: MethodResult) -> None:
    """Rich table of one method run, on the given (stderr) console."""
    table = Table(title=f"Result: {result.method}", show_header=True, header_style="bold cyan")
    table.add_column("Metric", style="cyan", no_wrap=True)
    table.add_column("Value", justify="right", style="green")

    table.add_row("Status", result.status)
    if result.k_hat is not None:
        table.add_row("Estimate", f"2^{result.k_hat}")
    if result.estimate_log10 is not None:
        table.add_row("Estimate (log10)", _csv_real(result.estimate_log10))
    if result.lb_log10 is not None and result.ub_log10 is not None:
        table.add_row(
            "Bounds (log10)", f"[{_csv_real(result.lb_log10)}, {_csv_real(result.ub_log10)}]"
        )
    if result.score_log10 is not None:
        table.add_row("Score (log10)", _csv_real(result.score_log10))
    if result.T is not None:
        table.add_row("Replicates T", str(result.T))
    table.add_row("Oracle calls", f"{result.oracle_calls:,}")
    table.add_row("Search nodes", f"{result.nodes:,}")
    table.add_row("Decision", decision_string(result.decision) or "-")
    if result.possibly_zero:
        table.add_row("Possibly zero", "yes")

    console.print()
    console.print(table)
    console.print()


def save_metadata(path: Path, metadata: dict[str, Any]) -> Path:
    """Write a JSON sidecar atomically (temp file, then rename).

    Returns:
        Path written
    """
    temp_file = path.parent / f".{path.name}.tmp"
    temp_file.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    temp_file.replace(path)
    return path
