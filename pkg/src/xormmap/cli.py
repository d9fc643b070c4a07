"""Command-line interface for xormmap."""

import math
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import typer
from rich.console import Console
from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TaskProgressColumn,
    TextColumn,
    TimeElapsedColumn,
)

from . import __version__
from .baselines import (
    DEFAULT_SAA_SAMPLES,
    DEFAULT_SAA_SAMPLES_WEIGHTED,
    exact_mmap,
    saa_solve,
    score_solution,
)
from .dimacs import export_dimacs_xor
from .errors import EnumerationBudgetError, XorMmapError
from .estimator import (
    DEFAULT_C,
    DEFAULT_DELTA,
    EstimateReport,
    EstimatorConfig,
    majority_threshold,
)
from .instances import (
    format_instance,
    gen_equality,
    gen_free_block,
    gen_ising_grid,
    gen_random_2sat,
    instance_digest,
    read_instance,
)
from .model import MmapInstance, WeightKind
from .oracle import Engine, build_replicated
from .output import (
    MethodResult,
    bench_row,
    describe_record,
    print_explain,
    print_summary,
    record_json,
    result_json,
    save_metadata,
    write_csv,
)
from .search import Budget
from .seeding import INSTANCE, derive_rng
from .variants import Variant, VariantConfig, sweep_for
from .weighted import weighted_mmap

app = typer.Typer(
    name="xormmap",
    help="Marginal MAP estimation with XOR-hashed replicated oracles",
    context_settings={"help_option_names": ["-h", "--help"]},
    add_completion=False,
    no_args_is_help=True,
)

console = Console(stderr=True)  # All output to stderr to preserve stdout for data

SEED_ENVVAR = "XORMMAP_SEED"

EXIT_ERROR = 1
EXIT_DEGRADED = 3


class Family(str, Enum):
    TWO_SAT = "2sat"
    ISING = "ising"
    EQ = "eq"
    FREE = "free"


class Method(str, Enum):
    XORMMAP = "xormmap"
    BINSEARCH = "binsearch"
    PLUS = "plus"
    BIASED = "biased"
    SAA = "saa"
    EXACT = "exact"


ESTIMATORS = (Method.XORMMAP, Method.BINSEARCH, Method.PLUS, Method.BIASED)


def version_callback(value: bool) -> None:
    """Print version and exit if --version flag is provided."""
    if value:
        typer.echo(f"xormmap version {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit",
    ),
) -> None:
    """Approximate max over a of sum over x of w(a, x) with hashed replicated oracles.

    \b
    Quick Start:
        xormmap generate 2sat --n-total 12 --m-count 4 --clauses 10 --out f.cnf
        xormmap solve -i f.cnf --method xormmap --seed 1
        xormmap solve -i f.cnf --method exact
    """


@dataclass(frozen=True)
class RunSettings:
    """Flags shared by ``solve`` and ``bench``."""

    c: int
    delta: float
    T: Optional[int]
    r: Optional[int]
    q: Optional[int]
    engine: Engine
    workers: int
    budget: Budget
    samples: Optional[int]
    l: Optional[int]


def build_config(method: Method, settings: RunSettings, seed: int) -> EstimatorConfig:
    """Estimator config for one of the sweep methods."""
    if method is Method.XORMMAP:
        return EstimatorConfig(
            c=settings.c,
            delta=settings.delta,
            T=settings.T,
            engine=settings.engine,
            budget=settings.budget,
            seed=seed,
            workers=settings.workers,
        )
    return VariantConfig(
        c=settings.c,
        delta=settings.delta,
        T=settings.T,
        engine=settings.engine,
        budget=settings.budget,
        seed=seed,
        workers=settings.workers,
        variant=Variant(method.value),
        r=settings.r,
        q=settings.q,
    )


def _score(inst: MmapInstance, decision: Optional[tuple[int, ...]]) -> Optional[float]:
    """Exact log10 objective of a decision, None when it is too big to enumerate."""
    if decision is None:
        return None
    try:
        return score_solution(inst, decision)
    except EnumerationBudgetError:
        return None


def _from_report(method: Method, inst: MmapInstance, report: EstimateReport) -> MethodResult:
    return MethodResult(
        method=method.value,
        status=report.status.value,
        decision=report.decision,
        T=report.T,
        k_hat=report.k_hat,
        estimate_log10=report.estimate_log10,
        lb_log10=report.lower_log10,
        ub_log10=report.upper_log10,
        score_log10=_score(inst, report.decision),
        oracle_calls=report.oracle_calls,
        nodes=report.nodes,
        wall_ms=report.wall_ms,
        possibly_zero=report.possibly_zero,
        records=report.records,
    )


def run_method(
    inst: MmapInstance, method: Method, settings: RunSettings, seed: int
) -> MethodResult:
    """Run one method on one instance.

    Ising instances go through the weighted embedding for every sweep method.

    Raises:
        XorMmapError: On invalid parameters or an exceeded enumeration cap
    """
    if method is Method.EXACT:
        exact = exact_mmap(inst)
        value = exact.count.log10
        return MethodResult(
            method=method.value,
            status="exact",
            decision=exact.decision,
            estimate_log10=value,
            lb_log10=value,
            ub_log10=value,
            score_log10=value,
        )

    if method is Method.SAA:
        samples = settings.samples
        if samples is None:
            weighted = inst.kind is WeightKind.ISING
            samples = DEFAULT_SAA_SAMPLES_WEIGHTED if weighted else DEFAULT_SAA_SAMPLES
        saa = saa_solve(inst, samples=samples, seed=seed)
        return MethodResult(
            method=method.value,
            status="complete",
            decision=saa.decision,
            estimate_log10=saa.log_objective / math.log(10.0),
            score_log10=_score(inst, saa.decision),
        )

    config = build_config(method, settings, seed)
    sweep = sweep_for(config)
    if inst.kind is WeightKind.CNF:
        return _from_report(method, inst, sweep(inst, config))

    weighted_report = weighted_mmap(inst, config, settings.l, sweep)
    inner = weighted_report.inner
    return MethodResult(
        method=method.value,
        status="complete" if inner is None else inner.status.value,
        decision=weighted_report.decision,
        T=None if inner is None else inner.T,
        k_hat=None if inner is None else inner.k_hat,
        estimate_log10=weighted_report.estimate_log10,
        lb_log10=weighted_report.lower_log10,
        ub_log10=weighted_report.upper_log10,
        score_log10=_score(inst, weighted_report.decision),
        oracle_calls=0 if inner is None else inner.oracle_calls,
        nodes=0 if inner is None else inner.nodes,
        wall_ms=0.0 if inner is None else inner.wall_ms,
        possibly_zero=inner is None,
        records=() if inner is None else inner.records,
    )


def validate_arguments(
    methods: list[Method],
    T: Optional[int],
    r: Optional[int],
    q: Optional[int],
    c: int,
    delta: float,
) -> None:
    """Validate argument combinations and constraints.

    Args:
        methods: Methods requested
        T: Explicit replicate count (or None)
        r: Explicit trial count (or None)
        q: Explicit biased threshold (or None)
        c: Slack exponent
        delta: Failure probability

    Raises:
        typer.BadParameter: If validation fails with clear message
    """
    if q is not None and methods != [Method.BIASED]:
        raise typer.BadParameter("--q applies only to --method biased.")
    if r is not None and methods != [Method.PLUS]:
        raise typer.BadParameter("--r applies only to --method plus.")
    if c < 2:
        raise typer.BadParameter(f"--c must be >= 2, got {c}.")
    if not 0.0 < delta < 1.0:
        raise typer.BadParameter(f"--delta must be in (0, 1), got {delta}.")
    if q is not None and T is not None and not T / 2 < q <= T:
        raise typer.BadParameter(f"--q must satisfy T/2 < q <= T (T={T}), got {q}.")


def _load(path: Path) -> MmapInstance:
    try:
        return read_instance(path)
    except OSError as e:
        console.print(f"[red]Error reading instance:[/red] {e}")
        raise typer.Exit(EXIT_ERROR) from e
    except XorMmapError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR) from e


def _check_engine(inst: MmapInstance, engine: Engine) -> None:
    if engine is Engine.JOINT_DPLL and inst.kind is not WeightKind.CNF:
        raise typer.BadParameter("--engine joint-dpll applies to CNF instances only.")


def _budget(node_cap: Optional[int], timeout_secs: Optional[float]) -> Budget:
    return Budget(node_cap=node_cap, time_limit=timeout_secs)


@app.command()
def generate(
    family: Family = typer.Argument(..., help="Instance family"),
    n_total: int = typer.Option(
        16, "--n-total", help="Variables in a 2sat instance", min=2, rich_help_panel="2-SAT"
    ),
    m_count: int = typer.Option(
        6, "--m-count", help="Decision variables in a 2sat instance", min=0, rich_help_panel="2-SAT"
    ),
    clauses: int = typer.Option(
        20, "--clauses", help="Clauses in a 2sat instance", min=0, rich_help_panel="2-SAT"
    ),
    rows: int = typer.Option(4, "--rows", help="Grid rows", min=1, rich_help_panel="Ising"),
    cols: int = typer.Option(4, "--cols", help="Grid columns", min=1, rich_help_panel="Ising"),
    field_strength: float = typer.Option(
        0.1,
        "--field",
        help="Unary potentials drawn from U[-f, f]",
        min=0.0,
        rich_help_panel="Ising",
    ),
    coupling: float = typer.Option(
        1.0, "--coupling", help="Couplings drawn from U[-w, w]", min=0.0, rich_help_panel="Ising"
    ),
    max_fraction: float = typer.Option(
        0.2,
        "--max-fraction",
        help="Fraction of nodes made decision variables",
        min=0.0,
        max=1.0,
        rich_help_panel="Ising",
    ),
    n: int = typer.Option(
        6, "--n", help="Marginal bits of an eq or free instance", min=1, rich_help_panel="Eq / Free"
    ),
    m: int = typer.Option(
        0, "--m", help="Decision bits of a free instance", min=0, rich_help_panel="Eq / Free"
    ),
    seed: int = typer.Option(0, "--seed", envvar=SEED_ENVVAR, help="Master seed"),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", help="Output file (default: stdout)", dir_okay=False
    ),
) -> None:
    """Generate a benchmark instance.

    \b
    Examples:
        xormmap generate 2sat --n-total 16 --m-count 6 --clauses 20 --seed 7
        xormmap generate ising --rows 3 --cols 3 --max-fraction 0.34 --out g.ising
        xormmap generate eq --n 6
    """
    rng = derive_rng(seed, INSTANCE)
    try:
        if family is Family.TWO_SAT:
            inst = gen_random_2sat(n_total, m_count, clauses, rng)
        elif family is Family.ISING:
            inst = gen_ising_grid(rows, cols, field_strength, coupling, max_fraction, rng)
        elif family is Family.EQ:
            inst = gen_equality(n)
        else:
            inst = gen_free_block(n, m)
    except XorMmapError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR) from e

    text = format_instance(inst)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


@app.command()
def solve(
    instance: Path = typer.Option(
        ...,
        "--instance",
        "-i",
        help="Instance file (CNF with vmax line, or Ising grid)",
        exists=True,
        dir_okay=False,
    ),
    method: Method = typer.Option(
        Method.XORMMAP, "--method", help="Solver", rich_help_panel="Method"
    ),
    c: int = typer.Option(
        DEFAULT_C, "--c", help="Slack exponent (estimate within 2^c)", rich_help_panel="Method"
    ),
    delta: float = typer.Option(
        DEFAULT_DELTA, "--delta", help="Failure probability", rich_help_panel="Method"
    ),
    T: Optional[int] = typer.Option(
        None, "--T", help="Replicates (default: derived)", min=1, rich_help_panel="Method"
    ),
    r: Optional[int] = typer.Option(
        None, "--r", help="Trials per k for plus (default: derived)", min=1,
        rich_help_panel="Method",
    ),
    q: Optional[int] = typer.Option(
        None, "--q", help="Acceptance threshold for biased", min=1, rich_help_panel="Method"
    ),
    engine: Engine = typer.Option(
        Engine.ENUMERATE_A, "--engine", help="Replicated-problem solver", rich_help_panel="Method"
    ),
    samples: Optional[int] = typer.Option(
        None, "--samples", help="SAA sample count", min=1, rich_help_panel="Method"
    ),
    l: Optional[int] = typer.Option(
        None, "--l", help="Embedding bits for weighted instances (default: n)", min=1,
        rich_help_panel="Method",
    ),
    seed: int = typer.Option(0, "--seed", envvar=SEED_ENVVAR, help="Master seed"),
    parallel: int = typer.Option(
        1, "--parallel", help="Worker processes for oracle calls", min=1, rich_help_panel="Budget"
    ),
    timeout_secs: Optional[float] = typer.Option(
        None, "--timeout-secs", help="Wall-time cap per oracle call", min=0.0,
        rich_help_panel="Budget",
    ),
    node_cap: Optional[int] = typer.Option(
        None, "--node-cap", help="Search-node cap per oracle call", min=1, rich_help_panel="Budget"
    ),
    explain: bool = typer.Option(
        False, "--explain", help="Print each oracle decision to stderr", rich_help_panel="Output"
    ),
    quiet: bool = typer.Option(
        False, "--quiet", "-q", help="Suppress the summary table", rich_help_panel="Output"
    ),
    timings: bool = typer.Option(
        False, "--timings", help="Include wall times in the output", rich_help_panel="Output"
    ),
) -> None:
    """Run one method on an instance; prints JSON lines to stdout.

    One "record" line per oracle call, then one "result" line. Exit code 3
    means the run finished with degraded (anytime) bounds.

    \b
    Examples:
        xormmap solve -i f.cnf --method xormmap --c 3 --delta 0.1 --seed 1
        xormmap solve -i f.cnf --method plus --parallel 4
        xormmap solve -i g.ising --method biased --explain
    """
    validate_arguments([method], T, r, q, c, delta)
    inst = _load(instance)
    _check_engine(inst, engine)
    settings = RunSettings(
        c=c,
        delta=delta,
        T=T,
        r=r,
        q=q,
        engine=engine,
        workers=parallel,
        budget=_budget(node_cap, timeout_secs),
        samples=samples,
        l=l,
    )

    try:
        result = run_method(inst, method, settings, seed)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        raise typer.Exit(EXIT_ERROR) from None
    except XorMmapError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR) from e

    for record in result.records:
        print_explain(describe_record(record), explain)
        sys.stdout.write(record_json(record, timings) + "\n")
    context: dict[str, Any] = {"instance": instance.stem, "seed": seed, "c": c, "delta": delta}
    sys.stdout.write(result_json(result, context, timings) + "\n")
    if not quiet:
        print_summary(console, result)
    if result.status == "degraded":
        raise typer.Exit(EXIT_DEGRADED)


def _parse_methods(value: str) -> list[Method]:
    methods = []
    for name in value.split(","):
        name = name.strip()
        try:
            methods.append(Method(name))
        except ValueError as e:
            choices = ", ".join(m.value for m in Method)
            raise typer.BadParameter(f"Unknown method {name!r}; choose from {choices}.") from e
    return methods


@app.command()
def bench(
    instances: list[Path] = typer.Argument(
        ..., help="Instance files", exists=True, dir_okay=False
    ),
    methods: str = typer.Option(
        "xormmap,saa,exact", "--methods", help="Comma-separated methods", rich_help_panel="Method"
    ),
    num_seeds: int = typer.Option(
        5, "--num-seeds", help="Seeds per instance and method", min=1, rich_help_panel="Method"
    ),
    c: int = typer.Option(DEFAULT_C, "--c", help="Slack exponent", rich_help_panel="Method"),
    delta: float = typer.Option(
        DEFAULT_DELTA, "--delta", help="Failure probability", rich_help_panel="Method"
    ),
    T: Optional[int] = typer.Option(
        None, "--T", help="Replicates (default: derived)", min=1, rich_help_panel="Method"
    ),
    engine: Engine = typer.Option(
        Engine.ENUMERATE_A, "--engine", help="Replicated-problem solver", rich_help_panel="Method"
    ),
    samples: Optional[int] = typer.Option(
        None, "--samples", help="SAA sample count", min=1, rich_help_panel="Method"
    ),
    seed: int = typer.Option(
        0, "--seed", envvar=SEED_ENVVAR, help="Master seed; run i uses seed + i"
    ),
    parallel: int = typer.Option(
        1, "--parallel", help="Worker processes for oracle calls", min=1, rich_help_panel="Budget"
    ),
    timeout_secs: Optional[float] = typer.Option(
        None, "--timeout-secs", help="Wall-time cap per oracle call", min=0.0,
        rich_help_panel="Budget",
    ),
    node_cap: Optional[int] = typer.Option(
        None, "--node-cap", help="Search-node cap per oracle call", min=1, rich_help_panel="Budget"
    ),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", help="CSV file (default: stdout)", dir_okay=False,
        rich_help_panel="Output",
    ),
    metadata: Optional[Path] = typer.Option(
        None, "--metadata", help="Write a JSON sidecar describing the run", dir_okay=False,
        rich_help_panel="Output",
    ),
    timings: bool = typer.Option(
        False, "--timings", help="Fill the wall_ms column", rich_help_panel="Output"
    ),
    progress: bool = typer.Option(
        False, "--progress", "-p", help="Show a progress bar", rich_help_panel="Output"
    ),
) -> None:
    """Sweep instances x seeds x methods and write one CSV row per run.

    Failed runs are kept as rows with status "error".

    \b
    Examples:
        xormmap bench a.cnf b.cnf --methods xormmap,saa,exact --num-seeds 5 > runs.csv
        xormmap bench g.ising --methods plus,saa --metadata runs.json --out runs.csv
    """
    method_list = _parse_methods(methods)
    validate_arguments(method_list, T, None, None, c, delta)
    loaded = [(path.stem, _load(path)) for path in instances]
    for _, inst in loaded:
        _check_engine(inst, engine)
    settings = RunSettings(
        c=c,
        delta=delta,
        T=T,
        r=None,
        q=None,
        engine=engine,
        workers=parallel,
        budget=_budget(node_cap, timeout_secs),
        samples=samples,
        l=None,
    )
    seeds = [seed + i for i in range(num_seeds)]
    jobs = [(name, inst, s, meth) for name, inst in loaded for s in seeds for meth in method_list]

    rows: list[list[str]] = []

    def run_job(name: str, inst: MmapInstance, job_seed: int, meth: Method) -> None:
        try:
            result = run_method(inst, meth, settings, job_seed)
        except XorMmapError as e:
            console.print(f"[yellow]Warning:[/yellow] {name} seed={job_seed} {meth.value}: {e}")
            result = MethodResult(method=meth.value, status="error", message=str(e))
        rows.append(bench_row(name, job_seed, c, delta, result, timings))

    show_progress = progress and sys.stderr.isatty()
    try:
        if show_progress:
            with Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                BarColumn(),
                TaskProgressColumn(),
                TimeElapsedColumn(),
                console=console,
                transient=True,
            ) as progress_bar:
                task = progress_bar.add_task("Running...", total=len(jobs))
                for job in jobs:
                    run_job(*job)
                    progress_bar.advance(task)
        else:
            for job in jobs:
                run_job(*job)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        raise typer.Exit(EXIT_ERROR) from None

    if out is None:
        write_csv(rows, sys.stdout)
    else:
        with open(out, "w", newline="", encoding="utf-8") as stream:
            write_csv(rows, stream)

    if metadata is not None:
        save_metadata(
            metadata,
            {
                "xormmap_version": __version__,
                "methods": [meth.value for meth in method_list],
                "seeds": seeds,
                "c": c,
                "delta": delta,
                "T": T,
                "engine": engine.value,
                "node_cap": node_cap,
                "timeout_secs": timeout_secs,
                "instances": {name: instance_digest(inst) for name, inst in loaded},
                "rows": len(rows),
            },
        )


@app.command()
def export(
    instance: Path = typer.Option(
        ..., "--instance", "-i", help="CNF instance file", exists=True, dir_okay=False
    ),
    k: int = typer.Option(..., "--k", help="Parity rows per replicate", min=0),
    T: int = typer.Option(..., "--T", help="Replicates", min=1),
    seed: int = typer.Option(0, "--seed", envvar=SEED_ENVVAR, help="Master seed"),
    threshold: Optional[int] = typer.Option(
        None, "--threshold", help="Required true y count (default: strict majority)", min=1
    ),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", help="Output file (default: stdout)", dir_okay=False
    ),
) -> None:
    """Write a replicated problem as DIMACS CNF with x lines and a cardinality comment.

    \b
    Examples:
        xormmap export -i f.cnf --k 3 --T 5 --seed 1 --out f.xcnf
    """
    inst = _load(instance)
    needed = majority_threshold(T) if threshold is None else threshold
    if needed > T:
        raise typer.BadParameter(f"--threshold must be <= T ({T}), got {needed}.")
    try:
        rep = build_replicated(inst, T, k, seed)
    except XorMmapError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR) from e

    text = export_dimacs_xor(rep, needed)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


if __name__ == "__main__":
    app()
