"""The core estimator: parameter formulas, XOR_K queries and the descending k-sweep.

For each k the sweep asks whether some decision vector keeps a majority of T
independently hashed replicates feasible after k random parity constraints.
The largest k that passes is the exponent of the estimate, and with
probability at least 1 - delta the optimum lies in [2^(k-c), 2^(k+c+1)].
"""

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.special import rel_entr

from .dispatch import Dispatcher
from .embedding import EmbeddedInstance
from .errors import InvalidParameterError
from .gf2 import sample_parity
from .model import DEFAULT_ENUMERATION_CAP, MmapInstance
from .oracle import (
    Engine,
    base_satisfiable,
    build_replicated,
    solve_emptiness,
    solve_replicated,
    solve_weighted_replicated,
)
from .search import Budget, OracleStatus
from .seeding import PARITY, derive_rng

DEFAULT_C = 3
DEFAULT_DELTA = 0.2

LN2 = math.log(2.0)
LOG10_2 = math.log10(2.0)

# What the sweep can run on: a CNF instance or the embedding of a weighted one
Target = Union[MmapInstance, EmbeddedInstance]


class SweepOrder(str, Enum):
    """Order in which k values are queried."""

    DESCENDING = "descending"
    BINARY_SEARCH = "binary-search"


class ReportStatus(str, Enum):
    COMPLETE = "complete"
    DEGRADED = "degraded"


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence D(p || q) between Bernoulli(p) and Bernoulli(q), in nats.

    Uses the 0 * ln 0 = 0 convention, so p may sit on either end of [0, 1].

    Raises:
        InvalidParameterError: If p is outside [0, 1] or q outside (0, 1)
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must be in [0, 1], got {p}")
    if not 0.0 < q < 1.0:
        raise InvalidParameterError(f"q must be in (0, 1), got {q}")
    return float(rel_entr(p, q) + rel_entr(1.0 - p, 1.0 - q))


def false_positive_rate(c: int) -> float:
    """p = 2^c / (2^c - 1)^2, the per-replicate error bound for slack c."""
    check_c(c)
    scale = 2.0**c
    return scale / (scale - 1.0) ** 2


def alpha_star(c: int) -> float:
    """Chernoff exponent D(1/2 || 2^c / (2^c - 1)^2)."""
    return kl_bernoulli(0.5, false_positive_rate(c))


def check_c(c: int) -> None:
    if c < 2:
        raise InvalidParameterError(f"c must be >= 2, got {c}")


def check_dims(m: int, n: int) -> None:
    if m < 0:
        raise InvalidParameterError(f"m must be >= 0, got {m}")
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")


def check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError(f"delta must be in (0, 1), got {delta}")


def required_T(m: int, n: int, delta: float, c: int) -> int:
    """Replicates for the descending sweep: ceil((m ln2 + ln(n/delta)) / alpha*(c)), at least 1."""
    check_dims(m, n)
    check_delta(delta)
    return max(1, math.ceil((m * LN2 + math.log(n / delta)) / alpha_star(c)))


def majority_threshold(T: int) -> int:
    """Replicate count that counts as a strict majority of T."""
    if T < 1:
        raise InvalidParameterError(f"T must be >= 1, got {T}")
    return T // 2 + 1


@dataclass(frozen=True)
class EstimatorConfig:
    """Parameters of one estimator run.

    Attributes:
        c: Slack exponent; the estimate is within 2^c of the optimum (c >= 2)
        delta: Failure probability in (0, 1)
        T: Replicate count; None derives it from (m, n, delta, c)
        sweep: Order of k queries
        engine: Solver for replicated problems
        budget: Node and time caps per oracle call
        seed: Master seed for every parity system
        workers: Processes for concurrent oracle calls
        cap: Enumeration cap in bits
    """

    c: int = DEFAULT_C
    delta: float = DEFAULT_DELTA
    T: Optional[int] = None
    sweep: SweepOrder = SweepOrder.DESCENDING
    engine: Engine = Engine.ENUMERATE_A
    budget: Budget = Budget()
    seed: int = 0
    workers: int = 1
    cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self) -> None:
        check_c(self.c)
        check_delta(self.delta)
        if self.T is not None and self.T < 1:
            raise InvalidParameterError(f"T must be >= 1, got {self.T}")
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class RunRecord:
    """One XOR_K call.

    Attributes:
        k: Parity rows per replicate
        trial: Independent repetition index at this k (0 unless repeated)
        T: Replicates
        threshold: Replicate count needed for a true outcome
        outcome: True/False, or None when a budget left the call undecided
        objective: Best replicate count found
        decision: Decision vector achieving ``objective``
        status: Oracle status
        nodes: Search nodes
        wall_ms: Wall time of the call
    """

    k: int
    trial: int
    T: int
    threshold: int
    outcome: Optional[bool]
    objective: Optional[int]
    decision: Optional[tuple[int, ...]]
    status: OracleStatus
    nodes: int
    wall_ms: float

    @property
    def exact(self) -> bool:
        return self.status is OracleStatus.OPTIMAL


@dataclass(frozen=True)
class EstimateReport:
    """Result of a k-sweep.

    The estimate is 2^k_hat; ``lower`` and ``upper`` are exponent bounds on
    the optimum. ``decision`` comes from the accepting call.
    """

    method: str
    n: int
    c: int
    T: int
    k_hat: int
    lower: int
    upper: int
    records: tuple[RunRecord, ...]
    decision: Optional[tuple[int, ...]]
    status: ReportStatus
    possibly_zero: bool = False

    @property
    def estimate(self) -> int:
        return 1 << self.k_hat

    @property
    def estimate_log10(self) -> float:
        return self.k_hat * LOG10_2

    @property
    def lower_log10(self) -> float:
        return self.lower * LOG10_2

    @property
    def upper_log10(self) -> float:
        return self.upper * LOG10_2

    @property
    def degraded(self) -> bool:
        return self.status is ReportStatus.DEGRADED

    @property
    def oracle_calls(self) -> int:
        return len(self.records)

    @property
    def nodes(self) -> int:
        return sum(record.nodes for record in self.records)

    @property
    def wall_ms(self) -> float:
        return sum(record.wall_ms for record in self.records)


def xor_binary(
    inst: MmapInstance,
    a0: Sequence[int],
    k: int,
    rng: np.random.Generator,
    budget: Budget = Budget(),
) -> bool:
    """One hashed emptiness test: is W(a0, h) non-empty for a fresh k-row hash h?

    Raises:
        BudgetExceededError: If the oracle's budget trips
    """
    if not 0 <= k <= inst.n:
        raise InvalidParameterError(f"k must be in [0, {inst.n}], got {k}")
    return solve_emptiness(inst, a0, sample_parity(inst.n, k, rng), budget)


def xor_k(
    target: Target,
    k: int,
    T: int,
    seed: int,
    trial: int = 0,
    threshold: Optional[int] = None,
    engine: Engine = Engine.ENUMERATE_A,
    budget: Budget = Budget(),
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> RunRecord:
    """Decide whether some a keeps at least ``threshold`` of T hashed replicates feasible.

    Replicate i of (k, trial) hashes with the stream keyed
    (seed, "parity", k, i, trial). Embedded targets always use the
    enumerate-a weighted oracle.

    Args:
        target: CNF instance or embedded weighted instance
        k: Parity rows per replicate, in [0, n]
        T: Replicates
        seed: Master seed
        trial: Repetition index at this k
        threshold: Needed replicate count (default: strict majority)
        engine: Replicated-problem solver for CNF targets
        budget: Node and time caps
        cap: Enumeration cap for embedded targets

    Returns:
        RunRecord; ``outcome`` is None when the budget left the call undecided
    """
    needed = majority_threshold(T) if threshold is None else threshold
    if not 1 <= needed <= T:
        raise InvalidParameterError(f"threshold must be in [1, {T}], got {needed}")
    if not 0 <= k <= target.n:
        raise InvalidParameterError(f"k must be in [0, {target.n}], got {k}")

    if isinstance(target, EmbeddedInstance):
        parity = tuple(
            sample_parity(target.n, k, derive_rng(seed, PARITY, k, i, trial)) for i in range(T)
        )
        result = solve_weighted_replicated(target, parity, budget, cap)
    else:
        rep = build_replicated(target, T, k, seed, trial)
        result = solve_replicated(rep, needed, engine, budget)

    return RunRecord(
        k=k,
        trial=trial,
        T=T,
        threshold=needed,
        outcome=result.meets(needed),
        objective=result.objective,
        decision=result.decision,
        status=result.status,
        nodes=result.nodes,
        wall_ms=result.wall_ms,
    )


@dataclass(frozen=True)
class OracleTask:
    """Picklable arguments of one :func:`xor_k` call."""

    target: Target
    k: int
    T: int
    threshold: int
    seed: int
    trial: int
    engine: Engine
    budget: Budget
    cap: int


def run_oracle_task(task: OracleTask) -> RunRecord:
    return xor_k(
        task.target,
        task.k,
        task.T,
        task.seed,
        trial=task.trial,
        threshold=task.threshold,
        engine=task.engine,
        budget=task.budget,
        cap=task.cap,
    )


def make_task(
    target: Target, config: EstimatorConfig, k: int, T: int, threshold: int, trial: int = 0
) -> OracleTask:
    return OracleTask(
        target=target,
        k=k,
        T=T,
        threshold=threshold,
        seed=config.seed,
        trial=trial,
        engine=config.engine,
        budget=config.budget,
        cap=config.cap,
    )


def bounds_from_partial(
    outcomes: Mapping[int, Optional[bool]], c: int, n: int
) -> tuple[int, int]:
    """Exponent bounds from whichever k outcomes are known.

    lower = max true k - c (0 if none), upper = min false k + c (n if none),
    both clamped to [0, n]. Undecided (None) outcomes are ignored. If an
    unlucky non-monotone run puts lower above upper, the pair is swapped.
    """
    trues = [k for k, outcome in outcomes.items() if outcome is True]
    falses = [k for k, outcome in outcomes.items() if outcome is False]
    lower = max(trues) - c if trues else 0
    upper = min(falses) + c if falses else n
    lower = min(max(lower, 0), n)
    upper = min(max(upper, 0), n)
    if lower > upper:
        lower, upper = upper, lower
    return lower, upper


def possibly_zero(target: Target, budget: Budget = Budget()) -> bool:
    """True when the instance has no positive-weight assignment at all.

    Runs a plain satisfiability check for CNF targets; an undecided check
    reports False.
    """
    if isinstance(target, EmbeddedInstance):
        return target.empty
    return base_satisfiable(target, budget) is False


def finish_report(
    method: str,
    target: Target,
    config: EstimatorConfig,
    T: int,
    records: Sequence[RunRecord],
    outcomes: Mapping[int, Optional[bool]],
    accepted: Optional[int],
    decision: Optional[tuple[int, ...]],
) -> EstimateReport:
    """Turn the per-k outcomes of a sweep into a report.

    Args:
        method: Label of the sweep
        target: Instance the sweep ran on
        config: Run parameters
        T: Replicates used
        records: Every XOR_K call that counts toward the result
        outcomes: Per-k decision (None when undecided)
        accepted: Accepted k, None when no k was accepted
        decision: Decision vector from the accepting call
    """
    n = target.n
    degraded = any(outcome is None for outcome in outcomes.values())
    k_hat = 0 if accepted is None else accepted
    if degraded:
        lower, upper = bounds_from_partial(outcomes, config.c, n)
    else:
        lower, upper = max(0, k_hat - config.c), min(n, k_hat + config.c)
    zero = accepted is None and not degraded and possibly_zero(target, config.budget)
    return EstimateReport(
        method=method,
        n=n,
        c=config.c,
        T=T,
        k_hat=k_hat,
        lower=lower,
        upper=upper,
        records=tuple(records),
        decision=decision,
        status=ReportStatus.DEGRADED if degraded else ReportStatus.COMPLETE,
        possibly_zero=zero,
    )


def descending_sweep(
    target: Target, config: EstimatorConfig, T: int, threshold: int, method: str
) -> EstimateReport:
    """Query k = n, n-1, ..., 1 and accept the first true outcome.

    With several workers, consecutive k values run as one batch; results are
    read in descending order and anything below the accepted k is dropped, so
    the report matches a sequential run.
    """
    records: list[RunRecord] = []
    outcomes: dict[int, Optional[bool]] = {}
    accepted: Optional[RunRecord] = None
    ks = list(range(target.n, 0, -1))

    with Dispatcher(config.workers) as dispatcher:
        for start in range(0, len(ks), dispatcher.batch_size):
            batch = ks[start : start + dispatcher.batch_size]
            tasks = [make_task(target, config, k, T, threshold) for k in batch]
            for record in dispatcher.map(run_oracle_task, tasks):
                records.append(record)
                outcomes[record.k] = record.outcome
                if record.outcome:
                    accepted = record
                    break
            if accepted is not None:
                break

    return finish_report(
        method,
        target,
        config,
        T,
        records,
        outcomes,
        None if accepted is None else accepted.k,
        None if accepted is None else accepted.decision,
    )


def xor_mmap(target: Target, config: EstimatorConfig = EstimatorConfig()) -> EstimateReport:
    """Estimate max over a of the sum over x of w(a, x) as a power of two.

    Sweeps k from n down to 1 with T replicates and a strict-majority
    threshold, returning 2^k at the first true outcome and 1 if none. An
    undecided call never counts as false: the sweep continues and the report
    is marked degraded with bounds from the completed calls.

    A config with ``sweep=BINARY_SEARCH`` runs the binary-search variant.
    """
    if config.sweep is SweepOrder.BINARY_SEARCH:
        from .variants import xor_mmap_binsearch

        return xor_mmap_binsearch(target, config)
    T = config.T
    if T is None:
        T = required_T(target.m, target.n, config.delta, config.c)
    return descending_sweep(target, config, T, majority_threshold(T), "xormmap")
