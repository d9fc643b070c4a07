"""Sweeps that trade replicates for other resources.

- binary search over k: fewer XOR_K calls, so a smaller union bound on T
- repeated trials (XOR_MMAP+): T sized for one constant-error call, then r
  independent trials per k with a majority vote
- biased threshold: accept at ``objective >= q`` with q balancing the two
  tail bounds instead of a plain majority
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .dispatch import Dispatcher
from .errors import InvalidParameterError
from .estimator import (
    LN2,
    EstimateReport,
    EstimatorConfig,
    RunRecord,
    Target,
    alpha_star,
    check_c,
    check_delta,
    check_dims,
    descending_sweep,
    false_positive_rate,
    finish_report,
    kl_bernoulli,
    majority_threshold,
    make_task,
    required_T,
    run_oracle_task,
    xor_k,
    xor_mmap,
)
from .model import DEFAULT_ENUMERATION_CAP
from .oracle import Engine
from .search import Budget


class Variant(str, Enum):
    BINSEARCH = "binsearch"
    PLUS = "plus"
    BIASED = "biased"


@dataclass(frozen=True)
class VariantConfig(EstimatorConfig):
    """EstimatorConfig plus the variant knobs.

    Attributes:
        variant: Which sweep :func:`xor_mmap_variant` runs
        r: Trials per k for PLUS (None derives it)
        q: Acceptance threshold for BIASED (None uses q_star)
    """

    variant: Variant = Variant.PLUS
    r: Optional[int] = None
    q: Optional[int] = None

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.r is not None and self.r < 1:
            raise InvalidParameterError(f"r must be >= 1, got {self.r}")
        if self.q is not None and self.T is not None:
            _check_q(self.q, self.T)


def _check_q(q: int, T: int) -> None:
    if not T / 2 < q <= T:
        raise InvalidParameterError(f"q must satisfy T/2 < q <= T (T={T}), got {q}")


def required_T_binsearch(m: int, n: int, delta: float, c: int) -> int:
    """Replicates when only log2(n) k values are queried.

    ceil((m ln2 + ln log2 n + ln(1/delta)) / alpha*(c)), at least 1. For n = 1
    the single probe contributes ln 1 = 0.
    """
    check_dims(m, n)
    check_delta(delta)
    probes = max(math.log2(n), 1.0)
    numerator = m * LN2 + math.log(probes) + math.log(1.0 / delta)
    return max(1, math.ceil(numerator / alpha_star(c)))


def required_T_plus(m: int, c: int) -> int:
    """Replicates per trial for XOR_MMAP+: ceil((m ln2 + ln(1/p)) / alpha*(c))."""
    if m < 0:
        raise InvalidParameterError(f"m must be >= 0, got {m}")
    p = false_positive_rate(c)
    return max(1, math.ceil((m * LN2 + math.log(1.0 / p)) / alpha_star(c)))


def required_r(n: int, delta: float, c: int) -> int:
    """Trials per k for XOR_MMAP+: ceil(ln(n/delta) / D(1/2 || p))."""
    check_dims(0, n)
    check_delta(delta)
    return max(1, math.ceil(math.log(n / delta) / kl_bernoulli(0.5, false_positive_rate(c))))


def q_star(T: int, m: int, c: int) -> int:
    """Threshold in (T/2, T] that balances the two tail bounds of XOR_K+.

    Minimizes max(exp(-T D((T-q+1)/T || p)), 2^m exp(-T D(q/T || p))) by an
    exact scan in log space; ties go to the smaller q.
    """
    if T < 2:
        raise InvalidParameterError(f"T must be >= 2, got {T}")
    if m < 0:
        raise InvalidParameterError(f"m must be >= 0, got {m}")
    p = false_positive_rate(c)
    best_q = T
    best_value = math.inf
    for q in range(T // 2 + 1, T + 1):
        miss = -T * kl_bernoulli((T - q + 1) / T, p)
        false_hit = m * LN2 - T * kl_bernoulli(q / T, p)
        value = max(miss, false_hit)
        if value < best_value:
            best_q, best_value = q, value
    return best_q


def xor_k_plus(
    target: Target,
    k: int,
    T: int,
    q: int,
    seed: int,
    trial: int = 0,
    engine: Engine = Engine.ENUMERATE_A,
    budget: Budget = Budget(),
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> RunRecord:
    """XOR_K with the acceptance test ``objective >= q`` for T/2 < q <= T."""
    _check_q(q, T)
    return xor_k(target, k, T, seed, trial, q, engine, budget, cap)


def _plus_outcome(trials: list[RunRecord], r: int) -> Optional[bool]:
    needed = math.ceil(r / 2)
    trues = sum(1 for record in trials if record.outcome is True)
    completed = sum(1 for record in trials if record.outcome is not None)
    if trues >= needed and 2 * completed >= r:
        return True
    if trues + (r - completed) < needed:
        return False
    return None


def xor_mmap_plus(target: Target, config: EstimatorConfig = VariantConfig()) -> EstimateReport:
    """Descending sweep with r independent XOR_K trials per k.

    k is accepted when at least ceil(r/2) trials return true and at least
    half of the trials finished. Undecided trials abstain; a k that neither
    passes nor is ruled out marks the report degraded.
    """
    check_c(config.c)
    T = config.T if config.T is not None else required_T_plus(target.m, config.c)
    r = config.r if isinstance(config, VariantConfig) else None
    if r is None:
        r = required_r(target.n, config.delta, config.c)
    threshold = majority_threshold(T)

    records: list[RunRecord] = []
    outcomes: dict[int, Optional[bool]] = {}
    accepted: Optional[int] = None
    decision: Optional[tuple[int, ...]] = None

    with Dispatcher(config.workers) as dispatcher:
        for k in range(target.n, 0, -1):
            tasks = [make_task(target, config, k, T, threshold, trial) for trial in range(r)]
            trials = dispatcher.map(run_oracle_task, tasks)
            records.extend(trials)
            outcomes[k] = _plus_outcome(trials, r)
            if outcomes[k]:
                accepted = k
                decision = next(t.decision for t in trials if t.outcome)
                break

    return finish_report("plus", target, config, T, records, outcomes, accepted, decision)


def xor_mmap_binsearch(
    target: Target, config: EstimatorConfig = EstimatorConfig()
) -> EstimateReport:
    """Binary search for the true/false boundary of XOR_K over k in [0, n].

    Probes at most ceil(log2(n + 1)) values of k. The estimate is the highest
    probed k with a true outcome, which is where the search ends even when a
    run is not monotone. An undecided probe stops the search and the report
    degrades to bounds from the completed probes.
    """
    T = config.T
    if T is None:
        T = required_T_binsearch(target.m, target.n, config.delta, config.c)
    threshold = majority_threshold(T)

    records: list[RunRecord] = []
    outcomes: dict[int, Optional[bool]] = {}
    lo, hi = 0, target.n + 1
    decision: Optional[tuple[int, ...]] = None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        record = run_oracle_task(make_task(target, config, mid, T, threshold))
        records.append(record)
        outcomes[mid] = record.outcome
        if record.outcome is None:
            break
        if record.outcome:
            lo = mid
            decision = record.decision
        else:
            hi = mid

    accepted = lo if lo > 0 else None
    return finish_report("binsearch", target, config, T, records, outcomes, accepted, decision)


def xor_mmap_biased(target: Target, config: EstimatorConfig = VariantConfig()) -> EstimateReport:
    """Descending sweep accepting at ``objective >= q``.

    q defaults to q_star(T, m, c); with T = 1 the only valid threshold is 1.
    """
    T = config.T
    if T is None:
        T = required_T(target.m, target.n, config.delta, config.c)
    q = config.q if isinstance(config, VariantConfig) else None
    if q is None:
        q = q_star(T, target.m, config.c) if T >= 2 else 1
    _check_q(q, T)
    return descending_sweep(target, config, T, q, "biased")


Sweep = Callable[[Target, EstimatorConfig], EstimateReport]

SWEEPS: dict[Variant, Sweep] = {
    Variant.BINSEARCH: xor_mmap_binsearch,
    Variant.PLUS: xor_mmap_plus,
    Variant.BIASED: xor_mmap_biased,
}


def xor_mmap_variant(target: Target, config: VariantConfig) -> EstimateReport:
    """Run the sweep named by ``config.variant``."""
    return SWEEPS[config.variant](target, config)


def sweep_for(config: EstimatorConfig) -> Sweep:
    """Sweep function matching a config's type and fields."""
    if isinstance(config, VariantConfig):
        return SWEEPS[config.variant]
    return xor_mmap
