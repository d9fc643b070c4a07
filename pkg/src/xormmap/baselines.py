"""Reference methods: sample average approximation, exact enumeration, scoring."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .model import (
    DEFAULT_ENUMERATION_CAP,
    LOG_ZERO,
    MmapInstance,
    bits_from_int,
    check_enumeration,
    enumerate_bits,
    int_from_bits,
    log_total,
)
from .oracle import WeightedCount, count_exact
from .seeding import RESTARTS, SAMPLES, derive_rng

DEFAULT_SAA_SAMPLES = 10_000
DEFAULT_SAA_SAMPLES_WEIGHTED = 1_000
DEFAULT_LOCAL_SEARCH_RESTARTS = 8

# Largest decision width SAA maximizes by enumeration before switching to local search
DEFAULT_SAA_ENUMERATION_CAP = 12


@dataclass(frozen=True)
class SaaResult:
    """Decision picked by SAA.

    Attributes:
        decision: Best decision vector on the sample set
        log_objective: ln of the SAA estimate (2^n / N) * sum_j w(a, x_j)
        samples: Sample count N
        method: "enumeration" or "local-search"
    """

    decision: tuple[int, ...]
    log_objective: float
    samples: int
    method: str


@dataclass(frozen=True)
class ExactResult:
    """Exact optimum and a decision attaining it (lowest binary value on ties)."""

    decision: tuple[int, ...]
    count: WeightedCount


def sample_marginals(n: int, samples: int, seed: int) -> np.ndarray:
    """``samples`` x n uniform marginal bit vectors from the seed's sample stream."""
    if samples < 1:
        raise InvalidParameterError(f"samples must be >= 1, got {samples}")
    rng = derive_rng(seed, SAMPLES)
    return rng.integers(0, 2, size=(samples, n), dtype=np.uint8)


def saa_log_objective(inst: MmapInstance, a: tuple[int, ...], xs: np.ndarray) -> float:
    """ln of (2^n / N) * sum_j w(a, x_j); unbiased for sum_x w(a, x) under uniform x."""
    total = log_total(inst.log_weights(inst.full_assignments(a, xs)))
    if total == LOG_ZERO:
        return LOG_ZERO
    return total + inst.n * math.log(2.0) - math.log(xs.shape[0])


Scored = tuple[float, tuple[int, ...]]


def _better(score: float, a: tuple[int, ...], best: Optional[Scored]) -> bool:
    if best is None:
        return True
    best_score, best_a = best
    if score != best_score:
        return score > best_score
    return int_from_bits(a) < int_from_bits(best_a)


def _local_search(
    inst: MmapInstance, xs: np.ndarray, seed: int, restarts: int
) -> tuple[tuple[int, ...], float]:
    """Best-improvement single bit flips from ``restarts`` random starts."""
    best: Optional[Scored] = None
    for restart in range(restarts):
        rng = derive_rng(seed, RESTARTS, restart)
        current = tuple(int(bit) for bit in rng.integers(0, 2, size=inst.m))
        score = saa_log_objective(inst, current, xs)
        while True:
            step: Optional[Scored] = None
            for j in range(inst.m):
                flipped = current[:j] + (1 - current[j],) + current[j + 1 :]
                flipped_score = saa_log_objective(inst, flipped, xs)
                if flipped_score > score and _better(flipped_score, flipped, step):
                    step = (flipped_score, flipped)
            if step is None:
                break
            score, current = step
        if _better(score, current, best):
            best = (score, current)
    assert best is not None
    return best[1], best[0]


def saa_solve(
    inst: MmapInstance,
    samples: int = DEFAULT_SAA_SAMPLES,
    seed: int = 0,
    exhaustive: bool = False,
    cap: int = DEFAULT_SAA_ENUMERATION_CAP,
    local_search: bool = True,
    restarts: int = DEFAULT_LOCAL_SEARCH_RESTARTS,
) -> SaaResult:
    """Maximize the sample average of w(a, x) over a.

    Draws x_1..x_N uniformly (for Ising weights this is importance sampling
    with a uniform proposal). With ``exhaustive`` the sample set is every x
    exactly once, which makes SAA exact.

    Args:
        inst: Instance
        samples: Sample count N (ignored when ``exhaustive``)
        seed: Master seed for samples and restarts
        exhaustive: Use all 2^n marginal vectors as the sample set
        cap: Largest m maximized by enumeration
        local_search: Fall back to local search when m exceeds ``cap``
        restarts: Local-search restarts

    Raises:
        EnumerationBudgetError: If m exceeds ``cap`` and local search is off,
            or ``exhaustive`` is set and n exceeds the global cap
    """
    if exhaustive:
        check_enumeration(inst.n, DEFAULT_ENUMERATION_CAP)
        xs = enumerate_bits(inst.n)
    else:
        xs = sample_marginals(inst.n, samples, seed)

    if inst.m > cap:
        if not local_search:
            check_enumeration(inst.m, cap)
        decision, score = _local_search(inst, xs, seed, restarts)
        return SaaResult(decision, score, xs.shape[0], "local-search")

    best: Optional[Scored] = None
    for code in range(1 << inst.m):
        a = bits_from_int(code, inst.m)
        score = saa_log_objective(inst, a, xs)
        if best is None or score > best[0]:
            best = (score, a)
    assert best is not None
    return SaaResult(best[1], best[0], xs.shape[0], "enumeration")


def exact_mmap(inst: MmapInstance, cap: int = DEFAULT_ENUMERATION_CAP) -> ExactResult:
    """Exact optimum by enumerating every (a, x).

    Raises:
        EnumerationBudgetError: If m + n exceeds ``cap``
    """
    check_enumeration(inst.m + inst.n, cap)
    best: Optional[ExactResult] = None
    for code in range(1 << inst.m):
        a = bits_from_int(code, inst.m)
        count = count_exact(inst, a, cap)
        if best is None or count.log_value > best.count.log_value:
            best = ExactResult(decision=a, count=count)
    assert best is not None
    return best


def score_solution(
    inst: MmapInstance, a: tuple[int, ...], cap: int = DEFAULT_ENUMERATION_CAP
) -> float:
    """log10 of the exact sum over x of w(a, x); LOG_ZERO when it is zero."""
    return count_exact(inst, a, cap).log10
