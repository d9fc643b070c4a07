"""Weighted Marginal MAP through the unweighted embedding.

The weighted instance is lifted to an indicator over n + l marginal bits
(see :mod:`xormmap.embedding`), any k-sweep estimates the lifted optimum as
2^k_hat, and the estimate is scaled back by M / 2^l. With l = n the lift
costs at most a factor of 3, so the weighted optimum lies in
[E / (6 * 2^c), E * 2^(c+1)] whenever the sweep's own guarantee holds.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .embedding import EmbeddedInstance, embed, forced_set, free_bits, slice_size
from .estimator import LN2, EstimateReport, EstimatorConfig, Target, xor_mmap
from .model import LOG_ZERO, MaxWeight, MmapInstance

LN10 = math.log(10.0)

# Lift cost (factor 3) times the half-open bracket of the optimum (factor 2)
LIFT_SLACK = math.log(6.0)

__all__ = [
    "EmbeddedInstance",
    "WeightedEstimateReport",
    "embed",
    "forced_set",
    "free_bits",
    "slice_size",
    "weighted_mmap",
]


def _log10(value: float) -> float:
    return LOG_ZERO if value == LOG_ZERO else value / LN10


@dataclass(frozen=True)
class WeightedEstimateReport:
    """Estimate of a weighted optimum, in natural-log space.

    Attributes:
        maximum: Exact maximum weight M and how it was found
        l: Embedding bits
        log_estimate: ln E, with E = 2^k_hat * M / 2^l
        log_lower: ln of the lower bound on the optimum, E / (6 * 2^c) on a
            complete run
        log_upper: ln of the upper bound on the optimum, E * 2^(c+1) on a
            complete run
        inner: Report of the sweep on the embedded instance (None when M = 0)
    """

    maximum: MaxWeight
    l: int
    log_estimate: float
    log_lower: float
    log_upper: float
    inner: Optional[EstimateReport]

    @property
    def estimate_log10(self) -> float:
        return _log10(self.log_estimate)

    @property
    def lower_log10(self) -> float:
        return _log10(self.log_lower)

    @property
    def upper_log10(self) -> float:
        return _log10(self.log_upper)

    @property
    def decision(self) -> Optional[tuple[int, ...]]:
        return None if self.inner is None else self.inner.decision

    @property
    def degraded(self) -> bool:
        return self.inner is not None and self.inner.degraded


def weighted_mmap(
    inst: MmapInstance,
    config: EstimatorConfig = EstimatorConfig(),
    l: Optional[int] = None,
    sweep: Callable[[Target, EstimatorConfig], EstimateReport] = xor_mmap,
) -> WeightedEstimateReport:
    """Estimate max over a of the sum over x of w(a, x) for real weights.

    The upper bound carries one bit more slack than the sweep's k_hat + c:
    the sweep only places the lifted optimum below 2^(k_hat + c + 1), and the
    weighted optimum is at most M / 2^l times the lifted one.

    Args:
        inst: Weighted instance (Ising, or CNF read as 0/1 weights)
        config: Sweep parameters; T is derived over n + l marginal bits
        l: Embedding bits (default n)
        sweep: Any k-sweep taking (target, config)

    Returns:
        WeightedEstimateReport; an all-zero instance reports ln 0 everywhere

    Raises:
        EnumerationBudgetError: If computing M or a slice table exceeds the cap
    """
    emb = embed(inst, l, config.cap)
    if emb.empty:
        return WeightedEstimateReport(
            maximum=emb.maximum,
            l=emb.l,
            log_estimate=LOG_ZERO,
            log_lower=LOG_ZERO,
            log_upper=LOG_ZERO,
            inner=None,
        )

    report = sweep(emb, config)
    scale = emb.log_m - emb.l * LN2
    return WeightedEstimateReport(
        maximum=emb.maximum,
        l=emb.l,
        log_estimate=report.k_hat * LN2 + scale,
        log_lower=report.lower * LN2 + scale - LIFT_SLACK,
        log_upper=(report.upper + 1) * LN2 + scale,
        inner=report,
    )
