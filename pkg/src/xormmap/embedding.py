"""Lift a weighted instance to an unweighted one over (x, y) in X x {0,1}^l.

For a fixed decision vector a, each x keeps a slice of y vectors: y_i is
forced to 0 whenever w(a, x) / M <= 2^(i-1) / 2^l. The forced indices are
always the top run {j+1..l}, so x keeps the 2^j vectors whose bits above j are
zero, and (M / 2^l) * 2^j brackets w(a, x) within a factor of two (plus an
M / 2^l floor for tiny weights).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, MalformedInstanceError
from .model import (
    DEFAULT_ENUMERATION_CAP,
    LOG_ZERO,
    MaxWeight,
    MmapInstance,
    max_weight,
)

LN2 = math.log(2.0)

# Relative slack on the forcing comparison; equality forces y_i = 0
FORCING_TOLERANCE = 1e-12


def free_bits(log_w: float, log_m: float, l: int) -> int:
    """Number j of leading embedding bits left free for weight w.

    Args:
        log_w: ln w(a, x), LOG_ZERO for zero
        log_m: ln M, the exact maximum weight
        l: Embedding bit count

    Raises:
        InvalidParameterError: If M is zero or w exceeds M
    """
    if log_m == LOG_ZERO:
        raise InvalidParameterError("Cannot quantize against a zero maximum weight")
    if log_w == LOG_ZERO:
        return 0
    ratio = log_w - log_m
    if ratio > FORCING_TOLERANCE * max(1.0, abs(log_m)):
        raise InvalidParameterError(f"Weight e^{log_w} exceeds the maximum e^{log_m}")
    free = 0
    for i in range(1, l + 1):
        bound = (i - 1 - l) * LN2
        if ratio > bound + FORCING_TOLERANCE * max(1.0, abs(bound)):
            free += 1
    return free


def forced_set(log_w: float, log_m: float, l: int) -> tuple[int, ...]:
    """1-based indices i whose y_i is forced to 0; always {j+1..l}."""
    return tuple(range(free_bits(log_w, log_m, l) + 1, l + 1))


def slice_size(log_w: float, log_m: float, l: int) -> int:
    """|S_a(w, l, x)| = 2^(l - |forced|)."""
    return 1 << free_bits(log_w, log_m, l)


@dataclass(frozen=True)
class EmbeddedInstance:
    """Unweighted image of a weighted instance over n + l marginal bits.

    Marginal coordinate j < n is x_j; coordinate n + i - 1 is y_i.
    """

    base: MmapInstance
    l: int
    maximum: MaxWeight

    def __post_init__(self) -> None:
        if self.l < 1:
            raise InvalidParameterError(f"Embedding needs l >= 1, got {self.l}")

    @property
    def log_m(self) -> float:
        return self.maximum.log_value

    @property
    def empty(self) -> bool:
        """True when every weight is zero (M = 0, so OPT = 0)."""
        return self.maximum.is_zero

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def base_n(self) -> int:
        return self.base.n

    @property
    def n(self) -> int:
        return self.base.n + self.l

    def free_table(self, a: tuple[int, ...], cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
        """Free-bit count j(x) for every x, indexed by the integer value of x."""
        table = self.base.log_weight_table(a, cap)
        return np.asarray(
            [free_bits(float(log_w), self.log_m, self.l) for log_w in table], dtype=np.int64
        )

    def indicator(self, a: tuple[int, ...], x: tuple[int, ...], y: tuple[int, ...]) -> int:
        """w'_l(a, x, y): 1 iff every forced y bit is zero."""
        if len(y) != self.l:
            raise MalformedInstanceError(f"Expected {self.l} embedding bits, got {len(y)}")
        code = sum(bit << j for j, bit in enumerate(x))
        free = int(self.free_table(a)[code])
        return int(not any(y[free:]))

    def slice_total(self, a: tuple[int, ...], cap: int = DEFAULT_ENUMERATION_CAP) -> int:
        """Sum over (x, y) of w'_l(a, x, y), equal to the sum of slice sizes."""
        return int(sum(1 << int(j) for j in self.free_table(a, cap)))


def embed(
    inst: MmapInstance, l: Optional[int] = None, cap: int = DEFAULT_ENUMERATION_CAP
) -> EmbeddedInstance:
    """Embed ``inst`` with ``l`` extra bits (default n) against its exact M."""
    bits = inst.n if l is None else l
    return EmbeddedInstance(base=inst, l=bits, maximum=max_weight(inst, cap))
