"""GF(2) linear algebra over bit-packed rows.

A row is a Python int whose bit j is the coefficient of coordinate j, so a row
operation is a single XOR and an inner product is a popcount of an AND.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError


def parity(word: int) -> int:
    """Parity (popcount mod 2) of a packed word."""
    return bin(word).count("1") & 1


def pack_bits(bits: Sequence[int]) -> int:
    """Pack a bit vector into an int, bit j = bits[j]."""
    word = 0
    for j, bit in enumerate(bits):
        if bit:
            word |= 1 << j
    return word


def unpack_bits(word: int, width: int) -> tuple[int, ...]:
    return tuple((word >> j) & 1 for j in range(width))


@dataclass(frozen=True)
class ParitySystem:
    """The hash h(x) = Ax + b mod 2 as k packed rows over d coordinates.

    A vector is in the bucket h(x) = 0 iff every row satisfies
    <A_i, x> xor b_i = 0. A system with k = 0 accepts every vector.
    """

    d: int
    rows: tuple[int, ...] = ()
    rhs: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InvalidParameterError(f"Parity dimension must be >= 1, got {self.d}")
        if len(self.rows) != len(self.rhs):
            raise InvalidParameterError(
                f"Parity system has {len(self.rows)} rows but {len(self.rhs)} rhs bits"
            )
        limit = 1 << self.d
        for row, bit in zip(self.rows, self.rhs):
            if not 0 <= row < limit:
                raise InvalidParameterError(f"Parity row {row:#x} has bits beyond d={self.d}")
            if bit not in (0, 1):
                raise InvalidParameterError(f"Parity rhs must be 0 or 1, got {bit}")

    @property
    def k(self) -> int:
        return len(self.rows)

    @classmethod
    def from_matrix(
        cls, matrix: Sequence[Sequence[int]], rhs: Sequence[int], d: int
    ) -> "ParitySystem":
        """Build from a k x d 0/1 matrix and k-bit vector."""
        return cls(
            d=d,
            rows=tuple(pack_bits([int(v) & 1 for v in row]) for row in matrix),
            rhs=tuple(int(v) & 1 for v in rhs),
        )

    def matrix(self) -> np.ndarray:
        """Dense k x d uint8 copy of A."""
        dense = np.zeros((self.k, self.d), dtype=np.uint8)
        for i, row in enumerate(self.rows):
            dense[i] = unpack_bits(row, self.d)
        return dense

    def vector(self) -> np.ndarray:
        """Dense copy of b."""
        return np.asarray(self.rhs, dtype=np.uint8)

    def hash_value(self, v: Sequence[int]) -> tuple[int, ...]:
        """h(v) = Av + b mod 2."""
        word = self._packed(v)
        return tuple(parity(row & word) ^ bit for row, bit in zip(self.rows, self.rhs))

    def _packed(self, v: Sequence[int]) -> int:
        if len(v) != self.d:
            raise InvalidParameterError(f"Vector length {len(v)} does not match d={self.d}")
        return pack_bits(v)


def sample_parity(d: int, k: int, rng: np.random.Generator) -> ParitySystem:
    """Draw A and b with every bit an independent fair coin.

    k may exceed d; such systems are usually inconsistent.
    """
    if k < 0:
        raise InvalidParameterError(f"Number of parity rows must be >= 0, got {k}")
    matrix = rng.integers(0, 2, size=(k, d), dtype=np.uint8)
    rhs = rng.integers(0, 2, size=k, dtype=np.uint8)
    return ParitySystem.from_matrix(matrix.tolist(), rhs.tolist(), d)


def satisfied(ps: ParitySystem, v: Sequence[int]) -> bool:
    """True iff Av + b = 0 mod 2."""
    word = ps._packed(v)
    return all(parity(row & word) == bit for row, bit in zip(ps.rows, ps.rhs))


@dataclass(frozen=True)
class EchelonForm:
    """Reduced row echelon form of a parity system.

    ``rows``/``rhs`` hold the non-zero reduced rows in pivot order, each pivot
    column appearing in exactly one row. An inconsistent system also keeps a
    final empty row with rhs 1.
    """

    d: int
    rows: tuple[int, ...]
    rhs: tuple[int, ...]
    pivots: tuple[int, ...]
    occurrences: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        counts = [0] * self.d
        for row in self.rows:
            for j in range(self.d):
                if row >> j & 1:
                    counts[j] += 1
        object.__setattr__(self, "occurrences", tuple(counts))

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def consistent(self) -> bool:
        return not (self.rows and self.rows[-1] == 0)

    def solution_count(self) -> int:
        """Number of solutions: 2^(d - rank) when consistent, else 0."""
        return 1 << (self.d - self.rank) if self.consistent else 0

    def as_system(self) -> ParitySystem:
        return ParitySystem(d=self.d, rows=self.rows, rhs=self.rhs)


def eliminate(ps: ParitySystem) -> EchelonForm:
    """Gauss-Jordan elimination mod 2; preserves the solution set."""
    rows = list(ps.rows)
    rhs = list(ps.rhs)
    pivots = []
    rank = 0
    for col in range(ps.d):
        bit = 1 << col
        pivot = next((i for i in range(rank, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        rhs[rank], rhs[pivot] = rhs[pivot], rhs[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & bit:
                rows[i] ^= rows[rank]
                rhs[i] ^= rhs[rank]
        pivots.append(col)
        rank += 1

    # Rows past the rank are empty; any with rhs 1 is 0 = 1
    reduced_rows = rows[:rank]
    reduced_rhs = rhs[:rank]
    if any(rhs[rank:]):
        reduced_rows.append(0)
        reduced_rhs.append(1)
    return EchelonForm(
        d=ps.d, rows=tuple(reduced_rows), rhs=tuple(reduced_rhs), pivots=tuple(pivots)
    )


def _fixing_masks(d: int, fixed: Mapping[int, int]) -> tuple[int, int]:
    mask = 0
    values = 0
    for coord, value in fixed.items():
        if not 0 <= coord < d:
            raise InvalidParameterError(f"Fixed coordinate {coord} out of range for d={d}")
        mask |= 1 << coord
        if value:
            values |= 1 << coord
    return mask, values


def solve_under_fixing(
    ps: ParitySystem, fixed: Mapping[int, int]
) -> tuple[bool, Optional[tuple[int, ...]]]:
    """Decide whether some completion of ``fixed`` satisfies ``ps``.

    Args:
        ps: Parity system over d coordinates
        fixed: Coordinate -> bit for the pre-assigned coordinates

    Returns:
        (exists, witness); the witness sets free non-pivot coordinates to 0
    """
    mask, values = _fixing_masks(ps.d, fixed)
    free_mask = ~mask
    reduced = ParitySystem(
        d=ps.d,
        rows=tuple(row & free_mask for row in ps.rows),
        rhs=tuple(bit ^ parity(row & values) for row, bit in zip(ps.rows, ps.rhs)),
    )
    ef = eliminate(reduced)
    if not ef.consistent:
        return False, None
    word = values
    for pivot, bit in zip(ef.pivots, ef.rhs):
        if bit:
            word |= 1 << pivot
    return True, unpack_bits(word, ps.d)


@dataclass(frozen=True)
class PropagationResult:
    """Values forced by a partial assignment, or a conflict."""

    implied: Mapping[int, int]
    conflict: bool


def propagate_masks(ef: EchelonForm, assigned: int, values: int) -> Optional[dict[int, int]]:
    """One propagation pass over packed masks; None signals a conflict."""
    if not ef.consistent:
        return None
    implied: dict[int, int] = {}
    for row, bit in zip(ef.rows, ef.rhs):
        free = row & ~assigned
        acc = bit ^ parity(row & values)
        if free == 0:
            if acc:
                return None
        elif free & (free - 1) == 0:
            col = free.bit_length() - 1
            if implied.setdefault(col, acc) != acc:
                return None
    return implied


def propagate(ef: EchelonForm, partial: Mapping[int, int]) -> PropagationResult:
    """XOR unit propagation: rows reduced to one unassigned coordinate force it.

    Args:
        ef: Echelon form to propagate through
        partial: Coordinate -> bit for the assigned coordinates

    Returns:
        Implied coordinates (excluding those already in ``partial``), or a
        conflict when some row reduces to 0 = 1
    """
    assigned, values = _fixing_masks(ef.d, partial)
    implied = propagate_masks(ef, assigned, values)
    if implied is None:
        return PropagationResult(implied={}, conflict=True)
    return PropagationResult(implied=implied, conflict=False)
