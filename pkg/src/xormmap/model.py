"""Marginal MAP instances: variable spaces, CNF indicators and grid Ising weights.

All weights are carried in natural-log space. A zero weight is represented by
``LOG_ZERO`` (negative infinity), so products become sums and no grid is large
enough to underflow.

Spin convention for Ising grids: bit ``b`` maps to spin ``s = 2*b - 1``.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import EnumerationBudgetError, MalformedInstanceError

# Log-weight of a zero weight
LOG_ZERO = float("-inf")

# Largest number of bits any exhaustive enumeration may range over
DEFAULT_ENUMERATION_CAP = 22


def bits_from_int(value: int, width: int) -> tuple[int, ...]:
    """Unpack an integer into ``width`` bits, bit j = (value >> j) & 1."""
    return tuple((value >> j) & 1 for j in range(width))


def int_from_bits(bits: tuple[int, ...]) -> int:
    """Pack bits (bit j weighted 2^j) into an integer."""
    value = 0
    for j, bit in enumerate(bits):
        if bit:
            value |= 1 << j
    return value


def enumerate_bits(width: int) -> np.ndarray:
    """All 2^width bit vectors as rows; row i holds the bits of integer i."""
    codes = np.arange(1 << width, dtype=np.int64)
    shifts = np.arange(width, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def log_total(log_values: np.ndarray) -> float:
    """ln of the sum of exp(log_values); LOG_ZERO when every term is zero."""
    if log_values.size == 0 or np.all(log_values == LOG_ZERO):
        return LOG_ZERO
    return float(logsumexp(log_values))


def check_enumeration(bits: int, cap: int) -> None:
    """Raise EnumerationBudgetError when 2^bits exceeds the cap."""
    if bits > cap:
        raise EnumerationBudgetError(bits, cap)


@dataclass(frozen=True)
class VarSpace:
    """Partition of variables 0..num_vars-1 into decision (max) and marginal (sum) sets.

    Decision bit j of an Assignment refers to variable ``decision[j]``; marginal
    bit j refers to ``marginal[j]``.
    """

    decision: tuple[int, ...]
    marginal: tuple[int, ...]
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if not self.marginal:
            raise MalformedInstanceError("A variable space needs at least one marginal variable")
        seen = set(self.decision) | set(self.marginal)
        if len(seen) != len(self.decision) + len(self.marginal):
            raise MalformedInstanceError("Decision and marginal variable sets overlap")
        if seen != set(range(len(seen))):
            raise MalformedInstanceError(
                f"Decision and marginal sets must cover variables 0..{len(seen) - 1} exactly"
            )
        if self.labels is not None and len(self.labels) != len(seen):
            raise MalformedInstanceError(
                f"Expected {len(seen)} variable labels, got {len(self.labels)}"
            )

    @classmethod
    def from_decision(cls, num_vars: int, decision: tuple[int, ...]) -> "VarSpace":
        """Build a space whose marginal set is every variable not in ``decision``."""
        chosen = set(decision)
        for var in decision:
            if not 0 <= var < num_vars:
                raise MalformedInstanceError(
                    f"Decision variable {var} out of range for {num_vars} variables"
                )
        marginal = tuple(v for v in range(num_vars) if v not in chosen)
        return cls(decision=tuple(sorted(chosen)), marginal=marginal)

    @property
    def m(self) -> int:
        return len(self.decision)

    @property
    def n(self) -> int:
        return len(self.marginal)

    @property
    def num_vars(self) -> int:
        return self.m + self.n

    def full_vector(self, asg: "Assignment") -> list[int]:
        """Scatter an Assignment into a bit list indexed by variable id."""
        if len(asg.decision) != self.m or len(asg.marginal) != self.n:
            raise MalformedInstanceError(
                f"Assignment shape ({len(asg.decision)}, {len(asg.marginal)}) does not match "
                f"variable space ({self.m}, {self.n})"
            )
        bits = [0] * self.num_vars
        for var, bit in zip(self.decision, asg.decision):
            bits[var] = bit
        for var, bit in zip(self.marginal, asg.marginal):
            bits[var] = bit
        return bits


@dataclass(frozen=True)
class Assignment:
    """Decision bits ``a`` and marginal bits ``x``."""

    decision: tuple[int, ...]
    marginal: tuple[int, ...]


@dataclass(frozen=True)
class CnfFormula:
    """Clauses over a variable space, literals in DIMACS convention.

    Literal ``+(v+1)`` is variable v true, ``-(v+1)`` is variable v false.
    Tautological clauses are dropped at construction.
    """

    space: VarSpace
    clauses: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        kept = []
        for index, clause in enumerate(self.clauses):
            if not clause:
                raise MalformedInstanceError(f"Clause {index} is empty")
            for lit in clause:
                if lit == 0 or abs(lit) > self.space.num_vars:
                    raise MalformedInstanceError(
                        f"Clause {index} references variable {abs(lit)} "
                        f"outside 1..{self.space.num_vars}"
                    )
            literals = set(clause)
            if any(-lit in literals for lit in literals):
                continue
            kept.append(tuple(clause))
        object.__setattr__(self, "clauses", tuple(kept))


@dataclass(frozen=True)
class IsingGrid:
    """Grid Ising model with 4-neighbourhood couplings.

    Nodes are numbered row-major, node (r, c) is ``r * cols + c``; the node id
    doubles as the variable id.
    """

    rows: int
    cols: int
    unary: tuple[float, ...]
    edges: tuple[tuple[int, int, float], ...]
    decision: tuple[int, ...]
    space: VarSpace = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise MalformedInstanceError(f"Grid shape {self.rows}x{self.cols} is empty")
        size = self.rows * self.cols
        if len(self.unary) != size:
            raise MalformedInstanceError(
                f"Expected {size} unary potentials, got {len(self.unary)}"
            )
        seen_edges = set()
        for u, v, _ in self.edges:
            if not (0 <= u < size and 0 <= v < size):
                raise MalformedInstanceError(f"Edge ({u}, {v}) references a node off the grid")
            if not self._adjacent(u, v):
                raise MalformedInstanceError(f"Edge ({u}, {v}) is not a 4-neighbourhood edge")
            key = (min(u, v), max(u, v))
            if key in seen_edges:
                raise MalformedInstanceError(f"Edge {key} listed twice")
            seen_edges.add(key)
        if len(set(self.decision)) != len(self.decision):
            raise MalformedInstanceError("A node is designated as a decision variable twice")
        object.__setattr__(self, "space", VarSpace.from_decision(size, self.decision))

    def _adjacent(self, u: int, v: int) -> bool:
        ru, cu = divmod(u, self.cols)
        rv, cv = divmod(v, self.cols)
        return abs(ru - rv) + abs(cu - cv) == 1

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def node(self, row: int, col: int) -> int:
        return row * self.cols + col

    def log_weights(self, bits: np.ndarray) -> np.ndarray:
        """Log-weights of a batch of full assignments (rows indexed by variable id)."""
        spins = 2.0 * bits.astype(np.float64) - 1.0
        energy = spins @ np.asarray(self.unary, dtype=np.float64)
        for u, v, theta in self.edges:
            energy = energy + theta * spins[:, u] * spins[:, v]
        return np.asarray(energy, dtype=np.float64)


class WeightKind(str, Enum):
    """How an instance defines w(a, x)."""

    CNF = "cnf"
    ISING = "ising"


@dataclass(frozen=True)
class MmapInstance:
    """A Marginal MAP problem: max over a of the sum over x of w(a, x)."""

    kind: WeightKind
    formula: Optional[CnfFormula] = None
    grid: Optional[IsingGrid] = None

    def __post_init__(self) -> None:
        if self.kind is WeightKind.CNF and (self.formula is None or self.grid is not None):
            raise MalformedInstanceError("CNF instances carry a formula and no grid")
        if self.kind is WeightKind.ISING and (self.grid is None or self.formula is not None):
            raise MalformedInstanceError("Ising instances carry a grid and no formula")

    @classmethod
    def from_cnf(cls, formula: CnfFormula) -> "MmapInstance":
        return cls(kind=WeightKind.CNF, formula=formula)

    @classmethod
    def from_ising(cls, grid: IsingGrid) -> "MmapInstance":
        return cls(kind=WeightKind.ISING, grid=grid)

    @property
    def space(self) -> VarSpace:
        if self.formula is not None:
            return self.formula.space
        assert self.grid is not None
        return self.grid.space

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def n(self) -> int:
        return self.space.n

    def full_assignments(self, a: tuple[int, ...], marginal_rows: np.ndarray) -> np.ndarray:
        """Embed rows of marginal bits under a fixed decision vector into full assignments."""
        space = self.space
        full = np.zeros((marginal_rows.shape[0], space.num_vars), dtype=np.uint8)
        for var, bit in zip(space.decision, a):
            full[:, var] = bit
        full[:, list(space.marginal)] = marginal_rows
        return full

    def log_weights(self, full: np.ndarray) -> np.ndarray:
        """Log-weights of a batch of full assignments."""
        if self.grid is not None:
            return self.grid.log_weights(full)
        assert self.formula is not None
        return np.where(cnf_satisfied(self.formula, full), 0.0, LOG_ZERO)

    def log_weight_table(
        self, a: tuple[int, ...], cap: int = DEFAULT_ENUMERATION_CAP
    ) -> np.ndarray:
        """Log-weights w(a, x) for every x, indexed by the integer value of x."""
        check_enumeration(self.n, cap)
        return self.log_weights(self.full_assignments(a, enumerate_bits(self.n)))


def cnf_satisfied(formula: CnfFormula, full: np.ndarray) -> np.ndarray:
    """Boolean mask of rows of ``full`` that satisfy every clause."""
    ok = np.ones(full.shape[0], dtype=bool)
    for clause in formula.clauses:
        hit = np.zeros(full.shape[0], dtype=bool)
        for lit in clause:
            column = full[:, abs(lit) - 1]
            hit |= (column == 1) if lit > 0 else (column == 0)
        ok &= hit
    return ok


def evaluate_indicator(formula: CnfFormula, asg: Assignment) -> int:
    """Return 1 iff every clause has a satisfied literal under ``asg``."""
    bits = formula.space.full_vector(asg)
    for clause in formula.clauses:
        if not any(bits[abs(lit) - 1] == (1 if lit > 0 else 0) for lit in clause):
            return 0
    return 1


def evaluate_weight(inst: MmapInstance, asg: Assignment) -> float:
    """Log-weight of ``asg``: 0.0 or LOG_ZERO for CNF, the energy for Ising."""
    if inst.formula is not None:
        return 0.0 if evaluate_indicator(inst.formula, asg) else LOG_ZERO
    assert inst.grid is not None
    bits = np.asarray([inst.space.full_vector(asg)], dtype=np.uint8)
    return float(inst.grid.log_weights(bits)[0])


@dataclass(frozen=True)
class MaxWeight:
    """Exact maximum weight M and the path used to find it.

    Attributes:
        log_value: ln M (LOG_ZERO when every weight is zero)
        method: "attainable-bound" when the sum of |theta| is reachable,
            otherwise "enumeration"
    """

    log_value: float
    method: str

    @property
    def is_zero(self) -> bool:
        return self.log_value == LOG_ZERO


def _bound_attainable(grid: IsingGrid) -> bool:
    """True iff some spin vector makes every unary and pairwise term non-negative."""
    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(grid.size)]
    for u, v, theta in grid.edges:
        if theta != 0.0:
            sign = 1 if theta > 0 else -1
            adjacency[u].append((v, sign))
            adjacency[v].append((u, sign))

    # Relative spin of each node within its component, then one global flip per component
    relative = [0] * grid.size
    for root in range(grid.size):
        if relative[root]:
            continue
        relative[root] = 1
        component = [root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, sign in adjacency[u]:
                want = relative[u] * sign
                if relative[v] == 0:
                    relative[v] = want
                    component.append(v)
                    queue.append(v)
                elif relative[v] != want:
                    return False
        flip = 0
        for u in component:
            theta = grid.unary[u]
            if theta == 0.0:
                continue
            needed = (1 if theta > 0 else -1) * relative[u]
            if flip == 0:
                flip = needed
            elif flip != needed:
                return False
    return True


def max_weight(inst: MmapInstance, cap: int = DEFAULT_ENUMERATION_CAP) -> MaxWeight:
    """Exact M = max over (a, x) of w(a, x).

    Ising grids first try the closed form exp(sum |theta|), which is exact when a
    spin vector aligns with every term; otherwise both kinds enumerate.

    Raises:
        EnumerationBudgetError: If enumeration is needed and m + n exceeds ``cap``
    """
    if inst.grid is not None and _bound_attainable(inst.grid):
        grid = inst.grid
        bound = sum(abs(t) for t in grid.unary) + sum(abs(t) for _, _, t in grid.edges)
        return MaxWeight(log_value=float(bound), method="attainable-bound")

    check_enumeration(inst.m + inst.n, cap)
    best = LOG_ZERO
    for code in range(1 << inst.m):
        table = inst.log_weight_table(bits_from_int(code, inst.m), cap)
        best = max(best, float(table.max()))
        if inst.kind is WeightKind.CNF and best == 0.0:
            break
    return MaxWeight(log_value=best, method="enumeration")
