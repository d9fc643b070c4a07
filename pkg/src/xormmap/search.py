"""DPLL search with clause and XOR propagation and a cardinality objective.

One engine serves both oracle queries:

- feasibility: no reward variables, stop at the first model;
- replicated optimization: maximize the number of true reward variables
  (the y_i), pruning any branch whose satisfied plus undecided reward count
  cannot beat the incumbent.

Parity blocks may carry a guard variable. A guarded block is enforced only
once its guard is true; while the guard is undecided a conflicting block
forces the guard false, and once the guard is false the block's variables
are never branched on.
"""

import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .gf2 import EchelonForm, propagate_masks

UNASSIGNED = -1


class OracleStatus(str, Enum):
    """How an oracle call ended."""

    OPTIMAL = "optimal"
    THRESHOLD_REACHED = "threshold-reached"
    BUDGET_EXCEEDED = "budget-exceeded"


@dataclass(frozen=True)
class Budget:
    """Per-call limits; None means unlimited.

    Attributes:
        node_cap: Maximum search nodes (deterministic)
        time_limit: Maximum wall time in seconds
    """

    node_cap: Optional[int] = None
    time_limit: Optional[float] = None


@dataclass(frozen=True)
class XorBlock:
    """A parity system whose column j is search variable ``variables[j]``."""

    variables: tuple[int, ...]
    echelon: EchelonForm
    guard: Optional[int] = None


@dataclass(frozen=True)
class SearchOutcome:
    """Result of one search.

    Attributes:
        status: OPTIMAL when the search finished (or proved the maximum),
            THRESHOLD_REACHED when it stopped at ``stop_at``, BUDGET_EXCEEDED
            when a cap tripped
        objective: Reward count of the best model, None if no model was found
        assignment: Best model (irrelevant variables reported as 0)
        nodes: Search nodes visited
    """

    status: OracleStatus
    objective: Optional[int]
    assignment: Optional[tuple[int, ...]]
    nodes: int

    @property
    def found(self) -> bool:
        return self.assignment is not None


class _Stop(Exception):
    pass


class _BudgetTrip(Exception):
    pass


class XorDpll:
    """Branch-and-bound DPLL over CNF clauses and guarded parity blocks.

    Args:
        num_vars: Number of search variables (ids 0..num_vars-1)
        clauses: Clauses in DIMACS literal convention (+(v+1) / -(v+1))
        blocks: Parity blocks
        order: Static branching order; variables not listed are never branched
        reward: Variables whose true count is maximized (empty = feasibility)
        budget: Node and time caps
    """

    def __init__(
        self,
        num_vars: int,
        clauses: Sequence[Sequence[int]],
        blocks: Sequence[XorBlock] = (),
        order: Optional[Sequence[int]] = None,
        reward: Sequence[int] = (),
        budget: Budget = Budget(),
    ) -> None:
        self.num_vars = num_vars
        self.clauses = [tuple(clause) for clause in clauses]
        self.blocks = list(blocks)
        self.order = list(range(num_vars)) if order is None else list(order)
        self.reward = tuple(reward)
        self.budget = budget

        self._reward_set = frozenset(self.reward)
        self._gate: dict[int, int] = {}
        for block in self.blocks:
            if block.guard is not None:
                for var in block.variables:
                    self._gate[var] = block.guard

        self._values = [UNASSIGNED] * num_vars
        self._trail: list[int] = []
        self._best = -1
        self._best_model: Optional[tuple[int, ...]] = None
        self._stop_at: Optional[int] = None
        self._deadline: Optional[float] = None
        self.nodes = 0

    def solve(
        self, assumptions: Optional[Mapping[int, int]] = None, stop_at: Optional[int] = None
    ) -> SearchOutcome:
        """Run the search.

        Args:
            assumptions: Variables fixed before search starts
            stop_at: Stop as soon as a model reaches this reward count

        Returns:
            SearchOutcome with the best model found
        """
        self._values = [UNASSIGNED] * self.num_vars
        self._trail = []
        self._best = -1
        self._best_model = None
        self._stop_at = stop_at
        self.nodes = 0
        self._deadline = (
            None
            if self.budget.time_limit is None
            else time.monotonic() + self.budget.time_limit
        )

        status = OracleStatus.OPTIMAL
        conflict = False
        for var, value in (assumptions or {}).items():
            current = self._values[var]
            if current == UNASSIGNED:
                self._assign(var, value)
            elif current != value:
                conflict = True

        if not conflict:
            try:
                self._search()
            except _Stop:
                if self.reward and self._best < len(self.reward):
                    status = OracleStatus.THRESHOLD_REACHED
            except _BudgetTrip:
                status = OracleStatus.BUDGET_EXCEEDED

        return SearchOutcome(
            status=status,
            objective=self._best if self._best >= 0 else None,
            assignment=self._best_model,
            nodes=self.nodes,
        )

    def _assign(self, var: int, value: int) -> None:
        self._values[var] = value
        self._trail.append(var)

    def _undo(self, mark: int) -> None:
        values = self._values
        trail = self._trail
        while len(trail) > mark:
            values[trail.pop()] = UNASSIGNED

    def _check_budget(self) -> None:
        if self.budget.node_cap is not None and self.nodes > self.budget.node_cap:
            raise _BudgetTrip
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise _BudgetTrip

    def _propagate(self) -> bool:
        """Unit-propagate clauses and parity blocks to a fixpoint; False on conflict."""
        values = self._values
        changed = True
        while changed:
            changed = False
            for clause in self.clauses:
                open_lit = 0
                open_count = 0
                satisfied = False
                for lit in clause:
                    value = values[abs(lit) - 1]
                    if value == UNASSIGNED:
                        open_count += 1
                        open_lit = lit
                    elif value == (1 if lit > 0 else 0):
                        satisfied = True
                        break
                if satisfied:
                    continue
                if open_count == 0:
                    return False
                if open_count == 1:
                    self._assign(abs(open_lit) - 1, 1 if open_lit > 0 else 0)
                    changed = True

            for block in self.blocks:
                guard_value = 1 if block.guard is None else values[block.guard]
                if guard_value == 0:
                    continue
                assigned = 0
                bits = 0
                for col, var in enumerate(block.variables):
                    value = values[var]
                    if value != UNASSIGNED:
                        assigned |= 1 << col
                        if value:
                            bits |= 1 << col
                implied = propagate_masks(block.echelon, assigned, bits)
                if implied is None:
                    if guard_value == 1:
                        return False
                    assert block.guard is not None
                    self._assign(block.guard, 0)
                    changed = True
                    continue
                if guard_value == 1:
                    for col, bit in implied.items():
                        self._assign(block.variables[col], bit)
                        changed = True
        return True

    def _pick(self) -> Optional[int]:
        values = self._values
        for var in self.order:
            if values[var] != UNASSIGNED:
                continue
            guard = self._gate.get(var)
            if guard is not None and values[guard] == 0:
                continue
            return var
        return None

    def _record(self) -> None:
        if self.reward:
            objective = sum(1 for var in self.reward if self._values[var] == 1)
        else:
            objective = 0
        if objective > self._best:
            self._best = objective
            self._best_model = tuple(max(value, 0) for value in self._values)
        if not self.reward or self._best == len(self.reward):
            raise _Stop
        if self._stop_at is not None and self._best >= self._stop_at:
            raise _Stop

    def _search(self) -> None:
        self.nodes += 1
        self._check_budget()
        mark = len(self._trail)
        if not self._propagate():
            self._undo(mark)
            return

        if self.reward:
            won = 0
            undecided = 0
            for var in self.reward:
                value = self._values[var]
                if value == 1:
                    won += 1
                elif value == UNASSIGNED:
                    undecided += 1
            if won + undecided <= self._best:
                self._undo(mark)
                return

        var = self._pick()
        if var is None:
            self._record()
            self._undo(mark)
            return

        propagated = len(self._trail)
        first = 1 if var in self._reward_set else 0
        for value in (first, 1 - first):
            self._assign(var, value)
            self._search()
            self._undo(propagated)
        self._undo(mark)
