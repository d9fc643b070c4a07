"""Oracle queries: bucket emptiness, replicated optimization and exact counting.

Variable numbering of a replicated problem (0-based search ids; DIMACS adds 1):

- decision variables ``a_j``: ``j`` for j < m
- marginal copy ``x_j`` of replicate i: ``m + i*n + j``
- replicate indicator ``y_i``: ``m + T*n + i``
"""

import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .embedding import EmbeddedInstance
from .errors import BudgetExceededError, InvalidParameterError, MalformedInstanceError
from .gf2 import ParitySystem, eliminate, sample_parity, solve_under_fixing
from .model import (
    DEFAULT_ENUMERATION_CAP,
    LOG_ZERO,
    MaxWeight,
    MmapInstance,
    WeightKind,
    bits_from_int,
    check_enumeration,
    enumerate_bits,
    log_total,
)
from .search import Budget, OracleStatus, SearchOutcome, XorBlock, XorDpll
from .seeding import PARITY, derive_rng


class Engine(str, Enum):
    """Replicated-problem solver."""

    ENUMERATE_A = "enumerate-a"
    JOINT_DPLL = "joint-dpll"


def _require_cnf(inst: MmapInstance) -> None:
    if inst.kind is not WeightKind.CNF:
        raise MalformedInstanceError("This oracle query needs a CNF-indicator instance")


@dataclass(frozen=True)
class ReplicatedProblem:
    """T hashed copies of the marginal variables sharing one decision vector.

    Replicate i's clauses are the base clauses with marginal variables renamed
    to copy i and the literal not-y_i appended.
    """

    instance: MmapInstance
    k: int
    parity: tuple[ParitySystem, ...]

    def __post_init__(self) -> None:
        _require_cnf(self.instance)
        if not self.parity:
            raise InvalidParameterError("A replicated problem needs T >= 1 replicates")
        for ps in self.parity:
            if ps.d != self.n or ps.k != self.k:
                raise InvalidParameterError(
                    f"Replicate parity system is {ps.k}x{ps.d}, expected {self.k}x{self.n}"
                )

    @property
    def T(self) -> int:
        return len(self.parity)

    @property
    def m(self) -> int:
        return self.instance.m

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def num_vars(self) -> int:
        return self.m + self.T * self.n + self.T

    def x_var(self, replicate: int, j: int) -> int:
        return self.m + replicate * self.n + j

    def y_var(self, replicate: int) -> int:
        return self.m + self.T * self.n + replicate

    def augmented_clauses(self) -> tuple[tuple[int, ...], ...]:
        """All T renamed copies of the base clauses, each with not-y_i appended."""
        space = self.instance.space
        decision_pos = {var: j for j, var in enumerate(space.decision)}
        marginal_pos = {var: j for j, var in enumerate(space.marginal)}
        formula = self.instance.formula
        assert formula is not None

        clauses = []
        for i in range(self.T):
            for clause in formula.clauses:
                renamed = []
                for lit in clause:
                    var = abs(lit) - 1
                    if var in decision_pos:
                        new_var = decision_pos[var]
                    else:
                        new_var = self.x_var(i, marginal_pos[var])
                    renamed.append(new_var + 1 if lit > 0 else -(new_var + 1))
                renamed.append(-(self.y_var(i) + 1))
                clauses.append(tuple(renamed))
        return tuple(clauses)


@dataclass(frozen=True)
class OracleResult:
    """Outcome of one replicated solve.

    Attributes:
        objective: Best replicate count found (None if none was found)
        decision: Decision vector achieving ``objective``
        witnesses: Per-replicate marginal bits (None where y_i = 0)
        nodes: Search nodes summed over sub-searches
        wall_ms: Wall time of the call
        status: OPTIMAL (exact), THRESHOLD_REACHED (objective is a
            lower-bound certificate) or BUDGET_EXCEEDED
    """

    objective: Optional[int]
    decision: Optional[tuple[int, ...]]
    witnesses: tuple[Optional[tuple[int, ...]], ...]
    nodes: int
    wall_ms: float
    status: OracleStatus

    @property
    def exact(self) -> bool:
        return self.status is OracleStatus.OPTIMAL

    def meets(self, threshold: int) -> Optional[bool]:
        """Whether objective >= threshold; None when a budget trip left it undecided."""
        reached = self.objective is not None and self.objective >= threshold
        if self.status is OracleStatus.BUDGET_EXCEEDED and not reached:
            return None
        return reached


def build_replicated(
    inst: MmapInstance, T: int, k: int, seed: int, trial: int = 0
) -> ReplicatedProblem:
    """Sample T independent k-row parity systems over the marginal bits.

    Replicate i draws from the stream keyed (seed, "parity", k, i, trial).
    """
    _require_cnf(inst)
    if T < 1:
        raise InvalidParameterError(f"T must be >= 1, got {T}")
    if not 0 <= k <= inst.n:
        raise InvalidParameterError(f"k must be in [0, {inst.n}], got {k}")
    systems = tuple(
        sample_parity(inst.n, k, derive_rng(seed, PARITY, k, i, trial)) for i in range(T)
    )
    return ReplicatedProblem(instance=inst, k=k, parity=systems)


def _marginal_order(inst: MmapInstance, ps_occurrences: Sequence[int]) -> list[int]:
    marginal = inst.space.marginal
    ranked = sorted(range(len(marginal)), key=lambda j: (-ps_occurrences[j], marginal[j]))
    return [marginal[j] for j in ranked]


def _emptiness_solver(inst: MmapInstance, ps: ParitySystem, budget: Budget) -> XorDpll:
    formula = inst.formula
    assert formula is not None
    echelon = eliminate(ps)
    block = XorBlock(variables=inst.space.marginal, echelon=echelon)
    return XorDpll(
        num_vars=inst.space.num_vars,
        clauses=formula.clauses,
        blocks=[block],
        order=_marginal_order(inst, echelon.occurrences),
        budget=budget,
    )


def _bucket_search(
    solver: XorDpll, inst: MmapInstance, a0: Sequence[int]
) -> SearchOutcome:
    if len(a0) != inst.m:
        raise MalformedInstanceError(f"Decision vector has {len(a0)} bits, expected {inst.m}")
    return solver.solve(assumptions=dict(zip(inst.space.decision, a0)))


def solve_emptiness(
    inst: MmapInstance, a0: Sequence[int], ps: ParitySystem, budget: Budget = Budget()
) -> bool:
    """True iff W(a0, h) = {x : w(a0, x) = 1, h(x) = 0} is non-empty.

    Raises:
        BudgetExceededError: If the node or time cap trips first
    """
    _require_cnf(inst)
    if ps.d != inst.n:
        raise InvalidParameterError(f"Parity dimension {ps.d} does not match n={inst.n}")
    outcome = _bucket_search(_emptiness_solver(inst, ps, budget), inst, a0)
    if outcome.status is OracleStatus.BUDGET_EXCEEDED:
        raise BudgetExceededError(outcome.nodes, "node or time cap")
    return outcome.found


def base_satisfiable(inst: MmapInstance, budget: Budget = Budget()) -> Optional[bool]:
    """Plain satisfiability of a CNF instance; None when the budget trips."""
    _require_cnf(inst)
    formula = inst.formula
    assert formula is not None
    outcome = XorDpll(inst.space.num_vars, formula.clauses, budget=budget).solve()
    if outcome.status is OracleStatus.BUDGET_EXCEEDED:
        return None
    return outcome.found


class _Clock:
    """Tracks the shared budget of an oracle call split into sub-searches."""

    def __init__(self, budget: Budget) -> None:
        self.budget = budget
        self.start = time.perf_counter()
        self.nodes = 0

    def elapsed_ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0

    def remaining(self) -> Budget:
        node_cap = None
        if self.budget.node_cap is not None:
            node_cap = max(self.budget.node_cap - self.nodes, 0)
        time_limit = None
        if self.budget.time_limit is not None:
            time_limit = max(self.budget.time_limit - self.elapsed_ms() / 1000.0, 0.0)
        return Budget(node_cap=node_cap, time_limit=time_limit)

    def exhausted(self) -> bool:
        if self.budget.node_cap is not None and self.nodes > self.budget.node_cap:
            return True
        return (
            self.budget.time_limit is not None
            and self.elapsed_ms() / 1000.0 > self.budget.time_limit
        )


def _solve_enumerate_a(rep: ReplicatedProblem, budget: Budget) -> OracleResult:
    inst = rep.instance
    clock = _Clock(budget)
    solvers = [_emptiness_solver(inst, ps, budget) for ps in rep.parity]
    marginal = inst.space.marginal

    best = -1
    best_decision: Optional[tuple[int, ...]] = None
    best_witnesses: tuple[Optional[tuple[int, ...]], ...] = ()
    status = OracleStatus.OPTIMAL

    for code in range(1 << rep.m):
        a = bits_from_int(code, rep.m)
        count = 0
        witnesses: list[Optional[tuple[int, ...]]] = []
        for i, solver in enumerate(solvers):
            if count + (rep.T - i) <= best:
                break
            solver.budget = clock.remaining()
            outcome = _bucket_search(solver, inst, a)
            clock.nodes += outcome.nodes
            if outcome.status is OracleStatus.BUDGET_EXCEEDED:
                status = OracleStatus.BUDGET_EXCEEDED
                break
            if outcome.assignment is not None:
                count += 1
                witnesses.append(tuple(outcome.assignment[var] for var in marginal))
            else:
                witnesses.append(None)
        if status is OracleStatus.BUDGET_EXCEEDED:
            break
        if count > best:
            best = count
            best_decision = a
            best_witnesses = tuple(witnesses)
        if best == rep.T:
            break

    return OracleResult(
        objective=best if best >= 0 else None,
        decision=best_decision,
        witnesses=best_witnesses,
        nodes=clock.nodes,
        wall_ms=clock.elapsed_ms(),
        status=status,
    )


def joint_branch_order(rep: ReplicatedProblem, occurrences: Sequence[Sequence[int]]) -> list[int]:
    """Decision variables, then per replicate y_i followed by its x-copies.

    x-copies are ranked by parity-row occurrence count, ties by lowest index.
    """
    order = list(range(rep.m))
    for i in range(rep.T):
        order.append(rep.y_var(i))
        ranked = sorted(range(rep.n), key=lambda j: (-occurrences[i][j], j))
        order.extend(rep.x_var(i, j) for j in ranked)
    return order


def _solve_joint(
    rep: ReplicatedProblem, threshold: int, budget: Budget, early_stop: bool
) -> OracleResult:
    clock = _Clock(budget)
    echelons = [eliminate(ps) for ps in rep.parity]
    blocks = [
        XorBlock(
            variables=tuple(rep.x_var(i, j) for j in range(rep.n)),
            echelon=echelon,
            guard=rep.y_var(i),
        )
        for i, echelon in enumerate(echelons)
    ]
    solver = XorDpll(
        num_vars=rep.num_vars,
        clauses=rep.augmented_clauses(),
        blocks=blocks,
        order=joint_branch_order(rep, [ef.occurrences for ef in echelons]),
        reward=[rep.y_var(i) for i in range(rep.T)],
        budget=budget,
    )
    outcome = solver.solve(stop_at=threshold if early_stop else None)

    decision = None
    witnesses: tuple[Optional[tuple[int, ...]], ...] = ()
    model = outcome.assignment
    if model is not None:
        decision = tuple(model[: rep.m])
        witnesses = tuple(
            tuple(model[rep.x_var(i, j)] for j in range(rep.n)) if model[rep.y_var(i)] else None
            for i in range(rep.T)
        )
    return OracleResult(
        objective=outcome.objective,
        decision=decision,
        witnesses=witnesses,
        nodes=outcome.nodes,
        wall_ms=clock.elapsed_ms(),
        status=outcome.status,
    )


def solve_replicated(
    rep: ReplicatedProblem,
    threshold: int,
    engine: Engine = Engine.ENUMERATE_A,
    budget: Budget = Budget(),
    early_stop: bool = True,
) -> OracleResult:
    """Maximize the number of replicates feasible under one shared decision vector.

    Args:
        rep: Replicated problem
        threshold: Replicate count that decides the query, in [1, T]
        engine: ENUMERATE_A loops over every a and checks replicates one by one
            (always exact); JOINT_DPLL runs one branch-and-bound over
            (a, y, x-copies) and, with ``early_stop``, stops once ``threshold``
            is reached
        budget: Node and time caps for the whole call
        early_stop: Let the joint engine stop at ``threshold``

    Returns:
        OracleResult
    """
    if not 1 <= threshold <= rep.T:
        raise InvalidParameterError(f"threshold must be in [1, {rep.T}], got {threshold}")
    if engine is Engine.JOINT_DPLL:
        return _solve_joint(rep, threshold, budget, early_stop)
    return _solve_enumerate_a(rep, budget)


def _embedded_witness(
    emb: EmbeddedInstance, free: np.ndarray, xs: np.ndarray, ps: ParitySystem
) -> Optional[tuple[int, ...]]:
    n = emb.base_n
    for code in range(xs.shape[0]):
        fixed = {j: int(xs[code, j]) for j in range(n)}
        for i in range(int(free[code]), emb.l):
            fixed[n + i] = 0
        exists, witness = solve_under_fixing(ps, fixed)
        if exists:
            return witness
    return None


def weighted_replicate_feasible(
    inst: MmapInstance,
    l: int,
    log_m: float,
    a: Sequence[int],
    ps: ParitySystem,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> bool:
    """True iff some (x, y) in the embedding slice of ``a`` satisfies ``ps``.

    Enumerates x, fixes x and the forced y bits to 0, and solves the parity
    system for the free y bits.

    Raises:
        EnumerationBudgetError: If n exceeds ``cap``
    """
    if ps.d != inst.n + l:
        raise InvalidParameterError(f"Parity dimension {ps.d} does not match n + l = {inst.n + l}")
    emb = EmbeddedInstance(base=inst, l=l, maximum=MaxWeight(log_value=log_m, method="given"))
    free = emb.free_table(tuple(a), cap)
    return _embedded_witness(emb, free, enumerate_bits(inst.n), ps) is not None


def solve_weighted_replicated(
    emb: EmbeddedInstance,
    parity: Sequence[ParitySystem],
    budget: Budget = Budget(),
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> OracleResult:
    """Enumerate-a replicated solve on an embedded instance.

    Each node is one solve of a fixed (a, x) slice; the node cap bounds them.
    """
    clock = _Clock(budget)
    xs = enumerate_bits(emb.base_n)
    T = len(parity)
    best = -1
    best_decision: Optional[tuple[int, ...]] = None
    best_witnesses: tuple[Optional[tuple[int, ...]], ...] = ()
    status = OracleStatus.OPTIMAL

    for code in range(1 << emb.m):
        a = bits_from_int(code, emb.m)
        free = emb.free_table(a, cap)
        count = 0
        witnesses: list[Optional[tuple[int, ...]]] = []
        for i, ps in enumerate(parity):
            if count + (T - i) <= best:
                break
            clock.nodes += xs.shape[0]
            if clock.exhausted():
                status = OracleStatus.BUDGET_EXCEEDED
                break
            witness = _embedded_witness(emb, free, xs, ps)
            witnesses.append(witness)
            if witness is not None:
                count += 1
        if status is OracleStatus.BUDGET_EXCEEDED:
            break
        if count > best:
            best = count
            best_decision = a
            best_witnesses = tuple(witnesses)
        if best == T:
            break

    return OracleResult(
        objective=best if best >= 0 else None,
        decision=best_decision,
        witnesses=best_witnesses,
        nodes=clock.nodes,
        wall_ms=clock.elapsed_ms(),
        status=status,
    )


@dataclass(frozen=True)
class WeightedCount:
    """Sum over x of w(a, x).

    Attributes:
        log_value: Natural log of the sum, LOG_ZERO for zero
        exact: Integer count for CNF instances, None for real weights
    """

    log_value: float
    exact: Optional[int] = field(default=None)

    @property
    def log10(self) -> float:
        if self.log_value == LOG_ZERO:
            return LOG_ZERO
        return self.log_value / math.log(10.0)


def count_exact(
    inst: MmapInstance, a: Sequence[int], cap: int = DEFAULT_ENUMERATION_CAP
) -> WeightedCount:
    """Exact model count (CNF) or log partition sum (Ising) under decision ``a``.

    Raises:
        EnumerationBudgetError: If n exceeds ``cap``
    """
    if len(a) != inst.m:
        raise MalformedInstanceError(f"Decision vector has {len(a)} bits, expected {inst.m}")
    check_enumeration(inst.n, cap)
    table = inst.log_weight_table(tuple(a), cap)
    if inst.kind is WeightKind.CNF:
        count = int(np.count_nonzero(table == 0.0))
        return WeightedCount(log_value=math.log(count) if count else LOG_ZERO, exact=count)
    return WeightedCount(log_value=log_total(table))
