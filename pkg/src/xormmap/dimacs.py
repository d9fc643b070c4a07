"""Extended DIMACS export of replicated problems, with a reader for round trips.

Layout of an exported document::

    c xormmap m <m> n <n> T <T> k <k>
    c card y <y ids> >= <threshold>
    p cnf <vars> <clauses>
    <one line per augmented clause, terminated by 0>
    <one unit clause -y_i 0 per replicate with an inconsistent parity system>
    <one x line per parity row of a consistent replicate, terminated by 0>
    <one c xor comment per parity row with no x-line form>

Variables are numbered a-vars 1..m, then the x-copies replicate by
replicate, then y_1..y_T. An ``x`` line asserts that the XOR of its literals
is TRUE, so the first literal is negated iff the row's rhs bit is 0. The header
clause count covers clause lines only.

x-lines are not guarded by y_i. A consistent system always has a solution
over its own x-copies, so leaving y_i = 0 with the copies on that solution
loses nothing. An inconsistent system cannot be written that way: its
replicate gets the unit clause ``-y_i 0`` and its rows go to
``c xor <replicate> <rhs> <columns>`` comments instead. An all-zero row of a
consistent system is written as the same comment.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import InstanceParseError
from .gf2 import ParitySystem, eliminate
from .model import CnfFormula, MmapInstance, VarSpace
from .oracle import ReplicatedProblem

META_PREFIX = "xormmap"


def export_dimacs_xor(rep: ReplicatedProblem, threshold: int) -> str:
    """Render ``rep`` with the side condition sum(y) >= threshold.

    The document is equisatisfiable with "some decision vector makes at least
    ``threshold`` replicates feasible".

    Returns:
        Document text ending in a newline
    """
    clauses = list(rep.augmented_clauses())
    dead = [i for i, ps in enumerate(rep.parity) if not eliminate(ps).consistent]
    clauses.extend((-(rep.y_var(i) + 1),) for i in dead)

    y_ids = [rep.y_var(i) + 1 for i in range(rep.T)]
    lines = [
        f"c {META_PREFIX} m {rep.m} n {rep.n} T {rep.T} k {rep.k}",
        f"c card y {' '.join(str(v) for v in y_ids)} >= {threshold}",
        f"p cnf {rep.num_vars} {len(clauses)}",
    ]
    lines.extend(" ".join(str(lit) for lit in clause) + " 0" for clause in clauses)

    for i, ps in enumerate(rep.parity):
        for row, bit in zip(ps.matrix(), ps.vector()):
            columns = np.flatnonzero(row).tolist()
            if i in dead or not columns:
                lines.append(f"c xor {i} {bit} " + " ".join(str(j) for j in columns))
                continue
            literals = [rep.x_var(i, j) + 1 for j in columns]
            if bit == 0:
                literals[0] = -literals[0]
            lines.append("x " + " ".join(str(lit) for lit in literals) + " 0")
    return "\n".join(line.rstrip() for line in lines) + "\n"


@dataclass(frozen=True)
class DimacsXorDocument:
    """Parsed contents of an exported document.

    ``clauses`` holds the augmented clauses only; the ``-y_i`` unit clauses
    of inconsistent replicates are listed in ``disabled``.
    """

    m: int
    n: int
    T: int
    k: int
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    xor_rows: tuple[tuple[int, tuple[int, ...], int], ...]  # (replicate, columns, rhs)
    card_ids: tuple[int, ...]
    threshold: Optional[int]
    disabled: tuple[int, ...] = ()

    def to_replicated(self) -> ReplicatedProblem:
        """Rebuild the problem over a canonical base (decision vars 1..m first)."""
        per_replicate = len(self.clauses) // self.T
        base_clauses = tuple(clause[:-1] for clause in self.clauses[:per_replicate])
        space = VarSpace(
            decision=tuple(range(self.m)), marginal=tuple(range(self.m, self.m + self.n))
        )
        inst = MmapInstance.from_cnf(CnfFormula(space=space, clauses=base_clauses))

        matrices: list[list[list[int]]] = [[] for _ in range(self.T)]
        rhs: list[list[int]] = [[] for _ in range(self.T)]
        for replicate, columns, bit in self.xor_rows:
            dense = np.zeros(self.n, dtype=np.uint8)
            dense[list(columns)] = 1
            matrices[replicate].append(dense.tolist())
            rhs[replicate].append(bit)
        parity = tuple(
            ParitySystem.from_matrix(a, b, self.n) for a, b in zip(matrices, rhs)
        )
        return ReplicatedProblem(instance=inst, k=self.k, parity=parity)


def _ints(tokens: list[str], line_no: int, path: Optional[str]) -> list[int]:
    try:
        return [int(tok) for tok in tokens]
    except ValueError as e:
        message = f"expected integers, got {' '.join(tokens)!r}"
        raise InstanceParseError(message, line_no, path) from e


def parse_dimacs_xor(text: str, path: Optional[Union[str, Path]] = None) -> DimacsXorDocument:
    """Parse a document written by :func:`export_dimacs_xor`.

    Raises:
        InstanceParseError: On any structural problem, with its line number
    """
    where = None if path is None else str(path)
    meta: Optional[list[int]] = None
    header: Optional[list[int]] = None
    card_ids: tuple[int, ...] = ()
    threshold: Optional[int] = None
    clauses: list[tuple[int, ...]] = []
    disabled: list[int] = []
    xor_rows: list[tuple[int, tuple[int, ...], int]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        head = tokens[0]
        if head == "c":
            if len(tokens) == 10 and tokens[1] == META_PREFIX:
                meta = _ints(tokens[3::2], line_no, where)
            elif len(tokens) >= 5 and tokens[1:3] == ["card", "y"] and tokens[-2] == ">=":
                card_ids = tuple(_ints(tokens[3:-2], line_no, where))
                threshold = _ints(tokens[-1:], line_no, where)[0]
            elif len(tokens) >= 4 and tokens[1] == "xor":
                replicate, bit, *columns = _ints(tokens[2:], line_no, where)
                xor_rows.append((replicate, tuple(columns), bit))
            continue
        if head == "p":
            if len(tokens) != 4 or tokens[1] != "cnf":
                raise InstanceParseError("malformed problem line", line_no, where)
            header = _ints(tokens[2:], line_no, where)
            continue
        if meta is None or header is None:
            raise InstanceParseError(
                f"data before the '{META_PREFIX}' comment and 'p cnf' header", line_no, where
            )
        m, n, T = meta[0], meta[1], meta[2]
        if head == "x":
            literals = _ints(tokens[1:], line_no, where)
            if not literals or literals[-1] != 0 or len(literals) < 2:
                raise InstanceParseError("x line must list literals and end in 0", line_no, where)
            literals = literals[:-1]
            negated = sum(1 for lit in literals if lit < 0)
            offsets = [abs(lit) - 1 - m for lit in literals]
            replicate = offsets[0] // n
            if any(off < 0 or off // n != replicate for off in offsets):
                raise InstanceParseError("x line mixes replicates or non-copy vars", line_no, where)
            xor_rows.append(
                (replicate, tuple(off - replicate * n for off in offsets), 1 ^ (negated & 1))
            )
            continue
        literals = _ints(tokens, line_no, where)
        if literals[-1] != 0:
            raise InstanceParseError("clause line must end in 0", line_no, where)
        clause = tuple(literals[:-1])
        if any(abs(lit) > header[0] for lit in clause):
            raise InstanceParseError("clause references a variable past the header", line_no, where)
        if len(clause) == 1:
            # Augmented clauses always carry a base literal, so a unit clause is a guard
            y_offset = -clause[0] - 1 - m - T * n
            if not 0 <= y_offset < T:
                raise InstanceParseError("unit clause must be -y_i", line_no, where)
            disabled.append(y_offset)
            continue
        clauses.append(clause)

    if meta is None or header is None:
        raise InstanceParseError("missing metadata comment or 'p cnf' header", 0, where)
    m, n, T, k = meta
    if header[0] != m + T * n + T:
        raise InstanceParseError(
            f"header declares {header[0]} variables, expected {m + T * n + T}", 0, where
        )
    found = len(clauses) + len(disabled)
    if header[1] != found or len(clauses) % T:
        raise InstanceParseError(f"header declares {header[1]} clauses, found {found}", 0, where)
    return DimacsXorDocument(
        m=m,
        n=n,
        T=T,
        k=k,
        num_vars=header[0],
        clauses=tuple(clauses),
        xor_rows=tuple(xor_rows),
        card_ids=card_ids,
        threshold=threshold,
        disabled=tuple(disabled),
    )


def read_dimacs_xor(path: Path) -> DimacsXorDocument:
    return parse_dimacs_xor(path.read_text(encoding="utf-8"), path)
