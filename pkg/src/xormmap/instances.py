"""Benchmark instance generators and the two instance file formats.

CNF files are DIMACS with one extra line, ``vmax <ids...> 0``, naming the
decision variables (1-based). It must come after the ``p cnf`` header and
before the first clause; ``vmax 0`` declares a pure counting instance::

    p cnf 4 2
    vmax 1 2 0
    1 -3 0
    -2 4 0

Ising files are line oriented::

    ising <rows> <cols>
    node <r> <c> <theta> <max|sum>
    edge <r1> <c1> <r2> <c2> <theta>

Every node appears exactly once. Reals are written with 17 significant
digits, so a write/read round trip reproduces them bit for bit. Lines starting
with ``c`` are comments in both formats.
"""

import hashlib
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import InstanceParseError, InvalidParameterError
from .model import CnfFormula, IsingGrid, MmapInstance, VarSpace, WeightKind

ISING_HEADER = "c spin s = 2*bit - 1; log w = sum theta_i s_i + sum theta_ij s_i s_j"


def gen_random_2sat(
    n_total: int, m_count: int, n_clauses: int, rng: np.random.Generator
) -> MmapInstance:
    """Random 2-CNF over ``n_total`` variables, ``m_count`` of them decision variables.

    Each clause joins two distinct uniform variables with fair-coin signs.
    Duplicate clauses are allowed.
    """
    if n_total < 2:
        raise InvalidParameterError(f"n_total must be >= 2, got {n_total}")
    if not 0 <= m_count < n_total:
        raise InvalidParameterError(f"m_count must be in [0, {n_total}), got {m_count}")
    if n_clauses < 0:
        raise InvalidParameterError(f"n_clauses must be >= 0, got {n_clauses}")

    decision = tuple(sorted(int(v) for v in rng.choice(n_total, size=m_count, replace=False)))
    clauses = []
    for _ in range(n_clauses):
        pair = rng.choice(n_total, size=2, replace=False)
        signs = rng.integers(0, 2, size=2)
        clauses.append(
            tuple(int(v) + 1 if sign else -(int(v) + 1) for v, sign in zip(pair, signs))
        )
    space = VarSpace.from_decision(n_total, decision)
    return MmapInstance.from_cnf(CnfFormula(space=space, clauses=tuple(clauses)))


def gen_ising_grid(
    rows: int,
    cols: int,
    field_strength: float,
    coupling_strength: float,
    max_fraction: float,
    rng: np.random.Generator,
) -> MmapInstance:
    """Grid Ising model with mixed couplings.

    theta_i ~ U[-f, f] per node, theta_ij ~ U[-w, w] per grid edge (right,
    then down, row-major), and floor(max_fraction * rows * cols) nodes chosen
    uniformly as decision variables.
    """
    if rows < 1 or cols < 1:
        raise InvalidParameterError(f"Grid shape must be at least 1x1, got {rows}x{cols}")
    if field_strength < 0 or coupling_strength < 0:
        raise InvalidParameterError("Field and coupling strengths must be >= 0")
    if not 0.0 <= max_fraction <= 1.0:
        raise InvalidParameterError(f"max_fraction must be in [0, 1], got {max_fraction}")
    size = rows * cols
    m_count = math.floor(max_fraction * size)
    if m_count >= size:
        raise InvalidParameterError("At least one node must stay a marginal variable")

    unary = tuple(float(v) for v in rng.uniform(-field_strength, field_strength, size=size))
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1, float(rng.uniform(-coupling_strength, coupling_strength))))
            if r + 1 < rows:
                edges.append(
                    (u, u + cols, float(rng.uniform(-coupling_strength, coupling_strength)))
                )
    decision = tuple(sorted(int(v) for v in rng.choice(size, size=m_count, replace=False)))
    grid = IsingGrid(rows=rows, cols=cols, unary=unary, edges=tuple(edges), decision=decision)
    return MmapInstance.from_ising(grid)


def gen_equality(n: int) -> MmapInstance:
    """w(a, x) = 1 iff x = a, with a on variables 0..n-1 and x on n..2n-1.

    Every a has exactly one satisfying x, so the optimum is 1.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    clauses = []
    for j in range(n):
        a, x = j + 1, n + j + 1
        clauses.append((-a, x))
        clauses.append((a, -x))
    space = VarSpace(decision=tuple(range(n)), marginal=tuple(range(n, 2 * n)))
    return MmapInstance.from_cnf(CnfFormula(space=space, clauses=tuple(clauses)))


def gen_free_block(n: int, m: int = 0) -> MmapInstance:
    """Clause-free CNF: every x is a model, so the optimum is 2^n."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if m < 0:
        raise InvalidParameterError(f"m must be >= 0, got {m}")
    space = VarSpace(decision=tuple(range(m)), marginal=tuple(range(m, m + n)))
    return MmapInstance.from_cnf(CnfFormula(space=space))


def _real(value: float) -> str:
    return format(value, ".17g")


def format_instance(inst: MmapInstance) -> str:
    """Canonical file text of ``inst``."""
    if inst.kind is WeightKind.CNF:
        formula = inst.formula
        assert formula is not None
        space = formula.space
        lines = [f"p cnf {space.num_vars} {len(formula.clauses)}"]
        lines.append("vmax " + "".join(f"{v + 1} " for v in sorted(space.decision)) + "0")
        lines.extend(" ".join(str(lit) for lit in clause) + " 0" for clause in formula.clauses)
        return "\n".join(lines) + "\n"

    grid = inst.grid
    assert grid is not None
    decision = set(grid.decision)
    lines = [ISING_HEADER, f"ising {grid.rows} {grid.cols}"]
    for u, theta in enumerate(grid.unary):
        r, c = divmod(u, grid.cols)
        role = "max" if u in decision else "sum"
        lines.append(f"node {r} {c} {_real(theta)} {role}")
    for u, v, theta in grid.edges:
        (r1, c1), (r2, c2) = divmod(u, grid.cols), divmod(v, grid.cols)
        lines.append(f"edge {r1} {c1} {r2} {c2} {_real(theta)}")
    return "\n".join(lines) + "\n"


def write_instance(inst: MmapInstance, path: Path) -> None:
    path.write_text(format_instance(inst), encoding="utf-8")


def instance_digest(inst: MmapInstance) -> str:
    """BLAKE2b fingerprint (32 hex chars) of the canonical file text."""
    return hashlib.blake2b(format_instance(inst).encode("utf-8"), digest_size=16).hexdigest()


class _Reader:
    """Line cursor carrying the path for error messages."""

    def __init__(self, text: str, path: Optional[str]) -> None:
        self.path = path
        self.lines = [
            (number, raw.split())
            for number, raw in enumerate(text.splitlines(), start=1)
            if raw.split() and raw.split()[0] != "c"
        ]

    def error(self, message: str, line: int) -> InstanceParseError:
        return InstanceParseError(message, line, self.path)

    def ints(self, tokens: list[str], line: int) -> list[int]:
        try:
            return [int(tok) for tok in tokens]
        except ValueError as e:
            raise self.error(f"expected integers, got {' '.join(tokens)!r}", line) from e

    def real(self, token: str, line: int) -> float:
        try:
            value = float(token)
        except ValueError as e:
            raise self.error(f"expected a real number, got {token!r}", line) from e
        if not math.isfinite(value):
            raise self.error(f"potential must be finite, got {token!r}", line)
        return value


def _parse_cnf(reader: _Reader) -> MmapInstance:
    header_line, header = reader.lines[0]
    if len(header) != 4 or header[1] != "cnf":
        raise reader.error("malformed 'p cnf' header", header_line)
    num_vars, num_clauses = reader.ints(header[2:], header_line)
    if num_vars < 1:
        raise reader.error("instance needs at least one variable", header_line)

    if len(reader.lines) < 2 or reader.lines[1][1][0] != "vmax":
        line = reader.lines[1][0] if len(reader.lines) > 1 else header_line
        raise reader.error("missing 'vmax <ids> 0' line after the header", line)
    vmax_line, vmax = reader.lines[1]
    ids = reader.ints(vmax[1:], vmax_line)
    if not ids or ids[-1] != 0:
        raise reader.error("vmax line must end in 0", vmax_line)
    decision = []
    for var in ids[:-1]:
        if not 1 <= var <= num_vars:
            raise reader.error(f"decision variable {var} outside 1..{num_vars}", vmax_line)
        decision.append(var - 1)
    if len(set(decision)) != len(decision):
        raise reader.error("decision variable listed twice", vmax_line)
    if len(decision) == num_vars:
        raise reader.error("at least one variable must be marginal", vmax_line)

    clauses = []
    for line, tokens in reader.lines[2:]:
        literals = reader.ints(tokens, line)
        if literals[-1] != 0:
            raise reader.error("clause must end in 0", line)
        clause = tuple(literals[:-1])
        if not clause:
            raise reader.error("empty clause", line)
        if any(lit == 0 or abs(lit) > num_vars for lit in clause):
            raise reader.error(f"literal outside +/-1..{num_vars}", line)
        clauses.append(clause)
    if len(clauses) != num_clauses:
        message = f"header declares {num_clauses} clauses, found {len(clauses)}"
        raise reader.error(message, header_line)

    space = VarSpace.from_decision(num_vars, tuple(decision))
    return MmapInstance.from_cnf(CnfFormula(space=space, clauses=tuple(clauses)))


def _parse_ising(reader: _Reader) -> MmapInstance:
    header_line, header = reader.lines[0]
    if len(header) != 3:
        raise reader.error("malformed 'ising <rows> <cols>' header", header_line)
    rows, cols = reader.ints(header[1:], header_line)
    if rows < 1 or cols < 1:
        raise reader.error(f"grid shape {rows}x{cols} is empty", header_line)

    unary: list[Optional[float]] = [None] * (rows * cols)
    decision = []
    edges = []

    def node_id(r: int, c: int, line: int) -> int:
        if not (0 <= r < rows and 0 <= c < cols):
            raise reader.error(f"cell ({r}, {c}) is off the {rows}x{cols} grid", line)
        return r * cols + c

    for line, tokens in reader.lines[1:]:
        kind = tokens[0]
        if kind == "node":
            if len(tokens) != 5 or tokens[4] not in ("max", "sum"):
                raise reader.error("expected 'node <r> <c> <theta> <max|sum>'", line)
            r, c = reader.ints(tokens[1:3], line)
            u = node_id(r, c, line)
            if unary[u] is not None:
                raise reader.error(f"node ({r}, {c}) listed twice", line)
            unary[u] = reader.real(tokens[3], line)
            if tokens[4] == "max":
                decision.append(u)
        elif kind == "edge":
            if len(tokens) != 6:
                raise reader.error("expected 'edge <r1> <c1> <r2> <c2> <theta>'", line)
            r1, c1, r2, c2 = reader.ints(tokens[1:5], line)
            u, v = node_id(r1, c1, line), node_id(r2, c2, line)
            if abs(r1 - r2) + abs(c1 - c2) != 1:
                raise reader.error(f"cells ({r1}, {c1}) and ({r2}, {c2}) are not adjacent", line)
            edges.append((u, v, reader.real(tokens[5], line)))
        else:
            raise reader.error(f"unknown line type {kind!r}", line)

    missing = [u for u, theta in enumerate(unary) if theta is None]
    if missing:
        r, c = divmod(missing[0], cols)
        raise reader.error(f"node ({r}, {c}) has no 'node' line", header_line)
    grid = IsingGrid(
        rows=rows,
        cols=cols,
        unary=tuple(float(theta) for theta in unary if theta is not None),
        edges=tuple(edges),
        decision=tuple(sorted(decision)),
    )
    return MmapInstance.from_ising(grid)


def parse_instance(text: str, path: Optional[Union[str, Path]] = None) -> MmapInstance:
    """Parse CNF or Ising instance text, detected from the first line.

    Raises:
        InstanceParseError: On malformed input, with the line number
        MalformedInstanceError: If the parsed data violates a model invariant
    """
    reader = _Reader(text, None if path is None else str(path))
    if not reader.lines:
        raise reader.error("empty instance file", 0)
    line, first = reader.lines[0]
    if first[0] == "p":
        return _parse_cnf(reader)
    if first[0] == "ising":
        return _parse_ising(reader)
    raise reader.error(f"expected a 'p cnf' or 'ising' header, got {first[0]!r}", line)


def read_instance(path: Path) -> MmapInstance:
    return parse_instance(path.read_text(encoding="utf-8"), path)
