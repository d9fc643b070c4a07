"""Tests for instance generators and the CNF/Ising file formats."""

import pytest

from tests.oracle import count_naive
from tests.random_instances import random_cnf, random_ising
from xormmap.baselines import exact_mmap
from xormmap.errors import InstanceParseError, InvalidParameterError
from xormmap.instances import (
    ISING_HEADER,
    format_instance,
    gen_equality,
    gen_free_block,
    gen_ising_grid,
    gen_random_2sat,
    instance_digest,
    parse_instance,
    read_instance,
    write_instance,
)
from xormmap.model import WeightKind, max_weight
from xormmap.seeding import INSTANCE, derive_rng


@pytest.mark.unit
class TestGenerators:
    """Benchmark families."""

    def test_random_2sat_shape(self):
        inst = gen_random_2sat(10, 4, 20, derive_rng(0, INSTANCE))
        assert (inst.m, inst.n) == (4, 6)
        clauses = inst.formula.clauses
        assert len(clauses) == 20
        assert all(len(clause) == 2 and abs(clause[0]) != abs(clause[1]) for clause in clauses)
        assert all(1 <= abs(lit) <= 10 for clause in clauses for lit in clause)

    def test_random_2sat_deterministic(self):
        first = gen_random_2sat(12, 5, 30, derive_rng(7, INSTANCE))
        second = gen_random_2sat(12, 5, 30, derive_rng(7, INSTANCE))
        assert first == second

    @pytest.mark.parametrize("args", [(1, 0, 3), (5, 5, 3), (5, -1, 3), (5, 2, -1)])
    def test_random_2sat_validation(self, args):
        with pytest.raises(InvalidParameterError):
            gen_random_2sat(*args, derive_rng(0, INSTANCE))

    def test_ising_grid_shape(self):
        inst = gen_ising_grid(3, 4, 0.5, 1.0, 0.25, derive_rng(1, INSTANCE))
        grid = inst.grid
        assert inst.kind is WeightKind.ISING
        assert len(grid.unary) == 12
        assert len(grid.edges) == 3 * 3 + 2 * 4
        assert inst.m == 3
        assert all(abs(theta) <= 0.5 for theta in grid.unary)
        assert all(abs(theta) <= 1.0 for _, _, theta in grid.edges)

    def test_ising_edge_order(self):
        grid = gen_ising_grid(2, 2, 0.1, 0.1, 0.0, derive_rng(0, INSTANCE)).grid
        assert [(u, v) for u, v, _ in grid.edges] == [(0, 1), (0, 2), (1, 3), (2, 3)]

    def test_ising_grid_deterministic(self):
        first = gen_ising_grid(3, 3, 0.5, 1.0, 0.5, derive_rng(2, INSTANCE))
        second = gen_ising_grid(3, 3, 0.5, 1.0, 0.5, derive_rng(2, INSTANCE))
        assert first == second

    @pytest.mark.parametrize(
        "args",
        [
            (0, 3, 0.5, 1.0, 0.5),
            (3, 3, -0.1, 1.0, 0.5),
            (3, 3, 0.5, 1.0, 1.5),
            (2, 2, 0.5, 1.0, 1.0),
        ],
    )
    def test_ising_grid_validation(self, args):
        with pytest.raises(InvalidParameterError):
            gen_ising_grid(*args, derive_rng(0, INSTANCE))

    def test_equality(self):
        inst = gen_equality(3)
        assert (inst.m, inst.n) == (3, 3)
        for a in [(0, 0, 0), (1, 0, 1), (1, 1, 1)]:
            assert count_naive(inst, a) == 1

    def test_free_block(self):
        inst = gen_free_block(3, 2)
        assert (inst.m, inst.n) == (2, 3)
        assert inst.formula.clauses == ()
        assert count_naive(inst, (1, 0)) == 8

    @pytest.mark.parametrize(
        "gen, args", [(gen_equality, (0,)), (gen_free_block, (0,)), (gen_free_block, (2, -1))]
    )
    def test_small_family_validation(self, gen, args):
        with pytest.raises(InvalidParameterError):
            gen(*args)


@pytest.mark.integration
class TestFamilyBehaviour:
    """Generated families behave like their distributions should."""

    def test_2sat_satisfiable_fraction_falls_with_clauses(self):
        def satisfiable(n_clauses, seed):
            inst = gen_random_2sat(10, 0, n_clauses, derive_rng(seed, INSTANCE))
            return not max_weight(inst).is_zero

        fractions = [
            sum(satisfiable(n_clauses, seed) for seed in range(30)) / 30
            for n_clauses in (5, 15, 30, 60)
        ]
        for denser, sparser in zip(fractions[1:], fractions):
            assert denser <= sparser + 0.1
        assert fractions[0] >= 0.9
        assert fractions[-1] <= fractions[0] - 0.5

    def test_ising_optimum_varies_across_seeds(self):
        optima = set()
        for seed in range(20):
            inst = gen_ising_grid(4, 4, 0.1, 1.0, 0.2, derive_rng(seed, INSTANCE))
            optima.add(round(exact_mmap(inst).count.log_value, 9))
        assert len(optima) == 20


@pytest.mark.unit
class TestFormat:
    """Canonical text."""

    def test_cnf_text(self):
        text = format_instance(gen_equality(1))
        assert text == "p cnf 2 2\nvmax 1 0\n-1 2 0\n1 -2 0\n"

    def test_pure_counting_vmax(self):
        text = format_instance(gen_free_block(2))
        assert text.splitlines()[1] == "vmax 0"

    def test_ising_text(self, small_ising):
        lines = format_instance(small_ising).splitlines()
        assert lines[0] == ISING_HEADER
        assert lines[1] == "ising 2 3"
        assert sum(line.startswith("node ") for line in lines) == 6
        assert sum(line.endswith(" max") for line in lines) == small_ising.m
        assert sum(line.startswith("edge ") for line in lines) == 7

    def test_digest(self, small_cnf):
        digest = instance_digest(small_cnf)
        assert len(digest) == 32
        assert digest == instance_digest(parse_instance(format_instance(small_cnf)))

    def test_digest_differs_across_seeds(self):
        digests = {
            instance_digest(gen_random_2sat(10, 3, 15, derive_rng(seed, INSTANCE)))
            for seed in range(20)
        }
        assert len(digests) == 20

    @pytest.mark.parametrize("seed", range(20))
    def test_digest_stable_per_seed(self, seed):
        first = gen_ising_grid(3, 3, 0.1, 1.0, 0.2, derive_rng(seed, INSTANCE))
        again = gen_ising_grid(3, 3, 0.1, 1.0, 0.2, derive_rng(seed, INSTANCE))
        assert instance_digest(first) == instance_digest(again)
        assert instance_digest(first) == instance_digest(parse_instance(format_instance(first)))


@pytest.mark.integration
class TestRoundTrip:
    """write -> read reproduces the instance exactly."""

    @pytest.mark.parametrize("seed", range(25))
    def test_cnf(self, seed):
        inst = random_cnf(n=1 + seed % 6, m=seed % 4, n_clauses=seed, seed=seed, width=1 + seed % 3)
        assert parse_instance(format_instance(inst)) == inst

    @pytest.mark.parametrize("seed", range(25))
    def test_ising(self, seed):
        inst = random_ising(rows=1 + seed % 3, cols=2 + seed % 2, m=seed % 2, seed=seed)
        parsed = parse_instance(format_instance(inst))
        assert parsed == inst
        assert parsed.grid.unary == inst.grid.unary

    def test_generated_families(self):
        for inst in [
            gen_random_2sat(8, 3, 12, derive_rng(3, INSTANCE)),
            gen_ising_grid(3, 3, 0.7, 1.3, 0.3, derive_rng(3, INSTANCE)),
            gen_equality(4),
            gen_free_block(5, 1),
        ]:
            assert parse_instance(format_instance(inst)) == inst

    def test_file(self, temp_dir, small_ising):
        path = temp_dir / "grid.ising"
        write_instance(small_ising, path)
        assert read_instance(path) == small_ising

    def test_comments_ignored(self):
        text = "c hello\np cnf 2 1\nc between\nvmax 1 0\n1 2 0\n"
        inst = parse_instance(text)
        assert (inst.m, inst.n) == (1, 1)


@pytest.mark.unit
class TestParseErrors:
    """Malformed files name the offending line."""

    @pytest.mark.parametrize(
        "text, match",
        [
            ("", "empty instance"),
            ("q cnf 2 1\n", "expected a 'p cnf' or 'ising' header"),
            ("p cnf 2\nvmax 0\n", "malformed 'p cnf' header"),
            ("p cnf 2 1\n1 2 0\n", "missing 'vmax"),
            ("p cnf 2 0\nvmax 1\n", "must end in 0"),
            ("p cnf 2 0\nvmax 3 0\n", "outside 1..2"),
            ("p cnf 2 0\nvmax 1 1 0\n", "listed twice"),
            ("p cnf 2 0\nvmax 1 2 0\n", "at least one variable must be marginal"),
            ("p cnf 2 1\nvmax 0\n1 2\n", "clause must end in 0"),
            ("p cnf 2 1\nvmax 0\n0\n", "empty clause"),
            ("p cnf 2 1\nvmax 0\n1 3 0\n", "literal outside"),
            ("p cnf 2 2\nvmax 0\n1 2 0\n", "declares 2 clauses"),
            ("p cnf 2 1\nvmax 0\n1 x 0\n", "expected integers"),
        ],
    )
    def test_cnf(self, text, match):
        with pytest.raises(InstanceParseError, match=match):
            parse_instance(text)

    @pytest.mark.parametrize(
        "text, match",
        [
            ("ising 1\n", "malformed 'ising"),
            ("ising 0 2\n", "is empty"),
            ("ising 1 2\nnode 0 0 0.1 max\n", "has no 'node' line"),
            ("ising 1 2\nnode 0 0 0.1 max\nnode 0 0 0.2 sum\n", "listed twice"),
            ("ising 1 2\nnode 0 0 0.1 both\n", "expected 'node"),
            ("ising 1 2\nnode 0 5 0.1 sum\n", "off the 1x2 grid"),
            ("ising 1 2\nnode 0 0 nan sum\nnode 0 1 0 sum\n", "finite"),
            ("ising 1 2\nnode 0 0 abc sum\n", "real number"),
            ("ising 2 2\nedge 0 0 1 1 0.5\n", "not adjacent"),
            ("ising 1 2\nfield 0 0 1\n", "unknown line type"),
        ],
    )
    def test_ising(self, text, match):
        with pytest.raises(InstanceParseError, match=match):
            parse_instance(text)

    def test_line_number(self):
        with pytest.raises(InstanceParseError) as info:
            parse_instance("p cnf 2 1\nvmax 0\nc note\n1 a 0\n")
        assert info.value.line == 4

    def test_path_in_message(self, temp_dir):
        path = temp_dir / "broken.cnf"
        path.write_text("p cnf 2 1\n")
        with pytest.raises(InstanceParseError, match=r"broken\.cnf:1"):
            read_instance(path)

    def test_single_node_grid(self):
        inst = parse_instance("ising 1 1\nnode 0 0 -2.5 sum\n")
        assert (inst.m, inst.n) == (0, 1)
        assert inst.grid.unary == (-2.5,)
