"""Pytest configuration and shared fixtures."""

import shutil
import tempfile
from pathlib import Path

import pytest

from tests.random_instances import random_cnf, random_ising
from xormmap.instances import gen_equality, gen_free_block, write_instance
from xormmap.model import CnfFormula, MmapInstance, VarSpace


@pytest.fixture
def temp_dir():
    """Temporary directory for test files."""
    dirpath = Path(tempfile.mkdtemp())
    yield dirpath
    shutil.rmtree(dirpath)


@pytest.fixture
def eq_instance():
    """w(a, x) = 1 iff x = a, over 3 + 3 bits."""
    return gen_equality(3)


@pytest.fixture
def free_instance():
    """Clause-free CNF, 4 marginal and 2 decision bits."""
    return gen_free_block(4, 2)


@pytest.fixture
def unsat_instance():
    """x0 and not x0: no assignment has positive weight."""
    space = VarSpace(decision=(0,), marginal=(1, 2))
    formula = CnfFormula(space=space, clauses=((2,), (-2,)))
    return MmapInstance.from_cnf(formula)


@pytest.fixture
def small_cnf():
    """Seeded random 2-CNF with n=5 marginal and m=3 decision bits."""
    return random_cnf(n=5, m=3, n_clauses=6, seed=11)


@pytest.fixture
def small_ising():
    """Seeded 2x3 grid with two decision nodes."""
    return random_ising(rows=2, cols=3, m=2, seed=5)


@pytest.fixture
def cnf_file(temp_dir, small_cnf):
    """``small_cnf`` written to disk."""
    path = temp_dir / "small.cnf"
    write_instance(small_cnf, path)
    return path


@pytest.fixture
def ising_file(temp_dir, small_ising):
    """``small_ising`` written to disk."""
    path = temp_dir / "small.ising"
    write_instance(small_ising, path)
    return path


@pytest.fixture(params=[0, 1, 2, 3])
def parity_seed(request):
    """Parametrized master seeds for parity sampling."""
    return request.param
