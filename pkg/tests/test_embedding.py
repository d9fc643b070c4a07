"""Tests for the weighted-to-unweighted embedding."""

import math

import pytest

from tests.oracle import (
    all_vectors,
    count_naive,
    embedded_total_naive,
    max_weight_naive,
)
from tests.random_instances import random_ising
from xormmap.embedding import EmbeddedInstance, embed, forced_set, free_bits, slice_size
from xormmap.errors import InvalidParameterError, MalformedInstanceError
from xormmap.model import LOG_ZERO, IsingGrid, MaxWeight, MmapInstance


@pytest.mark.unit
class TestQuantization:
    """Free bits, forced sets and slice sizes for M = 1, l = 3."""

    @pytest.mark.parametrize(
        "w, free",
        [
            (1.0, 3),
            (0.6, 3),
            (0.5, 2),
            (0.3, 2),
            (0.2, 1),
            (0.125, 0),
            (0.1, 0),
        ],
    )
    def test_free_bits(self, w, free):
        assert free_bits(math.log(w), 0.0, 3) == free

    def test_zero_weight(self):
        assert free_bits(LOG_ZERO, 0.0, 3) == 0
        assert forced_set(LOG_ZERO, 0.0, 3) == (1, 2, 3)
        assert slice_size(LOG_ZERO, 0.0, 3) == 1

    def test_forced_set_is_top_run(self):
        assert forced_set(math.log(0.2), 0.0, 3) == (2, 3)
        assert forced_set(0.0, 0.0, 3) == ()

    def test_slice_size(self):
        assert slice_size(math.log(0.3), 0.0, 3) == 4
        assert slice_size(0.0, 0.0, 3) == 8

    def test_scale_invariant(self):
        assert free_bits(math.log(0.3) + 50.0, 50.0, 3) == 2

    def test_zero_maximum_rejected(self):
        with pytest.raises(InvalidParameterError, match="zero maximum"):
            free_bits(0.0, LOG_ZERO, 3)

    def test_weight_above_maximum_rejected(self):
        with pytest.raises(InvalidParameterError, match="exceeds"):
            free_bits(1.0, 0.0, 3)


@pytest.mark.unit
class TestEmbeddedInstance:
    """Dimensions and indicator."""

    def test_dimensions(self, small_ising):
        emb = embed(small_ising)
        assert emb.l == small_ising.n
        assert (emb.m, emb.base_n, emb.n) == (2, 4, 8)
        assert not emb.empty

    def test_explicit_l(self, small_ising):
        assert embed(small_ising, l=2).n == 6

    def test_l_must_be_positive(self, small_ising):
        with pytest.raises(InvalidParameterError):
            EmbeddedInstance(base=small_ising, l=0, maximum=MaxWeight(0.0, "given"))

    def test_empty_for_zero_maximum(self, unsat_instance):
        assert embed(unsat_instance).empty

    def test_indicator(self):
        grid = IsingGrid(rows=1, cols=2, unary=(0.0, 0.0), edges=((0, 1, 1.0),), decision=(0,))
        emb = embed(MmapInstance.from_ising(grid), l=2)
        # Aligned spins reach M; opposite spins have w / M = e^-2 < 1/4
        assert emb.indicator((1,), (1,), (1, 1)) == 1
        assert emb.indicator((1,), (0,), (0, 0)) == 1
        assert emb.indicator((1,), (0,), (1, 0)) == 0

    def test_indicator_shape(self, small_ising):
        with pytest.raises(MalformedInstanceError):
            embed(small_ising, l=2).indicator((0, 0), (0, 0, 0, 0), (0,))

    def test_slice_total_matches_naive(self, small_ising):
        emb = embed(small_ising, l=3)
        for a in all_vectors(small_ising.m):
            assert emb.slice_total(a) == embedded_total_naive(small_ising, a, 3)


@pytest.mark.oracle
class TestSandwich:
    """max Σw <= (M / 2^l) max Σw' <= 2 max Σw + M 2^(n-l), checked exhaustively."""

    @pytest.mark.parametrize("seed", range(20))
    def test_bounds(self, seed):
        inst = random_ising(rows=3, cols=3, m=2, seed=seed)
        l = inst.n
        big_m = max_weight_naive(inst)
        emb = embed(inst, l)
        assert math.exp(emb.log_m) == pytest.approx(big_m, rel=1e-9)

        opt = max(count_naive(inst, a) for a in all_vectors(inst.m))
        opt_embedded = max(emb.slice_total(a) for a in all_vectors(inst.m))
        scaled = math.log(big_m) - l * math.log(2.0) + math.log(opt_embedded)

        tolerance = 1e-9 * max(1.0, abs(math.log(opt)))
        assert math.log(opt) <= scaled + tolerance
        assert scaled <= math.log(2 * opt + big_m * 2 ** (inst.n - l)) + tolerance

    @pytest.mark.parametrize("seed", range(5))
    def test_per_decision_bounds(self, seed):
        inst = random_ising(rows=2, cols=3, m=2, seed=seed)
        l = 4
        emb = embed(inst, l)
        big_m = math.exp(emb.log_m)
        for a in all_vectors(inst.m):
            total = count_naive(inst, a)
            lifted = big_m / 2**l * emb.slice_total(a)
            assert total <= lifted * (1 + 1e-9)
            assert lifted <= (2 * total + big_m * 2 ** (inst.n - l)) * (1 + 1e-9)
