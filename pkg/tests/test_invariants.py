"""Test algebraic and bookkeeping invariants hold for arbitrary inputs."""

import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tests.oracle import all_vectors, in_bucket, solutions_naive
from xormmap.embedding import free_bits, slice_size
from xormmap.estimator import (
    bounds_from_partial,
    majority_threshold,
    required_T,
)
from xormmap.gf2 import ParitySystem, eliminate, solve_under_fixing
from xormmap.model import LOG_ZERO
from xormmap.variants import q_star

LN2 = math.log(2.0)


@st.composite
def parity_systems(draw, max_d=6, max_k=7):
    d = draw(st.integers(min_value=1, max_value=max_d))
    k = draw(st.integers(min_value=0, max_value=max_k))
    rows = draw(st.lists(st.integers(0, (1 << d) - 1), min_size=k, max_size=k))
    rhs = draw(st.lists(st.integers(0, 1), min_size=k, max_size=k))
    return ParitySystem(d=d, rows=tuple(rows), rhs=tuple(rhs))


@pytest.mark.property
class TestParityInvariants:
    """GF(2) elimination and fixing agree with brute force."""

    @settings(max_examples=200, deadline=None)
    @given(parity_systems())
    def test_elimination_preserves_solutions(self, ps):
        ef = eliminate(ps)
        assert ef.solution_count() == len(solutions_naive(ps))
        assert solutions_naive(ef.as_system()) == solutions_naive(ps)

    @settings(max_examples=200, deadline=None)
    @given(parity_systems(), st.data())
    def test_fixing_matches_brute_force(self, ps, data):
        coords = data.draw(st.lists(st.integers(0, ps.d - 1), unique=True, max_size=ps.d))
        fixed = {coord: data.draw(st.integers(0, 1)) for coord in coords}
        exists, witness = solve_under_fixing(ps, fixed)
        completions = [
            v for v in all_vectors(ps.d) if all(v[c] == b for c, b in fixed.items())
        ]
        assert exists == any(in_bucket(ps, v) for v in completions)
        if exists:
            assert witness in completions
            assert in_bucket(ps, witness)

    @settings(max_examples=100, deadline=None)
    @given(parity_systems(), st.data())
    def test_hash_is_affine(self, ps, data):
        u = tuple(data.draw(st.lists(st.integers(0, 1), min_size=ps.d, max_size=ps.d)))
        v = tuple(data.draw(st.lists(st.integers(0, 1), min_size=ps.d, max_size=ps.d)))
        w = tuple(a ^ b for a, b in zip(u, v))
        combined = tuple(
            a ^ b ^ c for a, b, c in zip(ps.hash_value(u), ps.hash_value(v), ps.hash_value(w))
        )
        assert combined == ps.rhs


@pytest.mark.property
class TestQuantizationInvariants:
    """Slice sizes bracket 2^l w / M within a factor of two."""

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(min_value=-30.0, max_value=0.0, allow_nan=False),
        st.floats(min_value=-20.0, max_value=20.0, allow_nan=False),
        st.integers(min_value=1, max_value=12),
    )
    def test_slice_brackets_scaled_weight(self, log_ratio, log_m, l):
        size = slice_size(log_m + log_ratio, log_m, l)
        scaled = math.exp(log_ratio + l * LN2)
        assert size >= scaled * (1 - 1e-6)
        assert size <= max(1.0, 2 * scaled) * (1 + 1e-6)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=-30.0, max_value=0.0, allow_nan=False),
        st.floats(min_value=-30.0, max_value=0.0, allow_nan=False),
        st.integers(min_value=1, max_value=12),
    )
    def test_free_bits_monotone(self, first, second, l):
        low, high = sorted((first, second))
        assert 0 <= free_bits(low, 0.0, l) <= free_bits(high, 0.0, l) <= l

    @given(st.integers(min_value=1, max_value=12))
    def test_zero_weight_has_single_point_slice(self, l):
        assert slice_size(LOG_ZERO, 0.0, l) == 1


@pytest.mark.property
class TestSweepInvariants:
    """Thresholds, replicate counts and partial bounds."""

    @given(st.integers(min_value=1, max_value=10_000))
    def test_majority_threshold(self, T):
        threshold = majority_threshold(T)
        assert 2 * threshold > T
        assert 2 * (threshold - 1) <= T

    @given(
        st.integers(min_value=0, max_value=60),
        st.integers(min_value=1, max_value=500),
        st.floats(min_value=1e-6, max_value=0.99),
        st.integers(min_value=2, max_value=10),
    )
    def test_required_T_monotone(self, m, n, delta, c):
        T = required_T(m, n, delta, c)
        assert T >= 1
        assert required_T(m + 1, n, delta, c) >= T
        assert required_T(m, n, delta / 2, c) >= T

    @given(
        st.integers(min_value=2, max_value=200),
        st.integers(min_value=0, max_value=40),
        st.integers(min_value=2, max_value=10),
    )
    def test_q_star_range(self, T, m, c):
        assert T / 2 < q_star(T, m, c) <= T

    @given(
        st.integers(min_value=1, max_value=40),
        st.integers(min_value=1, max_value=8),
        st.data(),
    )
    def test_partial_bounds_ordered(self, n, c, data):
        outcomes = data.draw(
            st.dictionaries(
                st.integers(min_value=1, max_value=n),
                st.sampled_from([True, False, None]),
            )
        )
        lower, upper = bounds_from_partial(outcomes, c, n)
        assert 0 <= lower <= upper <= n

    @given(st.integers(min_value=2, max_value=40), st.integers(min_value=1, max_value=8))
    def test_monotone_outcomes_bracket_boundary(self, n, c):
        """A monotone run with boundary b gives bounds around b."""
        boundary = n // 2
        assume(boundary >= 1)
        outcomes = {k: k <= boundary for k in range(1, n + 1)}
        lower, upper = bounds_from_partial(outcomes, c, n)
        assert lower <= boundary <= upper
        assert upper - lower <= 2 * c + 1
