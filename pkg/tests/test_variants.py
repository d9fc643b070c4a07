"""Tests for the binary-search, repeated-trial and biased-threshold sweeps."""

import math

import pytest

from xormmap.errors import InvalidParameterError
from xormmap.estimator import EstimatorConfig, ReportStatus, RunRecord, required_T, xor_mmap
from xormmap.search import Budget, OracleStatus
from xormmap.variants import (
    SWEEPS,
    Variant,
    VariantConfig,
    _plus_outcome,
    q_star,
    required_r,
    required_T_binsearch,
    required_T_plus,
    sweep_for,
    xor_k_plus,
    xor_mmap_biased,
    xor_mmap_binsearch,
    xor_mmap_plus,
    xor_mmap_variant,
)


def _record(outcome, trial=0):
    status = OracleStatus.BUDGET_EXCEEDED if outcome is None else OracleStatus.OPTIMAL
    return RunRecord(
        k=1,
        trial=trial,
        T=3,
        threshold=2,
        outcome=outcome,
        objective=None if outcome is None else (3 if outcome else 0),
        decision=(0,) if outcome else None,
        status=status,
        nodes=1,
        wall_ms=0.0,
    )


@pytest.mark.unit
class TestVariantFormulas:
    """Replicate and trial counts."""

    def test_required_T_binsearch(self):
        assert required_T_binsearch(20, 40, 1e-3, 5) == 22

    def test_binsearch_needs_fewer_replicates(self):
        assert required_T_binsearch(8, 64, 0.05, 3) < required_T(8, 64, 0.05, 3)

    def test_binsearch_single_variable(self):
        # ln log2(1) is clamped to 0
        assert required_T_binsearch(0, 1, 0.5, 5) == 1

    def test_required_T_plus(self):
        assert required_T_plus(20, 5) == 17

    def test_required_T_plus_validation(self):
        with pytest.raises(InvalidParameterError):
            required_T_plus(-1, 5)

    def test_required_r(self):
        assert required_r(40, 1e-3, 5) == 11

    def test_q_star(self):
        assert q_star(20, 10, 4) == 12

    @pytest.mark.parametrize("T, m, c", [(2, 0, 3), (7, 3, 3), (30, 20, 5), (31, 0, 8)])
    def test_q_star_in_range(self, T, m, c):
        assert T / 2 < q_star(T, m, c) <= T

    def test_q_star_needs_two_replicates(self):
        with pytest.raises(InvalidParameterError):
            q_star(1, 3, 3)

    def test_q_star_validation(self):
        with pytest.raises(InvalidParameterError):
            q_star(5, -1, 3)


@pytest.mark.unit
class TestVariantConfig:
    """Validation of the variant knobs."""

    def test_defaults(self):
        config = VariantConfig()
        assert config.variant is Variant.PLUS
        assert config.r is None and config.q is None

    def test_r_positive(self):
        with pytest.raises(InvalidParameterError, match="r must be"):
            VariantConfig(r=0)

    @pytest.mark.parametrize("q", [2, 5])
    def test_q_range_with_T(self, q):
        with pytest.raises(InvalidParameterError, match="q must satisfy"):
            VariantConfig(variant=Variant.BIASED, T=4, q=q)

    def test_q_without_T_deferred(self):
        assert VariantConfig(variant=Variant.BIASED, q=2).q == 2

    def test_inherits_checks(self):
        with pytest.raises(InvalidParameterError):
            VariantConfig(c=1)


@pytest.mark.unit
class TestPlusVote:
    """Majority vote over r trials with abstentions."""

    def test_majority_true(self):
        assert _plus_outcome([_record(True), _record(True), _record(False)], 3) is True

    def test_majority_false(self):
        assert _plus_outcome([_record(False), _record(False), _record(True)], 3) is False

    def test_even_r_tie_accepts(self):
        assert _plus_outcome([_record(True), _record(False)], 2) is True

    def test_abstentions_undecided(self):
        trials = [_record(True), _record(None), _record(None), _record(False)]
        assert _plus_outcome(trials, 4) is None

    def test_false_despite_abstentions(self):
        trials = [_record(False), _record(False), _record(None)]
        assert _plus_outcome(trials, 3) is False

    def test_too_few_completed(self):
        trials = [_record(True), _record(None), _record(None)]
        assert _plus_outcome(trials, 3) is None

    def test_enough_completed(self):
        trials = [_record(True), _record(True), _record(None)]
        assert _plus_outcome(trials, 3) is True


@pytest.mark.oracle
class TestXorKPlus:
    """Single queries with a biased threshold."""

    def test_threshold_used(self, free_instance):
        record = xor_k_plus(free_instance, 0, 4, 4, seed=0)
        assert record.threshold == 4
        assert record.outcome is True

    @pytest.mark.parametrize("q", [0, 2, 5])
    def test_invalid_q(self, free_instance, q):
        with pytest.raises(InvalidParameterError):
            xor_k_plus(free_instance, 1, 4, q, seed=0)


@pytest.mark.integration
class TestBinarySearch:
    """Binary search over k."""

    def test_unsat(self, unsat_instance):
        report = xor_mmap_binsearch(unsat_instance, EstimatorConfig(T=3))
        assert report.method == "binsearch"
        assert report.k_hat == 0
        assert report.possibly_zero
        assert report.status is ReportStatus.COMPLETE

    @pytest.mark.parametrize("seed", range(5))
    def test_probe_count(self, small_cnf, seed):
        report = xor_mmap_binsearch(small_cnf, EstimatorConfig(T=3, seed=seed))
        assert 1 <= report.oracle_calls <= math.ceil(math.log2(small_cnf.n + 1))
        probed = [r.k for r in report.records]
        assert len(set(probed)) == len(probed)

    @pytest.mark.parametrize("seed", range(5))
    def test_estimate_is_highest_true_probe(self, small_cnf, seed):
        report = xor_mmap_binsearch(small_cnf, EstimatorConfig(T=3, seed=seed))
        trues = [r.k for r in report.records if r.outcome]
        assert report.k_hat == max(trues, default=0)

    def test_derived_T(self, small_cnf):
        report = xor_mmap_binsearch(small_cnf, EstimatorConfig())
        assert report.T == required_T_binsearch(small_cnf.m, small_cnf.n, 0.2, 3)

    def test_undecided_probe_stops_search(self, free_instance):
        report = xor_mmap_binsearch(free_instance, EstimatorConfig(T=3, budget=Budget(node_cap=0)))
        assert report.oracle_calls == 1
        assert report.degraded
        assert (report.lower, report.upper) == (0, free_instance.n)


@pytest.mark.integration
class TestPlus:
    """Repeated trials per k."""

    def test_unsat(self, unsat_instance):
        report = xor_mmap_plus(unsat_instance, VariantConfig(T=2, r=3))
        assert report.method == "plus"
        assert report.oracle_calls == unsat_instance.n * 3
        assert report.k_hat == 0
        assert report.possibly_zero

    def test_trials_per_k(self, small_cnf):
        report = xor_mmap_plus(small_cnf, VariantConfig(T=3, r=3, seed=1))
        by_k = {}
        for record in report.records:
            by_k.setdefault(record.k, []).append(record.trial)
        assert all(trials == [0, 1, 2] for trials in by_k.values())
        if report.k_hat:
            accepted = by_k[report.k_hat]
            assert len(accepted) == 3
            assert min(by_k) == report.k_hat

    def test_derived_parameters(self, free_instance):
        report = xor_mmap_plus(free_instance, VariantConfig())
        assert report.T == required_T_plus(free_instance.m, 3)
        first_k = [r for r in report.records if r.k == free_instance.n]
        assert len(first_k) == required_r(free_instance.n, 0.2, 3)

    def test_plain_config_derives_r(self, free_instance):
        report = xor_mmap_plus(free_instance, EstimatorConfig(T=2))
        first_k = [r for r in report.records if r.k == free_instance.n]
        assert len(first_k) == required_r(free_instance.n, 0.2, 3)

    def test_parallel_matches_sequential(self, small_cnf):
        first = xor_mmap_plus(small_cnf, VariantConfig(T=3, r=3, seed=2))
        second = xor_mmap_plus(small_cnf, VariantConfig(T=3, r=3, seed=2, workers=2))
        assert [(r.k, r.trial, r.outcome) for r in first.records] == [
            (r.k, r.trial, r.outcome) for r in second.records
        ]

    def test_degraded(self, free_instance):
        report = xor_mmap_plus(free_instance, VariantConfig(T=2, r=3, budget=Budget(node_cap=0)))
        assert report.degraded
        assert report.k_hat == 0


@pytest.mark.integration
class TestBiased:
    """Descending sweep with threshold q."""

    def test_majority_q_matches_plain_sweep(self, small_cnf):
        plain = xor_mmap(small_cnf, EstimatorConfig(T=5, seed=6))
        biased = xor_mmap_biased(small_cnf, VariantConfig(variant=Variant.BIASED, T=5, q=3, seed=6))
        assert biased.method == "biased"
        assert [(r.k, r.outcome) for r in biased.records] == [
            (r.k, r.outcome) for r in plain.records
        ]

    def test_default_q(self, small_cnf):
        report = xor_mmap_biased(small_cnf, VariantConfig(variant=Variant.BIASED, T=6))
        assert all(r.threshold == q_star(6, small_cnf.m, 3) for r in report.records)

    def test_single_replicate(self, free_instance):
        report = xor_mmap_biased(free_instance, VariantConfig(variant=Variant.BIASED, T=1))
        assert all(r.threshold == 1 for r in report.records)

    def test_invalid_q_with_derived_T(self, small_cnf):
        config = VariantConfig(variant=Variant.BIASED, q=1, c=5, delta=0.2)
        with pytest.raises(InvalidParameterError):
            xor_mmap_biased(small_cnf, config)

    def test_unsat(self, unsat_instance):
        report = xor_mmap_biased(unsat_instance, VariantConfig(variant=Variant.BIASED, T=3))
        assert report.k_hat == 0
        assert report.possibly_zero


@pytest.mark.unit
class TestDispatchTable:
    """Sweep selection."""

    def test_sweeps_cover_variants(self):
        assert set(SWEEPS) == set(Variant)

    def test_sweep_for(self):
        assert sweep_for(EstimatorConfig()) is xor_mmap
        assert sweep_for(VariantConfig(variant=Variant.BINSEARCH)) is xor_mmap_binsearch
        assert sweep_for(VariantConfig(variant=Variant.PLUS)) is xor_mmap_plus

    def test_xor_mmap_variant(self, unsat_instance):
        report = xor_mmap_variant(unsat_instance, VariantConfig(variant=Variant.BIASED, T=3))
        assert report.method == "biased"
