"""Tests for granulation, the close-open loop, and back analysis."""

import json

import pytest

from somrough.corpus import JEFFREY_OBSERVED_RATE_MS, jeffrey_table
from somrough.errors import DataError, UsageError
from somrough.pipeline import (
    Interval,
    PipelineConfig,
    back_analyze,
    close_open,
    estimate_to_json,
    granular_from_json,
    granulate,
    granulate_observation,
    reduce_train,
    report_rules_from_json,
    report_to_json,
    sensitivity,
)
from somrough.rules import RuleConstraints, RuleSet, accuracy, parse_rules
from somrough.som import Discretizer
from somrough.table import AttributeSpec, GranularTable, split_random


@pytest.fixture(scope="module")
def corpus_granular():
    return granulate(jeffrey_table(), granules=3, seed=0)


@pytest.fixture(scope="module")
def corpus_report():
    return close_open(jeffrey_table(), "mvv", PipelineConfig())


class TestGranulate:
    def test_labels_complete_and_bounded(self, corpus_granular):
        for name in corpus_granular.names:
            labels = corpus_granular.column(name)
            assert all(l in (1, 2, 3) for l in labels)

    def test_decision_partition(self, corpus_granular):
        labels = corpus_granular.column("mvv")
        assert sorted(i + 1 for i, l in enumerate(labels) if l == 1) == [1, 3, 6, 8, 10]

    def test_reuses_given_discretizers(self, corpus_granular):
        t = jeffrey_table()
        again = granulate(t, discretizers=corpus_granular.discretizers)
        assert again.rows == corpus_granular.rows


class TestMissingValues:
    def test_missing_cells_survive_granulation(self):
        t = jeffrey_table()
        rows = [list(r) for r in t.rows]
        rows[2][t.col_index("csz")] = None
        holey = type(t)(specs=t.specs, rows=tuple(tuple(r) for r in rows))
        g = granulate(holey, granules=3, seed=0)
        assert g.rows[2][g.col_index("csz")] is None
        others = [v for i, v in enumerate(g.column("csz")) if i != 2]
        assert all(v in (1, 2, 3) for v in others)

    def test_pipeline_tolerates_missing(self):
        t = jeffrey_table()
        rows = [list(r) for r in t.rows]
        rows[0][t.col_index("phip")] = None
        rows[5][t.col_index("tb")] = None
        holey = type(t)(specs=t.specs, rows=tuple(tuple(r) for r in rows))
        rep = close_open(holey, "mvv", PipelineConfig(max_open_steps=3))
        assert rep.total_iterations >= 1


class TestCloseOpen:
    def test_vacuous_threshold_single_iteration(self):
        rep = close_open(jeffrey_table(), "mvv", PipelineConfig(el=0.0))
        assert rep.total_iterations == 1
        assert rep.el_met
        assert rep.best_iteration.budget == 1

    def test_unattainable_threshold_flags_not_met(self):
        cfg = PipelineConfig(el=1.0, max_open_steps=2)
        rep = close_open(jeffrey_table(), "mvv", cfg)
        assert not rep.el_met
        assert rep.best_rules is not None

    def test_iteration_cap(self, corpus_report):
        cfg = corpus_report.config
        assert corpus_report.total_iterations <= cfg.runs * cfg.max_iterations

    def test_budget_trace_sane(self, corpus_report):
        """Budget stays in bounds and moves by at most one per change, with
        at most max_closed stays per level."""
        cfg = corpus_report.config
        budgets = [it.budget for it in corpus_report.iterations]
        assert all(1 <= b <= cfg.constraints.max_rules for b in budgets)
        stays = 1
        for prev, cur in zip(budgets, budgets[1:]):
            if cur == prev:
                stays += 1
                assert stays <= cfg.max_closed
            else:
                assert abs(cur - prev) == 1
                stays = 1

    def test_determinism(self, corpus_report):
        again = close_open(jeffrey_table(), "mvv", PipelineConfig())
        assert again.iterations == corpus_report.iterations
        assert again.best_rules == corpus_report.best_rules

    def test_best_accuracy_reproducible(self, corpus_report):
        """Re-running classification on the logged split reproduces the
        reported best accuracy."""
        it = corpus_report.best_iteration
        _, test = split_random(corpus_report.granular, 0.7, it.split_seed)
        assert accuracy(corpus_report.best_rules, test, "mvv") == it.accuracy

    def test_empty_table_rejected(self):
        with pytest.raises(DataError):
            close_open(jeffrey_table().subset([]), "mvv", PipelineConfig())

    def test_non_decision_rejected(self):
        with pytest.raises(UsageError):
            close_open(jeffrey_table(), "cb", PipelineConfig())


class TestGranulateObservation:
    DISC = Discretizer(name="mvv", scale="log10", centers=(1e-13, 1e-15, 1e-21),
                       cuts=(1e-14, 1e-18))

    def test_monitored_rate_clamps_high(self):
        """The recorded slide rate (about 1500 m/month in m/s) tops every
        simulated velocity and lands in the highest band."""
        assert JEFFREY_OBSERVED_RATE_MS == pytest.approx(5.787e-4, rel=1e-3)
        assert granulate_observation(self.DISC, JEFFREY_OBSERVED_RATE_MS) == 1

    def test_boundary_goes_down(self):
        assert granulate_observation(self.DISC, 1e-14) == 2

    def test_smallest_value_clamps_low(self):
        assert granulate_observation(self.DISC, 1e-30) == 3

    def test_nonfinite_rejected(self):
        with pytest.raises(UsageError):
            granulate_observation(self.DISC, float("nan"))


class TestBackAnalyze:
    def test_golden_rule_set_bundles(self):
        """The four published-style rules observed at the top velocity band
        produce exactly four condition bundles."""
        from pathlib import Path

        text = (Path(__file__).parent / "data" / "jeffrey_rules_golden.txt").read_text()
        rs = parse_rules(text)
        est = back_analyze(rs, ("mvv", 1))
        assert not est.no_match
        got = [
            tuple((iv.attribute, iv.lo, iv.hi) for iv in bundle) for bundle in est.bundles
        ]
        assert got == [
            (("cb", None, 220000.0),),
            (("phib", None, 25.035),),
            (("csz", None, 999.79),),
            (("phisz", None, 5.0354), ("tb", None, 42844.0)),
        ]

    def test_no_match_flag(self):
        from pathlib import Path

        text = (Path(__file__).parent / "data" / "jeffrey_rules_golden.txt").read_text()
        rs = parse_rules(text)
        est = back_analyze(rs, ("mvv", 3))
        assert est.no_match and est.bundles == ()

    def test_single_rule_single_bundle(self, corpus_report):
        rules = corpus_report.best_rules
        rule = rules.rules[0]
        one = RuleSet(rules=(rule,), constraints=rules.constraints)
        est = back_analyze(one, (rule.decision.attribute, rule.decision.granule))
        assert len(est.bundles) == 1
        assert len(est.bundles[0]) == rule.length

    def test_empty_rule_set_rejected(self):
        with pytest.raises(UsageError):
            back_analyze(RuleSet(rules=(), constraints=RuleConstraints()), ("mvv", 1))

    def test_core_flags_with_table(self, corpus_report):
        est = back_analyze(corpus_report.best_rules, ("mvv", 1), corpus_report.granular)
        assert est.sensitivity, "expected a ranking over the condition attributes"
        core_flagged = [a for a, in_core, _ in est.sensitivity if in_core]
        ranked_names = [a for a, _, _ in est.sensitivity]
        # Core attributes come first in the ranking.
        assert ranked_names[: len(core_flagged)] == core_flagged


class TestSensitivity:
    def test_single_reduct_table(self):
        t = GranularTable(
            specs=(AttributeSpec("a", "condition"), AttributeSpec("d", "decision")),
            rows=((1, 1), (2, 2), (2, 2)),
        )
        ranking = sensitivity(t, "d")
        assert ranking[0] == ("a", True, 1)

    def test_duplicated_column_symmetry(self):
        t = GranularTable(
            specs=(
                AttributeSpec("a", "condition"),
                AttributeSpec("a2", "condition"),
                AttributeSpec("d", "decision"),
            ),
            rows=((1, 1, 1), (2, 2, 2)),
        )
        ranking = dict((a, (c, f)) for a, c, f in sensitivity(t, "d"))
        assert ranking["a"] == ranking["a2"]
        assert ranking["a"][0] is False  # neither is core

    def test_all_core(self, corpus_granular):
        ranking = sensitivity(corpus_granular, "mvv")
        assert len(ranking) == 8
        core = [a for a, in_core, _ in ranking if in_core]
        freq = {a: f for a, _, f in ranking}
        for a in core:
            assert freq[a] >= 1


class TestReduceTrain:
    def test_prototypes_shrink_split(self):
        t = jeffrey_table()
        g = granulate(t, 3, seed=0)
        train, _ = split_random(g, 0.7, 11)
        reduced = reduce_train(t, train, (3, 3), seed=11)
        assert 1 <= len(reduced) <= 9
        assert reduced.names == g.names
        for name in reduced.names:
            for v in reduced.column(name):
                assert v is None or 1 <= v <= 3

    def test_pipeline_accepts_reduction(self):
        cfg = PipelineConfig(reduce_grid=(3, 3), max_open_steps=2)
        rep = close_open(jeffrey_table(), "mvv", cfg)
        assert rep.total_iterations >= 1


class TestReportJson:
    def test_roundtrip(self, corpus_report):
        doc = json.loads(report_to_json(corpus_report))
        assert doc["decision"] == "mvv"
        assert len(doc["iterations"]) == corpus_report.total_iterations
        rs = report_rules_from_json(doc)
        assert rs.rules == corpus_report.best_rules.rules
        g = granular_from_json(doc)
        assert g.rows == corpus_report.granular.rows
        assert g.discretizers == corpus_report.discretizers
        assert [s.role for s in g.specs] == [s.role for s in corpus_report.granular.specs]

    def test_estimate_json_shape(self, corpus_report):
        est = back_analyze(corpus_report.best_rules, ("mvv", 1), corpus_report.granular)
        doc = json.loads(estimate_to_json(est))
        assert set(doc) == {
            "decision",
            "observed_granule",
            "no_match",
            "bundles",
            "matched_rules",
            "sensitivity",
        }
        for bundle in doc["bundles"]:
            for iv in bundle:
                assert set(iv) == {"attribute", "lo", "hi"}


class TestIntervals:
    def test_contains(self):
        iv = Interval("x", 1.0, 2.0)
        assert iv.contains(1.0) and iv.contains(2.0) and iv.contains(1.5)
        assert not iv.contains(0.9) and not iv.contains(2.1)
        assert Interval("x", None, 5.0).contains(-1e30)
        assert Interval("x", 5.0, None).contains(1e30)
