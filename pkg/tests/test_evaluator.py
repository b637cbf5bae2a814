from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reference import naive_metrics
from simaug.evaluator import (
    EvalReport,
    confusion,
    evaluate,
    macro_f1,
    micro_f1,
    summarize_seeds,
)


def _random_prediction_set(rng):
    n_classes = int(rng.integers(2, 9))
    catalog = [f"L{i}" for i in range(n_classes)]
    n = int(rng.integers(1, 120))
    golds = [catalog[int(i)] for i in rng.integers(0, n_classes, size=n)]
    preds = [catalog[int(i)] for i in rng.integers(0, n_classes, size=n)]
    return golds, preds, catalog


class TestConfusion:
    def test_perfect_predictions(self):
        counts = confusion(["A", "B", "A"], ["A", "B", "A"], ["A", "B"])
        for c in counts.per_class.values():
            assert c.fp == 0 and c.fn == 0

    def test_hand_confusion_table(self):
        counts = confusion(["A", "A", "B"], ["A", "B", "B"], ["A", "B"])
        a, b = counts.per_class["A"], counts.per_class["B"]
        assert (a.tp, a.fp, a.fn) == (1, 0, 1)
        assert (b.tp, b.fp, b.fn) == (1, 1, 0)

    def test_empty_input_all_zeros(self):
        counts = confusion([], [], ["A", "B"])
        assert counts.n_examples == 0
        for c in counts.per_class.values():
            assert (c.tp, c.fp, c.fn) == (0, 0, 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion(["A"], ["A", "B"], ["A", "B"])

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="'C'"):
            confusion(["A"], ["C"], ["A", "B"])


class TestF1:
    def test_hand_computed_example(self):
        counts = confusion(["A", "A", "B"], ["A", "B", "B"], ["A", "B"])
        assert micro_f1(counts) == pytest.approx(2.0 / 3.0, abs=1e-15)
        assert macro_f1(counts) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_perfect_is_one(self):
        counts = confusion(["A", "B"], ["A", "B"], ["A", "B"])
        assert micro_f1(counts) == 1.0 and macro_f1(counts) == 1.0

    def test_unpredicted_class_counts_as_zero_in_macro(self):
        # class C never appears in gold or predictions: contributes 0
        counts = confusion(["A", "B"], ["A", "B"], ["A", "B", "C"])
        assert macro_f1(counts) == pytest.approx(2.0 / 3.0, abs=1e-15)
        assert micro_f1(counts) == 1.0

    @given(st.lists(st.sampled_from("ABCD"), min_size=1, max_size=60), st.data())
    def test_micro_equals_accuracy(self, golds, data):
        preds = [data.draw(st.sampled_from("ABCD")) for _ in golds]
        counts = confusion(golds, preds, list("ABCD"))
        accuracy = sum(g == p for g, p in zip(golds, preds)) / len(golds)
        assert micro_f1(counts) == pytest.approx(accuracy, abs=1e-15)

    def test_matches_naive_oracle_on_random_sets(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            golds, preds, catalog = _random_prediction_set(rng)
            report = evaluate(golds, preds, catalog)
            expected = naive_metrics(golds, preds, catalog)
            assert abs(report.micro_f1 - expected["micro_f1"]) < 1e-12
            assert abs(report.macro_f1 - expected["macro_f1"]) < 1e-12
            for label in catalog:
                got = report.per_class[label]
                want = expected["per_class"][label]
                assert all(abs(g - w) < 1e-12 for g, w in zip(got, want))

    def test_macro_is_mean_of_per_class_f1(self):
        rng = np.random.default_rng(5)
        golds, preds, catalog = _random_prediction_set(rng)
        report = evaluate(golds, preds, catalog)
        mean = sum(f for _, _, f in report.per_class.values()) / len(catalog)
        assert report.macro_f1 == pytest.approx(mean, abs=1e-15)

    def test_joint_permutation_invariance(self):
        rng = np.random.default_rng(9)
        golds, preds, catalog = _random_prediction_set(rng)
        base = evaluate(golds, preds, catalog)
        order = rng.permutation(len(golds))
        shuffled = evaluate([golds[i] for i in order], [preds[i] for i in order], catalog)
        assert base.micro_f1 == shuffled.micro_f1
        assert base.macro_f1 == shuffled.macro_f1
        assert base.per_class == shuffled.per_class


class TestSummarizeSeeds:
    def _report(self, micro, macro, seed):
        return EvalReport(
            per_class={"A": (1.0, 1.0, 1.0)},
            micro_f1=micro,
            macro_f1=macro,
            n_examples=10,
            n_classes=1,
            seed=seed,
        )

    def test_identical_reports_zero_std(self):
        summary = summarize_seeds([self._report(0.5, 0.4, s) for s in (1, 2, 3)])
        assert summary.mean["micro_f1"] == 0.5
        assert summary.std["micro_f1"] == 0.0

    def test_hand_computed_mean_and_std(self):
        summary = summarize_seeds([self._report(0.6, 0.6, 1), self._report(0.7, 0.7, 2)])
        assert summary.mean["micro_f1"] == pytest.approx(0.65, abs=1e-15)
        assert summary.std["micro_f1"] == pytest.approx(math.sqrt(0.005), abs=1e-12)
        assert summary.std["micro_f1"] == pytest.approx(0.0707, abs=5e-5)

    def test_single_report_has_no_std(self):
        summary = summarize_seeds([self._report(0.6, 0.5, 1)])
        assert summary.std["micro_f1"] is None
        assert summary.mean["macro_f1"] == 0.5

    def test_catalog_mismatch_rejected(self):
        other = EvalReport(
            per_class={"B": (1.0, 1.0, 1.0)},
            micro_f1=0.5,
            macro_f1=0.5,
            n_examples=10,
            n_classes=1,
            seed=4,
        )
        with pytest.raises(ValueError, match="mismatch"):
            summarize_seeds([self._report(0.5, 0.5, 1), other])

    def test_no_reports_rejected(self):
        with pytest.raises(ValueError):
            summarize_seeds([])


def test_report_serialization_declares_macro_convention():
    report = evaluate(["A", "B"], ["A", "B"], ["A", "B"], seed=3)
    payload = report.to_dict()
    assert payload["seed"] == 3
    assert "gold catalog" in payload["macro_convention"]
    assert payload["per_class"]["A"]["f1"] == 1.0
