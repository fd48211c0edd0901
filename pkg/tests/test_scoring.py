"""Gated run metrics.

The expected aggregate numbers are hand-enumerated from the four-instance
table in ``_INSTANCES`` so a regression in the gating arithmetic cannot
hide behind the implementation recomputing itself.
"""

import random

import pytest

from veristack.core import Label, PipelineConfig
from veristack.errors import EmptyInstances, MissingGold
from veristack.evaluation.judge import LexicalJudge
from veristack.evaluation.scoring import (
    GoldRecord,
    InstanceScore,
    PredRecord,
    evidence_eval,
    justification_at,
    question_eval,
    score_instances,
    score_run,
    veracity_at,
)


def _inst(cid, q, ev, ok, jus):
    return InstanceScore(
        claim_id=cid,
        question_score=q,
        evidence_score=ev,
        label_correct=ok,
        justification_score=jus,
    )


# (question, evidence, label_correct, justification) per instance:
#   i1: 0.6, 0.5, True,  0.8
#   i2: 0.4, 0.2, True,  0.6
#   i3: 1.0, 0.9, False, 1.0
#   i4: 0.0, 0.0, False, 0.5
_INSTANCES = [
    _inst("i1", 0.6, 0.5, True, 0.8),
    _inst("i2", 0.4, 0.2, True, 0.6),
    _inst("i3", 1.0, 0.9, False, 1.0),
    _inst("i4", 0.0, 0.0, False, 0.5),
]


class TestInstanceScore:
    def test_rejects_out_of_range_scores(self):
        with pytest.raises(ValueError, match="question_score"):
            _inst("x", 1.2, 0.5, True, 0.5)
        with pytest.raises(ValueError, match="evidence_score"):
            _inst("x", 0.5, -0.1, True, 0.5)
        with pytest.raises(ValueError, match="justification_score"):
            _inst("x", 0.5, 0.5, True, 1.001)

    def test_bounds_are_inclusive(self):
        _inst("x", 0.0, 1.0, False, 0.0)


class TestAggregates:
    def test_question_eval(self):
        assert question_eval(_INSTANCES) == pytest.approx(0.5)

    def test_evidence_eval(self):
        assert evidence_eval(_INSTANCES) == pytest.approx(0.4)

    def test_veracity_ungated(self):
        # i1 and i2 have correct labels and evidence >= 0.
        assert veracity_at(_INSTANCES, 0.0) == pytest.approx(0.5)

    def test_veracity_gate_drops_weak_evidence(self):
        # i2's evidence 0.2 fails the 0.3 gate despite the correct label.
        assert veracity_at(_INSTANCES, 0.3) == pytest.approx(0.25)

    def test_veracity_gate_can_zero_out(self):
        assert veracity_at(_INSTANCES, 0.6) == 0.0

    def test_gate_boundary_is_inclusive(self):
        only = [_inst("x", 0.5, 0.3, True, 0.5)]
        assert veracity_at(only, 0.3) == 1.0

    def test_justification_ungated(self):
        assert justification_at(_INSTANCES, 0.0) == pytest.approx(0.725)

    def test_justification_gated_divides_by_all(self):
        # Only i1 (0.8) and i3 (1.0) pass the gate; denominator stays 4.
        assert justification_at(_INSTANCES, 0.3) == pytest.approx(0.45)

    @pytest.mark.parametrize(
        "fn", [question_eval, evidence_eval],
        ids=["question_eval", "evidence_eval"],
    )
    def test_empty_instances_rejected(self, fn):
        with pytest.raises(EmptyInstances):
            fn([])

    def test_empty_instances_rejected_gated(self):
        with pytest.raises(EmptyInstances):
            veracity_at([], 0.0)
        with pytest.raises(EmptyInstances):
            justification_at([], 0.0)

    def test_gating_monotone_on_random_sets(self):
        rng = random.Random(4242)
        for _ in range(20):
            instances = [
                _inst(
                    f"c{n}",
                    rng.random(),
                    rng.random(),
                    rng.random() < 0.5,
                    rng.random(),
                )
                for n in range(rng.randint(1, 30))
            ]
            assert veracity_at(instances, 0.0) >= veracity_at(instances, 0.3)
            assert justification_at(instances, 0.0) >= justification_at(
                instances, 0.3
            )


def _gold(cid, label, question, answer, justification):
    return GoldRecord(
        claim_id=cid,
        label=label,
        pairs=((question, answer),),
        justification=justification,
    )


class TestScoreInstances:
    def test_perfect_prediction(self):
        golds = [
            _gold(
                "c1",
                Label.SUPPORTED,
                "who confirmed the figure",
                "grid operators confirmed the figure",
                "grid operators confirmed the figure",
            )
        ]
        preds = [
            PredRecord(
                claim_id="c1",
                label=Label.SUPPORTED,
                pairs=golds[0].pairs,
                justification=golds[0].justification,
            )
        ]
        (score,) = score_instances(preds, golds, LexicalJudge())
        assert score.claim_id == "c1"
        assert score.question_score == 1.0
        assert score.evidence_score == 1.0
        assert score.label_correct is True
        assert score.justification_score == 1.0

    def test_wrong_and_missing_labels(self):
        golds = [
            _gold("c1", Label.REFUTED, "q one", "a one", "j one"),
            _gold("c2", Label.REFUTED, "q two", "a two", "j two"),
        ]
        preds = [
            PredRecord("c1", Label.SUPPORTED, (("q one", "a one"),), "j one"),
            PredRecord("c2", None, (("q two", "a two"),), "j two"),
        ]
        scores = score_instances(preds, golds, LexicalJudge())
        assert [s.label_correct for s in scores] == [False, False]

    def test_prediction_order_preserved(self):
        golds = [
            _gold("c1", Label.SUPPORTED, "q", "a", "j"),
            _gold("c2", Label.SUPPORTED, "q", "a", "j"),
        ]
        preds = [
            PredRecord("c2", Label.SUPPORTED, (("q", "a"),), "j"),
            PredRecord("c1", Label.SUPPORTED, (("q", "a"),), "j"),
        ]
        scores = score_instances(preds, golds, LexicalJudge())
        assert [s.claim_id for s in scores] == ["c2", "c1"]

    def test_missing_gold_is_an_error(self):
        golds = [_gold("c1", Label.SUPPORTED, "q", "a", "j")]
        preds = [PredRecord("c9", Label.SUPPORTED, (("q", "a"),), "j")]
        with pytest.raises(MissingGold, match="c9"):
            score_instances(preds, golds, LexicalJudge())


class _SequenceJudge:
    """Returns scripted question scores; everything else is 1.0."""

    name = "sequence"

    def __init__(self, values):
        self.values = list(values)

    def question_score(self, gold, system):
        return self.values.pop(0)

    def evidence_score(self, gold, system):
        return 1.0

    def justification_score(self, gold, system):
        return 1.0


class TestScoreRun:
    def _fixture(self):
        golds = [
            _gold(
                "c1",
                Label.SUPPORTED,
                "who confirmed the figure",
                "grid operators confirmed the figure",
                "grid operators confirmed the figure",
            ),
            _gold(
                "c2",
                Label.REFUTED,
                "when did the bridge fail",
                "inspection logs show no failure",
                "inspection logs show no failure",
            ),
        ]
        preds = [
            PredRecord("c1", Label.SUPPORTED, golds[0].pairs, golds[0].justification),
            # Correct label but answers share no tokens with gold, so the
            # 0.3 evidence gate removes this instance from veracity.
            PredRecord("c2", Label.REFUTED, (("zzz qqq", "xxx yyy www"),), "zzz"),
        ]
        return preds, golds

    def test_report_shape(self):
        preds, golds = self._fixture()
        report = score_run(preds, golds, LexicalJudge())
        assert set(report) == {
            "q_eval",
            "evid_eval",
            "veracity",
            "justification",
            "judge",
            "runs",
            "instances",
            "image_matching",
        }
        assert set(report["veracity"]) == {"0.0", "0.3"}
        assert set(report["justification"]) == {"0.0", "0.3"}
        assert report["judge"] == "lexical"
        assert report["runs"] == 1
        assert report["instances"] == 2
        assert report["image_matching"] == "skipped"

    def test_gate_visible_in_report(self):
        preds, golds = self._fixture()
        report = score_run(preds, golds, LexicalJudge())
        assert report["veracity"]["0.0"] == pytest.approx(1.0)
        assert report["veracity"]["0.3"] == pytest.approx(0.5)

    def test_default_config_gates_at_three_tenths(self):
        assert PipelineConfig().lambdas == (0.0, 0.3)

    def test_repeated_runs_aggregate(self):
        preds, golds = self._fixture()
        report = score_run(preds, golds, LexicalJudge(), runs=3)
        assert report["runs"] == 3
        # Deterministic judge: zero spread, mean equals the single-run value.
        single = score_run(preds, golds, LexicalJudge())
        assert report["q_eval"]["std"] == pytest.approx(0.0)
        assert report["q_eval"]["mean"] == pytest.approx(single["q_eval"])
        assert report["veracity"]["0.3"]["mean"] == pytest.approx(
            single["veracity"]["0.3"]
        )

    def test_noisy_judge_spread(self):
        golds = [_gold("c1", Label.SUPPORTED, "q", "a", "j")]
        preds = [PredRecord("c1", Label.SUPPORTED, (("q", "a"),), "j")]
        report = score_run(preds, golds, _SequenceJudge([0.2, 0.6]), runs=2)
        assert report["q_eval"]["mean"] == pytest.approx(0.4)
        assert report["q_eval"]["std"] == pytest.approx(0.2)

    def test_empty_predictions_rejected(self):
        with pytest.raises(EmptyInstances):
            score_run([], [], LexicalJudge())

    def test_zero_runs_rejected(self):
        preds, golds = self._fixture()
        with pytest.raises(ValueError, match="runs"):
            score_run(preds, golds, LexicalJudge(), runs=0)
