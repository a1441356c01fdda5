"""Seed-averaged trend checks on the full default experiments.

These train every model at its default budget and take minutes, so every
test here is marked slow.
"""

import pytest

from src.bonet.experiment import (
    BonetExperimentConfig,
    acceptance_failures,
    run_bonet_evaluation,
    run_bonet_training,
)
from src.faset.experiment import (
    FasetExperimentConfig,
    run_faset_experiment,
    trend_failures,
)
from src.synthesis import SynthConfig


@pytest.fixture(scope="module")
def faset_summary():
    """Seed-averaged IoU per model and view count at the default budgets."""
    result = run_faset_experiment(FasetExperimentConfig(), SynthConfig(), jobs=4)
    return result.summary.set_index(["model", "n"])["iou"]


def _held_out_mprec(table) -> float:
    return float(table.loc[table["split"] == "test", "mprec"].mean())


@pytest.fixture(scope="module")
def bonet_tables(tmp_path_factory):
    """Held-out evaluation of the full objective and of the score-loss ablation."""
    synth = SynthConfig()
    tables = {}
    for name, cfg in (
        ("full", BonetExperimentConfig()),
        ("no_score", BonetExperimentConfig(score_loss=False)),
    ):
        root = tmp_path_factory.mktemp(name)
        run_bonet_training(cfg, synth, root, jobs=3)
        tables[name] = run_bonet_evaluation(cfg, synth, root)
    return tables


@pytest.mark.slow
class TestFasetTrends:
    """Test the two-stage training trends against joint training and pooling."""

    def test_two_stage_beats_joint_at_one_view(self, faset_summary):
        """Test that two-stage AttSets leads joint training by 0.02 at N=1."""
        assert (
            faset_summary[("attsets_faset", 1)]
            >= faset_summary[("attsets_joint", 1)] + 0.02
        )

    def test_more_views_do_not_hurt(self, faset_summary):
        """Test that eight views score at least as well as one."""
        one = faset_summary[("attsets_faset", 1)]
        assert faset_summary[("attsets_faset", 8)] >= one

    @pytest.mark.parametrize("pooling", ["max", "mean", "sum"])
    def test_keeps_up_with_pooling(self, faset_summary, pooling):
        """Test that two-stage AttSets stays within 0.01 of pooling at N=8."""
        assert (
            faset_summary[("attsets_faset", 8)] >= faset_summary[(pooling, 8)] - 0.01
        )

    def test_trend_report_is_clean(self, faset_summary):
        """Test that the command's own trend check finds nothing to report."""
        summary = faset_summary.reset_index()
        assert trend_failures(summary) == []


@pytest.mark.slow
class TestBonetAcceptance:
    """Test held-out instance quality and the score-branch ablation."""

    def test_precision_and_recall_floors(self, bonet_tables):
        """Test that held-out mPrec and mRec both reach 0.7."""
        assert acceptance_failures(bonet_tables["full"]) == []

    def test_removing_score_loss_does_not_raise_precision(self, bonet_tables):
        """Test that training without the score loss gives no better mPrec."""
        assert _held_out_mprec(bonet_tables["no_score"]) <= _held_out_mprec(
            bonet_tables["full"]
        )
