"""Multi-view reconstruction with attentional aggregation and two-stage training."""

from src.faset.evaluation import EvaluationError, evaluate_over_view_counts
from src.faset.experiment import (
    ExperimentResult,
    FasetExperimentConfig,
    run_faset_experiment,
    trend_failures,
)
from src.faset.model import FasetModelConfig, MultiViewModel
from src.faset.trainer import (
    TrainConfig,
    TrainConfigError,
    TrainResult,
    train_joint,
    train_stage1,
    train_stage2,
)

__all__ = [
    "EvaluationError",
    "ExperimentResult",
    "FasetExperimentConfig",
    "FasetModelConfig",
    "MultiViewModel",
    "TrainConfig",
    "TrainConfigError",
    "TrainResult",
    "evaluate_over_view_counts",
    "run_faset_experiment",
    "train_joint",
    "train_stage1",
    "train_stage2",
    "trend_failures",
]
