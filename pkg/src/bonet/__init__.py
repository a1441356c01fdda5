"""Toy point-cloud instance segmentation with explicit box prediction."""

from src.bonet.blocks import Block, BlockError, block_merge, block_partition
from src.bonet.evaluation import EvaluationError, eval_dataset, eval_mprec_mrec
from src.bonet.inference import InstanceLabels, assign_points, infer_scene
from src.bonet.losses import (
    LabelError,
    LossBreakdown,
    LossConfig,
    combined_loss,
    semantic_loss,
)
from src.bonet.model import BonetModel, BonetModelConfig, InstancePrediction
from src.bonet.scene import CLUTTER, Scene, SceneError

__all__ = [
    "CLUTTER",
    "Block",
    "BlockError",
    "BonetModel",
    "BonetModelConfig",
    "EvaluationError",
    "InstanceLabels",
    "InstancePrediction",
    "LabelError",
    "LossBreakdown",
    "LossConfig",
    "Scene",
    "SceneError",
    "assign_points",
    "block_merge",
    "block_partition",
    "combined_loss",
    "eval_dataset",
    "eval_mprec_mrec",
    "infer_scene",
    "semantic_loss",
]
