"""Training and evaluating the toy instance-segmentation pipeline."""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from src.bonet.blocks import block_merge, block_partition
from src.bonet.evaluation import eval_dataset
from src.bonet.inference import InstanceLabels, infer_scene
from src.bonet.losses import LossConfig
from src.bonet.model import BonetModel, BonetModelConfig
from src.bonet.scene import CLUTTER, Scene
from src.bonet.trainer import BonetTrainConfig, train_bonet
from src.box_assoc.costs import CRITERIA
from src.synthesis import SynthConfig, make_scene_split

logger = logging.getLogger(__name__)


class BonetExperimentError(Exception):
    """Raised for invalid experiment settings or missing checkpoints."""

    pass


@dataclass
class BonetExperimentConfig:
    """Network widths, loss switches, budgets and inference thresholds."""

    seeds: tuple[int, ...] = (0, 1, 2)
    iterations: int = 2000
    lr: float = 1e-3
    log_every: int = 10
    num_boxes: int = 8
    point_hidden: int = 32
    embed_width: int = 64
    feature_width: int = 64
    box_hidden: int = 64
    mask_width: int = 32
    mask_hidden: int = 32
    semantic_hidden: int = 32
    score_loss: bool = True
    box_supervision: bool = True
    criteria: tuple[str, ...] = CRITERIA
    mask_loss: str = "focal"
    assignment_gradient: str = "constant"
    temperature: float = 1.0
    score_threshold: float = 0.5
    mask_threshold: float = 0.5
    iou_threshold: float = 0.5
    block_mode: bool = False
    block_size: float = 1.0
    block_stride: float = 0.5
    block_cell: float = 0.1

    def model_config(self, synth: SynthConfig) -> BonetModelConfig:
        return BonetModelConfig(
            channels=synth.channels,
            point_hidden=self.point_hidden,
            embed_width=self.embed_width,
            feature_width=self.feature_width,
            box_hidden=self.box_hidden,
            num_boxes=self.num_boxes,
            mask_width=self.mask_width,
            mask_hidden=self.mask_hidden,
            semantic_hidden=self.semantic_hidden,
            num_classes=3,
        )

    def loss_config(self) -> LossConfig:
        return LossConfig(
            score_loss=self.score_loss,
            box_supervision=self.box_supervision,
            criteria=self.criteria,
            mask_loss=self.mask_loss,
            assignment_gradient=self.assignment_gradient,
            temperature=self.temperature,
        )

    def validate(self) -> None:
        errors = []
        if not self.seeds:
            errors.append("at least one seed is required")
        for name in ("score_threshold", "mask_threshold", "iou_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                errors.append(f"{name} must lie in (0, 1], got {value}")
        if self.block_size <= 0 or self.block_stride <= 0 or self.block_cell <= 0:
            errors.append("block_size, block_stride and block_cell must be positive")
        if self.iterations < 1:
            errors.append(f"iterations must be at least 1, got {self.iterations}")
        if errors:
            raise BonetExperimentError("; ".join(errors))
        self.loss_config().validate()


def checkpoint_path(root: Path, seed: int) -> Path:
    return root / f"seed_{seed}"


def _train_seed(
    seed: int,
    cfg: BonetExperimentConfig,
    synth: SynthConfig,
    scenes: list[Scene],
    root: Path,
) -> list[dict]:
    model = BonetModel(cfg.model_config(synth), np.random.default_rng(seed))
    train_cfg = BonetTrainConfig(
        iterations=cfg.iterations, lr=cfg.lr, seed=seed, log_every=cfg.log_every
    )
    result = train_bonet(model, scenes, cfg.loss_config(), train_cfg)
    model.save(checkpoint_path(root, seed))
    return [{"seed": seed, **row} for row in result.history]


def run_bonet_training(
    cfg: BonetExperimentConfig, synth: SynthConfig, checkpoint_root: Path, jobs: int = 1
) -> pd.DataFrame:
    """Train one model per seed, save checkpoints and return the loss curves."""
    cfg.validate()
    synth.validate()
    scenes = make_scene_split(synth, train=True)

    def _run(seed: int) -> list[dict]:
        return _train_seed(seed, cfg, synth, scenes, checkpoint_root)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run, cfg.seeds))
    else:
        outputs = [_run(seed) for seed in cfg.seeds]
    return pd.DataFrame([row for rows in outputs for row in rows])


def load_model(
    cfg: BonetExperimentConfig, synth: SynthConfig, checkpoint_root: Path, seed: int
) -> BonetModel:
    directory = checkpoint_path(checkpoint_root, seed)
    if not directory.is_dir():
        raise BonetExperimentError(f"no checkpoint for seed {seed} at {directory}")
    model = BonetModel(cfg.model_config(synth), np.random.default_rng(seed))
    model.load(directory)
    return model


def infer_blocks(
    scene: Scene, model: BonetModel, cfg: BonetExperimentConfig
) -> InstanceLabels:
    """Label a scene block by block and merge the block labels."""
    blocks = block_partition(scene, cfg.block_size, cfg.block_stride)
    block_labels = []
    point_semantics = np.full(scene.n, -1, dtype=np.int64)
    for block in blocks:
        labels = infer_scene(
            scene.subset(block.indices), model, cfg.score_threshold, cfg.mask_threshold
        )
        block_labels.append(labels.point_ids)
        for local, cls in labels.semantics.items():
            members = block.indices[labels.point_ids == local]
            unset = members[point_semantics[members] < 0]
            point_semantics[unset] = cls

    merged = block_merge(scene.xyz, blocks, block_labels, cfg.block_cell)
    semantics = {}
    for instance in np.unique(merged[merged != CLUTTER]):
        votes = Counter(
            int(s) for s in point_semantics[merged == instance] if s >= 0
        )
        semantics[int(instance)] = (
            min(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0] if votes else 0
        )
    return InstanceLabels(point_ids=merged, semantics=semantics)


def evaluate_model(
    model: BonetModel, scenes: list[Scene], cfg: BonetExperimentConfig
) -> tuple[float, float]:
    pairs = []
    for scene in scenes:
        if cfg.block_mode:
            pred = infer_blocks(scene, model, cfg)
        else:
            pred = infer_scene(scene, model, cfg.score_threshold, cfg.mask_threshold)
        pairs.append((pred, InstanceLabels.from_scene(scene)))
    return eval_dataset(pairs, cfg.iou_threshold)


def run_bonet_evaluation(
    cfg: BonetExperimentConfig, synth: SynthConfig, checkpoint_root: Path
) -> pd.DataFrame:
    """mPrec / mRec of every seed's checkpoint on the train and held-out scenes."""
    cfg.validate()
    synth.validate()
    splits = {
        "train": make_scene_split(synth, train=True),
        "test": make_scene_split(synth, train=False),
    }
    mode = "block" if cfg.block_mode else "scene"
    rows = []
    for seed in cfg.seeds:
        model = load_model(cfg, synth, checkpoint_root, seed)
        for split, scenes in splits.items():
            mprec, mrec = evaluate_model(model, scenes, cfg)
            rows.append(
                {
                    "seed": seed,
                    "split": split,
                    "mode": mode,
                    "mprec": mprec,
                    "mrec": mrec,
                }
            )
            logger.info(
                f"seed {seed} {split} ({mode}): mPrec {mprec:.3f}, mRec {mrec:.3f}"
            )
    return pd.DataFrame(rows)


def acceptance_failures(
    table: pd.DataFrame, min_precision: float = 0.7, min_recall: float = 0.7
) -> list[str]:
    """Seed-averaged mPrec / mRec floors on the held-out split."""
    held_out = table[table["split"] == "test"]
    if held_out.empty:
        return ["no held-out evaluation rows"]
    mprec, mrec = float(held_out["mprec"].mean()), float(held_out["mrec"].mean())
    failures = []
    if mprec < min_precision:
        failures.append(f"held-out mPrec {mprec:.3f} below {min_precision}")
    if mrec < min_recall:
        failures.append(f"held-out mRec {mrec:.3f} below {min_recall}")
    return failures
