"""Benchmark of AttSets (two-stage and joint) against pooling baselines."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.faset.evaluation import evaluate_over_view_counts
from src.faset.model import FasetModelConfig, MultiViewModel
from src.faset.trainer import TrainConfig, train_joint, train_stage1, train_stage2
from src.synthesis import SynthConfig, make_multiview_split, make_projections

logger = logging.getLogger(__name__)

MODELS = ("attsets_faset", "attsets_joint", "max", "mean", "sum")


class ExperimentConfigError(Exception):
    """Raised for invalid experiment settings."""

    pass


@dataclass
class FasetExperimentConfig:
    """Budgets and evaluation grid shared by every compared model."""

    seeds: tuple[int, ...] = (0, 1, 2)
    models: tuple[str, ...] = MODELS
    attention_mode: str = "feature"
    encoder_hidden: int = 64
    feature_width: int = 32
    decoder_hidden: int = 128
    stage1_iterations: int = 500
    stage2_iterations: int = 300
    batch_size: int = 16
    lr: float = 1e-3
    baseline_lr: float = 1e-5
    stage2_n: int = 4
    stage2_n_max: int = 0
    eval_ns: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    threshold: float = 0.35

    def validate(self) -> None:
        errors = []
        if not self.seeds:
            errors.append("at least one seed is required")
        unknown = [m for m in self.models if m not in MODELS]
        if unknown or not self.models:
            errors.append(f"models must be drawn from {MODELS}, got {self.models}")
        if self.attention_mode not in ("feature", "element"):
            errors.append(
                "attention_mode must be feature or element, "
                f"got {self.attention_mode!r}"
            )
        if self.stage2_n < 1:
            errors.append(f"stage2_n must be at least 1, got {self.stage2_n}")
        elif self.stage2_n == 1 and self.stage2_n_max == 0:
            errors.append("stage2_n must exceed 1 unless stage2_n_max samples sizes")
        if self.stage2_n_max < 0:
            errors.append(f"stage2_n_max must be non-negative, got {self.stage2_n_max}")
        if not self.eval_ns or min(self.eval_ns) < 1:
            errors.append(f"eval_ns must be positive view counts, got {self.eval_ns}")
        if not 0.0 < self.threshold < 1.0:
            errors.append(f"threshold must lie in (0, 1), got {self.threshold}")
        for name in ("stage1_iterations", "stage2_iterations", "batch_size"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be at least 1, got {getattr(self, name)}")
        if errors:
            raise ExperimentConfigError("; ".join(errors))

    def aggregator_for(self, model: str) -> str:
        if model.startswith("attsets"):
            return "attsets_element" if self.attention_mode == "element" else "attsets"
        return model

    def regime_for(self, model: str) -> str:
        return "joint" if model == "attsets_joint" else "faset"


@dataclass
class ExperimentResult:
    records: pd.DataFrame
    curves: pd.DataFrame
    summary: pd.DataFrame = field(init=False)

    def __post_init__(self):
        self.summary = (
            self.records.groupby(["model", "regime", "n"], sort=False)[["iou", "ce"]]
            .mean()
            .reset_index()
        )


def _train_config(cfg: FasetExperimentConfig, seed: int, **overrides) -> TrainConfig:
    base = TrainConfig(
        n=cfg.stage2_n,
        n_max=cfg.stage2_n_max,
        batch_size=cfg.batch_size,
        lr=cfg.lr,
        baseline_lr=cfg.baseline_lr,
        seed=seed,
    )
    for key, value in overrides.items():
        setattr(base, key, value)
    return base


def run_single(
    model_name: str,
    seed: int,
    cfg: FasetExperimentConfig,
    synth: SynthConfig,
    train_data: list,
    test_data: list,
) -> tuple[list[dict], list[dict]]:
    """Train and evaluate one (model, seed) pair.

    Returns:
        (IoU records, loss-curve records)
    """
    model_cfg = FasetModelConfig(
        input_width=synth.input_width,
        encoder_hidden=cfg.encoder_hidden,
        feature_width=cfg.feature_width,
        decoder_hidden=cfg.decoder_hidden,
        grid_size=synth.grid_size,
        aggregator=cfg.aggregator_for(model_name),
    )
    model = MultiViewModel(model_cfg, np.random.default_rng(seed))
    regime = cfg.regime_for(model_name)

    if regime == "joint":
        results = [
            train_joint(
                model,
                train_data,
                _train_config(
                    cfg, seed, iterations=cfg.stage1_iterations + cfg.stage2_iterations
                ),
            )
        ]
    else:
        stage1 = train_stage1(
            model,
            train_data,
            _train_config(cfg, seed, n=1, n_max=0, iterations=cfg.stage1_iterations),
        )
        stage2 = train_stage2(
            model,
            train_data,
            _train_config(cfg, seed + 1, iterations=cfg.stage2_iterations),
        )
        results = [stage1, stage2]

    curves = [
        {"model": model_name, "seed": seed, **row}
        for result in results
        for row in result.history
    ]
    table = evaluate_over_view_counts(model, test_data, cfg.eval_ns, cfg.threshold)
    records = [
        {"model": model_name, "regime": regime, "n": int(row.n), "iou": row.iou,
         "ce": row.ce, "seed": seed}
        for row in table.itertuples()
    ]
    logger.info(
        f"{model_name} seed {seed}: IoU(n=1) {table.iou.iloc[0]:.4f}, "
        f"IoU(n={int(table.n.iloc[-1])}) {table.iou.iloc[-1]:.4f}"
    )
    return records, curves


def run_faset_experiment(
    cfg: FasetExperimentConfig, synth: SynthConfig, jobs: int = 1
) -> ExperimentResult:
    """Train every configured model for every seed under identical budgets.

    Independent (model, seed) runs may execute on worker threads; records are
    assembled in configuration order regardless.
    """
    cfg.validate()
    synth.validate()
    needed = max(*cfg.eval_ns, cfg.stage2_n, cfg.stage2_n_max)
    if needed > synth.views:
        raise ExperimentConfigError(
            f"experiment needs up to {needed} views, dataset has {synth.views}"
        )
    projections = make_projections(synth)
    train_data = make_multiview_split(synth, projections, train=True)
    test_data = make_multiview_split(synth, projections, train=False)
    logger.info(
        f"FASet experiment: {len(train_data)} train / {len(test_data)} test samples, "
        f"models {list(cfg.models)}, seeds {list(cfg.seeds)}"
    )

    tasks = [(model, seed) for model in cfg.models for seed in cfg.seeds]

    def _run(task: tuple[str, int]) -> tuple[list[dict], list[dict]]:
        return run_single(task[0], task[1], cfg, synth, train_data, test_data)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run, tasks))
    else:
        outputs = [_run(task) for task in tasks]

    records = [row for rows, _ in outputs for row in rows]
    curves = [row for _, rows in outputs for row in rows]
    return ExperimentResult(records=pd.DataFrame(records), curves=pd.DataFrame(curves))


def trend_failures(
    summary: pd.DataFrame, margin: float = 0.02, slack: float = 0.01
) -> list[str]:
    """Seed-averaged trend checks on an experiment summary.

    Two-stage AttSets must beat joint training at one view by ``margin``,
    must not degrade from one view to the largest evaluated count, and must
    stay within ``slack`` of every pooling baseline at that count. Checks
    whose models or view counts are missing are skipped.

    Returns:
        Descriptions of the failed checks (empty when all hold)
    """
    iou = summary.set_index(["model", "n"])["iou"].to_dict()
    top = int(summary["n"].max())
    faset_one = iou.get(("attsets_faset", 1))
    faset_top = iou.get(("attsets_faset", top))
    joint_one = iou.get(("attsets_joint", 1))
    failures = []
    if None not in (faset_one, joint_one) and faset_one < joint_one + margin:
        failures.append(
            f"two-stage IoU at n=1 ({faset_one:.4f}) is not {margin} above "
            f"joint training ({joint_one:.4f})"
        )
    if None not in (faset_one, faset_top) and faset_top < faset_one:
        failures.append(
            f"two-stage IoU drops from n=1 ({faset_one:.4f}) to n={top} "
            f"({faset_top:.4f})"
        )
    for pooling in ("max", "mean", "sum"):
        baseline = iou.get((pooling, top))
        if None not in (faset_top, baseline) and faset_top < baseline - slack:
            failures.append(
                f"two-stage IoU at n={top} ({faset_top:.4f}) trails {pooling} "
                f"pooling ({baseline:.4f})"
            )
    return failures
