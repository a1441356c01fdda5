"""Named finite-difference checks over every differentiable building block.

Each check builds a small deterministic problem and returns a loss closure
with the parameters to perturb. ``run_gradcheck_suite`` runs them all and
returns a result dict in the same shape the CLI reports.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.aggregators import (
    AttentionMode,
    AttentionParams,
    FeatureSet,
    attsets_element,
    attsets_feature,
    pool_max,
    pool_mean,
    pool_sum,
)
from src.bonet.losses import LossConfig, combined_loss, semantic_loss
from src.bonet.model import BonetModel, BonetModelConfig, BoxBranch, MaskBranch
from src.bonet.scene import CLUTTER, Scene
from src.box_assoc.geometry import BoxSet, soft_point_in_box
from src.box_assoc.losses import assoc_and_losses, focal_mask_loss
from src.gan import MeanFeatureCritic, wgan_gp_losses
from src.reconstruction import binary_cross_entropy, weighted_bce
from src.tensor.core import (
    Tensor,
    clamp,
    concat,
    exp,
    expand,
    leaky_relu,
    log,
    max_axis,
    min_axis,
    mul,
    reshape,
    sigmoid,
    softmax_over_set,
    sqrt,
    sum_axis,
    take,
    transpose,
)
from src.tensor.gradcheck import GradCheckReport, grad_check, sign_flipped
from src.tensor.nn import MLP

logger = logging.getLogger(__name__)

Problem = tuple[Callable[[], Tensor], dict[str, Tensor]]


class SuiteError(Exception):
    """Raised when an unknown check is requested."""

    pass


@dataclass
class SuiteCheck:
    name: str
    build: Callable[[np.random.Generator], Problem]
    max_entries: int | None = None


def _param(rng: np.random.Generator, shape: tuple[int, ...]) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True)


def _weights(rng: np.random.Generator, shape: tuple[int, ...]) -> Tensor:
    return Tensor(rng.uniform(-1.0, 1.0, size=shape))


def _weighted_sum(x: Tensor, w: Tensor) -> Tensor:
    return sum_axis(mul(x, w))


def scene16() -> Scene:
    """Two boxes of six points each plus four clutter points."""
    rng = np.random.default_rng(16)
    first = rng.uniform([0.2, 0.2, 0.2], [0.8, 0.9, 0.6], size=(6, 3))
    second = rng.uniform([1.4, 1.1, 0.3], [2.0, 1.8, 1.0], size=(6, 3))
    clutter = rng.uniform(0.0, 2.2, size=(4, 3))
    return Scene(
        points=np.vstack([first, second, clutter]),
        instance_ids=np.array([0] * 6 + [1] * 6 + [CLUTTER] * 4),
        semantic_ids=np.array([0] * 6 + [1] * 6 + [2] * 4),
        num_classes=3,
    )


def _small_bonet_config() -> BonetModelConfig:
    return BonetModelConfig(
        point_hidden=6,
        embed_width=8,
        feature_width=8,
        box_hidden=8,
        num_boxes=3,
        mask_width=6,
        mask_hidden=6,
        semantic_hidden=6,
    )


# --- tensor ops -----------------------------------------------------------


def _matmul(rng: np.random.Generator) -> Problem:
    a, b = _param(rng, (3, 4)), _param(rng, (4, 2))
    w = _weights(rng, (3, 2))
    return (lambda: _weighted_sum(a @ b, w)), {"a": a, "b": b}


def _elementwise(rng: np.random.Generator) -> Problem:
    x = Tensor(rng.uniform(0.3, 1.5, size=(3, 3)), requires_grad=True)
    w = _weights(rng, (3, 3))

    def loss() -> Tensor:
        y = log(mul(sigmoid(x), 2.0) + 1.0) * exp(mul(x, 0.3)) / (mul(x, x) + 1.0)
        return _weighted_sum(sqrt(y) + leaky_relu(x - 0.1) + clamp(x, 0.0, 2.0), w)

    return loss, {"x": x}


def _softmax_over_set(rng: np.random.Generator) -> Problem:
    x = _param(rng, (5, 4))
    w = _weights(rng, (5, 4))
    return (lambda: _weighted_sum(softmax_over_set(x), w)), {"x": x}


def _min_max(rng: np.random.Generator) -> Problem:
    x = _param(rng, (4, 5))

    def loss() -> Tensor:
        return sum_axis(max_axis(x, axis=0)) - mul(sum_axis(min_axis(x, axis=1)), 0.5)

    return loss, {"x": x}


def _shape_ops(rng: np.random.Generator) -> Problem:
    a, b = _param(rng, (1, 3)), _param(rng, (2, 3))
    w = _weights(rng, (3, 4))

    def loss() -> Tensor:
        stacked = concat([expand(a, (2, 3)), b], axis=0)
        picked = take(stacked, np.array([0, 3, 2, 1]))
        return _weighted_sum(transpose(reshape(picked, (4, 3))), w)

    return loss, {"a": a, "b": b}


def _perceptron(rng: np.random.Generator) -> Problem:
    net = MLP([4, 6, 3], rng, final_activation="sigmoid")
    x = Tensor(rng.normal(size=(5, 4)))
    target = (rng.uniform(size=(5, 3)) > 0.5).astype(np.float64)
    return (lambda: binary_cross_entropy(net(x), target)), net.named_parameters()


# --- aggregators ----------------------------------------------------------


def _attsets_feature_bce(rng: np.random.Generator) -> Problem:
    x = _param(rng, (4, 8))
    params = AttentionParams.init(8, AttentionMode.FEATURE, rng)
    target = (rng.uniform(size=(1, 8)) > 0.5).astype(np.float64)

    def loss() -> Tensor:
        pooled = attsets_feature(FeatureSet(x), params)
        return binary_cross_entropy(sigmoid(pooled), target)

    return loss, {"x": x, "W": params.weight}


def _attsets_element(rng: np.random.Generator) -> Problem:
    x = _param(rng, (4, 6))
    params = AttentionParams.init(6, AttentionMode.ELEMENT, rng)
    w = _weights(rng, (1, 6))
    return (
        lambda: _weighted_sum(attsets_element(FeatureSet(x), params), w)
    ), {"x": x, "W": params.weight}


def _pooling(rng: np.random.Generator) -> Problem:
    x = _param(rng, (5, 4))
    w = _weights(rng, (1, 4))

    def loss() -> Tensor:
        fs = FeatureSet(x)
        return _weighted_sum(pool_max(fs) + pool_mean(fs) + mul(pool_sum(fs), 0.3), w)

    return loss, {"x": x}


# --- box association and losses -------------------------------------------


def _soft_point_in_box(rng: np.random.Generator) -> Problem:
    box = Tensor([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], requires_grad=True)
    points = rng.uniform(-0.15, 1.15, size=(12, 3))
    w = _weights(rng, (12,))
    return (lambda: _weighted_sum(soft_point_in_box(points, box), w)), {"box": box}


def _predicted_boxes(rng: np.random.Generator, scene: Scene, h: int) -> BoxSet:
    centers = np.vstack([scene.gt_boxes, scene.gt_boxes[:1]])[:h]
    jitter = rng.normal(0.0, 0.05, size=centers.shape)
    return BoxSet(
        boxes=Tensor(centers + jitter, requires_grad=True),
        scores=Tensor(rng.uniform(0.2, 0.8, size=h), requires_grad=True),
    )


def _bbox_fixed_assignment(rng: np.random.Generator) -> Problem:
    scene = scene16()
    pred = _predicted_boxes(rng, scene, 3)
    fixed = assoc_and_losses(
        pred, scene.gt_boxes, scene.box_masks(), scene.points
    ).assignment

    def loss() -> Tensor:
        return assoc_and_losses(
            pred, scene.gt_boxes, scene.box_masks(), scene.points, assignment=fixed
        ).bbox_loss

    return loss, {"boxes": pred.boxes}


def _box_score(rng: np.random.Generator) -> Problem:
    scene = scene16()
    pred = _predicted_boxes(rng, scene, 3)

    def loss() -> Tensor:
        return assoc_and_losses(
            pred, scene.gt_boxes, scene.box_masks(), scene.points
        ).score_loss

    return loss, {"scores": pred.scores}


def _focal(rng: np.random.Generator) -> Problem:
    logits = _param(rng, (2, 10))
    target = (rng.uniform(size=(2, 10)) > 0.5).astype(np.float64)
    return (lambda: focal_mask_loss(sigmoid(logits), target)), {"logits": logits}


def _weighted_bce(rng: np.random.Generator) -> Problem:
    logits = _param(rng, (1, 27))
    target = (rng.uniform(size=(1, 27)) > 0.5).astype(np.float64)
    return (lambda: weighted_bce(sigmoid(logits), target)), {"logits": logits}


def _semantic(rng: np.random.Generator) -> Problem:
    logits = _param(rng, (6, 3))
    labels = rng.integers(0, 3, size=6)

    def loss() -> Tensor:
        exps = exp(logits)
        probs = exps / expand(sum_axis(exps, axis=1, keepdims=True), exps.shape)
        return semantic_loss(probs, labels)

    return loss, {"logits": logits}


# --- network branches -----------------------------------------------------


def _box_branch_bbox(rng: np.random.Generator) -> Problem:
    scene = scene16()
    config = _small_bonet_config()
    branch = BoxBranch(config, rng)
    global_ = Tensor(rng.normal(size=(1, config.embed_width)))
    fixed = assoc_and_losses(
        branch(global_), scene.gt_boxes, scene.box_masks(), scene.points
    ).assignment

    def loss() -> Tensor:
        return assoc_and_losses(
            branch(global_), scene.gt_boxes, scene.box_masks(), scene.points,
            assignment=fixed,
        ).bbox_loss

    return loss, branch.named_parameters()


def _mask_branch_focal(rng: np.random.Generator) -> Problem:
    scene = scene16()
    config = _small_bonet_config()
    branch = MaskBranch(config, rng)
    local = Tensor(rng.normal(size=(scene.n, config.feature_width)))
    global_ = Tensor(rng.normal(size=(1, config.embed_width)))
    boxes = _predicted_boxes(rng, scene, config.num_boxes)
    boxes = BoxSet(boxes=Tensor(boxes.boxes.data), scores=Tensor(boxes.scores.data))
    paired = np.array([0, 1])

    def loss() -> Tensor:
        masks = take(branch(local, global_, boxes), paired)
        return focal_mask_loss(masks, scene.instance_masks())

    return loss, branch.named_parameters()


def _combined_scene16(rng: np.random.Generator) -> Problem:
    scene = scene16()
    model = BonetModel(_small_bonet_config(), rng)
    _, association = combined_loss(scene, model(scene.points))
    fixed = association.assignment

    def loss() -> Tensor:
        breakdown, _ = combined_loss(scene, model(scene.points), LossConfig(), fixed)
        return breakdown.total

    return loss, model.named_parameters()


def _wgan_gp_critic(rng: np.random.Generator) -> Problem:
    critic = MeanFeatureCritic(2, 1, rng, hidden=6, features=4, constant_init=False)
    real = rng.normal(size=(4, 2))
    fake = rng.normal(1.0, 1.0, size=(4, 2))
    condition = rng.integers(0, 2, size=(4, 1)).astype(np.float64)

    # a wide input step keeps difference-quotient rounding below the tolerance
    def loss() -> Tensor:
        return wgan_gp_losses(
            critic, condition, fake, real, np.random.default_rng(7), lam=1.0, h=0.05
        ).critic

    return loss, critic.named_parameters()


CHECKS: tuple[SuiteCheck, ...] = (
    SuiteCheck("matmul", _matmul),
    SuiteCheck("elementwise_chain", _elementwise),
    SuiteCheck("softmax_over_set", _softmax_over_set),
    SuiteCheck("min_max", _min_max),
    SuiteCheck("concat_expand_take", _shape_ops),
    SuiteCheck("perceptron_bce", _perceptron),
    SuiteCheck("attsets_feature_bce", _attsets_feature_bce),
    SuiteCheck("attsets_element", _attsets_element),
    SuiteCheck("pooling", _pooling),
    SuiteCheck("soft_point_in_box", _soft_point_in_box),
    SuiteCheck("bbox_loss_fixed_assignment", _bbox_fixed_assignment),
    SuiteCheck("box_score_loss", _box_score),
    SuiteCheck("focal_mask_loss", _focal),
    SuiteCheck("weighted_bce", _weighted_bce),
    SuiteCheck("semantic_loss", _semantic),
    SuiteCheck("box_branch_bbox", _box_branch_bbox, max_entries=12),
    SuiteCheck("mask_branch_focal", _mask_branch_focal, max_entries=12),
    SuiteCheck("combined_loss_scene16", _combined_scene16, max_entries=6),
    SuiteCheck("wgan_gp_critic", _wgan_gp_critic, max_entries=8),
)


def run_check(
    check: SuiteCheck,
    seed: int = 0,
    tolerance: float = 1e-4,
    sign_flip: bool = False,
    stream: int = 0,
) -> GradCheckReport:
    rng = np.random.default_rng([seed, stream])
    f, params = check.build(rng)
    loss = (lambda: sign_flipped(f())) if sign_flip else f
    return grad_check(
        loss,
        params,
        tolerance=tolerance,
        max_entries=check.max_entries,
        seed=seed,
        name=check.name,
    )


def run_gradcheck_suite(
    seed: int = 0,
    tolerance: float = 1e-4,
    only: tuple[str, ...] = (),
    sign_flip: bool = False,
) -> dict:
    """Run every check (or the named subset).

    Args:
        seed: Seed for the check problems and for entry sampling
        tolerance: Largest acceptable relative error
        only: Restrict to these check names
        sign_flip: Negate every analytic gradient; every non-trivial check
            must then fail

    Returns:
        Dict with status "success" or "failed", the per-check ``report``
        DataFrame and the elapsed seconds
    """
    selected = [c for c in CHECKS if not only or c.name in only]
    unknown = sorted(set(only) - {c.name for c in CHECKS})
    if unknown:
        raise SuiteError(f"unknown gradient checks: {', '.join(unknown)}")

    start = time.perf_counter()
    rows = []
    for check in selected:
        report = run_check(check, seed, tolerance, sign_flip, CHECKS.index(check))
        rows.append(report.to_dict())
        if not report.passed:
            logger.warning(f"{check.name}: max relative error {report.max_error:.3e}")
    elapsed = time.perf_counter() - start

    report = pd.DataFrame(
        rows, columns=["name", "max_error", "tolerance", "entries_checked", "passed"]
    )
    failed = report.loc[~report["passed"], "name"].tolist()
    logger.info(f"Gradient suite: {len(rows) - len(failed)}/{len(rows)} passed")
    return {
        "status": "failed" if failed else "success",
        "report": report,
        "failed": failed,
        "elapsed": elapsed,
    }
