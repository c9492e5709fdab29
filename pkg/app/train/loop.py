"""
Per-item SGD training loop shared by the acoustic model and the language model.

For every item: draw a per-item random stream from (seed, epoch, index),
evaluate the objective at a weight-noised copy of the parameters, clip the
gradient to the global norm limit and apply a momentum step to the clean
parameters. A full run is a pure function of (items, config).
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import DataError, DivergenceError, InfeasibleTargetError
from app.core.rng import STREAM_SHUFFLE, item_rng, make_rng
from app.ctc.loss import ctc_loss, min_frames
from app.decode.metrics import edit_distance
from app.decode.search import greedy_decode
from app.nn.model import ModelParams, backward_full, forward_full
from app.nn.params import ParamTree
from app.train.config import TrainConfig
from app.train.optim import clip_gradients, global_norm, sgd_step
from app.train.regularization import apply_weight_noise, make_dropout_masks

logger = logging.getLogger(__name__)

Objective = Callable[[ParamTree, Any, np.random.Generator], Tuple[float, ParamTree]]
EpochHook = Callable[[int, ParamTree, float], None]


@dataclass
class TrainingItem:
    id: str
    features: np.ndarray
    labels: Tuple[int, ...]


@dataclass
class TrainReport:
    epoch_losses: List[float] = field(default_factory=list)
    epoch_cer: List[float] = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]

    @property
    def final_cer(self) -> float:
        return self.epoch_cer[-1]


def _item_name(item: Any, index: int) -> str:
    return str(getattr(item, 'id', index))


def fit(params: ParamTree, items: Sequence[Any], objective: Objective, config: TrainConfig,
        on_epoch: Optional[EpochHook] = None) -> Tuple[ParamTree, List[float]]:
    """Run ``config.epochs`` passes; returns the trained parameters and the mean loss per epoch."""
    if not items:
        raise DataError("cannot train on an empty dataset")

    shuffle_rng = make_rng(config.seed, STREAM_SHUFFLE)
    velocity = None
    losses = []
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(items)) if config.shuffle else np.arange(len(items))
        total = 0.0
        for index in order:
            item = items[index]
            rng = item_rng(config.seed, epoch, int(index))
            point = apply_weight_noise(params, config.weight_noise_std, rng)
            loss, grads = objective(point, item, rng)
            if not np.isfinite(loss) or not np.isfinite(global_norm(grads)):
                raise DivergenceError(
                    f"non-finite loss {loss} at epoch {epoch + 1}, item {_item_name(item, index)}; "
                    f"try a smaller learning rate or clip norm"
                )
            grads = clip_gradients(grads, config.clip_norm)
            params, velocity = sgd_step(params, grads, velocity, config.learning_rate, config.momentum)
            total += loss
        mean = total / len(items)
        losses.append(mean)
        if on_epoch is not None:
            on_epoch(epoch, params, mean)
    return params, losses


def acoustic_objective(dropout_p: float) -> Objective:
    def objective(params: ModelParams, item: TrainingItem, rng: np.random.Generator) -> Tuple[float, ModelParams]:
        masks = None
        if dropout_p > 0:
            sizes = params.sizes
            masks = make_dropout_masks([2 * sizes.hidden_size] * sizes.num_layers, dropout_p, rng)
        log_probs, cache = forward_full(params, item.features, masks)
        loss, dlogits = ctc_loss(log_probs, item.labels)
        grads, _ = backward_full(params, cache, dlogits)
        return loss, grads

    return objective


def check_feasible(items: Sequence[TrainingItem]) -> None:
    for item in items:
        needed = min_frames(item.labels)
        if item.features.shape[0] < needed:
            raise InfeasibleTargetError(
                f"utterance {item.id}: {item.features.shape[0]} frames cannot emit "
                f"{len(item.labels)} labels (needs {needed})"
            )


def greedy_cer(params: ModelParams, items: Sequence[TrainingItem]) -> float:
    """Corpus-level character error rate of greedy decoding: total edits over total reference length."""
    edits = 0
    length = 0
    for item in items:
        log_probs, _ = forward_full(params, item.features)
        edits += edit_distance(greedy_decode(log_probs).transcript, item.labels)
        length += len(item.labels)
    return edits / max(1, length)


def train_acoustic(model: ModelParams, dataset: Sequence[TrainingItem], config: TrainConfig
                   ) -> Tuple[ModelParams, TrainReport]:
    check_feasible(dataset)
    report = TrainReport()
    started = time.perf_counter()

    def on_epoch(epoch: int, params: ModelParams, loss: float) -> None:
        cer = greedy_cer(params, dataset)
        report.epoch_losses.append(loss)
        report.epoch_cer.append(cer)
        logger.info(f"[TRAIN] epoch {epoch + 1}/{config.epochs} loss={loss:.6f} cer={cer:.4f}")

    logger.info(
        f"[TRAIN] {len(dataset)} utterances, {model.num_parameters()} parameters, "
        f"lr={config.learning_rate} momentum={config.momentum} clip={config.clip_norm}"
    )
    params, _ = fit(model, dataset, acoustic_objective(config.dropout_p), config, on_epoch)
    report.wall_time_s = time.perf_counter() - started
    logger.info(
        f"[TRAIN] finished in {report.wall_time_s:.1f}s, final loss={report.final_loss:.6f} cer={report.final_cer:.4f}"
    )
    return params, report
