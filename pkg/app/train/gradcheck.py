"""
Finite-difference verification of the analytic CTC + BPTT gradients.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from app.core.errors import ConfigError, TractabilityError
from app.core.rng import STREAM_GRADCHECK, make_rng
from app.ctc.loss import ctc_loss
from app.nn.model import ModelParams, ModelSizes, backward_full, forward_full, init_params
from app.train.config import GRADCHECK_MAX_PARAMETERS

logger = logging.getLogger(__name__)

# wider than the training init so every gradient entry clears finite-difference round-off
GRADCHECK_INIT_RANGE = 0.5


@dataclass
class GradCheckInstance:
    model: ModelParams
    features: np.ndarray
    labels: Tuple[int, ...]


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def _loss(model: ModelParams, features: np.ndarray, labels: Sequence[int]) -> float:
    log_probs, _ = forward_full(model, features)
    return ctc_loss(log_probs, labels)[0]


def grad_check(model: ModelParams, features: np.ndarray, labels: Sequence[int], step: float = 1e-5) -> float:
    """Worst relative error between backward_full and central differences over every parameter."""
    if not (np.isfinite(step) and step > 0):
        raise ConfigError(f"finite-difference step must be positive, got {step}")
    count = model.num_parameters()
    if count == 0:
        raise TractabilityError("model has no parameters to check")
    if count > GRADCHECK_MAX_PARAMETERS:
        raise TractabilityError(f"{count} parameters exceed the gradient-check limit of {GRADCHECK_MAX_PARAMETERS}")

    log_probs, cache = forward_full(model, features)
    _, dlogits = ctc_loss(log_probs, labels)
    analytic = backward_full(model, cache, dlogits)[0].to_dict()

    shifted = model.copy()
    tensors = shifted.to_dict()
    worst = 0.0
    worst_name = ''
    for name, tensor in tensors.items():
        flat = tensor.reshape(-1)
        grad = analytic[name].reshape(-1)
        for k in range(flat.shape[0]):
            original = flat[k]
            flat[k] = original + step
            plus = _loss(shifted, features, labels)
            flat[k] = original - step
            minus = _loss(shifted, features, labels)
            flat[k] = original
            err = relative_error(grad[k], (plus - minus) / (2.0 * step))
            if err > worst:
                worst, worst_name = err, f'{name}[{k}]'

    logger.info(f"[GRADCHECK] {count} parameters, step={step}, max relative error {worst:.3e} at {worst_name}")
    return worst


def random_instance(seed: int, num_layers: int = 2, hidden_size: int = 5, input_size: int = 4,
                    frames: int = 6, num_symbols: int = 3, target_length: int = 2) -> GradCheckInstance:
    sizes = ModelSizes(num_layers, hidden_size, input_size, num_symbols + 1)
    model = init_params(sizes, seed, init_range=GRADCHECK_INIT_RANGE)
    rng = make_rng(seed, STREAM_GRADCHECK)
    features = rng.standard_normal((frames, input_size))
    labels = tuple(int(v) for v in rng.integers(1, num_symbols + 1, size=target_length))
    return GradCheckInstance(model, features, labels)
