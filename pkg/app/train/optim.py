"""
Global-norm gradient clipping and SGD with momentum.
"""

from typing import Optional, Tuple

import numpy as np

from app.core.errors import ConfigError
from app.nn.params import ParamTree, Tensors, check_same_layout


def global_norm(grads: ParamTree) -> float:
    return float(np.sqrt(sum(np.sum(g * g) for g in grads.to_dict().values())))


def clip_gradients(grads: ParamTree, clip_norm: float) -> ParamTree:
    if not clip_norm > 0:
        raise ConfigError(f"clip_norm must be positive, got {clip_norm}")
    norm = global_norm(grads)
    if norm <= clip_norm:
        return grads
    scale = clip_norm / norm
    return grads.map(lambda _, g: g * scale)


def sgd_step(params: ParamTree, grads: ParamTree, velocity: Optional[Tensors], lr: float,
             momentum: float) -> Tuple[ParamTree, Tensors]:
    """v <- momentum * v - lr * g;  w <- w + v."""
    weights = params.to_dict()
    gradients = grads.to_dict()
    check_same_layout(weights, gradients)
    if velocity is None:
        velocity = {name: np.zeros_like(value) for name, value in weights.items()}
    else:
        check_same_layout(weights, velocity)

    new_velocity = {name: momentum * velocity[name] - lr * gradients[name] for name in weights}
    new_params = params.with_tensors({name: weights[name] + new_velocity[name] for name in weights})
    return new_params, new_velocity
