"""
Weight noise and dropout masks.

Noise is added to a copy of the weights: gradients are evaluated at the noisy
point while updates land on the clean weights. Dropout masks only ever scale
inter-layer activations; recurrent weights and peepholes are left alone.
"""

from typing import List, Sequence

import numpy as np

from app.core.errors import ConfigError
from app.nn.params import ParamTree


def apply_weight_noise(params: ParamTree, std: float, rng: np.random.Generator) -> ParamTree:
    if std < 0:
        raise ConfigError(f"weight noise std must be non-negative, got {std}")
    if std == 0:
        return params.copy()
    return params.map(lambda _, value: value + rng.normal(0.0, std, value.shape))


def make_dropout_masks(sizes: Sequence[int], p: float, rng: np.random.Generator) -> List[np.ndarray]:
    """
    Inverted dropout masks, one per layer boundary.

    Entries are 0 with probability p and 1/(1-p) otherwise, so inference needs
    no rescaling. A mask is fixed for a whole sequence.
    """
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must lie in [0, 1), got {p}")
    scale = 1.0 / (1.0 - p)
    return [(rng.random(size) >= p).astype(np.float64) * scale for size in sizes]
