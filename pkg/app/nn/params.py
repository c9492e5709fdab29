"""
Named-tensor view shared by every trainable container.

Optimizers, clipping, weight noise and checkpoints only see an ordered
``{name: array}`` mapping; each container knows how to rebuild itself from one.
"""

from typing import Callable, Dict

import numpy as np

from app.core.errors import ShapeError

Tensors = Dict[str, np.ndarray]


class ParamTree:

    def to_dict(self) -> Tensors:
        raise NotImplementedError

    def with_tensors(self, tensors: Tensors) -> 'ParamTree':
        raise NotImplementedError

    def map(self, fn: Callable[[str, np.ndarray], np.ndarray]) -> 'ParamTree':
        return self.with_tensors({name: fn(name, value) for name, value in self.to_dict().items()})

    def copy(self) -> 'ParamTree':
        return self.map(lambda _, value: value.copy())

    def zeros_like(self) -> 'ParamTree':
        return self.map(lambda _, value: np.zeros_like(value))

    def num_parameters(self) -> int:
        return int(sum(value.size for value in self.to_dict().values()))


def check_same_layout(a: Tensors, b: Tensors) -> None:
    if list(a) != list(b):
        raise ShapeError("parameter trees have different tensor names")
    for name in a:
        if a[name].shape != b[name].shape:
            raise ShapeError(f"{name}: shape {a[name].shape} != {b[name].shape}")
