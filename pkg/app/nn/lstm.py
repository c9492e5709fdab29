"""
Peephole LSTM cell, forward and backward.

    i_t = sigmoid(W_xi x_t + W_hi h_{t-1} + w_ci * c_{t-1} + b_i)
    f_t = sigmoid(W_xf x_t + W_hf h_{t-1} + w_cf * c_{t-1} + b_f)
    c_t = f_t * c_{t-1} + i_t * tanh(W_xc x_t + W_hc h_{t-1} + b_c)
    o_t = sigmoid(W_xo x_t + W_ho h_{t-1} + w_co * c_t + b_o)
    h_t = o_t * tanh(c_t)

Peepholes are diagonal (vectors, elementwise product). Sequences start from
the zero state; ``reverse=True`` runs the recurrence from the last frame to
the first but always returns outputs in original time order.
"""

from dataclasses import dataclass, fields
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from app.core.errors import ShapeError
from app.nn.params import ParamTree, Tensors

GATES = ('i', 'f', 'c', 'o')
PEEPHOLES = ('i', 'f', 'o')


@dataclass
class LstmParams(ParamTree):
    W_xi: np.ndarray
    W_xf: np.ndarray
    W_xc: np.ndarray
    W_xo: np.ndarray
    W_hi: np.ndarray
    W_hf: np.ndarray
    W_hc: np.ndarray
    W_ho: np.ndarray
    w_ci: np.ndarray
    w_cf: np.ndarray
    w_co: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        hidden, inputs = self.W_xi.shape
        for g in GATES:
            if getattr(self, f'W_x{g}').shape != (hidden, inputs):
                raise ShapeError(f"W_x{g} must be {hidden}x{inputs}")
            if getattr(self, f'W_h{g}').shape != (hidden, hidden):
                raise ShapeError(f"W_h{g} must be {hidden}x{hidden}")
            if getattr(self, f'b_{g}').shape != (hidden,):
                raise ShapeError(f"b_{g} must have length {hidden}")
        for g in PEEPHOLES:
            if getattr(self, f'w_c{g}').shape != (hidden,):
                raise ShapeError(f"w_c{g} must have length {hidden}")

    @property
    def hidden_size(self) -> int:
        return self.W_xi.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_xi.shape[1]

    def to_dict(self) -> Tensors:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_tensors(self, tensors: Tensors) -> 'LstmParams':
        return LstmParams(**tensors)

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> 'LstmParams':
        values = {}
        for f in fields(cls):
            if f.name.startswith('W_x'):
                values[f.name] = np.zeros((hidden_size, input_size))
            elif f.name.startswith('W_h'):
                values[f.name] = np.zeros((hidden_size, hidden_size))
            else:
                values[f.name] = np.zeros(hidden_size)
        return cls(**values)

    @classmethod
    def uniform(cls, input_size: int, hidden_size: int, rng: np.random.Generator,
                init_range: float, forget_bias: float) -> 'LstmParams':
        """Weights (including peepholes) U(-init_range, init_range); b_f = forget_bias, other biases 0."""
        values = {}
        for f in fields(cls):
            if f.name.startswith('W_x'):
                values[f.name] = rng.uniform(-init_range, init_range, (hidden_size, input_size))
            elif f.name.startswith('W_h'):
                values[f.name] = rng.uniform(-init_range, init_range, (hidden_size, hidden_size))
            elif f.name.startswith('w_c'):
                values[f.name] = rng.uniform(-init_range, init_range, hidden_size)
            elif f.name == 'b_f':
                values[f.name] = np.full(hidden_size, float(forget_bias))
            else:
                values[f.name] = np.zeros(hidden_size)
        return cls(**values)


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> 'LstmState':
        return cls(np.zeros(hidden_size), np.zeros(hidden_size))


@dataclass
class CellCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    c: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


def lstm_cell_forward(p: LstmParams, x_t: np.ndarray, prev: LstmState) -> Tuple[LstmState, CellCache]:
    if x_t.shape != (p.input_size,):
        raise ShapeError(f"input of shape {x_t.shape} does not match input size {p.input_size}")
    if prev.h.shape != (p.hidden_size,) or prev.c.shape != (p.hidden_size,):
        raise ShapeError(f"state does not match hidden size {p.hidden_size}")

    h_prev, c_prev = prev.h, prev.c
    i = expit(p.W_xi @ x_t + p.W_hi @ h_prev + p.w_ci * c_prev + p.b_i)
    f = expit(p.W_xf @ x_t + p.W_hf @ h_prev + p.w_cf * c_prev + p.b_f)
    g = np.tanh(p.W_xc @ x_t + p.W_hc @ h_prev + p.b_c)
    c = f * c_prev + i * g
    o = expit(p.W_xo @ x_t + p.W_ho @ h_prev + p.w_co * c + p.b_o)
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return LstmState(h, c), CellCache(x_t, h_prev, c_prev, i, f, g, c, o, tanh_c)


def lstm_cell_backward(p: LstmParams, cache: CellCache, dh: np.ndarray, dc_next: np.ndarray,
                       grads: LstmParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Backpropagate one step; parameter gradients are accumulated into ``grads``.

    ``dh`` is the total gradient reaching h_t, ``dc_next`` the gradient reaching
    c_t from step t+1. Returns (dx_t, dh_{t-1}, dc_{t-1}).
    """
    i, f, g, o = cache.i, cache.f, cache.g, cache.o

    da_o = dh * cache.tanh_c * o * (1.0 - o)
    # c_t feeds h_t directly and the output gate through its peephole
    dc = dc_next + dh * o * (1.0 - cache.tanh_c ** 2) + da_o * p.w_co
    da_i = dc * g * i * (1.0 - i)
    da_g = dc * i * (1.0 - g ** 2)
    da_f = dc * cache.c_prev * f * (1.0 - f)
    dc_prev = dc * f + da_i * p.w_ci + da_f * p.w_cf

    for gate, da in (('i', da_i), ('f', da_f), ('c', da_g), ('o', da_o)):
        getattr(grads, f'W_x{gate}')[...] += np.outer(da, cache.x)
        getattr(grads, f'W_h{gate}')[...] += np.outer(da, cache.h_prev)
        getattr(grads, f'b_{gate}')[...] += da
    grads.w_ci += da_i * cache.c_prev
    grads.w_cf += da_f * cache.c_prev
    grads.w_co += da_o * cache.c

    dx = p.W_xi.T @ da_i + p.W_xf.T @ da_f + p.W_xc.T @ da_g + p.W_xo.T @ da_o
    dh_prev = p.W_hi.T @ da_i + p.W_hf.T @ da_f + p.W_hc.T @ da_g + p.W_ho.T @ da_o
    return dx, dh_prev, dc_prev


def _time_order(length: int, reverse: bool) -> range:
    return range(length - 1, -1, -1) if reverse else range(length)


def lstm_sequence_forward(p: LstmParams, xs: np.ndarray, reverse: bool = False,
                          initial: Optional[LstmState] = None) -> Tuple[np.ndarray, List[CellCache]]:
    """Run the cell over ``xs`` (T x F). Returns hs (T x H) and caches, both indexed by time."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] < 1:
        raise ShapeError(f"expected a non-empty T x F sequence, got shape {xs.shape}")
    steps = xs.shape[0]
    state = initial or LstmState.zeros(p.hidden_size)
    hs = np.zeros((steps, p.hidden_size))
    caches: List[Optional[CellCache]] = [None] * steps
    for t in _time_order(steps, reverse):
        state, caches[t] = lstm_cell_forward(p, xs[t], state)
        hs[t] = state.h
    return hs, caches


def lstm_sequence_backward(p: LstmParams, caches: List[CellCache], dhs: np.ndarray,
                           reverse: bool = False) -> Tuple[LstmParams, np.ndarray]:
    """BPTT over one direction. ``dhs`` (T x H) are the gradients arriving at each h_t from above."""
    steps = len(caches)
    if dhs.shape != (steps, p.hidden_size):
        raise ShapeError(f"hidden gradients of shape {dhs.shape} do not match {steps} x {p.hidden_size}")
    grads = p.zeros_like()
    dxs = np.zeros((steps, p.input_size))
    dh_rec = np.zeros(p.hidden_size)
    dc_rec = np.zeros(p.hidden_size)
    for t in reversed(list(_time_order(steps, reverse))):
        dxs[t], dh_rec, dc_rec = lstm_cell_backward(p, caches[t], dhs[t] + dh_rec, dc_rec, grads)
    return grads, dxs
