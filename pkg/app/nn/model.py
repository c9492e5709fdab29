"""
Deep bidirectional LSTM acoustic model with a log-softmax output layer.

Layer l runs a forward and a backward LSTM over its input and passes the
concatenation [h_fwd; h_bwd] (2H wide) upward. The output layer sums the two
directional projections: logits_t = W_yf h_fwd,t + W_yb h_bwd,t + b_y.
Dropout masks, when given, scale each layer's concatenated output before it
feeds the next layer or the output layer; the recurrences never see them.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax

from app.core.errors import ConfigError, ShapeError
from app.core.rng import STREAM_INIT, make_rng
from app.ctc.alphabet import Alphabet
from app.dsp.features import FeatureConfig, FeatureSequence, extract_features
from app.dsp.signal import Signal
from app.nn.config import DEFAULT_FORGET_BIAS, DEFAULT_HIDDEN_SIZE, DEFAULT_INIT_RANGE, DEFAULT_NUM_LAYERS
from app.nn.lstm import CellCache, LstmParams, lstm_sequence_backward, lstm_sequence_forward
from app.nn.params import ParamTree, Tensors

logger = logging.getLogger(__name__)

DIRECTIONS = ('fwd', 'bwd')


@dataclass(frozen=True)
class ModelSizes:
    num_layers: int
    hidden_size: int
    input_size: int
    num_classes: int

    def __post_init__(self):
        for name in ('num_layers', 'hidden_size', 'input_size', 'num_classes'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")

    def layer_input_size(self, layer: int) -> int:
        return self.input_size if layer == 0 else 2 * self.hidden_size

    def to_dict(self) -> dict:
        return {
            'num_layers': self.num_layers,
            'hidden_size': self.hidden_size,
            'input_size': self.input_size,
            'num_classes': self.num_classes,
        }


@dataclass(frozen=True)
class ModelConfig:
    """Architecture settings that the data does not determine; input and output sizes come from the data."""
    num_layers: int = DEFAULT_NUM_LAYERS
    hidden_size: int = DEFAULT_HIDDEN_SIZE
    init_range: float = DEFAULT_INIT_RANGE
    forget_bias: float = DEFAULT_FORGET_BIAS

    def __post_init__(self):
        if self.num_layers < 1 or self.hidden_size < 1:
            raise ConfigError(
                f"num_layers and hidden_size must be at least 1, got {self.num_layers}, {self.hidden_size}"
            )
        if not self.init_range > 0:
            raise ConfigError(f"init_range must be positive, got {self.init_range}")

    def sizes(self, input_size: int, num_classes: int) -> ModelSizes:
        return ModelSizes(self.num_layers, self.hidden_size, input_size, num_classes)


@dataclass
class ModelParams(ParamTree):
    layers: List[Tuple[LstmParams, LstmParams]]
    W_yf: np.ndarray
    W_yb: np.ndarray
    b_y: np.ndarray

    def __post_init__(self):
        sizes = self.sizes
        for index, pair in enumerate(self.layers):
            for p in pair:
                if p.hidden_size != sizes.hidden_size:
                    raise ShapeError(f"layer {index}: hidden size {p.hidden_size} != {sizes.hidden_size}")
                if p.input_size != sizes.layer_input_size(index):
                    raise ShapeError(
                        f"layer {index}: input size {p.input_size} != {sizes.layer_input_size(index)}"
                    )
        shape = (sizes.num_classes, sizes.hidden_size)
        if self.W_yf.shape != shape or self.W_yb.shape != shape:
            raise ShapeError(f"output projections must be {shape[0]}x{shape[1]}")
        if self.b_y.shape != (sizes.num_classes,):
            raise ShapeError(f"b_y must have length {sizes.num_classes}")

    @property
    def sizes(self) -> ModelSizes:
        first = self.layers[0][0]
        return ModelSizes(len(self.layers), first.hidden_size, first.input_size, self.b_y.shape[0])

    def to_dict(self) -> Tensors:
        tensors = {}
        for index, pair in enumerate(self.layers):
            for direction, p in zip(DIRECTIONS, pair):
                for name, value in p.to_dict().items():
                    tensors[f'layer{index}.{direction}.{name}'] = value
        tensors['W_yf'] = self.W_yf
        tensors['W_yb'] = self.W_yb
        tensors['b_y'] = self.b_y
        return tensors

    def with_tensors(self, tensors: Tensors) -> 'ModelParams':
        layers = []
        for index in range(len(self.layers)):
            pair = []
            for direction in DIRECTIONS:
                prefix = f'layer{index}.{direction}.'
                pair.append(LstmParams(**{
                    name[len(prefix):]: value for name, value in tensors.items() if name.startswith(prefix)
                }))
            layers.append(tuple(pair))
        return ModelParams(layers, tensors['W_yf'], tensors['W_yb'], tensors['b_y'])


@dataclass
class LayerCache:
    inputs: np.ndarray
    caches: Tuple[List[CellCache], List[CellCache]]
    stacked: np.ndarray
    outputs: np.ndarray
    mask: Optional[np.ndarray]


@dataclass
class ForwardCache:
    layers: List[LayerCache]
    top: np.ndarray
    logits: np.ndarray
    log_probs: np.ndarray


def init_params(sizes: ModelSizes, seed: int, init_range: float = DEFAULT_INIT_RANGE,
                forget_bias: float = DEFAULT_FORGET_BIAS) -> ModelParams:
    rng = make_rng(seed, STREAM_INIT)
    layers = []
    for index in range(sizes.num_layers):
        pair = tuple(
            LstmParams.uniform(sizes.layer_input_size(index), sizes.hidden_size, rng, init_range, forget_bias)
            for _ in DIRECTIONS
        )
        layers.append(pair)
    shape = (sizes.num_classes, sizes.hidden_size)
    W_yf = rng.uniform(-init_range, init_range, shape)
    W_yb = rng.uniform(-init_range, init_range, shape)
    return ModelParams(layers, W_yf, W_yb, np.zeros(sizes.num_classes))


def zero_params(sizes: ModelSizes) -> ModelParams:
    layers = [
        tuple(LstmParams.zeros(sizes.layer_input_size(index), sizes.hidden_size) for _ in DIRECTIONS)
        for index in range(sizes.num_layers)
    ]
    shape = (sizes.num_classes, sizes.hidden_size)
    return ModelParams(layers, np.zeros(shape), np.zeros(shape), np.zeros(sizes.num_classes))


def _feature_matrix(features) -> np.ndarray:
    frames = features.frames if isinstance(features, FeatureSequence) else features
    return np.asarray(frames, dtype=np.float64)


def forward_full(m: ModelParams, features, dropout_masks: Optional[Sequence[np.ndarray]] = None
                 ) -> Tuple[np.ndarray, ForwardCache]:
    """Return per-frame log-probabilities (T x num_classes) and the cache for ``backward_full``."""
    sizes = m.sizes
    x = _feature_matrix(features)
    if x.ndim != 2 or x.shape[1] != sizes.input_size:
        raise ShapeError(f"features of shape {x.shape} do not match model input size {sizes.input_size}")
    if dropout_masks is not None and len(dropout_masks) != sizes.num_layers:
        raise ShapeError(f"expected {sizes.num_layers} dropout masks, got {len(dropout_masks)}")

    layer_caches = []
    for index, (p_fwd, p_bwd) in enumerate(m.layers):
        hs_fwd, caches_fwd = lstm_sequence_forward(p_fwd, x, reverse=False)
        hs_bwd, caches_bwd = lstm_sequence_forward(p_bwd, x, reverse=True)
        stacked = np.concatenate([hs_fwd, hs_bwd], axis=1)
        outputs = stacked
        mask = None
        if dropout_masks is not None:
            mask = np.asarray(dropout_masks[index], dtype=np.float64)
            if mask.shape != (2 * sizes.hidden_size,):
                raise ShapeError(f"dropout mask {index} must have length {2 * sizes.hidden_size}")
            outputs = outputs * mask
        layer_caches.append(LayerCache(x, (caches_fwd, caches_bwd), stacked, outputs, mask))
        x = outputs

    hidden = sizes.hidden_size
    logits = x[:, :hidden] @ m.W_yf.T + x[:, hidden:] @ m.W_yb.T + m.b_y
    log_probs = log_softmax(logits, axis=1)
    return log_probs, ForwardCache(layer_caches, x, logits, log_probs)


def backward_full(m: ModelParams, cache: ForwardCache, dlogits: np.ndarray) -> Tuple[ModelParams, np.ndarray]:
    """
    Exact gradients of a scalar loss given its gradient with respect to the logits.

    Returns parameter gradients (same layout as ``m``) and the gradient with
    respect to the input features.
    """
    sizes = m.sizes
    hidden = sizes.hidden_size
    if dlogits.shape != cache.logits.shape:
        raise ShapeError(f"logit gradient of shape {dlogits.shape} does not match {cache.logits.shape}")
    if len(cache.layers) != sizes.num_layers:
        raise ShapeError("forward cache was produced by a model with a different depth")

    top = cache.top
    dW_yf = dlogits.T @ top[:, :hidden]
    dW_yb = dlogits.T @ top[:, hidden:]
    db_y = dlogits.sum(axis=0)
    doutputs = np.concatenate([dlogits @ m.W_yf, dlogits @ m.W_yb], axis=1)

    layer_grads = [None] * sizes.num_layers
    for index in range(sizes.num_layers - 1, -1, -1):
        layer = cache.layers[index]
        if layer.mask is not None:
            doutputs = doutputs * layer.mask
        p_fwd, p_bwd = m.layers[index]
        g_fwd, dx_fwd = lstm_sequence_backward(p_fwd, layer.caches[0], doutputs[:, :hidden], reverse=False)
        g_bwd, dx_bwd = lstm_sequence_backward(p_bwd, layer.caches[1], doutputs[:, hidden:], reverse=True)
        layer_grads[index] = (g_fwd, g_bwd)
        doutputs = dx_fwd + dx_bwd

    return ModelParams(layer_grads, dW_yf, dW_yb, db_y), doutputs


@dataclass
class AcousticModel:
    """Network parameters bundled with the alphabet and feature settings they were trained with."""
    params: ModelParams
    alphabet: Alphabet
    feature_config: FeatureConfig

    def log_probs(self, signal: Signal) -> np.ndarray:
        features = extract_features(signal, self.feature_config)
        log_probs, _ = forward_full(self.params, features)
        return log_probs
