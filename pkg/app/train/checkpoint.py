"""
Versioned JSON checkpoints for acoustic models and character LMs.

A checkpoint is one JSON document:

    {
      "format_version": 1,
      "model_kind": "acoustic" | "lm",
      "alphabet": [...symbols...],
      "sizes": {...},
      "features": {...},            # acoustic only
      "tensors": {name: {"shape": [...], "data": [...]}}
    }

Floats are written with Python's shortest round-trip repr, so a reload
reproduces every parameter bit for bit.
"""

import json
import logging
import os
from typing import Any, Dict, Union

import numpy as np

from app.core.errors import CheckpointError, CheckpointVersionError
from app.ctc.alphabet import Alphabet
from app.dsp.features import FeatureConfig
from app.lm.char_lm import CharLm
from app.nn.model import AcousticModel, ModelSizes, zero_params
from app.nn.params import Tensors

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
KIND_ACOUSTIC = 'acoustic'
KIND_LM = 'lm'

Checkpointable = Union[AcousticModel, CharLm]


def _encode_tensors(tensors: Tensors) -> Dict[str, Any]:
    return {
        name: {'shape': list(value.shape), 'data': [float(v) for v in value.reshape(-1)]}
        for name, value in tensors.items()
    }


def _decode_tensors(raw: Any) -> Tensors:
    if not isinstance(raw, dict):
        raise CheckpointError("'tensors' must be an object")
    tensors = {}
    for name, entry in raw.items():
        try:
            shape = tuple(int(d) for d in entry['shape'])
            data = np.asarray(entry['data'], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"tensor {name} is malformed: {e}")
        if data.ndim != 1 or data.size != int(np.prod(shape, dtype=np.int64)):
            raise CheckpointError(f"tensor {name}: {data.size} values do not fill shape {shape}")
        tensors[name] = data.reshape(shape)
    return tensors


def to_document(model: Checkpointable) -> Dict[str, Any]:
    if isinstance(model, AcousticModel):
        return {
            'format_version': FORMAT_VERSION,
            'model_kind': KIND_ACOUSTIC,
            'alphabet': list(model.alphabet.symbols),
            'sizes': model.params.sizes.to_dict(),
            'features': model.feature_config.to_dict(),
            'tensors': _encode_tensors(model.params.to_dict()),
        }
    if isinstance(model, CharLm):
        return {
            'format_version': FORMAT_VERSION,
            'model_kind': KIND_LM,
            'alphabet': list(model.alphabet.symbols),
            'sizes': {'hidden_size': model.hidden_size, 'num_classes': model.alphabet.num_classes},
            'tensors': _encode_tensors(model.to_dict()),
        }
    raise CheckpointError(f"cannot checkpoint a {type(model).__name__}")


def _check_layout(expected: Tensors, found: Tensors) -> None:
    missing = set(expected) - set(found)
    extra = set(found) - set(expected)
    if missing or extra:
        raise CheckpointError(
            f"tensor names do not match the declared sizes (missing: {sorted(missing)}, unexpected: {sorted(extra)})"
        )
    for name, value in expected.items():
        if found[name].shape != value.shape:
            raise CheckpointError(f"tensor {name}: shape {found[name].shape} != expected {value.shape}")


def from_document(document: Any) -> Checkpointable:
    if not isinstance(document, dict):
        raise CheckpointError("checkpoint root must be a JSON object")
    version = document.get('format_version')
    if type(version) is not int or version != FORMAT_VERSION:
        raise CheckpointVersionError(f"unsupported checkpoint format_version {version!r}, expected {FORMAT_VERSION}")

    kind = document.get('model_kind')
    try:
        alphabet = Alphabet(tuple(document['alphabet']))
        tensors = _decode_tensors(document['tensors'])
        sizes = document['sizes']
        if kind == KIND_ACOUSTIC:
            model_sizes = ModelSizes(**sizes)
            if model_sizes.num_classes != alphabet.num_classes:
                raise CheckpointError(
                    f"model has {model_sizes.num_classes} classes but the alphabet implies {alphabet.num_classes}"
                )
            template = zero_params(model_sizes)
            _check_layout(template.to_dict(), tensors)
            features = FeatureConfig(**document.get('features', {}))
            return AcousticModel(template.with_tensors(tensors), alphabet, features)
        if kind == KIND_LM:
            template = CharLm.zeros(alphabet, int(sizes['hidden_size']))
            _check_layout(template.to_dict(), tensors)
            return template.with_tensors(tensors)
    except KeyError as e:
        raise CheckpointError(f"checkpoint is missing field {e}")
    except (TypeError, ValueError) as e:
        if isinstance(e, CheckpointError):
            raise
        raise CheckpointError(f"checkpoint is inconsistent: {e}")
    raise CheckpointError(f"unknown model_kind {kind!r}")


def save_checkpoint(model: Checkpointable, path: str) -> None:
    """Write atomically: the document goes to a sibling temp file that replaces ``path``."""
    document = to_document(model)
    tmp_path = f'{path}.tmp'
    try:
        with open(tmp_path, 'w', encoding='utf-8') as handle:
            json.dump(document, handle)
        os.replace(tmp_path, path)
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e}")
    logger.info(f"[CHECKPOINT] saved {document['model_kind']} model to {path}")


def load_checkpoint(path: str) -> Checkpointable:
    try:
        with open(path, encoding='utf-8') as handle:
            document = json.load(handle)
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    except json.JSONDecodeError as e:
        raise CheckpointError(f"checkpoint {path} is truncated or not JSON: {e}")
    model = from_document(document)
    logger.info(f"[CHECKPOINT] loaded {document['model_kind']} model from {path}")
    return model


def load_acoustic(path: str) -> AcousticModel:
    model = load_checkpoint(path)
    if not isinstance(model, AcousticModel):
        raise CheckpointError(f"{path} holds a language model, expected an acoustic model")
    return model


def load_lm(path: str) -> CharLm:
    model = load_checkpoint(path)
    if not isinstance(model, CharLm):
        raise CheckpointError(f"{path} holds an acoustic model, expected a language model")
    return model
