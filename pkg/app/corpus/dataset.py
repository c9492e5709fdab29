import logging
from typing import List, Optional

from app.core.errors import OutOfVocabularyError, ShapeError
from app.corpus.manifest import Manifest, load_audio
from app.ctc.alphabet import Alphabet
from app.dsp.features import FeatureConfig, extract_features
from app.train.loop import TrainingItem, check_feasible

logger = logging.getLogger(__name__)


def build_dataset(manifest: Manifest, alphabet: Alphabet,
                  feature_config: Optional[FeatureConfig] = None) -> List[TrainingItem]:
    """Decode, featurize and label every manifest entry; infeasible utterances are reported by id."""
    feature_config = feature_config or FeatureConfig()
    items = []
    for entry in manifest:
        try:
            labels = alphabet.encode(entry.transcript)
        except OutOfVocabularyError as e:
            raise OutOfVocabularyError(f"utterance {entry.id}: {e}")
        features = extract_features(load_audio(entry), feature_config)
        if items and features.num_features != items[0].features.shape[1]:
            raise ShapeError(
                f"utterance {entry.id} has {features.num_features} features per frame, "
                f"{items[0].id} has {items[0].features.shape[1]} (mixed sample rates?)"
            )
        items.append(TrainingItem(entry.id, features.frames, labels))
    check_feasible(items)
    if items:
        logger.info(f"[DATASET] {len(items)} utterances, {items[0].features.shape[1]} features per frame")
    return items
