from dataclasses import dataclass

from app.core.errors import ConfigError

DEFAULT_LEARNING_RATE = 0.01
DEFAULT_MOMENTUM = 0.9
DEFAULT_CLIP_NORM = 5.0
DEFAULT_EPOCHS = 100

# grad_check refuses models larger than this
GRADCHECK_MAX_PARAMETERS = 50_000


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    momentum: float = DEFAULT_MOMENTUM
    clip_norm: float = DEFAULT_CLIP_NORM
    dropout_p: float = 0.0
    weight_noise_std: float = 0.0
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not self.clip_norm > 0:
            raise ConfigError(f"clip_norm must be positive, got {self.clip_norm}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if not self.weight_noise_std >= 0:
            raise ConfigError(f"weight_noise_std must be non-negative, got {self.weight_noise_std}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ConfigError(f"epochs must be an integer >= 1, got {self.epochs}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")
