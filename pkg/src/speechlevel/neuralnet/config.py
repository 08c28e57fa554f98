"""Network and optimizer configuration."""

from dataclasses import dataclass, replace

POOLING_KINDS = ("last", "mean", "attention")


@dataclass(frozen=True)
class NetConfig:
    input_len: int = 700                # padded sequence length (7 s at 100 fps)
    n_input: int = 32                   # log-mel bands
    n_dense1: int = 32
    n_lstm: int = 128
    n_dense2: int = 50
    n_classes: int = 3
    pooling: str = "attention"
    dropout: float = 0.33

    def __post_init__(self):
        if self.pooling not in POOLING_KINDS:
            raise ValueError(f"pooling must be one of {POOLING_KINDS}, "
                             f"got {self.pooling!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    def with_pooling(self, pooling: str) -> "NetConfig":
        return replace(self, pooling=pooling)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-4
    batch_size: int = 32
    max_epochs: int = 40
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 0.0              # 0 disables; 5.0 is the usual choice


CANONICAL_NET = NetConfig()
CANONICAL_TRAIN = TrainConfig()
