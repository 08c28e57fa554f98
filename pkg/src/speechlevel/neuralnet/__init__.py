"""Recurrent sequence classifiers built on plain numpy.

Dense -> LSTM -> pooling -> dense -> softmax over three classes. The three
pooling variants (last frame, masked mean, learned attention) are the three
architectures compared in the experiments. Backpropagation is exact
(full unroll through time, attention included) and optimized with Adam.
"""

from .adam import AdamState, adam_step
from .backprop import cross_entropy, loss_and_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .config import CANONICAL_NET, CANONICAL_TRAIN, NetConfig, TrainConfig
from .gradcheck import grad_check
from .model import SequenceModel, attention_weights, forward, init_model, predict
from .train import TrainResult, evaluate_accuracy, train

__all__ = [
    "AdamState",
    "CANONICAL_NET",
    "CANONICAL_TRAIN",
    "NetConfig",
    "SequenceModel",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "attention_weights",
    "cross_entropy",
    "evaluate_accuracy",
    "forward",
    "grad_check",
    "init_model",
    "load_checkpoint",
    "loss_and_grad",
    "predict",
    "save_checkpoint",
    "train",
]
