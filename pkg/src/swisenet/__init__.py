"""SwiSENet: preprocessing pipeline, SE/channel-attention CNN with the
Swish-ReLU activation, training loop, and verification tooling."""

from .kernels import BACKEND
from .model import ModelCfg, SwiSENet, build_swisenet, reduced_config
from .tensor import Parameter, Tape, Tensor, backward

__all__ = [
    "BACKEND",
    "ModelCfg",
    "SwiSENet",
    "build_swisenet",
    "reduced_config",
    "Parameter",
    "Tape",
    "Tensor",
    "backward",
]

__version__ = "0.1.0"
