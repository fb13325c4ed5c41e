from . import tensor
from .adam import Adam, Sgd
from .checkpoint import load_checkpoint, save_checkpoint
from .hgnn import (
    ACTION_COUNT,
    RELATIONS,
    GraphBatch,
    NetConfig,
    ParamStore,
    cross_entropy,
    fused_forward,
    one_hot,
    q_values,
    rgat_embed,
)

__all__ = [
    "tensor",
    "Adam",
    "Sgd",
    "load_checkpoint",
    "save_checkpoint",
    "ACTION_COUNT",
    "RELATIONS",
    "GraphBatch",
    "NetConfig",
    "ParamStore",
    "cross_entropy",
    "fused_forward",
    "one_hot",
    "q_values",
    "rgat_embed",
]
