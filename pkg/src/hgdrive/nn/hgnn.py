"""Relational graph attention network with expert-policy fusion.

The network reads a star-shaped heterogeneous graph (ego node plus up to
`slots_per_style` neighbor slots for each of the three driver styles) and
produces five action values. Three building blocks:

* per-style node encoders and edge encoders (dense + ReLU),
* one relational multi-head attention layer aggregating into the ego node,
* a policy head for raw action values and a logistic fusion head whose output
  blends the learned policy with a frozen imitation policy.

All math is float64 and runs through :mod:`hgdrive.nn.tensor`, so every
forward here is differentiable by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor as T
from .tensor import Tensor

ACTION_COUNT = 5
RELATIONS = ("agg", "nor", "con")


@dataclass(frozen=True)
class NetConfig:
    embed_dim: int = 32
    heads: int = 4
    policy_hidden: int = 64
    fusion_hidden: int = 32
    slots_per_style: int = 4
    leaky_slope: float = 0.2
    ego_features: int = 5
    hv_features: int = 7

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "NetConfig":
        return NetConfig(**d)


@dataclass
class GraphBatch:
    """Scaled graph arrays stacked along a leading batch axis.

    `x_av`: (B, 5); per relation k: `nodes[k]`: (B, S, 7), `edges[k]`: (B, S),
    `masks[k]`: (B, S) with entries in {0, 1}.
    """

    x_av: np.ndarray
    nodes: dict = field(default_factory=dict)
    edges: dict = field(default_factory=dict)
    masks: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.x_av.shape[0]

    def subset(self, idx) -> "GraphBatch":
        return GraphBatch(
            x_av=self.x_av[idx],
            nodes={k: v[idx] for k, v in self.nodes.items()},
            edges={k: v[idx] for k, v in self.edges.items()},
            masks={k: v[idx] for k, v in self.masks.items()},
        )


def _glorot(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    fan_in = shape[-2] if len(shape) >= 2 else shape[-1]
    fan_out = shape[-1] if len(shape) >= 2 else 1
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class ParamStore:
    """Named learnable tensors for one network instance.

    `with_fusion=False` builds the imitation variant: identical encoders,
    attention, and policy head, but no fusion head.
    """

    def __init__(self, config: NetConfig, seed: int = 0, with_fusion: bool = True):
        self.config = config
        self.seed = seed
        self.with_fusion = with_fusion
        self.tensors: dict[str, Tensor] = {}
        rng = np.random.default_rng(seed)
        d, p = config.embed_dim, config.heads
        self._add(rng, "enc_ego_w", (config.ego_features, d))
        self._zero("enc_ego_b", (d,))
        for k in RELATIONS:
            self._add(rng, f"enc_{k}_w", (config.hv_features, d))
            self._zero(f"enc_{k}_b", (d,))
            self._add(rng, f"edge_{k}_w", (2 * d + 1, 1))
            self._zero(f"edge_{k}_b", (1,))
            self._add(rng, f"att_{k}_wn", (p, d, d))
            self._add(rng, f"att_{k}_a", (p, 2 * d))
            self._add(rng, f"att_{k}_we_w", (p,))
            self._zero(f"att_{k}_we_b", (p,))
        self._add(rng, "policy_w1", (p * d, config.policy_hidden))
        self._zero("policy_b1", (config.policy_hidden,))
        self._add(rng, "policy_w2", (config.policy_hidden, ACTION_COUNT))
        self._zero("policy_b2", (ACTION_COUNT,))
        if with_fusion:
            self._add(rng, "fusion_w1", (p * d, config.fusion_hidden))
            self._zero("fusion_b1", (config.fusion_hidden,))
            self._add(rng, "fusion_w2", (config.fusion_hidden, 1))
            self._zero("fusion_b2", (1,))

    def _add(self, rng, name: str, shape: tuple):
        self.tensors[name] = Tensor(_glorot(rng, shape), requires_grad=True)

    def _zero(self, name: str, shape: tuple):
        self.tensors[name] = Tensor(np.zeros(shape), requires_grad=True)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def zero_grad(self):
        for t in self.tensors.values():
            t.grad = None

    def freeze(self):
        for t in self.tensors.values():
            t.requires_grad = False
        return self

    def clone(self) -> "ParamStore":
        other = ParamStore(self.config, seed=self.seed, with_fusion=self.with_fusion)
        other.load_state(self.state())
        return other

    def load_from(self, source: "ParamStore"):
        for name, t in self.tensors.items():
            t.data = source.tensors[name].data.copy()

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.tensors.items()}

    def load_state(self, state: dict[str, np.ndarray]):
        for name, t in self.tensors.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {t.data.shape}")
            t.data = arr.copy()


def encode_nodes(params: ParamStore, batch: GraphBatch):
    """Dense+ReLU embeddings; masked neighbor rows stay exactly zero."""
    ego = T.relu(T.matmul(Tensor(batch.x_av), params["enc_ego_w"]) + params["enc_ego_b"])
    hv = {}
    for k in RELATIONS:
        h = T.relu(T.matmul(Tensor(batch.nodes[k]), params[f"enc_{k}_w"]) + params[f"enc_{k}_b"])
        hv[k] = h * batch.masks[k][:, :, None]
    return ego, hv


def encode_edges(params: ParamStore, ego_h: Tensor, hv_h: dict, batch: GraphBatch) -> dict:
    """Per-edge scalar from [ego embedding, neighbor embedding, raw edge value]."""
    edges = {}
    b, s = batch.x_av.shape[0], params.config.slots_per_style
    d = params.config.embed_dim
    ego_rows = T.broadcast_to(ego_h.reshape(b, 1, d), (b, s, d))
    for k in RELATIONS:
        raw = Tensor(batch.edges[k][:, :, None])
        cat = T.concat([ego_rows, hv_h[k], raw], axis=2)
        e = T.matmul(cat, params[f"edge_{k}_w"]) + params[f"edge_{k}_b"]
        edges[k] = e.reshape(b, s) * batch.masks[k]
    return edges


def rgat_embed(params: ParamStore, batch: GraphBatch) -> Tensor:
    """Ego embedding after relational multi-head attention, shape (B, heads*d).

    Per head and relation: each neighbor's logit multiplies the edge-gate
    (affine in the learned edge value) with an attention score over the
    LeakyReLU-transformed ego/neighbor pair, and a masked softmax normalizes
    over that relation's present neighbors. Relations with no neighbors
    contribute zero; an isolated ego therefore embeds to ReLU(0). The
    attention-weighted transformed neighbors are summed over all relations
    before the final ReLU; heads are concatenated.
    """
    cfg = params.config
    b, s, p, d = batch.size, cfg.slots_per_style, cfg.heads, cfg.embed_dim
    ego_h, hv_h = encode_nodes(params, batch)
    edge_vals = encode_edges(params, ego_h, hv_h, batch)

    total = None
    for k in RELATIONS:
        wn = params[f"att_{k}_wn"]
        wx_i = T.einsum("bf,pef->bpe", ego_h, wn).reshape(b, 1, p, d)
        wx_j = T.einsum("bsf,pef->bspe", hv_h[k], wn)
        pair = T.concat([T.broadcast_to(wx_i, (b, s, p, d)), wx_j], axis=3)
        score = T.einsum("bspe,pe->bsp", T.leaky_relu(pair, cfg.leaky_slope), params[f"att_{k}_a"])
        gate = edge_vals[k].reshape(b, s, 1) * params[f"att_{k}_we_w"] + params[f"att_{k}_we_b"]
        logits = gate * score
        mask = np.broadcast_to(batch.masks[k][:, :, None], (b, s, p))
        alpha = T.masked_softmax(logits, mask, axis=1)
        contrib = T.einsum("bsp,bspe->bpe", alpha, wx_j)
        total = contrib if total is None else total + contrib
    h = T.relu(total)
    return h.reshape(b, p * d)


def q_values(params: ParamStore, batch: GraphBatch) -> Tensor:
    """Raw action values from the policy head, shape (B, 5)."""
    h = rgat_embed(params, batch)
    hidden = T.relu(T.matmul(h, params["policy_w1"]) + params["policy_b1"])
    return T.matmul(hidden, params["policy_w2"]) + params["policy_b2"]


def _fusion_beta(params: ParamStore, embed: Tensor) -> Tensor:
    hidden = T.relu(T.matmul(embed, params["fusion_w1"]) + params["fusion_b1"])
    return T.sigmoid(T.matmul(hidden, params["fusion_w2"]) + params["fusion_b2"])


def fused_forward(
    params: ParamStore,
    expert_params: ParamStore,
    batch: GraphBatch,
    beta_override: float | None = None,
):
    """Full decision pass: returns (q_grl, beta, q_fin), each a Tensor.

    `q_fin` is the convex blend beta*softmax(q_grl) + (1-beta)*softmax(q_exp),
    so every row lies on the probability simplex. `beta_override` forces a
    fixed blend weight (1.0 disables the imitation branch entirely).
    """
    h = rgat_embed(params, batch)
    hidden = T.relu(T.matmul(h, params["policy_w1"]) + params["policy_b1"])
    q_grl = T.matmul(hidden, params["policy_w2"]) + params["policy_b2"]
    if beta_override is not None:
        beta = Tensor(np.full((batch.size, 1), float(beta_override)))
    else:
        beta = _fusion_beta(params, h)
    p_grl = T.softmax(q_grl, axis=-1)
    p_exp = T.softmax(q_values(expert_params, batch), axis=-1)
    q_fin = beta * p_grl + (1.0 - beta) * p_exp
    return q_grl, beta, q_fin


def cross_entropy(logits: Tensor, one_hot: np.ndarray) -> Tensor:
    """Softmax cross-entropy; mean over the batch when logits are 2-D."""
    logp = T.log_softmax(logits, axis=-1)
    per_sample = -T.tsum(logp * one_hot, axis=-1)
    if per_sample.data.ndim == 0:
        return per_sample
    return T.tmean(per_sample)


def one_hot(actions: np.ndarray, n: int = ACTION_COUNT) -> np.ndarray:
    actions = np.asarray(actions, dtype=int)
    out = np.zeros(actions.shape + (n,), dtype=np.float64)
    np.put_along_axis(out, actions[..., None], 1.0, axis=-1)
    return out
