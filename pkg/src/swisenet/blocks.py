"""Composite layers: ConvBlock, squeeze-and-excitation block, channel
attention, and the Conv_SE block that chains them.

Every block owns its named Parameters and exposes
forward(x, tape=None, training=False). Weights use fan-in-scaled uniform
initialization; biases start at zero; activation blend scalars (the
trainable beta of Swish) start at 1 and are named "<site>.act.beta".
"""

import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .tensor import Parameter, Tensor


@dataclass
class ConvBlockCfg:
    out_channels: int
    kernel: int = 3
    stride: int = 1
    use_batchnorm: bool = True
    bn_momentum: float = 0.99
    alpha: float = 0.5
    padding: str = "same"

    def __post_init__(self):
        if self.kernel % 2 == 0:
            raise ValueError(f"kernel must be odd, got {self.kernel}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")


@dataclass
class SEBlockCfg:
    channels: int
    reduction: int = 16
    hidden_activation: str = "swish_relu"
    alpha: float = 0.5

    def __post_init__(self):
        if self.channels % self.reduction != 0:
            raise ValueError(
                f"reduction {self.reduction} must divide channels {self.channels}"
            )


@dataclass
class ChannelAttentionCfg:
    channels: int
    reduction: int = 16
    hidden_activation: str = "swish_relu"
    alpha: float = 0.5

    def __post_init__(self):
        if self.channels % self.reduction != 0:
            raise ValueError(
                f"reduction {self.reduction} must divide channels {self.channels}"
            )


@dataclass
class ConvSEBlockCfg:
    conv: ConvBlockCfg
    se: SEBlockCfg
    ca: ChannelAttentionCfg

    def __post_init__(self):
        if not (self.se.channels == self.ca.channels == self.conv.out_channels):
            raise ValueError("se/ca channels must equal conv out_channels")


def fan_in_uniform(rng, shape, fan_in, dtype):
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def _is_act_beta(p):
    return p.name.endswith(".act.beta")


class Block:
    """Common parameter bookkeeping."""

    def parameters(self):
        return list(self._params)

    def structural_param_count(self):
        """Parameter count excluding activation blend scalars (the
        framework-summary convention used by the model summary)."""
        total = sum(p.tensor.size for p in self._params if not _is_act_beta(p))
        trainable = sum(
            p.tensor.size for p in self._params if p.trainable and not _is_act_beta(p)
        )
        return total, trainable

    def _new_act_beta(self, name, dtype):
        p = Parameter(f"{name}.act.beta", Tensor(np.ones(1, dtype=dtype)))
        self._params.append(p)
        return p


def _hidden_act(kind, x, alpha, beta, tape):
    if kind == "swish_relu":
        return ops.swish_relu(x, alpha, beta, tape=tape)
    if kind == "relu":
        return ops.relu(x, tape=tape)
    raise ValueError(f"unknown hidden activation {kind!r}")


class ConvBlock(Block):
    """conv2d -> optional batch normalization -> Swish-ReLU."""

    def __init__(self, name, in_channels, cfg, rng, dtype=np.float32):
        self.name = name
        self.cfg = cfg
        self.out_channels = cfg.out_channels
        self._params = []
        k = cfg.kernel
        self.kernel = Parameter(
            f"{name}.kernel",
            Tensor(fan_in_uniform(
                rng, (k, k, in_channels, cfg.out_channels),
                k * k * in_channels, dtype,
            )),
        )
        self.bias = Parameter(
            f"{name}.bias", Tensor(np.zeros(cfg.out_channels, dtype=dtype))
        )
        self._params += [self.kernel, self.bias]
        if cfg.use_batchnorm:
            c = cfg.out_channels
            self.bn_gamma = Parameter(f"{name}.bn.gamma", Tensor(np.ones(c, dtype=dtype)))
            self.bn_beta = Parameter(f"{name}.bn.beta", Tensor(np.zeros(c, dtype=dtype)))
            self.bn_mean = Parameter(
                f"{name}.bn.running_mean", Tensor(np.zeros(c, dtype=dtype)),
                trainable=False,
            )
            self.bn_var = Parameter(
                f"{name}.bn.running_var", Tensor(np.ones(c, dtype=dtype)),
                trainable=False,
            )
            self._params += [self.bn_gamma, self.bn_beta, self.bn_mean, self.bn_var]
        self.act_beta = self._new_act_beta(name, dtype)

    def forward(self, x, tape=None, training=False):
        y = ops.conv2d(
            x, self.kernel.tensor, self.bias.tensor,
            stride=self.cfg.stride, padding=self.cfg.padding, tape=tape,
        )
        if self.cfg.use_batchnorm:
            y = ops.batchnorm2d(
                y, self.bn_gamma.tensor, self.bn_beta.tensor,
                self.bn_mean.tensor, self.bn_var.tensor,
                momentum=self.cfg.bn_momentum, training=training, tape=tape,
            )
        return ops.swish_relu(y, self.cfg.alpha, self.act_beta.tensor, tape=tape)


class SEBlock(Block):
    """Channel gating: global average pool -> bottleneck MLP -> sigmoid."""

    def __init__(self, name, cfg, rng, dtype=np.float32):
        self.name = name
        self.cfg = cfg
        self._params = []
        c, r = cfg.channels, cfg.channels // cfg.reduction
        self.fc1_w = Parameter(f"{name}.fc1.weight",
                               Tensor(fan_in_uniform(rng, (c, r), c, dtype)))
        self.fc1_b = Parameter(f"{name}.fc1.bias", Tensor(np.zeros(r, dtype=dtype)))
        self.fc2_w = Parameter(f"{name}.fc2.weight",
                               Tensor(fan_in_uniform(rng, (r, c), r, dtype)))
        self.fc2_b = Parameter(f"{name}.fc2.bias", Tensor(np.zeros(c, dtype=dtype)))
        self._params += [self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b]
        self.act_beta = self._new_act_beta(name, dtype)

    def gates(self, x, tape=None):
        if x.shape[3] != self.cfg.channels:
            raise ValueError(
                f"SE block expects {self.cfg.channels} channels, got {x.shape[3]}"
            )
        h = ops.global_avg_pool(x, tape=tape)
        h = ops.dense(h, self.fc1_w.tensor, self.fc1_b.tensor, tape=tape)
        h = _hidden_act(self.cfg.hidden_activation, h, self.cfg.alpha,
                        self.act_beta.tensor, tape)
        h = ops.dense(h, self.fc2_w.tensor, self.fc2_b.tensor, tape=tape)
        return ops.sigmoid(h, tape=tape)

    def forward(self, x, tape=None, training=False):
        return ops.scale_channels(x, self.gates(x, tape=tape), tape=tape)


class ChannelAttention(Block):
    """Gating from average- and max-pooled channel descriptors through a
    shared two-layer MLP, summed before the sigmoid."""

    def __init__(self, name, cfg, rng, dtype=np.float32):
        self.name = name
        self.cfg = cfg
        self._params = []
        c, r = cfg.channels, cfg.channels // cfg.reduction
        self.w0 = Parameter(f"{name}.mlp.w0",
                            Tensor(fan_in_uniform(rng, (c, r), c, dtype)))
        self.b0 = Parameter(f"{name}.mlp.b0", Tensor(np.zeros(r, dtype=dtype)))
        self.w1 = Parameter(f"{name}.mlp.w1",
                            Tensor(fan_in_uniform(rng, (r, c), r, dtype)))
        self.b1 = Parameter(f"{name}.mlp.b1", Tensor(np.zeros(c, dtype=dtype)))
        self._params += [self.w0, self.b0, self.w1, self.b1]
        self.act_beta = self._new_act_beta(name, dtype)

    def _mlp(self, descriptor, tape):
        h = ops.dense(descriptor, self.w0.tensor, self.b0.tensor, tape=tape)
        h = _hidden_act(self.cfg.hidden_activation, h, self.cfg.alpha,
                        self.act_beta.tensor, tape)
        return ops.dense(h, self.w1.tensor, self.b1.tensor, tape=tape)

    def gates(self, x, tape=None):
        if x.shape[3] != self.cfg.channels:
            raise ValueError(
                f"channel attention expects {self.cfg.channels} channels, "
                f"got {x.shape[3]}"
            )
        f_avg = ops.global_avg_pool(x, tape=tape)
        f_max = ops.global_max_pool(x, tape=tape)
        summed = ops.add(self._mlp(f_avg, tape), self._mlp(f_max, tape), tape=tape)
        return ops.sigmoid(summed, tape=tape)

    def forward(self, x, tape=None, training=False):
        return ops.scale_channels(x, self.gates(x, tape=tape), tape=tape)


class ConvSEBlock(Block):
    """conv block -> SE block -> channel attention -> Swish-ReLU."""

    def __init__(self, name, in_channels, cfg, rng, dtype=np.float32):
        self.name = name
        self.cfg = cfg
        self.out_channels = cfg.conv.out_channels
        self.conv = ConvBlock(f"{name}.conv", in_channels, cfg.conv, rng, dtype)
        self.se = SEBlock(f"{name}.se", cfg.se, rng, dtype)
        self.ca = ChannelAttention(f"{name}.ca", cfg.ca, rng, dtype)
        self._params = (self.conv.parameters() + self.se.parameters()
                        + self.ca.parameters())
        self.act_beta = self._new_act_beta(name, dtype)

    def forward(self, x, tape=None, training=False):
        y = self.conv.forward(x, tape=tape, training=training)
        y = self.se.forward(y, tape=tape)
        y = self.ca.forward(y, tape=tape)
        return ops.swish_relu(y, self.cfg.conv.alpha, self.act_beta.tensor, tape=tape)
