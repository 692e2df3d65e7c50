"""Differentiable primitive operations.

Each op takes and returns Tensor values. Passing a Tape records the
backward rule; tape=None runs a plain forward pass.
"""

import numpy as np

from . import kernels
from .tensor import Tensor


def _out_dim(size, k, stride, padding):
    if padding == "same":
        return -(-size // stride)  # ceil
    return (size - k) // stride + 1


def _pad_amounts(size, k, stride, padding):
    """(before, after) zero padding. 'same' pads the extra pixel after."""
    if padding == "valid":
        return 0, 0
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def stable_sigmoid(x):
    """Elementwise 1/(1+e^(-x)) without overflow for large |x|."""
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def conv2d(x, kernel, bias, stride=1, padding="same", tape=None):
    """Strided 2-D cross-correlation plus per-output-channel bias.

    x: (N,H,W,Cin); kernel: (kh,kw,Cin,Cout) with odd kh,kw; bias: (Cout,).
    """
    if x.data.ndim != 4 or kernel.data.ndim != 4:
        raise ValueError("conv2d expects rank-4 input and kernel")
    kh, kw, in_ch, out_ch = kernel.shape
    if x.shape[3] != in_ch:
        raise ValueError(
            f"conv2d channel mismatch: input has {x.shape[3]}, kernel expects {in_ch}"
        )
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"conv2d kernel dims must be odd, got {kh}x{kw}")
    if not isinstance(stride, int) or stride < 1:
        raise ValueError(f"conv2d stride must be a positive integer, got {stride}")
    if padding not in ("same", "valid"):
        raise ValueError(f"unknown padding {padding!r}")
    if bias.shape != (out_ch,):
        raise ValueError(f"conv2d bias shape {bias.shape} != ({out_ch},)")
    if padding == "valid" and (x.shape[1] < kh or x.shape[2] < kw):
        raise ValueError("conv2d valid padding needs input >= kernel")
    pt, pb = _pad_amounts(x.shape[1], kh, stride, padding)
    pl, pr = _pad_amounts(x.shape[2], kw, stride, padding)
    y = kernels.conv2d_forward(x.data, kernel.data, stride, pt, pb, pl, pr)
    y = y + bias.data
    out = Tensor(y)
    if tape is not None:
        xd, kd = x.data, kernel.data

        def bwd(gy):
            gy = np.ascontiguousarray(gy)
            gx, gk = kernels.conv2d_backward(xd, kd, gy, stride, pt, pb, pl, pr)
            gb = gy.sum(axis=(0, 1, 2))
            return [gx, gk, gb]

        tape.record("conv2d", [x, kernel, bias], out, bwd)
    return out


def maxpool2d(x, pool, stride, tape=None):
    """Valid-padding max pooling over pool x pool windows."""
    if x.data.ndim != 4:
        raise ValueError("maxpool2d expects rank-4 input")
    if not isinstance(pool, int) or pool < 1:
        raise ValueError(f"pool must be a positive integer, got {pool}")
    if not isinstance(stride, int) or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride}")
    if pool > x.shape[1] or pool > x.shape[2]:
        raise ValueError(
            f"pool {pool} larger than spatial extent {x.shape[1]}x{x.shape[2]}"
        )
    y, arg = kernels.maxpool_forward(x.data, pool, stride)
    out = Tensor(y)
    if tape is not None:
        x_shape = x.shape

        def bwd(gy):
            gy = np.ascontiguousarray(gy)
            return [kernels.maxpool_backward(x_shape, arg, gy, pool, stride)]

        tape.record("maxpool2d", [x], out, bwd)
    return out


def global_avg_pool(x, tape=None):
    """Per-channel spatial mean: (N,H,W,C) -> (N,C)."""
    if x.data.ndim != 4:
        raise ValueError("global_avg_pool expects rank-4 input")
    n, h, w, c = x.shape
    out = Tensor(x.data.mean(axis=(1, 2)))
    if tape is not None:

        def bwd(gy):
            g = np.broadcast_to(gy[:, None, None, :] / (h * w), (n, h, w, c))
            return [g.astype(gy.dtype)]

        tape.record("global_avg_pool", [x], out, bwd)
    return out


def global_max_pool(x, tape=None):
    """Per-channel spatial max: (N,H,W,C) -> (N,C)."""
    if x.data.ndim != 4:
        raise ValueError("global_max_pool expects rank-4 input")
    n, h, w, c = x.shape
    flat = x.data.reshape(n, h * w, c)
    idx = flat.argmax(axis=1)
    out = Tensor(np.take_along_axis(flat, idx[:, None, :], axis=1)[:, 0, :])
    if tape is not None:

        def bwd(gy):
            gflat = np.zeros((n, h * w, c), dtype=gy.dtype)
            np.put_along_axis(gflat, idx[:, None, :], gy[:, None, :], axis=1)
            return [gflat.reshape(n, h, w, c)]

        tape.record("global_max_pool", [x], out, bwd)
    return out


def dense(x, weight, bias, tape=None):
    """Affine map: (N,in) @ (in,out) + (out,)."""
    if x.data.ndim != 2 or weight.data.ndim != 2:
        raise ValueError("dense expects rank-2 input and weight")
    if x.shape[1] != weight.shape[0]:
        raise ValueError(
            f"dense dimension mismatch: input {x.shape[1]} vs weight {weight.shape[0]}"
        )
    if bias.shape != (weight.shape[1],):
        raise ValueError(f"dense bias shape {bias.shape} != ({weight.shape[1]},)")
    out = Tensor(x.data @ weight.data + bias.data)
    if tape is not None:
        xd, wd = x.data, weight.data

        def bwd(gy):
            return [gy @ wd.T, xd.T @ gy, gy.sum(axis=0)]

        tape.record("dense", [x, weight, bias], out, bwd)
    return out


def relu(x, tape=None):
    """Elementwise max(0, x). Derivative at 0 is 0."""
    out = Tensor(np.maximum(x.data, 0))
    if tape is not None:
        mask = (x.data > 0).astype(x.dtype)
        tape.record("relu", [x], out, lambda gy: [gy * mask])
    return out


def sigmoid(x, tape=None):
    s = stable_sigmoid(x.data)
    out = Tensor(s)
    if tape is not None:
        tape.record("sigmoid", [x], out, lambda gy: [gy * s * (1 - s)])
    return out


def swish(x, beta, tape=None):
    """Elementwise x * sigmoid(beta * x) with a trainable scalar beta."""
    if beta.size != 1:
        raise ValueError("swish beta must be a scalar tensor")
    b = beta.data.reshape(-1)[0]
    s = stable_sigmoid(b * x.data)
    out = Tensor(x.data * s)
    if tape is not None:
        xd = x.data

        def bwd(gy):
            sp = s * (1 - s)
            gx = gy * (s + b * xd * sp)
            gb = np.array([(gy * xd * xd * sp).sum()], dtype=beta.dtype)
            return [gx, gb]

        tape.record("swish", [x, beta], out, bwd)
    return out


def swish_relu(x, alpha, beta, tape=None):
    """Blend alpha * Swish(x) + (1 - alpha) * ReLU(x)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0,1], got {alpha}")
    if beta.size != 1:
        raise ValueError("swish_relu beta must be a scalar tensor")
    b = beta.data.reshape(-1)[0]
    s = stable_sigmoid(b * x.data)
    out = Tensor(alpha * (x.data * s) + (1 - alpha) * np.maximum(x.data, 0))
    if tape is not None:
        xd = x.data
        mask = (xd > 0).astype(x.dtype)

        def bwd(gy):
            sp = s * (1 - s)
            gx = gy * (alpha * (s + b * xd * sp) + (1 - alpha) * mask)
            gb = np.array([alpha * (gy * xd * xd * sp).sum()], dtype=beta.dtype)
            return [gx, gb]

        tape.record("swish_relu", [x, beta], out, bwd)
    return out


def scale_channels(x, gates, tape=None):
    """Broadcast-multiply per-channel gates (N,C) into x (N,H,W,C)."""
    if x.data.ndim != 4 or gates.data.ndim != 2:
        raise ValueError("scale_channels expects rank-4 x and rank-2 gates")
    if x.shape[0] != gates.shape[0] or x.shape[3] != gates.shape[1]:
        raise ValueError(
            f"scale_channels shape mismatch: x {x.shape} vs gates {gates.shape}"
        )
    g4 = gates.data[:, None, None, :]
    out = Tensor(x.data * g4)
    if tape is not None:
        xd = x.data

        def bwd(gy):
            return [gy * g4, (gy * xd).sum(axis=(1, 2))]

        tape.record("scale_channels", [x, gates], out, bwd)
    return out


def add(a, b, tape=None):
    """Elementwise sum of two same-shape tensors."""
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    out = Tensor(a.data + b.data)
    if tape is not None:
        tape.record("add", [a, b], out, lambda gy: [gy, gy])
    return out


def sum_all(x, tape=None):
    """Sum of all elements, as a shape-(1,) tensor."""
    out = Tensor(np.array([x.data.sum()], dtype=x.dtype))
    if tape is not None:
        shape = x.shape
        tape.record(
            "sum_all", [x], out,
            lambda gy: [np.full(shape, gy[0], dtype=gy.dtype)],
        )
    return out


def batchnorm2d(x, gamma, beta, running_mean, running_var,
                momentum=0.99, eps=1e-3, training=False, tape=None):
    """Per-channel batch normalization over (N,H,W).

    Training mode normalizes with batch statistics and updates the running
    statistics in place (running stats are non-trainable parameters).
    """
    if x.data.ndim != 4:
        raise ValueError("batchnorm2d expects rank-4 input")
    c = x.shape[3]
    for t, nm in ((gamma, "gamma"), (beta, "beta"),
                  (running_mean, "running_mean"), (running_var, "running_var")):
        if t.shape != (c,):
            raise ValueError(f"batchnorm2d {nm} shape {t.shape} != ({c},)")
    if training:
        mu = x.data.mean(axis=(0, 1, 2))
        var = x.data.var(axis=(0, 1, 2))
        running_mean.data[:] = momentum * running_mean.data + (1 - momentum) * mu
        running_var.data[:] = momentum * running_var.data + (1 - momentum) * var
    else:
        mu = running_mean.data
        var = running_var.data
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    out = Tensor(gamma.data * xhat + beta.data)
    if tape is not None:
        xd = x.data
        gd = gamma.data
        m = xd.shape[0] * xd.shape[1] * xd.shape[2]

        if training:

            def bwd(gy):
                gxhat = gy * gd
                gvar = (gxhat * (xd - mu)).sum(axis=(0, 1, 2)) * (-0.5) * inv_std**3
                gmu = (-gxhat * inv_std).sum(axis=(0, 1, 2)) + gvar * (
                    -2.0 * (xd - mu).mean(axis=(0, 1, 2))
                )
                gx = gxhat * inv_std + gvar * 2.0 * (xd - mu) / m + gmu / m
                ggamma = (gy * xhat).sum(axis=(0, 1, 2))
                gbeta = gy.sum(axis=(0, 1, 2))
                return [gx, ggamma, gbeta, None, None]

        else:

            def bwd(gy):
                gx = gy * gd * inv_std
                ggamma = (gy * xhat).sum(axis=(0, 1, 2))
                gbeta = gy.sum(axis=(0, 1, 2))
                return [gx, ggamma, gbeta, None, None]

        tape.record("batchnorm2d", [x, gamma, beta, running_mean, running_var],
                    out, bwd)
    return out


def softmax(logits):
    """Row-wise softmax of a (N,K) array (plain numpy helper, no tape)."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels, tape=None):
    """Mean over the batch of -log softmax(logits)[label].

    labels: integer array of shape (N,). Returns a shape-(1,) loss tensor;
    the recorded gradient is the fused (softmax - onehot) / N.
    """
    if logits.data.ndim != 2:
        raise ValueError("softmax_cross_entropy expects rank-2 logits")
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} != ({n},)")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    logp = z[np.arange(n), labels] - lse
    out = Tensor(np.array([-logp.mean()], dtype=logits.dtype))
    if tape is not None:

        def bwd(gy):
            p = softmax(logits.data)
            p[np.arange(n), labels] -= 1.0
            return [gy[0] * p / n]

        tape.record("softmax_cross_entropy", [logits], out, bwd)
    return out
