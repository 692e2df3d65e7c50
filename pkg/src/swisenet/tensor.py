"""Dense tensor values, the gradient tape, and named parameters."""

from dataclasses import dataclass, field

import numpy as np

_ALLOWED_DTYPES = (np.float32, np.float64)


class Tensor:
    """Rank 1-4 real array (NHWC layout for rank 4) with an optional gradient."""

    __slots__ = ("data", "grad")

    def __init__(self, data, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _ALLOWED_DTYPES:
            arr = arr.astype(np.float32)
        if arr.ndim < 1 or arr.ndim > 4:
            raise ValueError(f"tensor rank must be 1..4, got {arr.ndim}")
        self.data = np.ascontiguousarray(arr)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name})"


@dataclass
class Parameter:
    """Named model parameter. trainable=False for batch-norm running stats."""

    name: str
    tensor: Tensor
    trainable: bool = True


@dataclass
class TapeNode:
    op: str
    inputs: list
    output: Tensor
    backward: object  # callable: gy -> list of input grads (None to skip)


@dataclass
class Tape:
    """Append-only record of operations, in topological order."""

    nodes: list = field(default_factory=list)

    def record(self, op, inputs, output, backward):
        self.nodes.append(TapeNode(op, list(inputs), output, backward))


def backward(tape, loss):
    """Reverse-accumulate gradients of a scalar loss through the tape.

    Every tensor that appears on the tape gets a populated grad; tensors
    that do not influence the loss get exact zeros.
    """
    if loss.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.shape}")
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        gy = grads.get(id(node.output))
        if gy is None:
            continue
        gxs = node.backward(gy)
        for t, gx in zip(node.inputs, gxs):
            if gx is None:
                continue
            acc = grads.get(id(t))
            grads[id(t)] = gx if acc is None else acc + gx
    seen = {}
    for node in tape.nodes:
        for t in node.inputs:
            seen[id(t)] = t
        seen[id(node.output)] = node.output
    seen[id(loss)] = loss
    for tid, t in seen.items():
        g = grads.get(tid)
        t.grad = g if g is not None else np.zeros_like(t.data)
