"""Training loop, Adam optimizer, and model evaluation."""

import os
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .errors import NumericError
from .metrics import confusion_matrix, metrics_from_confusion
from .model import save_checkpoint
from .tensor import Tape, Tensor, backward


@dataclass
class TrainConfig:
    learning_rate: float = 5e-5
    epochs: int = 100
    batch_size: int = 32
    image_size: int = 300
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    alpha: float = 0.5
    optimizer: str = "adam"  # or "sgd"
    metric_average: str = "macro"

    def validate(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive")
        return self


def init_adam_state(params):
    return {
        "t": 0,
        "m": {p.name: np.zeros_like(p.tensor.data) for p in params if p.trainable},
        "v": {p.name: np.zeros_like(p.tensor.data) for p in params if p.trainable},
    }


def adam_step(params, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam update; only trainable parameters change."""
    state["t"] += 1
    t = state["t"]
    for p in params:
        if not p.trainable:
            continue
        g = p.tensor.grad
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {p.name}")
        m = state["m"][p.name]
        v = state["v"][p.name]
        m[:] = beta1 * m + (1 - beta1) * g
        v[:] = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        p.tensor.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(
            p.tensor.data.dtype
        )


def sgd_step(params, lr):
    for p in params:
        if not p.trainable or p.tensor.grad is None:
            continue
        g = p.tensor.grad
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {p.name}")
        p.tensor.data -= (lr * g).astype(p.tensor.data.dtype)


def _batches(n, batch_size, order=None):
    idx = np.arange(n) if order is None else order
    for start in range(0, n, batch_size):
        yield idx[start : start + batch_size]


def evaluate(model, images, labels, batch_size=32, average="macro"):
    """Argmax-of-logits evaluation.

    Returns (metrics dict incl. mean loss, ConfusionMatrix).
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n == 0:
        raise ValueError("cannot evaluate an empty set")
    preds = np.empty(n, dtype=np.int64)
    loss_sum = 0.0
    for sel in _batches(n, batch_size):
        logits = model.forward(Tensor(images[sel]), training=False)
        preds[sel] = logits.data.argmax(axis=1)
        loss = ops.softmax_cross_entropy(logits, labels[sel])
        loss_sum += loss.item() * len(sel)
    cm = confusion_matrix(labels, preds, model.cfg.num_classes)
    result = metrics_from_confusion(cm, average=average)
    result["loss"] = loss_sum / n
    return result, cm


METRICS_HEADER = "epoch\tsplit\tloss\taccuracy\tprecision\trecall\tf1"


def format_metrics_row(epoch, split_name, m):
    return (f"{epoch}\t{split_name}\t{m['loss']:.6f}\t{m['accuracy']:.6f}\t"
            f"{m['precision']:.6f}\t{m['recall']:.6f}\t{m['f1']:.6f}")


@dataclass
class TrainResult:
    rows: list = field(default_factory=list)  # (epoch, split, metrics)
    best_val_accuracy: float = 0.0
    best_epoch: int = 0
    last_checkpoint: str = ""
    best_checkpoint: str = ""


def train(model, train_data, val_data, cfg, out_dir=None, start_epoch=0,
          optimizer_state=None, log=None):
    """Run the training loop.

    train_data / val_data: (images float32 (N,H,W,C), labels int (N,)).
    Per epoch: seeded shuffle, minibatch forward/backward/update, then
    full-set train and val metrics. Writes metrics.tsv and the last/best
    checkpoints into out_dir when given. Deterministic given cfg.seed.
    """
    cfg.validate()
    x_train, y_train = train_data
    x_val, y_val = val_data
    if len(y_train) == 0 or len(y_val) == 0:
        raise ValueError("train and validation sets must be non-empty")
    y_train = np.asarray(y_train, dtype=np.int64)
    params = model.parameters()
    trainables = model.trainable_parameters()
    if optimizer_state is None and cfg.optimizer == "adam":
        optimizer_state = init_adam_state(params)
    result = TrainResult()
    metrics_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        metrics_path = os.path.join(out_dir, "metrics.tsv")
        if start_epoch == 0 or not os.path.exists(metrics_path):
            with open(metrics_path, "w") as f:
                f.write(METRICS_HEADER + "\n")
    for epoch in range(start_epoch, start_epoch + cfg.epochs):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, epoch]))
        order = rng.permutation(len(y_train))
        for sel in _batches(len(y_train), cfg.batch_size, order):
            tape = Tape()
            logits = model.forward(Tensor(x_train[sel]), tape=tape, training=True)
            loss = ops.softmax_cross_entropy(logits, y_train[sel], tape=tape)
            if not np.isfinite(loss.item()):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch starting {sel[0]}"
                )
            backward(tape, loss)
            if cfg.optimizer == "adam":
                adam_step(trainables, optimizer_state, cfg.learning_rate,
                          cfg.beta1, cfg.beta2, cfg.eps)
            else:
                sgd_step(trainables, cfg.learning_rate)
        train_metrics, _ = evaluate(model, x_train, y_train, cfg.batch_size,
                                    cfg.metric_average)
        val_metrics, _ = evaluate(model, x_val, y_val, cfg.batch_size,
                                  cfg.metric_average)
        result.rows.append((epoch, "train", train_metrics))
        result.rows.append((epoch, "val", val_metrics))
        if metrics_path:
            with open(metrics_path, "a") as f:
                f.write(format_metrics_row(epoch, "train", train_metrics) + "\n")
                f.write(format_metrics_row(epoch, "val", val_metrics) + "\n")
        if log:
            log(f"epoch {epoch}: train acc {train_metrics['accuracy']:.4f} "
                f"loss {train_metrics['loss']:.4f} | "
                f"val acc {val_metrics['accuracy']:.4f} "
                f"loss {val_metrics['loss']:.4f}")
        is_best = val_metrics["accuracy"] > result.best_val_accuracy
        if is_best:
            result.best_val_accuracy = val_metrics["accuracy"]
            result.best_epoch = epoch
        if out_dir is not None:
            last = os.path.join(out_dir, "last.ckpt")
            save_checkpoint(model, last, epoch=epoch + 1,
                            optimizer_state=optimizer_state,
                            best_val_accuracy=result.best_val_accuracy)
            result.last_checkpoint = last
            if is_best:
                best = os.path.join(out_dir, "best.ckpt")
                save_checkpoint(model, best, epoch=epoch + 1,
                                optimizer_state=optimizer_state,
                                best_val_accuracy=result.best_val_accuracy)
                result.best_checkpoint = best
    return result
