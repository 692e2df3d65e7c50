"""Numpy fallback for the hot kernels (conv2d and maxpool, forward/backward).

Same call signatures as the compiled ``swisenet._ckernels`` extension.
All arrays are NHWC, float32 or float64, C-contiguous.
"""

import numpy as np


def conv2d_forward(x, k, stride, pad_t, pad_b, pad_l, pad_r):
    """Strided cross-correlation of x (N,H,W,Cin) with k (kh,kw,Cin,Cout)."""
    kh, kw = k.shape[0], k.shape[1]
    xp = np.pad(x, ((0, 0), (pad_t, pad_b), (pad_l, pad_r), (0, 0)))
    hp, wp = xp.shape[1], xp.shape[2]
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    y = np.zeros((x.shape[0], oh, ow, k.shape[3]), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :]
            y += np.tensordot(patch, k[i, j], axes=([3], [0]))
    return y


def conv2d_backward(x, k, gy, stride, pad_t, pad_b, pad_l, pad_r):
    """Gradients of conv2d_forward w.r.t. x and k given upstream gy."""
    kh, kw = k.shape[0], k.shape[1]
    xp = np.pad(x, ((0, 0), (pad_t, pad_b), (pad_l, pad_r), (0, 0)))
    oh, ow = gy.shape[1], gy.shape[2]
    gxp = np.zeros_like(xp)
    gk = np.zeros_like(k)
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :]
            gk[i, j] = np.tensordot(patch, gy, axes=([0, 1, 2], [0, 1, 2]))
            gxp[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += (
                np.tensordot(gy, k[i, j], axes=([3], [1]))
            )
    h, w = x.shape[1], x.shape[2]
    gx = gxp[:, pad_t : pad_t + h, pad_l : pad_l + w, :]
    return np.ascontiguousarray(gx), gk


def maxpool_forward(x, pool, stride):
    """Valid-padding max pooling. Returns (y, arg) where arg encodes the
    winning in-window offset pi*pool+pj per output element (first max wins)."""
    n, h, w, c = x.shape
    oh = (h - pool) // stride + 1
    ow = (w - pool) // stride + 1
    best = np.full((n, oh, ow, c), -np.inf, dtype=x.dtype)
    arg = np.zeros((n, oh, ow, c), dtype=np.int64)
    for pi in range(pool):
        for pj in range(pool):
            win = x[:, pi : pi + stride * oh : stride, pj : pj + stride * ow : stride, :]
            m = win > best
            best = np.where(m, win, best)
            arg = np.where(m, pi * pool + pj, arg)
    return best, arg


def maxpool_backward(x_shape, arg, gy, pool, stride):
    """Scatter gy back to input positions recorded in arg."""
    n, h, w, c = x_shape
    oh, ow = gy.shape[1], gy.shape[2]
    gx = np.zeros((n, h, w, c), dtype=gy.dtype)
    for pi in range(pool):
        for pj in range(pool):
            mask = arg == pi * pool + pj
            gx[:, pi : pi + stride * oh : stride, pj : pj + stride * ow : stride, :] += (
                gy * mask
            )
    return gx
