# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: conv2d and maxpool, forward and backward.

Call-compatible with the numpy fallback in swisenet._kernels_np.
Arrays are NHWC, float32 or float64, C-contiguous.
"""

import numpy as np

cimport cython
cimport numpy as cnp

ctypedef fused real:
    float
    double


def conv2d_forward(real[:, :, :, ::1] x, real[:, :, :, ::1] k,
                   int stride, int pad_t, int pad_b, int pad_l, int pad_r):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], ic = x.shape[3]
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1], oc = k.shape[3]
    cdef Py_ssize_t oh = (h + pad_t + pad_b - kh) // stride + 1
    cdef Py_ssize_t ow = (w + pad_l + pad_r - kw) // stride + 1
    if real is float:
        y_arr = np.zeros((n, oh, ow, oc), dtype=np.float32)
    else:
        y_arr = np.zeros((n, oh, ow, oc), dtype=np.float64)
    cdef real[:, :, :, ::1] y = y_arr
    cdef Py_ssize_t b, i, j, ci, co, ki, kj, ri, rj
    cdef real xv
    # loop order keeps the innermost accesses contiguous over out-channels
    # so the C compiler can vectorize the accumulation
    with nogil:
        for b in range(n):
            for i in range(oh):
                for ki in range(kh):
                    ri = i * stride + ki - pad_t
                    if ri < 0 or ri >= h:
                        continue
                    for j in range(ow):
                        for kj in range(kw):
                            rj = j * stride + kj - pad_l
                            if rj < 0 or rj >= w:
                                continue
                            for ci in range(ic):
                                xv = x[b, ri, rj, ci]
                                for co in range(oc):
                                    y[b, i, j, co] += xv * k[ki, kj, ci, co]
    return y_arr


def conv2d_backward(real[:, :, :, ::1] x, real[:, :, :, ::1] k,
                    real[:, :, :, ::1] gy,
                    int stride, int pad_t, int pad_b, int pad_l, int pad_r):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], ic = x.shape[3]
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1], oc = k.shape[3]
    cdef Py_ssize_t oh = gy.shape[1], ow = gy.shape[2]
    if real is float:
        gx_arr = np.zeros((n, h, w, ic), dtype=np.float32)
        gk_arr = np.zeros((kh, kw, ic, oc), dtype=np.float32)
    else:
        gx_arr = np.zeros((n, h, w, ic), dtype=np.float64)
        gk_arr = np.zeros((kh, kw, ic, oc), dtype=np.float64)
    cdef real[:, :, :, ::1] gx = gx_arr
    cdef real[:, :, :, ::1] gk = gk_arr
    cdef Py_ssize_t b, i, j, ci, co, ki, kj, ri, rj
    cdef real acc, xv
    with nogil:
        for b in range(n):
            for i in range(oh):
                for ki in range(kh):
                    ri = i * stride + ki - pad_t
                    if ri < 0 or ri >= h:
                        continue
                    for j in range(ow):
                        for kj in range(kw):
                            rj = j * stride + kj - pad_l
                            if rj < 0 or rj >= w:
                                continue
                            for ci in range(ic):
                                acc = 0
                                xv = x[b, ri, rj, ci]
                                for co in range(oc):
                                    acc += gy[b, i, j, co] * k[ki, kj, ci, co]
                                    gk[ki, kj, ci, co] += gy[b, i, j, co] * xv
                                gx[b, ri, rj, ci] += acc
    return gx_arr, gk_arr


def maxpool_forward(real[:, :, :, ::1] x, int pool, int stride):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t oh = (h - pool) // stride + 1
    cdef Py_ssize_t ow = (w - pool) // stride + 1
    if real is float:
        y_arr = np.empty((n, oh, ow, c), dtype=np.float32)
    else:
        y_arr = np.empty((n, oh, ow, c), dtype=np.float64)
    arg_arr = np.zeros((n, oh, ow, c), dtype=np.int64)
    cdef real[:, :, :, ::1] y = y_arr
    cdef cnp.int64_t[:, :, :, ::1] arg = arg_arr
    cdef Py_ssize_t b, i, j, ci, pi, pj
    cdef real best, v
    cdef cnp.int64_t off
    with nogil:
        for b in range(n):
            for i in range(oh):
                for j in range(ow):
                    for ci in range(c):
                        best = x[b, i * stride, j * stride, ci]
                        off = 0
                        for pi in range(pool):
                            for pj in range(pool):
                                v = x[b, i * stride + pi, j * stride + pj, ci]
                                if v > best:
                                    best = v
                                    off = pi * pool + pj
                        y[b, i, j, ci] = best
                        arg[b, i, j, ci] = off
    return y_arr, arg_arr


def maxpool_backward(x_shape, cnp.int64_t[:, :, :, ::1] arg,
                     real[:, :, :, ::1] gy, int pool, int stride):
    cdef Py_ssize_t n = x_shape[0], h = x_shape[1], w = x_shape[2], c = x_shape[3]
    cdef Py_ssize_t oh = gy.shape[1], ow = gy.shape[2]
    if real is float:
        gx_arr = np.zeros((n, h, w, c), dtype=np.float32)
    else:
        gx_arr = np.zeros((n, h, w, c), dtype=np.float64)
    cdef real[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t b, i, j, ci
    cdef cnp.int64_t off
    with nogil:
        for b in range(n):
            for i in range(oh):
                for j in range(ow):
                    for ci in range(c):
                        off = arg[b, i, j, ci]
                        gx[b, i * stride + off // pool, j * stride + off % pool, ci] += \
                            gy[b, i, j, ci]
    return gx_arr
