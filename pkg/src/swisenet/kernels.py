"""Backend selection for the hot kernels.

Two interchangeable implementations exist: a compiled Cython extension
and a vectorized numpy fallback (same signatures, parity-tested). The
default picks the faster one per kernel, as measured by
benchmarks/bench_kernels.py: the compiled maxpool beats numpy by ~5x,
while the numpy conv2d rides BLAS through tensordot and wins at every
realistic channel count. Setting the environment variable
SWISENET_PURE_PY to a non-empty value forces the numpy implementation
for everything (no compiled code in the loop).
"""

import os

from . import _kernels_np

conv2d_forward = _kernels_np.conv2d_forward
conv2d_backward = _kernels_np.conv2d_backward
maxpool_forward = _kernels_np.maxpool_forward
maxpool_backward = _kernels_np.maxpool_backward

if os.environ.get("SWISENET_PURE_PY"):
    BACKEND = "numpy"
else:
    try:
        from . import _ckernels

        maxpool_forward = _ckernels.maxpool_forward
        maxpool_backward = _ckernels.maxpool_backward
        BACKEND = "hybrid"
    except ImportError:
        BACKEND = "numpy"
