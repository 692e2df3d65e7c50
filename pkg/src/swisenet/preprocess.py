"""Image preprocessing pipeline: resize, histogram equalization,
Gaussian smoothing, min-max normalization.

Raw images are uint8 (H,W,3) arrays; the pipeline output is a float32
(H,W,3) array with values in [0,1].

Convention notes (fixed so golden tests are bit-exact):
  - resize uses bilinear interpolation with half-pixel-center mapping,
    rounding half away from zero back to 8 bits;
  - equalization remaps each channel independently via
    round((CDF(v) - CDF_min) / (1 - CDF_min) * (L-1)), half away from zero;
    a constant channel (degenerate denominator) passes through unchanged;
  - smoothing correlates each channel with a normalized Gaussian kernel,
    borders replicated by default (zero padding available);
  - normalization uses the global min/max over all channels jointly; a
    constant image maps to all zeros.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

LEVELS = 256


def _round_half_away(x):
    # inputs are non-negative here, so half-away == half-up
    return np.floor(x + 0.5)


def load_image(path):
    """Decode a JPEG/PNG file to a uint8 (H,W,3) array.

    Grayscale images are promoted by channel replication; alpha is dropped.
    """
    with Image.open(path) as im:
        im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.uint8)
    return arr


def save_image(arr, path):
    """Write a (H,W,3) array as PNG; float arrays are assumed in [0,1]."""
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def resize(image, target_h, target_w):
    """Bilinear resize with half-pixel-center coordinate mapping."""
    if target_h < 1 or target_w < 1:
        raise ValueError(f"target size must be >= 1, got {target_h}x{target_w}")
    h, w = image.shape[0], image.shape[1]
    if (h, w) == (target_h, target_w):
        return image.copy()
    ys = np.clip((np.arange(target_h) + 0.5) * (h / target_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(target_w) + 0.5) * (w / target_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    img = image.astype(np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
        squeeze = True
    else:
        squeeze = False
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    out = top * (1 - wy) + bot * wy
    out = np.clip(_round_half_away(out), 0, 255).astype(np.uint8)
    return out[:, :, 0] if squeeze else out


def compute_histogram(values, levels=LEVELS):
    """Intensity counts of one channel."""
    return np.bincount(np.asarray(values, dtype=np.int64).ravel(), minlength=levels)


def compute_cdf(hist):
    """Cumulative distribution over intensity levels; final value is 1."""
    hist = np.asarray(hist, dtype=np.float64)
    total = hist.sum()
    if total <= 0:
        raise ValueError("histogram is empty")
    return np.cumsum(hist) / total


def equalize_channel(values, levels=LEVELS):
    """Histogram-equalize one integer channel (values in [0, levels))."""
    values = np.asarray(values)
    hist = compute_histogram(values, levels)
    cdf = compute_cdf(hist)
    cdf_min = cdf[hist > 0].min()
    denom = 1.0 - cdf_min
    if denom <= 0:
        return values.copy()  # constant channel: degenerate, pass through
    lut = _round_half_away((cdf - cdf_min) / denom * (levels - 1))
    lut = np.clip(lut, 0, levels - 1).astype(values.dtype)
    return lut[values]


def equalize(image):
    """Equalize each of the three channels independently."""
    out = np.empty_like(image)
    for c in range(image.shape[2]):
        out[:, :, c] = equalize_channel(image[:, :, c])
    return out


@dataclass
class GaussianKernel:
    side: int
    sigma: float
    weights: np.ndarray  # (side, side), sums to 1


def gaussian_kernel(sigma, radius):
    """Normalized isotropic Gaussian weights on a (2*radius+1)^2 grid."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(coords[:, None] ** 2 + coords[None, :] ** 2) / (2.0 * sigma**2))
    g /= g.sum()
    return GaussianKernel(side=2 * radius + 1, sigma=float(sigma), weights=g)


def smooth(grid, kernel, border="replicate"):
    """Correlate each channel with the kernel; output dims equal input dims."""
    radius = kernel.side // 2
    grid = np.asarray(grid, dtype=np.float64)
    squeeze = grid.ndim == 2
    if squeeze:
        grid = grid[:, :, None]
    mode = "edge" if border == "replicate" else "constant"
    padded = np.pad(grid, ((radius, radius), (radius, radius), (0, 0)), mode=mode)
    h, w = grid.shape[0], grid.shape[1]
    out = np.zeros_like(grid)
    for i in range(kernel.side):
        for j in range(kernel.side):
            out += kernel.weights[i, j] * padded[i : i + h, j : j + w, :]
    return out[:, :, 0] if squeeze else out


def normalize(grid):
    """Min-max rescale to [0,1] over the whole image (all channels jointly)."""
    grid = np.asarray(grid, dtype=np.float64)
    lo = grid.min()
    hi = grid.max()
    if hi <= lo:
        return np.zeros_like(grid)  # constant image: degenerate, all zeros
    return (grid - lo) / (hi - lo)


@dataclass
class PreprocessConfig:
    target_h: int = 300
    target_w: int = 300
    sigma: float = 1.0
    radius: int = 2
    border: str = "replicate"
    adaptive_sigma: bool = False

    def key(self):
        """Canonical string identifying the configuration (for cache hashing)."""
        return (
            f"target={self.target_h}x{self.target_w};sigma={self.sigma!r};"
            f"radius={self.radius};border={self.border};"
            f"adaptive={int(self.adaptive_sigma)}"
        )


def _effective_sigma(cfg, equalized):
    if not cfg.adaptive_sigma:
        return cfg.sigma
    # adaptive mode: per-image intensity std rescaled to kernel units
    return max(float(equalized.std()) / 64.0, 0.1)


def preprocess_stages(image, cfg):
    """Run the pipeline and return every intermediate stage.

    Order: resize -> equalize -> smooth -> normalize.
    Returns dict with keys resized, equalized, smoothed, normalized.
    """
    resized = resize(image, cfg.target_h, cfg.target_w)
    equalized = equalize(resized)
    kernel = gaussian_kernel(_effective_sigma(cfg, equalized), cfg.radius)
    smoothed = smooth(equalized.astype(np.float64), kernel, cfg.border)
    normalized = normalize(smoothed)
    return {
        "resized": resized,
        "equalized": equalized,
        "smoothed": smoothed,
        "normalized": normalized,
    }


def preprocess_pipeline(image, cfg):
    """Convert a raw uint8 image into a model-ready float32 (H,W,3) in [0,1]."""
    return preprocess_stages(image, cfg)["normalized"].astype(np.float32)
