"""Planar image arrays, PNG I/O and quality metrics.

Images are numpy float64 arrays of shape (C, H, W) with C = 1 or 3 and values
nominally in [0, 1]. Intermediate results (noisy observations, solver iterates)
may leave that range; only PNG export clips.

Blur kernels are (21, 21) float64 arrays, non-negative, summing to 1, with the
centre tap at index (10, 10).
"""

import numpy as np
from PIL import Image as _PILImage

KERNEL_SIZE = 21
KERNEL_CENTER = KERNEL_SIZE // 2

# BT.601 luma weights, used for the luminance PSNR variant only.
_LUMA = (0.299, 0.587, 0.114)

PSNR_CAP_DB = 99.0


def as_image(arr):
    """Validate and return an image array (C, H, W float64)."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3 or a.shape[0] not in (1, 3):
        raise ValueError(f"expected (C, H, W) with C in (1, 3), got shape {a.shape}")
    if a.shape[1] < 1 or a.shape[2] < 1:
        raise ValueError(f"empty image {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains non-finite values")
    return a


def as_kernel(arr):
    """Validate a 21x21 blur kernel: non-negative taps summing to ~1."""
    k = np.asarray(arr, dtype=np.float64)
    if k.shape != (KERNEL_SIZE, KERNEL_SIZE):
        raise ValueError(f"kernel must be {KERNEL_SIZE}x{KERNEL_SIZE}, got {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel contains non-finite values")
    if np.any(k < -1e-12):
        raise ValueError("kernel has negative taps")
    s = float(k.sum())
    if abs(s - 1.0) > 1e-6:
        raise ValueError(f"kernel mass {s} not normalized")
    return k


def load_png(path):
    """Read a PNG into a (C, H, W) float64 array scaled by 1/255."""
    with _PILImage.open(path) as im:
        if im.mode in ("RGBA", "P", "CMYK"):
            im = im.convert("RGB")
        elif im.mode in ("LA", "I", "I;16", "F"):
            im = im.convert("L")
        data = np.asarray(im, dtype=np.float64) / 255.0
    if data.ndim == 2:
        return data[None]
    return np.ascontiguousarray(data.transpose(2, 0, 1))


def save_png(path, img):
    """Write an image to 8-bit PNG, clipping to [0, 1] first."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3 or a.shape[0] not in (1, 3):
        raise ValueError(f"cannot export image of shape {a.shape}")
    q = np.clip(a, 0.0, 1.0)
    q = np.rint(q * 255.0).astype(np.uint8)
    if q.shape[0] == 1:
        _PILImage.fromarray(q[0], mode="L").save(path)
    else:
        _PILImage.fromarray(q.transpose(1, 2, 0), mode="RGB").save(path)


def mse(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak=1.0):
    """PSNR in dB between two same-shape images, capped at 99 dB.

    The cap doubles as the sentinel for an exact match (MSE = 0).
    """
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(peak * peak / err), PSNR_CAP_DB))


def luminance(img):
    """BT.601 luma plane of an RGB image, shape (H, W)."""
    a = as_image(img)
    if a.shape[0] != 3:
        raise ValueError("luminance requires 3 channels")
    r, g, b = a
    return _LUMA[0] * r + _LUMA[1] * g + _LUMA[2] * b


def psnr_y(a, b, peak=1.0):
    """PSNR on the BT.601 luminance plane. Both inputs must be RGB."""
    return psnr(luminance(a)[None], luminance(b)[None], peak=peak)


def kernel_mse(k_est, k_ref):
    """Mean squared error over the 441 kernel taps (reports use x1e5)."""
    a = np.asarray(k_est, dtype=np.float64)
    b = np.asarray(k_ref, dtype=np.float64)
    if a.shape != (KERNEL_SIZE, KERNEL_SIZE) or b.shape != (KERNEL_SIZE, KERNEL_SIZE):
        raise ValueError(f"kernel shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def _axis_coords(out_len, in_len, scale):
    # Half-pixel centre alignment; source samples clamped at the borders so
    # constants are preserved exactly.
    src = (np.arange(out_len) + 0.5) / scale - 0.5
    src = np.clip(src, 0.0, in_len - 1.0)
    lo = np.floor(src).astype(np.int64)
    t = src - lo
    hi = np.minimum(lo + 1, in_len - 1)
    return lo, hi, t


def bilinear_upscale(img, scale):
    """Upscale (C, H, W) by an integer factor with bilinear interpolation."""
    a = as_image(img)
    s = int(scale)
    if s < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if s == 1:
        return a.copy()
    _, h, w = a.shape
    r0, r1, tr = _axis_coords(h * s, h, s)
    c0, c1, tc = _axis_coords(w * s, w, s)
    top = a[:, r0][:, :, c0] * (1 - tc) + a[:, r0][:, :, c1] * tc
    bot = a[:, r1][:, :, c0] * (1 - tc) + a[:, r1][:, :, c1] * tc
    return top * (1 - tr[None, :, None]) + bot * tr[None, :, None]
