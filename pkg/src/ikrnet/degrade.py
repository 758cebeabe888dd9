"""Blur kernel synthesis and the y = (x * k) downsample + noise forward model.

Convolution is circular. A kernel's centre tap (10, 10) is placed at grid
index (0, 0) before any FFT, so the delta kernel is the exact identity.
Downsampling keeps the upper-left sample of each s x s cell.
"""

from dataclasses import dataclass

import numpy as np

from .images import KERNEL_CENTER, KERNEL_SIZE, as_image, as_kernel
from .weights import WeightStore, load_weights, save_weights

MAX_NOISE_SIGMA = 0.03

# Motion trajectories: fixed step count, total path a bit over half the window.
_MOTION_STEPS = 64
_MOTION_STEP_LEN = 0.18
_MOTION_TURN_RATE = 0.5
_MOTION_SUBSAMPLES = 4


def gaussian_kernel(sigma_x, sigma_y, theta=0.0):
    """Anisotropic Gaussian blur kernel on the 21x21 grid.

    Args:
        sigma_x, sigma_y: standard deviations (pixels) along the two principal
            axes before rotation; must be positive.
        theta: counter-clockwise rotation of the principal axes (radians).

    Returns:
        (21, 21) kernel, normalized to sum 1, centre tap at (10, 10).
    """
    if sigma_x <= 0 or sigma_y <= 0:
        raise ValueError(f"sigma must be positive, got ({sigma_x}, {sigma_y})")
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    cov = rot @ np.diag([sigma_x**2, sigma_y**2]) @ rot.T
    inv = np.linalg.inv(cov)
    ax = np.arange(KERNEL_SIZE) - KERNEL_CENTER
    xx, yy = np.meshgrid(ax, ax)  # xx: column offset, yy: row offset
    quad = inv[0, 0] * xx**2 + 2 * inv[0, 1] * xx * yy + inv[1, 1] * yy**2
    k = np.exp(-0.5 * quad)
    return k / k.sum()


def _blur3(grid, sigma):
    # Small separable Gaussian, truncated to 3 taps, zero padded at borders.
    ax = np.array([-1.0, 0.0, 1.0])
    w = np.exp(-0.5 * (ax / sigma) ** 2)
    w /= w.sum()
    padded = np.pad(grid, 1)
    out = np.zeros_like(grid)
    for i in range(3):
        for j in range(3):
            out += w[i] * w[j] * padded[i:i + grid.shape[0], j:j + grid.shape[1]]
    return out


def motion_kernel(seed, nonlinearity):
    """Random-walk motion blur kernel.

    The trajectory takes 64 fixed-length steps; the heading receives Gaussian
    increments whose std is proportional to `nonlinearity` (0 gives a straight
    streak). The centred path is rasterized with linear interpolation, blurred
    by a 0.5 px Gaussian, clipped to the window and renormalized.
    Deterministic for a given (seed, nonlinearity).
    """
    if not 0.0 <= nonlinearity <= 1.0:
        raise ValueError(f"nonlinearity must be in [0, 1], got {nonlinearity}")
    rng = np.random.default_rng(seed)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    turns = rng.normal(0.0, _MOTION_TURN_RATE * nonlinearity, size=_MOTION_STEPS - 1)
    angles = heading + np.concatenate([[0.0], np.cumsum(turns)])
    steps = _MOTION_STEP_LEN * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    pts = np.concatenate([np.zeros((1, 2)), np.cumsum(steps, axis=0)])
    pts -= pts.mean(axis=0)

    # Dense samples along each segment, then bilinear splat.
    t = np.linspace(0.0, 1.0, _MOTION_SUBSAMPLES, endpoint=False)[:, None, None]
    dense = pts[None, :-1] * (1 - t) + pts[None, 1:] * t
    dense = dense.reshape(-1, 2) + KERNEL_CENTER

    grid = np.zeros((KERNEL_SIZE, KERNEL_SIZE))
    base = np.floor(dense).astype(np.int64)
    frac = dense - base
    for di in (0, 1):
        for dj in (0, 1):
            r = base[:, 1] + di
            c = base[:, 0] + dj
            w = (frac[:, 1] if di else 1 - frac[:, 1]) * (frac[:, 0] if dj else 1 - frac[:, 0])
            ok = (r >= 0) & (r < KERNEL_SIZE) & (c >= 0) & (c < KERNEL_SIZE)
            np.add.at(grid, (r[ok], c[ok]), w[ok])

    grid = _blur3(grid, 0.5)
    total = grid.sum()
    if total <= 0:
        raise ValueError("motion trajectory left the kernel window entirely")
    return grid / total


def delta_kernel():
    """Identity kernel: single unit tap at the centre."""
    k = np.zeros((KERNEL_SIZE, KERNEL_SIZE))
    k[KERNEL_CENTER, KERNEL_CENTER] = 1.0
    return k


def kernel_to_grid(kernel, shape):
    """Place a centred kernel on an (M, N) grid with the centre tap at (0, 0).

    Taps wrap modulo the grid dims and accumulate, so grids smaller than the
    kernel still define the same circular operator as the FFT path.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError("kernel must be 2-D")
    m, n = shape
    if m < 1 or n < 1:
        raise ValueError(f"bad grid {shape}")
    kh, kw = k.shape
    rows = (np.arange(kh) - kh // 2) % m
    cols = (np.arange(kw) - kw // 2) % n
    grid = np.zeros((m, n))
    np.add.at(grid, (rows[:, None], cols[None, :]), k)
    return grid


def grid_to_kernel(grid, size=KERNEL_SIZE):
    """Inverse gather of kernel_to_grid: read the centred window back.

    On grids smaller than the window the gather wraps, mirroring the placement
    rule, so round trips stay consistent at any grid size.
    """
    g = np.asarray(grid, dtype=np.float64)
    m, n = g.shape
    rows = (np.arange(size) - size // 2) % m
    cols = (np.arange(size) - size // 2) % n
    return g[np.ix_(rows, cols)]


def _kernel_otf(kernel, shape):
    return np.fft.fft2(kernel_to_grid(kernel, shape))


def convolve_circular(img, kernel):
    """Circular convolution of each channel with a centred kernel."""
    x = as_image(img)
    k = np.asarray(kernel, dtype=np.float64)
    _, h, w = x.shape
    if h < k.shape[0] or w < k.shape[1]:
        raise ValueError(f"image {h}x{w} smaller than kernel {k.shape}")
    otf = _kernel_otf(k, (h, w))
    out = np.fft.ifft2(np.fft.fft2(x, axes=(-2, -1)) * otf, axes=(-2, -1))
    return out.real


def correlate_circular(img, kernel):
    """Adjoint of convolve_circular (circular cross-correlation)."""
    x = as_image(img)
    k = np.asarray(kernel, dtype=np.float64)
    _, h, w = x.shape
    if h < k.shape[0] or w < k.shape[1]:
        raise ValueError(f"image {h}x{w} smaller than kernel {k.shape}")
    otf = _kernel_otf(k, (h, w))
    out = np.fft.ifft2(np.fft.fft2(x, axes=(-2, -1)) * np.conj(otf), axes=(-2, -1))
    return out.real


def downsample(img, scale):
    """Keep the upper-left sample of each scale x scale cell."""
    x = as_image(img)
    s = int(scale)
    if s < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    _, h, w = x.shape
    if h % s or w % s:
        raise ValueError(f"dims {h}x{w} not divisible by scale {s}")
    return x[:, ::s, ::s].copy()


def upsample_zero(img, scale):
    """Adjoint of downsample: samples land on the coarse lattice, zeros elsewhere."""
    x = as_image(img)
    s = int(scale)
    if s < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    c, h, w = x.shape
    out = np.zeros((c, h * s, w * s))
    out[:, ::s, ::s] = x
    return out


def add_noise(img, sigma, seed):
    """Additive white Gaussian noise, not clipped (clipping would bias the
    residual statistics the noise estimator relies on)."""
    x = as_image(img)
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    return x + rng.normal(0.0, sigma, size=x.shape)


@dataclass
class DegradationConfig:
    """Forward-model settings: integer scale, noise level, RNG seed."""

    scale: int = 2
    noise_sigma: float = 0.0
    rng_seed: int = 0
    allow_large_sigma: bool = False

    def validate(self):
        if int(self.scale) < 1:
            raise ValueError(f"scale must be >= 1, got {self.scale}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.noise_sigma}")
        if self.noise_sigma > MAX_NOISE_SIGMA and not self.allow_large_sigma:
            raise ValueError(
                f"noise sigma {self.noise_sigma} above {MAX_NOISE_SIGMA}; "
                "set allow_large_sigma to override"
            )
        return self


def degrade(img, kernel, config):
    """Full forward model: blur, downsample, add noise."""
    cfg = config.validate()
    k = as_kernel(kernel)
    blurred = convolve_circular(img, k)
    low = downsample(blurred, cfg.scale)
    return add_noise(low, cfg.noise_sigma, cfg.rng_seed)


def save_kernel(path, kernel):
    """Write a kernel as a one-tensor weight file (name "kernel")."""
    k = as_kernel(kernel)
    store = WeightStore()
    store.put("kernel", k)
    save_weights(path, store)


def load_kernel(path):
    """Read a kernel from a one-tensor weight file, re-validating invariants."""
    store = load_weights(path)
    if "kernel" not in store:
        raise ValueError(f"{path} has no tensor named 'kernel'")
    return as_kernel(store["kernel"].astype(np.float64))


def save_kernel_text(path, kernel):
    """Debug dump: 21 lines of 21 floats."""
    k = as_kernel(kernel)
    with open(path, "w") as fh:
        for row in k:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_kernel_text(path):
    with open(path) as fh:
        rows = [[float(tok) for tok in line.split()] for line in fh if line.strip()]
    k = np.array(rows, dtype=np.float64)
    if k.shape != (KERNEL_SIZE, KERNEL_SIZE):
        raise ValueError(f"{path}: expected {KERNEL_SIZE} lines of {KERNEL_SIZE} floats, got {k.shape}")
    return as_kernel(k)


def edge_taper(img, kernel):
    """Soften the frame border toward its blurred copy.

    Mitigates circular wrap-around artefacts when feeding real photographs to
    the solver; synthetic data generated by `degrade` does not need it.
    """
    x = as_image(img)
    k = as_kernel(kernel)
    blurred = convolve_circular(x, k)
    _, h, w = x.shape
    r = KERNEL_CENTER
    ramp_h = np.minimum(np.minimum(np.arange(h), np.arange(h)[::-1]) / r, 1.0)
    ramp_w = np.minimum(np.minimum(np.arange(w), np.arange(w)[::-1]) / r, 1.0)
    weight = ramp_h[:, None] * ramp_w[None, :]
    return weight * x + (1.0 - weight) * blurred
