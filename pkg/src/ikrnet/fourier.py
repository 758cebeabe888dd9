"""Closed-form FFT solvers for the two quadratic sub-problems.

Image step, solved per channel:
    minimize  ||y - (z * k) downsample_s||^2 + alpha ||z - x_prev||^2

Kernel step, same algebra with the image acting as the convolution filter:
    minimize  ||y - (x * w) downsample_s||^2 + gamma ||w - k_prev||^2

Both reduce to a diagonal system per low-res frequency because decimation
aliases exactly s x s high-res frequencies onto each low-res one. block_avg
averages those aliases (the 1/s^2 lives there); block_mul spreads a low-res
factor back over the aliases. Dense matrix solvers for small grids certify the
algebra end to end.
"""

from dataclasses import dataclass

import numpy as np

from .degrade import grid_to_kernel, kernel_to_grid, upsample_zero
from .images import KERNEL_SIZE, as_image

# Inverse transforms of a correctly assembled spectrum are real up to rounding;
# anything bigger than this (relative) means a conjugate-symmetry bug.
IMAG_RESIDUE_TOL = 1e-6

DENSE_GRID_LIMIT = 32


@dataclass(frozen=True)
class HyperParams:
    """Per-iteration solver weights.

    sigma: noise std estimate in [0, 0.05].
    alpha: image data-step proximity weight, > 0.
    beta:  denoiser strength, >= 0.
    gamma: kernel data-step proximity weight, > 0.
    """

    sigma: float
    alpha: float
    beta: float
    gamma: float = 0.02

    def validate(self):
        if not 0.0 <= self.sigma <= 0.05:
            raise ValueError(f"sigma {self.sigma} outside [0, 0.05]")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        return self


def _check_block_dims(shape, scale):
    m, n = shape[-2], shape[-1]
    s = int(scale)
    if s < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if m % s or n % s:
        raise ValueError(f"spectrum dims {m}x{n} not divisible by scale {s}")
    return m // s, n // s, s


def block_avg(spec, scale):
    """Average the s x s aliasing sub-blocks of a high-res spectrum.

    Maps an (..., M, N) spectrum to (..., M/s, N/s). Satisfies
    FFT(downsample(w, s)) == block_avg(FFT(w), s) for any signal w.
    """
    a = np.asarray(spec)
    m, n, s = _check_block_dims(a.shape, scale)
    lead = a.shape[:-2]
    return a.reshape(lead + (s, m, s, n)).mean(axis=(-4, -2))


def block_mul(spec, factor, scale):
    """Multiply a high-res spectrum by a low-res factor tiled over the aliases."""
    a = np.asarray(spec)
    f = np.asarray(factor)
    m, n, s = _check_block_dims(a.shape, scale)
    if f.shape[-2:] != (m, n):
        raise ValueError(f"factor {f.shape[-2:]} does not tile {a.shape[-2:]} at scale {s}")
    reps = (1,) * (f.ndim - 2) + (s, s)
    return a * np.tile(f, reps)


@dataclass(frozen=True)
class SpectralOperand:
    """Precomputed spectra shared by the two data steps at one iteration.

    f_up_y:    FFT of the zero-upsampled observation, per channel (C, M, N).
    f_up_y_lum: same for the channel-mean observation (M, N).
    scale:     integer downsampling factor.
    """

    f_up_y: np.ndarray
    f_up_y_lum: np.ndarray
    scale: int

    @classmethod
    def from_observation(cls, y, scale):
        lr = as_image(y)
        s = int(scale)
        up = upsample_zero(lr, s)
        return cls(
            f_up_y=np.fft.fft2(up, axes=(-2, -1)),
            f_up_y_lum=np.fft.fft2(up.mean(axis=0)),
            scale=s,
        )


def _real_part(spec_inverse):
    out = np.fft.ifft2(spec_inverse, axes=(-2, -1))
    scale = np.abs(out.real).max()
    residue = np.abs(out.imag).max()
    if residue > IMAG_RESIDUE_TOL * max(scale, 1.0):
        raise FloatingPointError(
            f"imaginary residue {residue:.3e} exceeds tolerance, spectrum not conjugate-symmetric"
        )
    return out.real


def _solve_tikhonov_fft(f_filter, f_up_y, f_prior, weight, scale):
    # Shared closed form. f_filter: (M, N) transfer function of the circular
    # filter; f_prior: spectrum of the proximity anchor; weight: alpha or gamma.
    d = np.conj(f_filter) * f_up_y + weight * f_prior
    power = (f_filter * np.conj(f_filter)).real
    if scale == 1:
        # The correction below cancels d almost exactly when weight is small;
        # without aliasing the system is already diagonal, so solve it directly.
        return d / (power + weight)
    num = block_avg(f_filter * d, scale)
    den = block_avg(power, scale) + weight
    corr = block_mul(np.conj(f_filter), num / den, scale)
    return (d - corr) / weight


def solve_image_step(y, x_prev, kernel, alpha, scale, operand=None):
    """Exact minimizer of the image data term, per channel.

    Args:
        y:      (C, M/s, N/s) observation.
        x_prev: (C, M, N) proximity anchor.
        kernel: centred blur kernel.
        alpha:  proximity weight, > 0.
        scale:  integer downsampling factor s.
        operand: optional SpectralOperand caching FFT(upsample_zero(y, s)).

    Returns:
        (C, M, N) solution of
        (K^T S^T S K + alpha I) z = K^T S^T y + alpha x_prev.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    x = as_image(x_prev)
    lr = as_image(y)
    s = int(scale)
    _, h, w = x.shape
    if lr.shape != (x.shape[0], h // s, w // s) or h % s or w % s:
        raise ValueError(f"observation {lr.shape} inconsistent with anchor {x.shape} at scale {s}")
    f_k = np.fft.fft2(kernel_to_grid(kernel, (h, w)))
    if operand is not None and operand.scale == s:
        f_up_y = operand.f_up_y
    else:
        f_up_y = np.fft.fft2(upsample_zero(lr, s), axes=(-2, -1))
    f_x = np.fft.fft2(x, axes=(-2, -1))
    z_hat = _solve_tikhonov_fft(f_k, f_up_y, f_x, float(alpha), s)
    return _real_part(z_hat)


def solve_kernel_step(y, x, k_prev, gamma, scale, window=KERNEL_SIZE, operand=None):
    """Exact minimizer of the kernel data term, read back as a centred window.

    Multi-channel inputs are collapsed to their channel mean first; the blur is
    shared across channels so one luminance system is enough.

    Returns the (window, window) gather of the full-grid minimizer of
    (X^T S^T S X + gamma I) w = X^T S^T y + gamma k_prev_grid.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    hr = as_image(x).mean(axis=0)
    lr = as_image(y).mean(axis=0)
    s = int(scale)
    h, w = hr.shape
    if lr.shape != (h // s, w // s) or h % s or w % s:
        raise ValueError(f"observation {lr.shape} inconsistent with image {hr.shape} at scale {s}")
    f_x = np.fft.fft2(hr)
    if operand is not None and operand.scale == s:
        f_up_y = operand.f_up_y_lum
    else:
        f_up_y = np.fft.fft2(upsample_zero(lr[None], s)[0])
    f_k_prev = np.fft.fft2(kernel_to_grid(k_prev, (h, w)))
    w_hat = _solve_tikhonov_fft(f_x, f_up_y, f_k_prev, float(gamma), s)
    return grid_to_kernel(_real_part(w_hat), size=window)


def conv_downsample_matrix(filter_grid, scale):
    """Dense matrix of v -> downsample(circular_conv(v, filter), s).

    filter_grid is the (M, N) spatial filter already laid out with its centre
    at (0, 0) (see kernel_to_grid). Row (u, v) of the result reads
    filter_grid[(s u - p) mod M, (s v - q) mod N] at flat column (p, q), i.e.
    each row is a wrapped, shifted copy of the filter.
    """
    g = np.asarray(filter_grid, dtype=np.float64)
    m, n = g.shape
    s = int(scale)
    if m % s or n % s:
        raise ValueError(f"grid {m}x{n} not divisible by scale {s}")
    if m > DENSE_GRID_LIMIT or n > DENSE_GRID_LIMIT:
        raise ValueError(f"dense path capped at {DENSE_GRID_LIMIT} px, got {m}x{n}")
    rows = (s * np.arange(m // s)[:, None] - np.arange(m)[None, :]) % m
    cols = (s * np.arange(n // s)[:, None] - np.arange(n)[None, :]) % n
    a = g[rows[:, None, :, None], cols[None, :, None, :]]
    return a.reshape((m // s) * (n // s), m * n)


def dense_image_step(y, x_prev, kernel, alpha, scale):
    """Normal-equations reference for solve_image_step on small grids."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    x = as_image(x_prev)
    lr = as_image(y)
    c, h, w = x.shape
    s = int(scale)
    a = conv_downsample_matrix(kernel_to_grid(kernel, (h, w)), s)
    gram = a.T @ a + float(alpha) * np.eye(h * w)
    rhs = a.T @ lr.reshape(c, -1).T + float(alpha) * x.reshape(c, -1).T
    z = np.linalg.solve(gram, rhs)
    return z.T.reshape(c, h, w)


def dense_kernel_step(y, x, k_prev, gamma, scale, window=KERNEL_SIZE):
    """Normal-equations reference for solve_kernel_step on small grids."""
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    hr = as_image(x).mean(axis=0)
    lr = as_image(y).mean(axis=0)
    h, w = hr.shape
    s = int(scale)
    a = conv_downsample_matrix(hr, s)
    gram = a.T @ a + float(gamma) * np.eye(h * w)
    rhs = a.T @ lr.reshape(-1) + float(gamma) * kernel_to_grid(k_prev, (h, w)).reshape(-1)
    sol = np.linalg.solve(gram, rhs).reshape(h, w)
    return grid_to_kernel(sol, size=window)


def image_step_objective(z, y, x_prev, kernel, alpha, scale):
    """Value of the image-step quadratic, for descent checks."""
    from .degrade import convolve_circular, downsample

    resid = as_image(y) - downsample(convolve_circular(z, kernel), scale)
    return float(np.sum(resid**2) + alpha * np.sum((as_image(z) - as_image(x_prev)) ** 2))


def _rel_err(a, b):
    denom = np.linalg.norm(np.ravel(b))
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / max(denom, 1e-30))


def oracle_check(trials=50, max_size=16, scales=(1, 2, 4), seed=0,
                 alphas=(0.01, 0.1, 1.0), gammas=(0.01, 0.1)):
    """Randomized agreement check of the FFT steps against the dense solvers.

    For every scale, `trials` random instances (grid 8..max_size, random
    normalized kernels, random anchors) are solved along both paths for each
    alpha and gamma. Returns a dict with the worst relative errors; anything
    above 1e-6 means broken block algebra or FFT conventions.
    """
    rng = np.random.default_rng(seed)
    worst_image = 0.0
    worst_kernel = 0.0
    count = 0
    for s in scales:
        sizes = [d for d in range(8, max_size + 1) if d % s == 0 and d % 2 == 0]
        if not sizes:
            raise ValueError(f"no valid grid size for scale {s} under {max_size}")
        for _ in range(trials):
            h = int(rng.choice(sizes))
            w = int(rng.choice(sizes))
            channels = int(rng.choice([1, 3]))
            kernel = rng.uniform(0.0, 1.0, size=(KERNEL_SIZE, KERNEL_SIZE)) ** 3
            kernel /= kernel.sum()
            x_prev = rng.uniform(0.0, 1.0, size=(channels, h, w))
            y = rng.uniform(0.0, 1.0, size=(channels, h // s, w // s))
            k_prev = rng.uniform(0.0, 1.0, size=(KERNEL_SIZE, KERNEL_SIZE))
            k_prev /= k_prev.sum()
            for alpha in alphas:
                fft_z = solve_image_step(y, x_prev, kernel, alpha, s)
                dense_z = dense_image_step(y, x_prev, kernel, alpha, s)
                worst_image = max(worst_image, _rel_err(fft_z, dense_z))
            for gamma in gammas:
                fft_w = solve_kernel_step(y, x_prev, k_prev, gamma, s)
                dense_w = dense_kernel_step(y, x_prev, k_prev, gamma, s)
                worst_kernel = max(worst_kernel, _rel_err(fft_w, dense_w))
            count += 1
    return {
        "instances": count,
        "worst_image_rel_err": worst_image,
        "worst_kernel_rel_err": worst_kernel,
    }
