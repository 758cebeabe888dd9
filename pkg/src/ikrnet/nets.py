"""Inference-only networks and their classical fallbacks.

All convolutions are 3x3 cross-correlations with zero padding 1, stride 1 or
2, optionally transposed; weights are (out, in, 3, 3) for both directions.
Heavy lifting goes through an im2col + matmul path so BLAS does the work; a
naive loop in the tests pins the semantics.

Tensor naming inside a WeightStore is `<prefix>.<stage>.<layer>.<weight|bias>`
and the full name -> shape map for every network ships as a function, so
independently trained weights can be packed without reading the forward code.

Prefixes: "p" image denoiser, "pk" kernel regularizer, "i" kernel initializer,
"f" noise/hyper-parameter head.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .degrade import convolve_circular, downsample, gaussian_kernel
from .fourier import HyperParams
from .images import KERNEL_SIZE, as_image

DEFAULT_WIDTHS = (64, 128, 256, 512)
BLOCKS_PER_STAGE = 2
ALPHA_FLOOR = 1e-6
SIGMA_MAX = 0.05
MIN_INIT_SIZE = 32

DENOISER_PREFIX = "p"
REGULARIZER_PREFIX = "pk"
INITIALIZER_PREFIX = "i"
NOISE_PREFIX = "f"


@dataclass(frozen=True)
class ConvSpec:
    """Declares one conv layer: channel counts, stride, direction, bias."""

    in_channels: int
    out_channels: int
    stride: int = 1
    transpose: bool = False
    bias: bool = False

    def weight_shape(self):
        return (self.out_channels, self.in_channels, 3, 3)

    def validate(self):
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")
        return self


def conv2d(x, weight, bias=None, stride=1, transpose=False):
    """3x3 conv layer forward pass.

    Args:
        x: (C_in, H, W) input.
        weight: (C_out, C_in, 3, 3).
        bias: optional (C_out,).
        stride: 1 keeps dims, 2 halves them (even dims halve exactly).
        transpose: adjoint direction; stride 2 doubles dims exactly.

    Returns:
        (C_out, H', W') float64.
    """
    a = np.asarray(x, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    if a.ndim != 3 or w.ndim != 4 or w.shape[2:] != (3, 3):
        raise ValueError(f"bad shapes: input {a.shape}, weight {w.shape}")
    if w.shape[1] != a.shape[0]:
        raise ValueError(f"input has {a.shape[0]} channels, weight expects {w.shape[1]}")
    if stride not in (1, 2):
        raise ValueError(f"stride must be 1 or 2, got {stride}")

    if transpose:
        # Scatter formulation out[o, s*i + p - 1, s*j + q - 1] += x[c,i,j] W[o,c,p,q],
        # computed as a valid correlation of the zero-stuffed input with the
        # flipped weights. Asymmetric padding keeps the output at exactly s*H.
        c_in, h, wd = a.shape
        if stride == 1:
            stuffed = a
        else:
            stuffed = np.zeros((c_in, stride * (h - 1) + 1, stride * (wd - 1) + 1))
            stuffed[:, ::stride, ::stride] = a
        padded = np.pad(stuffed, ((0, 0), (1, stride), (1, stride)))
        win = sliding_window_view(padded, (3, 3), axis=(1, 2))
        cols = win.transpose(1, 2, 0, 3, 4).reshape(-1, c_in * 9)
        wmat = w[:, :, ::-1, ::-1].reshape(w.shape[0], -1)
        out = cols @ wmat.T
        oh, ow = stride * h, stride * wd
    else:
        padded = np.pad(a, ((0, 0), (1, 1), (1, 1)))
        win = sliding_window_view(padded, (3, 3), axis=(1, 2))
        if stride == 2:
            win = win[:, ::2, ::2]
        oh, ow = win.shape[1], win.shape[2]
        cols = win.transpose(1, 2, 0, 3, 4).reshape(-1, a.shape[0] * 9)
        out = cols @ w.reshape(w.shape[0], -1).T

    out = out.T.reshape(w.shape[0], oh, ow)
    if bias is not None:
        b = np.asarray(bias, dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match {w.shape[0]} outputs")
        out = out + b[:, None, None]
    return out


def relu(x):
    return np.maximum(x, 0.0)


def _softplus(x):
    return np.logaddexp(0.0, x)


# ---------------------------------------------------------------------------
# ResUNet: head conv, three encoder stages (res blocks + strided conv), body,
# three decoder stages (transpose conv + res blocks), tail conv. Additive
# skip connections at every scale; activations only inside the res blocks.
# ---------------------------------------------------------------------------

def resunet_shapes(prefix, in_channels, out_channels,
                   widths=DEFAULT_WIDTHS, blocks=BLOCKS_PER_STAGE):
    """Exhaustive tensor name -> shape map for one ResUNet."""
    if len(widths) != 4:
        raise ValueError("resunet uses exactly four scales")
    shapes = {f"{prefix}.head.weight": (widths[0], in_channels, 3, 3)}

    def res_stage(stage, width):
        for r in range(1, blocks + 1):
            for c in (1, 2):
                shapes[f"{prefix}.{stage}.res{r}.conv{c}.weight"] = (width, width, 3, 3)

    for i in range(3):
        res_stage(f"enc{i}", widths[i])
        shapes[f"{prefix}.enc{i}.down.weight"] = (widths[i + 1], widths[i], 3, 3)
    res_stage("body", widths[3])
    for i in (2, 1, 0):
        shapes[f"{prefix}.dec{i}.up.weight"] = (widths[i], widths[i + 1], 3, 3)
        res_stage(f"dec{i}", widths[i])
    shapes[f"{prefix}.tail.weight"] = (out_channels, widths[0], 3, 3)
    return shapes


def _res_blocks(h, store, prefix, stage, blocks):
    for r in range(1, blocks + 1):
        t = relu(conv2d(h, store[f"{prefix}.{stage}.res{r}.conv1.weight"]))
        h = h + conv2d(t, store[f"{prefix}.{stage}.res{r}.conv2.weight"])
    return h


def _probe_blocks(store, prefix):
    r = 0
    while f"{prefix}.body.res{r + 1}.conv1.weight" in store:
        r += 1
    if r == 0:
        raise KeyError(f"no res blocks found under prefix {prefix!r}")
    return r


def resunet_forward(x, store, prefix):
    """Run a ResUNet whose geometry is read off the stored tensor shapes.

    Input dims are reflect-padded (bottom/right) to a multiple of 8 and the
    output cropped back, so any size from 8 px up works.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 3:
        raise ValueError(f"expected (C, H, W), got {a.shape}")
    blocks = _probe_blocks(store, prefix)
    _, h, w = a.shape
    ph = (-h) % 8
    pw = (-w) % 8
    if ph or pw:
        a = np.pad(a, ((0, 0), (0, ph), (0, pw)), mode="reflect")

    x1 = conv2d(a, store[f"{prefix}.head.weight"])
    x2 = conv2d(_res_blocks(x1, store, prefix, "enc0", blocks),
                store[f"{prefix}.enc0.down.weight"], stride=2)
    x3 = conv2d(_res_blocks(x2, store, prefix, "enc1", blocks),
                store[f"{prefix}.enc1.down.weight"], stride=2)
    x4 = conv2d(_res_blocks(x3, store, prefix, "enc2", blocks),
                store[f"{prefix}.enc2.down.weight"], stride=2)
    b = _res_blocks(x4, store, prefix, "body", blocks)
    d = _res_blocks(conv2d(b + x4, store[f"{prefix}.dec2.up.weight"], stride=2, transpose=True),
                    store, prefix, "dec2", blocks)
    d = _res_blocks(conv2d(d + x3, store[f"{prefix}.dec1.up.weight"], stride=2, transpose=True),
                    store, prefix, "dec1", blocks)
    d = _res_blocks(conv2d(d + x2, store[f"{prefix}.dec0.up.weight"], stride=2, transpose=True),
                    store, prefix, "dec0", blocks)
    out = conv2d(d + x1, store[f"{prefix}.tail.weight"])
    return out[:, :h, :w]


# ---------------------------------------------------------------------------
# Image denoiser plug
# ---------------------------------------------------------------------------

_BILATERAL_RADIUS = 2
_BILATERAL_SPATIAL_SIGMA = 1.5
_BILATERAL_RANGE_FACTOR = 2.0


def classical_denoiser(img, beta):
    """Edge-preserving smoothing with strength tied to beta.

    A 5x5 bilateral-style weighted mean: spatial Gaussian window, range weights
    exp(-diff^2 / (2 (2 beta)^2)), circular boundary. beta = 0 is the identity.
    """
    x = as_image(img)
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return x.copy()
    inv_two_sr2 = 1.0 / (2.0 * (_BILATERAL_RANGE_FACTOR * beta) ** 2)
    num = np.zeros_like(x)
    den = np.zeros_like(x)
    r = _BILATERAL_RADIUS
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            sw = np.exp(-(di * di + dj * dj) / (2.0 * _BILATERAL_SPATIAL_SIGMA**2))
            shifted = np.roll(x, (di, dj), axis=(1, 2))
            wgt = sw * np.exp(-((shifted - x) ** 2) * inv_two_sr2)
            num += wgt * shifted
            den += wgt
    return num / den


def denoiser_shapes(channels, widths=DEFAULT_WIDTHS, blocks=BLOCKS_PER_STAGE):
    """ResUNet denoiser tensors; input carries one extra constant beta channel."""
    return resunet_shapes(DENOISER_PREFIX, channels + 1, channels, widths, blocks)


def learned_denoiser(img, beta, store):
    """ResUNet denoiser: beta enters as a constant trailing input channel."""
    x = as_image(img)
    beta_plane = np.full((1, x.shape[1], x.shape[2]), float(beta))
    return resunet_forward(np.concatenate([x, beta_plane]), store, DENOISER_PREFIX)


@dataclass(frozen=True)
class DenoiserPlug:
    """Selected denoiser: `learned-resunet` (needs weights) or `classical-shrinkage`."""

    variant: str
    store: object = None

    def __post_init__(self):
        if self.variant not in ("learned-resunet", "classical-shrinkage"):
            raise ValueError(f"unknown denoiser variant {self.variant!r}")
        if self.variant == "learned-resunet" and self.store is None:
            raise ValueError("learned-resunet denoiser needs a weight store")

    def __call__(self, img, beta):
        if self.variant == "learned-resunet":
            return learned_denoiser(img, beta, self.store)
        return classical_denoiser(img, beta)


# ---------------------------------------------------------------------------
# Kernel projection, regularizer and initializer plugs
# ---------------------------------------------------------------------------

def project_kernel(raw):
    """Clamp to non-negative and renormalize to sum 1.

    A degenerate all-nonpositive input maps to the uniform kernel so the sum-1
    invariant survives arbitrary network outputs.
    """
    k = np.asarray(raw, dtype=np.float64)
    if k.shape != (KERNEL_SIZE, KERNEL_SIZE):
        raise ValueError(f"kernel must be {KERNEL_SIZE}x{KERNEL_SIZE}, got {k.shape}")
    k = np.maximum(k, 0.0)
    total = k.sum()
    if total <= 1e-12:
        return np.full((KERNEL_SIZE, KERNEL_SIZE), 1.0 / KERNEL_SIZE**2)
    return k / total


def regularizer_shapes(widths=DEFAULT_WIDTHS, blocks=BLOCKS_PER_STAGE):
    return resunet_shapes(REGULARIZER_PREFIX, 1, 1, widths, blocks)


def kernel_regularizer(raw_kernel, store=None):
    """Map a raw kernel estimate back onto the valid-kernel set.

    With weights: ResUNet refinement then projection. Without: projection only.
    """
    k = np.asarray(raw_kernel, dtype=np.float64)
    if store is not None and f"{REGULARIZER_PREFIX}.head.weight" in store:
        k = resunet_forward(k[None], store, REGULARIZER_PREFIX)[0]
    return project_kernel(k)


def initializer_shapes(prefix=INITIALIZER_PREFIX):
    """Kernel initializer: 3 strided conv layers, a latent projection conv,
    global average pooling to a 10-dim code, then a 3-layer FC decoder."""
    return {
        f"{prefix}.enc1.weight": (16, 1, 3, 3),
        f"{prefix}.enc1.bias": (16,),
        f"{prefix}.enc2.weight": (32, 16, 3, 3),
        f"{prefix}.enc2.bias": (32,),
        f"{prefix}.enc3.weight": (64, 32, 3, 3),
        f"{prefix}.enc3.bias": (64,),
        f"{prefix}.latent.weight": (10, 64, 3, 3),
        f"{prefix}.latent.bias": (10,),
        f"{prefix}.fc1.weight": (128, 10),
        f"{prefix}.fc1.bias": (128,),
        f"{prefix}.fc2.weight": (256, 128),
        f"{prefix}.fc2.bias": (256,),
        f"{prefix}.fc3.weight": (KERNEL_SIZE**2, 256),
        f"{prefix}.fc3.bias": (KERNEL_SIZE**2,),
    }


def init_kernel(y, store=None):
    """First kernel guess from the observation.

    Learned path: strided conv encoder on the channel mean, 10-dim global
    average pooled code, FC decoder to 441 logits, projection. Fallback when
    no weights are loaded: a mild isotropic Gaussian.
    """
    lr = as_image(y)
    pfx = INITIALIZER_PREFIX
    if store is None or f"{pfx}.enc1.weight" not in store:
        return gaussian_kernel(1.0, 1.0, 0.0)
    if lr.shape[1] < MIN_INIT_SIZE or lr.shape[2] < MIN_INIT_SIZE:
        raise ValueError(
            f"initializer needs at least {MIN_INIT_SIZE}px inputs, got {lr.shape[1]}x{lr.shape[2]}"
        )
    h = lr.mean(axis=0, keepdims=True)
    for name in ("enc1", "enc2", "enc3"):
        h = relu(conv2d(h, store[f"{pfx}.{name}.weight"], store[f"{pfx}.{name}.bias"], stride=2))
    h = conv2d(h, store[f"{pfx}.latent.weight"], store[f"{pfx}.latent.bias"])
    code = h.mean(axis=(1, 2))
    h = relu(store[f"{pfx}.fc1.weight"].astype(np.float64) @ code + store[f"{pfx}.fc1.bias"])
    h = relu(store[f"{pfx}.fc2.weight"].astype(np.float64) @ h + store[f"{pfx}.fc2.bias"])
    logits = store[f"{pfx}.fc3.weight"].astype(np.float64) @ h + store[f"{pfx}.fc3.bias"]
    return project_kernel(logits.reshape(KERNEL_SIZE, KERNEL_SIZE))


# ---------------------------------------------------------------------------
# Noise / hyper-parameter estimation
# ---------------------------------------------------------------------------

def noise_head_shapes(prefix=NOISE_PREFIX):
    """Noise head: 2 conv layers on the residual, FC (sigma, scale) -> (alpha, beta)."""
    return {
        f"{prefix}.conv1.weight": (16, 1, 3, 3),
        f"{prefix}.conv1.bias": (16,),
        f"{prefix}.conv2.weight": (1, 16, 3, 3),
        f"{prefix}.conv2.bias": (1,),
        f"{prefix}.fc1.weight": (16, 2),
        f"{prefix}.fc1.bias": (16,),
        f"{prefix}.fc2.weight": (16, 16),
        f"{prefix}.fc2.bias": (16,),
        f"{prefix}.fc3.weight": (2, 16),
        f"{prefix}.fc3.bias": (2,),
    }


def hyperparams_from_sigma(sigma, gamma=0.02):
    """Classical sigma -> (alpha, beta) mapping used by all fixed noise modes."""
    s = float(np.clip(sigma, 0.0, SIGMA_MAX))
    return HyperParams(sigma=s, alpha=max(s * s, ALPHA_FLOOR), beta=s, gamma=gamma)


def estimate_noise(y, x_prev, kernel, scale, store=None, gamma=0.02):
    """Estimate (sigma, alpha, beta) from the degradation residual.

    The residual is y minus the reblurred, downsampled current estimate; with
    an exact estimate it is the injected noise itself. Classical path: sample
    std of the residual, alpha = max(sigma^2, 1e-6), beta = sigma. Learned
    path (weights present): conv head on the residual for sigma, FC head on
    (sigma, scale) for alpha and beta, with positivity floors.
    """
    lr = as_image(y)
    resid = lr - downsample(convolve_circular(x_prev, kernel), scale)
    pfx = NOISE_PREFIX
    if store is None or f"{pfx}.conv1.weight" not in store:
        sigma = float(resid.std())
        return hyperparams_from_sigma(sigma, gamma=gamma)
    h = resid.mean(axis=0, keepdims=True)
    h = relu(conv2d(h, store[f"{pfx}.conv1.weight"], store[f"{pfx}.conv1.bias"]))
    h = conv2d(h, store[f"{pfx}.conv2.weight"], store[f"{pfx}.conv2.bias"])
    sigma = float(np.clip(h.mean(), 0.0, SIGMA_MAX))
    vec = np.array([sigma, float(scale)])
    h = relu(store[f"{pfx}.fc1.weight"].astype(np.float64) @ vec + store[f"{pfx}.fc1.bias"])
    h = relu(store[f"{pfx}.fc2.weight"].astype(np.float64) @ h + store[f"{pfx}.fc2.bias"])
    out = store[f"{pfx}.fc3.weight"].astype(np.float64) @ h + store[f"{pfx}.fc3.bias"]
    alpha = float(_softplus(out[0]) + ALPHA_FLOOR)
    beta = float(_softplus(out[1]))
    return HyperParams(sigma=sigma, alpha=alpha, beta=beta, gamma=gamma)


# ---------------------------------------------------------------------------
# Random weight factories (tests, demos)
# ---------------------------------------------------------------------------

def fill_random_weights(store, shapes, seed, scale=0.05):
    """Populate `store` with Gaussian float32 tensors for every entry of `shapes`."""
    rng = np.random.default_rng(seed)
    for name, shape in shapes.items():
        store.put(name, rng.normal(0.0, scale, size=shape).astype(np.float32))
    return store
