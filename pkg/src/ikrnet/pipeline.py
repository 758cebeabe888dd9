"""Alternating blind super-resolution iteration.

Each iteration runs, in order: kernel data step + kernel regularization (when
refinement is on), noise / hyper-parameter estimation, image data step, then
the denoiser. Estimation runs before the image step because alpha feeds it.
The image starts as the bilinear upscale of the observation; the kernel starts
from the initializer plug unless one is supplied.
"""

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .degrade import MAX_NOISE_SIGMA
from .fourier import SpectralOperand, solve_image_step, solve_kernel_step
from .images import as_image, as_kernel, bilinear_upscale, save_png
from .nets import (
    DenoiserPlug,
    DENOISER_PREFIX,
    estimate_noise,
    hyperparams_from_sigma,
    init_kernel,
    kernel_regularizer,
)

NOISE_MODES = ("predicted", "known", "zero", "max")
MIN_INPUT_SIZE = 32


@dataclass
class SolverConfig:
    """Iteration budget, scale factor, noise handling and plug selection."""

    scale: int = 2
    iterations: int = 16
    noise_mode: str = "predicted"
    known_sigma: float = 0.0
    use_kernel_refinement: bool = True
    gamma: float = 0.02
    weights: object = None
    denoiser: str = "auto"  # auto | classical | learned
    record_snapshots: bool = False

    def validate(self):
        if int(self.scale) < 1:
            raise ValueError(f"scale must be >= 1, got {self.scale}")
        if int(self.iterations) < 1:
            raise ValueError(f"need at least one iteration, got {self.iterations}")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}, got {self.noise_mode!r}")
        if self.noise_mode == "known" and not 0.0 <= self.known_sigma <= 0.05:
            raise ValueError(f"known sigma {self.known_sigma} outside [0, 0.05]")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.denoiser not in ("auto", "classical", "learned"):
            raise ValueError(f"unknown denoiser selection {self.denoiser!r}")
        return self

    def denoiser_plug(self):
        choice = self.denoiser
        if choice == "auto":
            has = self.weights is not None and f"{DENOISER_PREFIX}.head.weight" in self.weights
            choice = "learned" if has else "classical"
        if choice == "learned":
            return DenoiserPlug("learned-resunet", self.weights)
        return DenoiserPlug("classical-shrinkage")


@dataclass
class TraceEntry:
    """Scalars for one iteration; kernels always kept, images only on request."""

    sigma: float
    alpha: float
    beta: float
    kernel: np.ndarray
    image: np.ndarray = None
    data_image: np.ndarray = None
    kernel_raw: np.ndarray = None


@dataclass
class SolverTrace:
    scale: int
    noise_mode: str
    entries: list = field(default_factory=list)

    def sigmas(self):
        return [e.sigma for e in self.entries]

    def kernels(self):
        return [e.kernel for e in self.entries]

    def __len__(self):
        return len(self.entries)


@dataclass
class SolverResult:
    image: np.ndarray
    kernel: np.ndarray
    trace: SolverTrace


def _hyperparams(cfg, y, x, k, operand=None):
    if cfg.noise_mode == "predicted":
        return estimate_noise(y, x, k, cfg.scale, store=cfg.weights, gamma=cfg.gamma)
    if cfg.noise_mode == "known":
        return hyperparams_from_sigma(cfg.known_sigma, gamma=cfg.gamma)
    if cfg.noise_mode == "zero":
        return hyperparams_from_sigma(0.0, gamma=cfg.gamma)
    return hyperparams_from_sigma(MAX_NOISE_SIGMA, gamma=cfg.gamma)


def run_ikr(y, config, initial_kernel=None):
    """Blind super-resolution of a low-res observation.

    Args:
        y: (C, h, w) observation, h and w at least 32.
        config: SolverConfig.
        initial_kernel: optional kernel overriding the initializer plug.

    Returns:
        SolverResult with the final image (C, h*s, w*s), the final kernel and
        the per-iteration trace.
    """
    cfg = config.validate()
    lr = as_image(y)
    if lr.shape[1] < MIN_INPUT_SIZE or lr.shape[2] < MIN_INPUT_SIZE:
        raise ValueError(f"observation must be at least {MIN_INPUT_SIZE}px, got {lr.shape}")
    s = int(cfg.scale)

    x = bilinear_upscale(lr, s)
    if initial_kernel is not None:
        k = as_kernel(initial_kernel)
    else:
        k = init_kernel(lr, cfg.weights)
    denoise = cfg.denoiser_plug()
    operand = SpectralOperand.from_observation(lr, s)
    trace = SolverTrace(scale=s, noise_mode=cfg.noise_mode)

    for _ in range(int(cfg.iterations)):
        kernel_raw = None
        if cfg.use_kernel_refinement:
            kernel_raw = solve_kernel_step(lr, x, k, cfg.gamma, s, operand=operand)
            k = kernel_regularizer(kernel_raw, cfg.weights)
        hp = _hyperparams(cfg, lr, x, k, operand).validate()
        z = solve_image_step(lr, x, k, hp.alpha, s, operand=operand)
        x = denoise(z, hp.beta)
        trace.entries.append(TraceEntry(
            sigma=hp.sigma, alpha=hp.alpha, beta=hp.beta,
            kernel=k.copy(),
            image=x.copy() if cfg.record_snapshots else None,
            data_image=z.copy() if cfg.record_snapshots else None,
            kernel_raw=kernel_raw.copy() if cfg.record_snapshots and kernel_raw is not None else None,
        ))

    return SolverResult(image=x, kernel=k, trace=trace)


def run_nonblind(y, kernel, sigma, config):
    """Super-resolve with a known kernel and noise level (no refinement)."""
    cfg = dataclasses.replace(
        config, use_kernel_refinement=False, noise_mode="known", known_sigma=float(sigma)
    )
    return run_ikr(y, cfg, initial_kernel=as_kernel(kernel))


def estimate_kernel_only(y, x_ref, config, initial_kernel=None):
    """Kernel estimation with the image fixed at an exact reference.

    Runs only the kernel data step + regularizer for config.iterations rounds.
    Returns the final kernel.
    """
    cfg = config.validate()
    lr = as_image(y)
    hr = as_image(x_ref)
    s = int(cfg.scale)
    if hr.shape[1] != lr.shape[1] * s or hr.shape[2] != lr.shape[2] * s:
        raise ValueError(f"reference {hr.shape} is not scale {s} of observation {lr.shape}")
    if initial_kernel is not None:
        k = as_kernel(initial_kernel)
    else:
        k = init_kernel(lr, cfg.weights)
    operand = SpectralOperand.from_observation(lr, s)
    for _ in range(int(cfg.iterations)):
        raw = solve_kernel_step(lr, hr, k, cfg.gamma, s, operand=operand)
        k = kernel_regularizer(raw, cfg.weights)
    return k


def write_trace_jsonl(trace, path, image_dir=None):
    """One JSON record per iteration; optional PNG snapshots alongside.

    Kernel snapshots are rendered normalized to max = 1 (stated in the record)
    since raw kernel values are far below the 8-bit quantization step.
    """
    records = []
    for idx, e in enumerate(trace.entries, start=1):
        rec = {
            "iteration": idx,
            "sigma": e.sigma,
            "alpha": e.alpha,
            "beta": e.beta,
        }
        if image_dir is not None:
            os.makedirs(image_dir, exist_ok=True)
            kpath = os.path.join(image_dir, f"iter{idx:02d}_kernel.png")
            peak = e.kernel.max()
            save_png(kpath, e.kernel[None] / peak if peak > 0 else e.kernel[None])
            rec["kernel_png"] = kpath
            rec["kernel_render"] = "normalized max=1"
            if e.image is not None:
                xpath = os.path.join(image_dir, f"iter{idx:02d}_image.png")
                save_png(xpath, e.image)
                rec["image_png"] = xpath
        records.append(rec)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
