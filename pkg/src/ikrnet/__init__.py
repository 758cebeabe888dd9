"""Blind single-image super-resolution with iterative kernel refinement.

The solver alternates closed-form Fourier data steps for the latent image and
the blur kernel with pluggable denoiser / regularizer networks (classical
fallbacks run without any weight file). Dense linear-algebra oracles certify
the FFT paths on small grids.
"""

from .bench import (
    BenchReport,
    BenchRow,
    ablation_grid,
    evaluate,
    gen_test_kernels,
    synthetic_hr_suite,
)
from .degrade import (
    DegradationConfig,
    add_noise,
    convolve_circular,
    correlate_circular,
    degrade,
    delta_kernel,
    downsample,
    edge_taper,
    gaussian_kernel,
    load_kernel,
    motion_kernel,
    save_kernel,
    upsample_zero,
)
from .fourier import (
    HyperParams,
    SpectralOperand,
    block_avg,
    block_mul,
    dense_image_step,
    dense_kernel_step,
    oracle_check,
    solve_image_step,
    solve_kernel_step,
)
from .images import (
    bilinear_upscale,
    kernel_mse,
    load_png,
    luminance,
    psnr,
    psnr_y,
    save_png,
)
from .nets import (
    ConvSpec,
    DenoiserPlug,
    classical_denoiser,
    conv2d,
    estimate_noise,
    init_kernel,
    kernel_regularizer,
    project_kernel,
    resunet_forward,
    resunet_shapes,
)
from .pipeline import (
    SolverConfig,
    SolverResult,
    SolverTrace,
    estimate_kernel_only,
    run_ikr,
    run_nonblind,
    write_trace_jsonl,
)
from .weights import WeightStore, load_weights, save_weights

__version__ = "0.1.0"
