"""Fixed kernel battery, synthetic test imagery and evaluation reports.

Reports carry PSNR (RGB and BT.601 luminance), kernel-estimate MSE scaled by
1e5, and wall-clock runtime per (image, kernel) pair, with mean aggregates per
kernel, per kernel class and overall. The CSV layout round-trips through the
shipped parser.
"""

import csv
import hashlib
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .degrade import DegradationConfig, convolve_circular, degrade, gaussian_kernel, motion_kernel
from .images import as_image, bilinear_upscale, kernel_mse, psnr, psnr_y
from .pipeline import run_ikr, run_nonblind

KERNEL_NAMES = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII")
_MOTION_SEEDS = (9001, 9002, 9003, 9004)

CSV_HEADER = ("image", "kernel", "psnr_db", "psnr_y_db", "kernel_mse_e5", "runtime_s")
AGG_HEADER = ("scope", "psnr_db", "psnr_y_db", "kernel_mse_e5", "runtime_s")


def gen_test_kernels():
    """The twelve fixed evaluation kernels.

    I..IV   isotropic Gaussians, sigma 0.7 / 1.2 / 1.6 / 2.0
    V..VIII anisotropic Gaussians (sx, sy, theta)
    IX..XII motion kernels, fixed seeds, increasing nonlinearity
    """
    kernels = [
        gaussian_kernel(0.7, 0.7, 0.0),
        gaussian_kernel(1.2, 1.2, 0.0),
        gaussian_kernel(1.6, 1.6, 0.0),
        gaussian_kernel(2.0, 2.0, 0.0),
        gaussian_kernel(4.0, 1.0, 0.0),
        gaussian_kernel(4.0, 1.0, np.pi / 4),
        gaussian_kernel(4.0, 1.0, np.pi / 2),
        gaussian_kernel(3.0, 1.5, 3 * np.pi / 4),
    ]
    kernels += [
        motion_kernel(seed, nl)
        for seed, nl in zip(_MOTION_SEEDS, (0.3, 0.5, 0.7, 0.9))
    ]
    return list(zip(KERNEL_NAMES, kernels))


def kernel_class(name):
    idx = KERNEL_NAMES.index(name)
    if idx < 4:
        return "isotropic"
    if idx < 8:
        return "anisotropic"
    return "motion"


def pair_seed(image_name, kernel_name, sigma):
    """Stable per-pair RNG seed derived from the pair identity."""
    tag = f"{image_name}|{kernel_name}|{float(sigma):.6g}".encode()
    return int.from_bytes(hashlib.sha256(tag).digest()[:8], "little")


def center_crop_multiple(img, multiple):
    """Largest centred crop whose dims are a multiple of `multiple`."""
    a = as_image(img)
    _, h, w = a.shape
    nh = (h // multiple) * multiple
    nw = (w // multiple) * multiple
    if nh == 0 or nw == 0:
        raise ValueError(f"image {h}x{w} smaller than required multiple {multiple}")
    top = (h - nh) // 2
    left = (w - nw) // 2
    return a[:, top:top + nh, left:left + nw].copy()


def synthetic_hr_suite(count, size, seed, channels=1, texture=0.12):
    """Procedural test images: smooth noise octaves, geometric shapes and a
    fine-texture floor of the given amplitude so spectra stay well
    conditioned. Denoising ablations want texture near zero; with detail
    several times stronger than the injected noise, smoothing loses PSNR on
    any estimator."""
    rng = np.random.default_rng(seed)
    images = []
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(count):
        smooth = convolve_circular(
            rng.normal(size=(1, size, size)), gaussian_kernel(rng.uniform(1.0, 2.5), rng.uniform(1.0, 2.5), 0.0)
        )[0]
        coarse_n = max(size // 16, 2)
        coarse = bilinear_upscale(rng.normal(size=(1, coarse_n, coarse_n)), -(-size // coarse_n))[0]
        coarse = coarse[:size, :size]
        img = 2.5 * smooth + 0.8 * coarse
        for _ in range(rng.integers(2, 5)):
            cy, cx = rng.uniform(0.2 * size, 0.8 * size, size=2)
            r = rng.uniform(0.05 * size, 0.2 * size)
            level = rng.uniform(-1.0, 1.0)
            if rng.random() < 0.5:
                mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
            else:
                mask = (np.abs(yy - cy) < r) & (np.abs(xx - cx) < 0.7 * r)
            img = img + level * mask
        img = img + texture * rng.normal(size=(size, size))
        lo, hi = img.min(), img.max()
        img = 0.05 + 0.9 * (img - lo) / (hi - lo)
        if channels == 1:
            images.append(img[None])
        else:
            tint = rng.uniform(0.85, 1.15, size=(3, 1, 1))
            rgb = np.clip(img[None] * tint + 0.03 * rng.normal(size=(3, size, size)), 0.0, 1.0)
            images.append(rgb)
    return images


@dataclass
class BenchRow:
    image: str
    kernel: str
    psnr_db: float
    psnr_y_db: float
    kernel_mse_e5: float
    runtime_s: float


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def compute_aggregates(self):
        """Mean of every metric per kernel, per kernel class, and overall."""
        groups = {}
        for row in self.rows:
            for scope in (f"kernel:{row.kernel}", f"class:{kernel_class(row.kernel)}", "all"):
                groups.setdefault(scope, []).append(row)
        self.aggregates = {
            scope: tuple(
                float(np.mean([getattr(r, f) for r in rows]))
                for f in ("psnr_db", "psnr_y_db", "kernel_mse_e5", "runtime_s")
            )
            for scope, rows in groups.items()
        }
        return self

    def mean(self, metric, scope="all"):
        idx = ("psnr_db", "psnr_y_db", "kernel_mse_e5", "runtime_s").index(metric)
        return self.aggregates[scope][idx]


def _eval_pair(image_name, hr, kernel_name, kernel, config, sigma, non_blind):
    seed = pair_seed(image_name, kernel_name, sigma)
    hr_c = center_crop_multiple(hr, config.scale * 8)
    y = degrade(hr_c, kernel, DegradationConfig(
        scale=config.scale, noise_sigma=sigma, rng_seed=seed))
    t0 = time.perf_counter()
    if non_blind:
        result = run_nonblind(y, kernel, sigma, config)
    else:
        result = run_ikr(y, config)
    runtime = time.perf_counter() - t0
    out = np.clip(result.image, 0.0, 1.0)
    p = psnr(out, hr_c)
    py = psnr_y(out, hr_c) if hr_c.shape[0] == 3 else p
    return BenchRow(
        image=image_name,
        kernel=kernel_name,
        psnr_db=p,
        psnr_y_db=py,
        kernel_mse_e5=kernel_mse(result.kernel, kernel) * 1e5,
        runtime_s=runtime,
    )


def evaluate(images, config, sigma=0.0, kernels=None, jobs=1, non_blind=False):
    """Run the solver over every (image, kernel) pair and aggregate metrics.

    Args:
        images: list of (name, (C, H, W) array) pairs.
        config: SolverConfig for each run.
        sigma: degradation noise level (also handed to non-blind runs).
        kernels: list of (name, kernel) pairs; defaults to the fixed twelve.
        jobs: worker threads; results are seed-determined so the report is
            identical at any jobs count.
        non_blind: hand the solver the true kernel and sigma.
    """
    if kernels is None:
        kernels = gen_test_kernels()
    tasks = [
        (img_name, hr, k_name, k)
        for img_name, hr in images
        for k_name, k in kernels
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(
                lambda t: _eval_pair(t[0], t[1], t[2], t[3], config, sigma, non_blind), tasks))
    else:
        rows = [_eval_pair(n, h, kn, k, config, sigma, non_blind) for n, h, kn, k in tasks]
    return BenchReport(rows=rows).compute_aggregates()


def ablation_grid(images, base_config, sigma=0.02, kernels=None, jobs=1,
                  noise_modes=("predicted", "known", "zero", "max"),
                  iteration_counts=(8, 16), refinement=(True, False)):
    """Cross product of noise modes, iteration budgets and refinement on/off.

    Returns {label: BenchReport} with labels like
    "noise=zero,iters=8,refine=off".
    """
    reports = {}
    for mode in noise_modes:
        for iters in iteration_counts:
            for refine in refinement:
                cfg = replace(base_config, noise_mode=mode, iterations=iters,
                              use_kernel_refinement=refine,
                              known_sigma=sigma if mode == "known" else base_config.known_sigma)
                label = f"noise={mode},iters={iters},refine={'on' if refine else 'off'}"
                reports[label] = evaluate(images, cfg, sigma=sigma, kernels=kernels, jobs=jobs)
    return reports


# ---------------------------------------------------------------------------
# CSV serialization. Floats are written with repr() so parsing them back is
# bit exact.
# ---------------------------------------------------------------------------

def report_to_csv(report):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for r in report.rows:
        wr.writerow([r.image, r.kernel, repr(r.psnr_db), repr(r.psnr_y_db),
                     repr(r.kernel_mse_e5), repr(r.runtime_s)])
    wr.writerow([])
    wr.writerow(AGG_HEADER)
    for scope, vals in report.aggregates.items():
        wr.writerow([scope] + [repr(v) for v in vals])
    return buf.getvalue()


def report_from_csv(text):
    lines = list(csv.reader(io.StringIO(text)))
    if not lines or tuple(lines[0]) != CSV_HEADER:
        raise ValueError("not a bench report: bad header")
    report = BenchReport()
    i = 1
    while i < len(lines) and lines[i] and lines[i][0]:
        img, kern, p, py, km, rt = lines[i]
        report.rows.append(BenchRow(img, kern, float(p), float(py), float(km), float(rt)))
        i += 1
    while i < len(lines) and (not lines[i] or not lines[i][0]):
        i += 1
    if i < len(lines) and tuple(lines[i]) == AGG_HEADER:
        for row in lines[i + 1:]:
            if not row or not row[0]:
                break
            report.aggregates[row[0]] = tuple(float(v) for v in row[1:])
    return report


def write_report(path, report):
    with open(path, "w") as fh:
        fh.write(report_to_csv(report))


def read_report(path):
    with open(path) as fh:
        return report_from_csv(fh.read())


def ablation_to_csv(reports):
    """Concatenated standard blocks, each introduced by a `config,<label>` line."""
    parts = []
    for label, report in reports.items():
        parts.append(f'config,"{label}"\n' if "," in label else f"config,{label}\n")
        parts.append(report_to_csv(report))
        parts.append("\n")
    return "".join(parts)


def ablation_from_csv(text):
    reports = {}
    current_label = None
    block = []

    def flush():
        if current_label is not None:
            reports[current_label] = report_from_csv("".join(block))

    for line in io.StringIO(text):
        rows = list(csv.reader([line]))
        parsed = rows[0] if rows else []
        if parsed and parsed[0] == "config":
            flush()
            current_label = parsed[1]
            block = []
        elif current_label is not None:
            block.append(line)
    flush()
    return reports
