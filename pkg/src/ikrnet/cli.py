"""Command-line front end.

Subcommands: degrade, sr, oracle-check, bench, kernels. Exit codes: 0 on
success, 1 for usage errors (bad flags), 2 for runtime or data errors (I/O,
dimension mismatches, failed checks). Commands write only to paths given via
flags. The --weights default comes from the IKR_WEIGHTS environment variable.
"""

import argparse
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import fourier
from .degrade import (
    DegradationConfig,
    degrade,
    edge_taper,
    gaussian_kernel,
    load_kernel,
    motion_kernel,
    save_kernel,
    save_kernel_text,
)
from .images import load_png, save_png
from .pipeline import SolverConfig, run_ikr, run_nonblind, write_trace_jsonl
from .weights import load_weights

ORACLE_TOL = 1e-6


def _parse_floats(text, n, label):
    parts = text.split(",")
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"{label} expects {n} comma-separated values")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{label} expects numbers, got {text!r}")


def _gauss_arg(text):
    return _parse_floats(text, 3, "--gauss")


def _motion_arg(text):
    seed, nl = _parse_floats(text, 2, "--motion")
    if seed != int(seed):
        raise argparse.ArgumentTypeError("--motion seed must be an integer")
    return int(seed), nl


def _noise_arg(text):
    if text in ("predicted", "zero", "max"):
        return text, 0.0
    if text.startswith("known:"):
        try:
            return "known", float(text.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad known noise level in {text!r}")
    raise argparse.ArgumentTypeError(
        f"--noise must be predicted, zero, max or known:<sigma>, got {text!r}")


def _scales_arg(text):
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--scales expects integers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _kernel_from_flags(args):
    if args.kernel is not None:
        return load_kernel(args.kernel)
    if args.gauss is not None:
        return gaussian_kernel(*args.gauss)
    seed, nl = args.motion
    return motion_kernel(seed, nl)


def cmd_degrade(args):
    img = load_png(args.input)
    kernel = _kernel_from_flags(args)
    cfg = DegradationConfig(scale=args.scale, noise_sigma=args.sigma, rng_seed=args.seed)
    out = degrade(img, kernel, cfg)
    save_png(args.output, out)
    if args.kernel_out:
        save_kernel(args.kernel_out, kernel)
    return 0


def _solver_config(args):
    weights = load_weights(args.weights) if args.weights else None
    mode, known = args.noise
    return SolverConfig(
        scale=args.scale,
        iterations=args.iters,
        noise_mode=mode,
        known_sigma=known,
        use_kernel_refinement=not args.no_kernel_refine,
        weights=weights,
        record_snapshots=args.trace_images is not None,
    )


def cmd_sr(args):
    y = load_png(args.input)
    cfg = _solver_config(args)
    if args.kernel is not None:
        kernel = load_kernel(args.kernel)
        if args.edge_taper:
            y = edge_taper(y, kernel)
        mode, known = args.noise
        sigma = known if mode == "known" else 0.0
        result = run_nonblind(y, kernel, sigma, cfg)
    else:
        if args.edge_taper:
            y = edge_taper(y, gaussian_kernel(1.0, 1.0, 0.0))
        result = run_ikr(y, cfg)
    save_png(args.output, np.clip(result.image, 0.0, 1.0))
    if args.kernel_out:
        save_kernel(args.kernel_out, result.kernel)
    if args.kernel_png:
        peak = result.kernel.max()
        save_png(args.kernel_png, result.kernel[None] / peak if peak > 0 else result.kernel[None])
    if args.trace:
        write_trace_jsonl(result.trace, args.trace, image_dir=args.trace_images)
    return 0


def cmd_oracle_check(args):
    if args.corrupt_block_avg:
        # Negative-control hook for the test suite: breaks the block algebra so
        # the check must report failure.
        original = fourier.block_avg
        fourier.block_avg = lambda spec, scale: original(spec, scale) + 1e-3
    try:
        stats = fourier.oracle_check(
            trials=args.trials, max_size=args.max_size, scales=args.scales, seed=args.seed)
    finally:
        if args.corrupt_block_avg:
            fourier.block_avg = original
    print(f"instances: {stats['instances']}")
    print(f"worst image-step relative error:  {stats['worst_image_rel_err']:.3e}")
    print(f"worst kernel-step relative error: {stats['worst_kernel_rel_err']:.3e}")
    ok = (stats["worst_image_rel_err"] < ORACLE_TOL
          and stats["worst_kernel_rel_err"] < ORACLE_TOL)
    print("oracle agreement: " + ("OK" if ok else "FAIL"))
    return 0 if ok else 2


def cmd_bench(args):
    names = sorted(f for f in os.listdir(args.hr_dir) if f.lower().endswith(".png"))
    if not names:
        raise ValueError(f"no PNG images found in {args.hr_dir}")
    images = [(n, load_png(os.path.join(args.hr_dir, n))) for n in names]
    cfg = _solver_config(args)
    if args.ablation:
        reports = bench_mod.ablation_grid(images, cfg, sigma=args.sigma, jobs=args.jobs)
        with open(args.report, "w") as fh:
            fh.write(bench_mod.ablation_to_csv(reports))
    else:
        report = bench_mod.evaluate(images, cfg, sigma=args.sigma, jobs=args.jobs,
                                    non_blind=args.non_blind)
        bench_mod.write_report(args.report, report)
    return 0


def cmd_kernels(args):
    os.makedirs(args.out, exist_ok=True)
    kernels = bench_mod.gen_test_kernels()
    tiles = []
    for name, k in kernels:
        save_kernel(os.path.join(args.out, f"kernel_{name}.ikrw"), k)
        save_kernel_text(os.path.join(args.out, f"kernel_{name}.txt"), k)
        tiles.append(k / k.max())
    zoom = 8
    gap = 2
    cell = 21 * zoom
    sheet = np.full((3 * cell + 4 * gap, 4 * cell + 5 * gap), 0.25)
    for idx, tile in enumerate(tiles):
        r, c = divmod(idx, 4)
        big = np.kron(tile, np.ones((zoom, zoom)))
        top = gap + r * (cell + gap)
        left = gap + c * (cell + gap)
        sheet[top:top + cell, left:left + cell] = big
    save_png(os.path.join(args.out, "contact_sheet.png"), sheet[None])
    return 0


def build_parser():
    parser = _Parser(prog="ikrnet", description="Blind super-resolution toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", parents=[], help="apply the forward model to an image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--scale", type=int, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--kernel", help="kernel file")
    src.add_argument("--gauss", type=_gauss_arg, help="sigma_x,sigma_y,theta")
    src.add_argument("--motion", type=_motion_arg, help="seed,nonlinearity")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel-out", help="also save the kernel used")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("sr", help="super-resolve an observation")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--weights", default=os.environ.get("IKR_WEIGHTS") or None)
    p.add_argument("--iters", type=int, default=16)
    p.add_argument("--noise", type=_noise_arg, default=("predicted", 0.0),
                   help="predicted | zero | max | known:<sigma>")
    p.add_argument("--kernel", help="known kernel file; switches to non-blind mode")
    p.add_argument("--no-kernel-refine", action="store_true")
    p.add_argument("--edge-taper", action="store_true",
                   help="soften borders before solving (real photographs)")
    p.add_argument("--kernel-out", help="save the kernel estimate")
    p.add_argument("--kernel-png", help="save the kernel estimate rendering")
    p.add_argument("--trace", help="write per-iteration JSONL here")
    p.add_argument("--trace-images", help="directory for per-iteration snapshots")
    p.set_defaults(func=cmd_sr)

    p = sub.add_parser("oracle-check", help="verify FFT solvers against dense algebra")
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--max-size", type=int, default=16)
    p.add_argument("--scales", type=_scales_arg, default=(1, 2, 4))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-block-avg", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("bench", help="evaluate over a directory of HR images")
    p.add_argument("--hr-dir", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--weights", default=os.environ.get("IKR_WEIGHTS") or None)
    p.add_argument("--iters", type=int, default=16)
    p.add_argument("--noise", type=_noise_arg, default=("predicted", 0.0))
    p.add_argument("--no-kernel-refine", action="store_true")
    p.add_argument("--non-blind", action="store_true")
    p.add_argument("--ablation", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench, trace_images=None)

    p = sub.add_parser("kernels", help="write the twelve test kernels and a contact sheet")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernels)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, FloatingPointError) as exc:
        print(f"ikrnet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
