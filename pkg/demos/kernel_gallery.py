"""Print the benchmark kernel battery and render a contact sheet."""

import pathlib

import numpy as np

from ikrnet.bench import gen_test_kernels, kernel_class
from ikrnet.cli import main as cli_main

OUT = pathlib.Path(__file__).parent / "out" / "kernels"


def spread(k):
    # Second moment about the kernel centre, in pixels.
    idx = np.arange(21) - 10.0
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return float(np.sqrt(np.sum(k * (ii * ii + jj * jj))))


def main():
    print(f"{'name':>5} {'class':<12} {'peak':>7} {'spread':>7}")
    for name, k in gen_test_kernels():
        print(f"{name:>5} {kernel_class(name):<12} {k.max():7.4f} {spread(k):7.3f}")
    code = cli_main(["kernels", "--out", str(OUT)])
    print(f"kernel files + contact sheet in {OUT} (exit {code})")


if __name__ == "__main__":
    main()
