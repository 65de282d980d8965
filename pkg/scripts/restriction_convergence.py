#!/usr/bin/env python3
"""Cell-averaging error of a smooth density across partition refinements."""
import argparse

import numpy as np

from cpa.oracle import restriction_l1_error
from cpa.partition import Box, UniformPartition


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mean", type=float, default=0.45)
    ap.add_argument("--sigma", type=float, default=0.12)
    ap.add_argument("--cells", type=int, nargs="+", default=[5, 10, 20, 40])
    args = ap.parse_args()

    z = args.sigma * np.sqrt(2 * np.pi)

    def gaussian(points):
        x = points[:, 0]
        return np.exp(-0.5 * ((x - args.mean) / args.sigma) ** 2) / z

    print("cells  L1(restriction - density)")
    for c in args.cells:
        part = UniformPartition(Box((0.0,), (1.0,)), (c,))
        err = restriction_l1_error(gaussian, part, grid_per_axis=64)
        print(f"{c:5d}  {err:.6f}")


if __name__ == "__main__":
    main()
