#!/usr/bin/env python3
"""Render space-time solution images: x across, time downward.

Produces a grayscale picture of the chaotic K-S field and an RGB picture
of the shock-tube run (mass, momentum and energy densities on the red,
green and blue channels).
"""

import argparse
import math
import sys

import numpy as np

from swept1d.bench import dump_field
from swept1d.engines import run_serial
from swept1d.schemes import build_scheme
from swept1d.schemes.ks import KSParams, ks_kernel


def render_ks(path: str, n_points: int, t_final: float) -> None:
    params = KSParams.default(n_points)
    kernel = ks_kernel(params)
    steps = round(t_final / params.dt)
    every = max(1, math.ceil(steps / 1024))
    field, info = run_serial(kernel, n_points, 4 * steps, record_every=every)
    dump_field(field, path, fmt="ppm", history=info.history)
    print(f"K-S: {len(info.history)} x {n_points} image, t = {steps * params.dt:.1f}, "
          f"max|u| = {np.abs(field).max():.2f} -> {path}")


def render_euler(path: str, n_points: int, t_final: float) -> None:
    kernel = build_scheme("euler", n_points)
    steps = round(t_final / kernel.dt)
    every = max(1, math.ceil(steps / 1024))
    field, info = run_serial(kernel, n_points, 4 * steps, record_every=every)
    dump_field(field, path, fmt="ppm", history=info.history)
    print(f"shock tube: {len(info.history)} x {n_points} image, "
          f"t = {steps * kernel.dt:.2f} -> {path}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ks-out", default="ks_field.ppm")
    parser.add_argument("--ks-points", type=int, default=1024)
    parser.add_argument("--ks-time", type=float, default=250.0)
    parser.add_argument("--euler-out", default="euler_field.ppm")
    parser.add_argument("--euler-points", type=int, default=512)
    parser.add_argument("--euler-time", type=float, default=0.8)
    args = parser.parse_args()
    render_ks(args.ks_out, args.ks_points, args.ks_time)
    render_euler(args.euler_out, args.euler_points, args.euler_time)
    return 0


if __name__ == "__main__":
    sys.exit(main())
