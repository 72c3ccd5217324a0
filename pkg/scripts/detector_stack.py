"""Backside-cavity detector stack: absorbance, the 1D FDTD cross-check, and the cavity map optimum.

    python scripts/detector_stack.py [--wavelength 1560] [--step 5]
"""
import argparse

import numpy as np

from heraldkit.tmm import SnspdStackSpec, cavity_sweep, fdtd_cross_check, snspd_layer_stack, solve_stack


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wavelength", type=float, default=1560.0)
    ap.add_argument("--step", type=float, default=5.0)
    args = ap.parse_args()

    spec = SnspdStackSpec()
    for pol in ("s", "p"):
        stack = snspd_layer_stack(spec, args.wavelength, polarization=pol)
        r = solve_stack(stack)
        print(f"{pol}: R {r.R:.4f}  T {r.T:.4f}  " + "  ".join(
            f"A[{lab}] {a:.4f}" for lab, a in zip(r.labels, r.A)))

    stack = snspd_layer_stack(spec, args.wavelength, polarization="s")
    cc = fdtd_cross_check(stack)
    print(f"matrix vs 1D FDTD: max |delta| {cc.max_delta:.2e} ({'ok' if cc.passed else 'outside tolerance'})")

    grid = np.arange(100.0, 400.0 + 1e-9, args.step)
    cmap = cavity_sweep(stack, grid, grid)
    tc, ta = cmap.argmax
    print(f"cavity map optimum: t_c {tc:g} nm, t_AR {ta:g} nm, A_NbN {cmap.max:.4f}")


if __name__ == "__main__":
    main()
