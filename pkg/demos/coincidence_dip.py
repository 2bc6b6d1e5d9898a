#!/usr/bin/env python3
"""The two-photon coincidence dip versus inter-photon delay.

The full bench: photon pairs from the crystal are steered by two multilayer
mirrors onto opposite faces of the membrane beam splitter; when the pair is
indistinguishable the coincidence rate between the output ports collapses.
The dip is about half an attosecond wide, its depth tracks the splitter
balance, and its center sits slightly off zero delay because one photon
crosses the membrane substrate before reflecting.

    python demos/coincidence_dip.py [--plot] [--fast]
"""

import argparse
import pathlib
import sys

import numpy as np

from xrayhom import (
    BenchGeometry,
    CrystalConfig,
    DeviceSet,
    LayerStack,
    PumpConfig,
    builtin_material,
    hom_curve,
)
from xrayhom.hom import build_grid


def build_devices():
    pt = builtin_material("Pt", density_g_cm3=20.3)
    c = builtin_material("C")
    si = builtin_material("Si")
    si_membrane = builtin_material("Si", lossless=True)
    mirror = LayerStack.periodic(pt, c, 20, 3.7e-9, 0.5, substrate=si)
    splitter = LayerStack.periodic(pt, c, 10, 3.7e-9, 0.5,
                                   substrate=si_membrane,
                                   substrate_thickness_m=15e-6)
    return mirror, splitter


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true")
    parser.add_argument("--fast", action="store_true",
                        help="half-resolution grid (seconds instead of ~10 s)")
    parser.add_argument("--out", default="demo_out")
    args = parser.parse_args()

    pump = PumpConfig(energy_kev=21.0, deviation_mdeg=8.3136,
                      rate_per_s=1e13, area_mm2=0.4)
    crystal = CrystalConfig()
    mirror, splitter = build_devices()
    devices = DeviceSet(mirror_s=mirror, mirror_i=mirror, beam_splitter=splitter)
    geometry = BenchGeometry(aperture_deg=0.4)

    grid = None
    if args.fast:
        grid = build_grid(pump, crystal, geometry, n_energy=48, n_kx=24, n_ky=12)
    curve = hom_curve(pump, crystal, geometry, devices, grid=grid)
    m = curve.metrics
    print(f"dip width (FWHM)  : {m.fwhm_s * 1e18:.3f} as")
    print(f"visibility        : {m.visibility:.4f}")
    print(f"center shift      : {m.center_shift_s * 1e18:+.3f} as")
    print(f"path-difference eq: {m.path_difference_m * 1e10:.3f} Angstrom")
    print(f"bandwidth (hbar/T): {m.bandwidth_kev:.3f} keV")
    print(f"baseline          : {curve.baseline_rate:.4f} pairs/s "
          f"(crystal output {curve.nlc_pair_rate:.4f} pairs/s)")

    # the shift vanishes when the splitter's two reflection phases are
    # artificially equalized
    sym = hom_curve(pump, crystal,
                    BenchGeometry(aperture_deg=0.4, symmetrize_bs_phases=True),
                    devices, grid=grid)
    print(f"symmetrized shift : {sym.metrics.center_shift_s * 1e18:+.5f} as")

    out = pathlib.Path(args.out)
    out.mkdir(exist_ok=True)
    path = out / "coincidence_dip.csv"
    np.savetxt(path, np.column_stack([curve.delay_s * 1e18,
                                      curve.rate_pairs_s, curve.normalized]),
               delimiter=",", comments="",
               header="delay_as,pairs_per_s,normalized")
    print(f"wrote {path}")

    if args.plot:
        import matplotlib.pyplot as plt
        plt.plot(curve.delay_s * 1e18, curve.normalized)
        plt.xlabel("inter-photon delay (as)")
        plt.ylabel("normalized coincidence rate")
        plt.title("Two-photon coincidence dip")
        plt.grid(True)
        plt.show()
    return 0


if __name__ == "__main__":
    sys.exit(main())
