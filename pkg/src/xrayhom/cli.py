"""Command-line front end: validate / spectrum / scan / dip.

Every CSV starts with comment lines carrying the tool version and the
sha256 digest of the configuration, numbers are serialized with 9
significant digits, and node ordering is fixed, so identical config and
version produce byte-identical outputs.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config
from .hom import (
    BenchGeometry,
    GridConvergenceError,
    NoDipError,
    build_grid,
    hom_curve,
)
from .multilayer import MultilayerError, PeakNotFoundError, response_scan
from .spdc import PhaseMatchingError, nlc_spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4


def _fmt(value) -> str:
    return f"{value:.9g}"


def _header_lines(run: RunConfig, command: str) -> list[str]:
    return [
        f"# xrayhom {__version__}",
        f"# config_sha256={run.digest}",
        f"# command={command}",
    ]


def _write_lines(path: Path, lines) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def _parse_grid_flag(raw, quad):
    """Apply --grid ExKXxKY to the quadrature settings; None on bad input."""
    if raw is None:
        return quad
    try:
        energy, kx, ky = (int(p) for p in raw.lower().split("x"))
    except ValueError:
        return None
    if min(energy, kx, ky) < 2:
        return None
    quad.energy_nodes, quad.kx_nodes, quad.ky_nodes = energy, kx, ky
    return quad


def cmd_validate(args) -> int:
    run, diags = parse_config(args.config)
    if diags:
        for d in diags:
            print(f"config: {d}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        print(f"{args.config}: ok (sha256 {run.digest[:12]})")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    run, diags = parse_config(args.config)
    if diags:
        for d in diags:
            print(f"config: {d}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = nlc_spectrum(run.pump, run.crystal, run.aperture_deg)
    except (PhaseMatchingError, ValueError) as exc:
        print(f"spectrum failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    lines = _header_lines(run, "spectrum")
    lines.append("signal_energy_keV,normalized_rate_density,"
                 "absolute_rate_density_per_keV")
    for e, n, a in zip(result.energy_kev, result.density_normalized,
                       result.density_per_kev):
        lines.append(f"{_fmt(e)},{_fmt(n)},{_fmt(a)}")
    summary = [
        f"window_low_keV={_fmt(result.window_kev[0])}",
        f"window_high_keV={_fmt(result.window_kev[1])}",
        f"bandwidth_keV={_fmt(result.bandwidth_kev)}",
        f"total_rate_pairs_per_s={_fmt(result.total_rate_pairs_s)}",
        f"pair_window_low_keV={_fmt(result.pair_window_kev[0])}",
        f"pair_window_high_keV={_fmt(result.pair_window_kev[1])}",
        f"coincidence_rate_pairs_per_s={_fmt(result.pair_rate_pairs_s)}",
    ]
    try:
        _write_lines(out / "spectrum.csv", lines)
        _write_lines(out / "spectrum_summary.txt",
                     _header_lines(run, "spectrum") + summary)
    except IOError as exc:
        print(exc, file=sys.stderr)
        return EXIT_IO
    if result.warnings and not args.quiet:
        for w in result.warnings:
            print(f"warning: {w}", file=sys.stderr)
    if not args.quiet:
        for line in summary:
            print(line)
    return EXIT_OK


def cmd_scan(args) -> int:
    run, diags = parse_config(args.config)
    if diags:
        for d in diags:
            print(f"config: {d}", file=sys.stderr)
        return EXIT_CONFIG
    stacks = {
        "mirror_s": run.devices.mirror_s,
        "mirror_i": run.devices.mirror_i,
        "beam_splitter": run.devices.beam_splitter,
    }
    if args.device not in stacks:
        print(f"unknown device {args.device!r}; choose from "
              f"{sorted(stacks)}", file=sys.stderr)
        return EXIT_CONFIG
    stack = stacks[args.device]

    if args.range:
        try:
            lo, hi, n = args.range.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError:
            print(f"--range expects lo:hi:n, got {args.range!r}",
                  file=sys.stderr)
            return EXIT_CONFIG
    elif args.axis == "angle":
        lo, hi, n = 0.3, 1.6, 1301
    else:
        lo, hi, n = 8.0, 13.5, 1401
    sweep = np.linspace(lo, hi, n)

    degenerate = run.pump.energy_kev / 2.0
    try:
        if args.axis == "angle":
            result = response_scan(stack, angle_deg=sweep,
                                   energy_kev=degenerate)
            fixed = f"energy_keV={_fmt(degenerate)}"
        elif args.axis == "energy":
            if args.angle_deg is not None:
                angle = args.angle_deg
            elif run.geometry.theta_ref_rad is not None:
                angle = math.degrees(run.geometry.theta_ref_rad)
            else:
                # the bench design angle: phase-matched degenerate emission
                from .spdc import ridge_angle
                angle = math.degrees(float(ridge_angle(
                    run.pump, run.crystal, degenerate)))
            result = response_scan(stack, angle_deg=angle, energy_kev=sweep)
            fixed = f"angle_deg={_fmt(angle)}"
        else:
            print(f"unknown axis {args.axis!r}; use angle|energy",
                  file=sys.stderr)
            return EXIT_CONFIG
    except PeakNotFoundError as exc:
        print(f"scan failed: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except MultilayerError as exc:
        print(f"scan failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    resp = result.response
    out = Path(args.out)
    lines = _header_lines(run, f"scan {args.device} {args.axis} ({fixed})")
    lines.append("abscissa,reflectivity_front,reflectivity_back,"
                 "transmissivity,reflection_phase_front_rad,"
                 "reflection_phase_back_rad")
    for i, x in enumerate(result.abscissa):
        lines.append(",".join(_fmt(v) for v in (
            x,
            abs(resp.r_front.flat[i]) ** 2,
            abs(resp.r_back.flat[i]) ** 2,
            abs(resp.t_front.flat[i]) ** 2,
            np.angle(resp.r_front.flat[i]),
            np.angle(resp.r_back.flat[i]),
        )))
    summary = [
        f"axis={result.axis}",
        f"peak_position={_fmt(result.peak.position)}",
        f"peak_height={_fmt(result.peak.height)}",
        f"peak_fwhm={_fmt(result.peak.fwhm)}",
    ]
    try:
        _write_lines(out / f"scan_{args.device}_{args.axis}.csv", lines)
        _write_lines(out / f"scan_{args.device}_{args.axis}_summary.txt",
                     _header_lines(run, "scan") + summary)
    except IOError as exc:
        print(exc, file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        for line in summary:
            print(line)
    return EXIT_OK


def cmd_dip(args) -> int:
    run, diags = parse_config(args.config)
    if diags:
        for d in diags:
            print(f"config: {d}", file=sys.stderr)
        return EXIT_CONFIG
    quad = _parse_grid_flag(args.grid, run.quadrature)
    if quad is None:
        print(f"--grid expects ExKXxKY with values >= 2, got {args.grid!r}",
              file=sys.stderr)
        return EXIT_CONFIG

    t_range = None
    if args.t_range:
        try:
            lo, hi = (float(v) for v in args.t_range.split(":"))
            t_range = (lo * 1e-18, hi * 1e-18)
        except ValueError:
            print(f"--t-range expects lo:hi in attoseconds, got "
                  f"{args.t_range!r}", file=sys.stderr)
            return EXIT_CONFIG
    elif run.dip.t_min_as is not None:
        t_range = (run.dip.t_min_as * 1e-18, run.dip.t_max_as * 1e-18)

    grid = build_grid(run.pump, run.crystal, run.geometry,
                      n_energy=quad.energy_nodes, n_kx=quad.kx_nodes,
                      n_ky=quad.ky_nodes, n_lobes=quad.sinc_lobes)
    try:
        curve = hom_curve(run.pump, run.crystal, run.geometry, run.devices,
                          t_range_s=t_range, n_delays=run.dip.points,
                          grid=grid, refine=args.refine)
    except GridConvergenceError as exc:
        print(f"dip failed: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (PhaseMatchingError, NoDipError) as exc:
        print(f"dip failed: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED

    m = curve.metrics
    grid_label = f"{quad.energy_nodes}x{quad.kx_nodes}x{quad.ky_nodes}"
    summary = [
        f"FWHM_as={_fmt(m.fwhm_s * 1e18) if m else 'nan'}",
        f"visibility={_fmt(m.visibility) if m else 'nan'}",
        f"shift_as={_fmt(m.center_shift_s * 1e18) if m else 'nan'}",
        f"path_diff_A={_fmt(m.path_difference_m * 1e10) if m else 'nan'}",
        f"bandwidth_keV={_fmt(m.bandwidth_kev) if m else 'nan'}",
        "bandwidth_convention=hbar_over_fwhm",
        f"baseline_pairs_per_s={_fmt(curve.baseline_rate)}",
        f"nlc_rate_pairs_per_s={_fmt(curve.nlc_pair_rate)}",
        f"grid={grid_label}",
        f"convergence_delta={_fmt(curve.convergence_delta) if curve.convergence_delta is not None else 'not_checked'}",
    ]
    summary += [f"notice={n}" for n in curve.notices]

    out = Path(args.out)
    lines = _header_lines(run, "dip")
    lines.append("delay_as,rate_pairs_per_s,normalized_rate")
    for t, r, nrm in zip(curve.delay_s, curve.rate_pairs_s, curve.normalized):
        lines.append(f"{_fmt(t * 1e18)},{_fmt(r)},{_fmt(nrm)}")
    lines += [f"# {s}" for s in summary]
    try:
        _write_lines(out / "dip.csv", lines)
        _write_lines(out / "dip_summary.txt",
                     _header_lines(run, "dip") + summary)
    except IOError as exc:
        print(exc, file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        for notice in curve.notices:
            print(f"notice: {notice}")
        for line in summary:
            print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xrayhom",
        description="Two-photon x-ray interferometer model: crystal-output "
                    "spectrum, multilayer response scans, coincidence dip.",
    )
    parser.add_argument("--version", action="version",
                        version=f"xrayhom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run-configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--quiet", action="store_true")

    p_val = sub.add_parser("validate", help="validate a configuration file")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--quiet", action="store_true")
    p_val.set_defaults(func=cmd_validate)

    p_spec = sub.add_parser("spectrum", help="crystal-output spectrum (pairs/s)")
    common(p_spec)
    p_spec.set_defaults(func=cmd_spectrum)

    p_scan = sub.add_parser("scan", help="multilayer reflectivity scan")
    common(p_scan)
    p_scan.add_argument("--device", required=True,
                        help="mirror_s | mirror_i | beam_splitter")
    p_scan.add_argument("--axis", required=True, help="angle | energy")
    p_scan.add_argument("--range", help="lo:hi:n sweep (deg or keV)")
    p_scan.add_argument("--angle-deg", type=float, default=None,
                        help="fixed grazing angle for energy scans")
    p_scan.set_defaults(func=cmd_scan)

    p_dip = sub.add_parser("dip", help="coincidence rate versus delay")
    common(p_dip)
    p_dip.add_argument("--t-range", help="lo:hi delay window in attoseconds")
    p_dip.add_argument("--grid", help="energy x kx x ky node counts, e.g. 96x48x24")
    p_dip.add_argument("--refine", action="store_true",
                       help="re-run on a doubled grid and report the drift")
    p_dip.set_defaults(func=cmd_dip)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
