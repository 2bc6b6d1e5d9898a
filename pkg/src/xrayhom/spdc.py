"""Parametric down-conversion source: phase matching, biphoton amplitude,
and the crystal-output spectrum.

Geometry convention: the optical axis is the symmetry axis of the process,
i.e. the direction of k_p + G after the pump has been detuned from the Bragg
angle.  All mode angles are measured from that axis, signal on the +x side,
idler on -x; k_y points out of the scattering plane.  In this frame the
transverse delta function of the biphoton amplitude reads q_i = -q_s exactly,
and the longitudinal mismatch is

    delta_k_z = |k_p + G| - sqrt(k_s^2 - |q|^2) - sqrt(k_i^2 - |q|^2)

with vacuum wavenumbers throughout (the crystal's refractive corrections are
orders of magnitude below the device angular widths).

The pair-rate bookkeeping follows

    R = RATE_CALIBRATION * pump_rate * S/(2*pi)^9 * integral |phi|^2 dq domega

where phi = (2*pi)^3 * kappa * L * exp(i dkz L/2) * sinc(dkz L/2).  The
published coupling strength for this process is quoted only as an order of
magnitude and in an unstated field normalization, so the dimensionful
constant RATE_CALIBRATION pins the continuum-mode bookkeeping to the
measured pair yield of the reference experiment (about 0.15 pairs/s at
kappa = 1e-19 /m, 1e13 pump photons/s, 0.4 mm^2, 0.4 deg acceptance).
Normalized spectra and dip curves do not depend on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import HC_KEV_M, KEV_TO_RAD_S
from .materials import Material, builtin_material
from .quadrature import sinc_panels

TWO_PI = 2.0 * math.pi

#: Calibration of the absolute pair rate (see module docstring).  Value is
#: seconds; it multiplies pump_rate * S/(2pi)^9 * mode integral.
RATE_CALIBRATION_S = 2.978e6


class PhaseMatchingError(ValueError):
    """No real phase-matching solution for the requested kinematics."""


@dataclass(frozen=True)
class PumpConfig:
    """Pump beam: energy, angular detuning from the Bragg angle, and flux."""

    energy_kev: float
    deviation_mdeg: float
    rate_per_s: float = 1e13
    area_mm2: float = 0.4
    polarization: str = "in_plane"

    def __post_init__(self):
        if self.energy_kev <= 0:
            raise ValueError("pump energy must be positive")
        if self.rate_per_s < 0:
            raise ValueError("pump rate must be non-negative")
        if self.area_mm2 <= 0:
            raise ValueError("pump area must be positive")

    @property
    def wavenumber(self) -> float:
        return TWO_PI * self.energy_kev / HC_KEV_M

    @property
    def deviation_rad(self) -> float:
        return math.radians(self.deviation_mdeg * 1e-3)

    @property
    def area_m2(self) -> float:
        return self.area_mm2 * 1e-6


@dataclass(frozen=True)
class CrystalConfig:
    """Nonlinear crystal: cubic lattice, reflection indices, coupling."""

    material: Material = field(default_factory=lambda: builtin_material("diamond"))
    thickness_m: float = 0.8e-3
    hkl: tuple[int, int, int] = (6, 6, 0)
    lattice_m: float = 3.5668e-10
    kappa_per_m: complex = 1e-19

    def __post_init__(self):
        if self.thickness_m <= 0:
            raise ValueError("crystal thickness must be positive")
        if self.lattice_m <= 0:
            raise ValueError("lattice constant must be positive")
        if all(v == 0 for v in self.hkl):
            raise ValueError("hkl must not be all zero")
        if abs(self.kappa_per_m) <= 0:
            raise ValueError("coupling coefficient must be nonzero")


@dataclass(frozen=True)
class SignalMode:
    """One signal-photon phase-space point; idler coordinates are derived."""

    kx_per_m: float
    ky_per_m: float
    energy_kev: float


@dataclass(frozen=True)
class PhaseMatchState:
    delta_kz_per_m: float
    theta_s_rad: float
    theta_i_rad: float
    theta_bragg_rad: float


def reciprocal_lattice_vector(crystal: CrystalConfig) -> float:
    """|G| = 2*pi*sqrt(h^2+k^2+l^2)/a, oriented normal to the chosen planes."""
    h, k, l = crystal.hkl
    return TWO_PI * math.sqrt(h * h + k * k + l * l) / crystal.lattice_m


def pump_bragg_angle(pump: PumpConfig, crystal: CrystalConfig) -> float:
    """Bragg angle of the pump on the chosen planes, sin(theta) = G/(2 k_p)."""
    s = reciprocal_lattice_vector(crystal) / (2.0 * pump.wavenumber)
    if s > 1.0:
        raise PhaseMatchingError(
            f"no Bragg solution: G/(2 k_p) = {s:.4f} > 1 at {pump.energy_kev} keV"
        )
    return math.asin(s)


def axis_wavenumber(pump: PumpConfig, crystal: CrystalConfig) -> float:
    """|k_p + G| for the detuned pump; the longitudinal budget of the pair.

    The pump hits the planes at theta_B + deviation; exact Bragg incidence
    gives |k_p + G| = k_p and the emission cone closes.
    """
    g = reciprocal_lattice_vector(crystal)
    kp = pump.wavenumber
    theta = pump_bragg_angle(pump, crystal) + pump.deviation_rad
    p2 = kp * kp + g * g - 2.0 * kp * g * math.sin(theta)
    if p2 <= 0.0:
        raise PhaseMatchingError("pump detuning closed the kinematic window")
    return math.sqrt(p2)


def _wavenumber(energy_kev):
    return TWO_PI * np.asarray(energy_kev, dtype=float) / HC_KEV_M


def solve_phase_matching(pump: PumpConfig, crystal: CrystalConfig,
                         signal_energy_kev: float) -> PhaseMatchState:
    """Emission angles that conserve momentum exactly at a signal energy.

    Closed-form two-circle intersection: with P = |k_p+G| along the axis,
    cos(theta_s) = (P^2 + k_s^2 - k_i^2) / (2 P k_s) and the idler mirrored
    on the other side of the axis.
    """
    ep = pump.energy_kev
    if not 0.0 < signal_energy_kev < ep:
        raise PhaseMatchingError("signal energy must lie inside (0, pump energy)")
    p = axis_wavenumber(pump, crystal)
    ks = float(_wavenumber(signal_energy_kev))
    ki = float(_wavenumber(ep - signal_energy_kev))
    cos_s = (p * p + ks * ks - ki * ki) / (2.0 * p * ks)
    cos_i = (p * p + ki * ki - ks * ks) / (2.0 * p * ki)
    if abs(cos_s) > 1.0 or abs(cos_i) > 1.0:
        raise PhaseMatchingError(
            f"evanescent geometry at {signal_energy_kev:.3f} keV signal"
        )
    theta_s = math.acos(cos_s)
    theta_i = math.acos(cos_i)
    dkz = p - ks * cos_s - ki * cos_i
    return PhaseMatchState(
        delta_kz_per_m=dkz,
        theta_s_rad=theta_s,
        theta_i_rad=-theta_i,
        theta_bragg_rad=pump_bragg_angle(pump, crystal),
    )


def ridge_angle(pump: PumpConfig, crystal: CrystalConfig, energy_kev) -> np.ndarray:
    """Signal emission angle (rad, from the axis) versus signal energy."""
    e = np.atleast_1d(np.asarray(energy_kev, dtype=float))
    p = axis_wavenumber(pump, crystal)
    ks = _wavenumber(e)
    ki = _wavenumber(pump.energy_kev - e)
    cos_s = (p * p + ks * ks - ki * ki) / (2.0 * p * ks)
    if np.any(np.abs(cos_s) > 1.0):
        raise PhaseMatchingError("evanescent geometry inside requested grid")
    out = np.arccos(cos_s)
    return out if np.ndim(energy_kev) else float(out[0])


def delta_kz(mode: SignalMode, pump: PumpConfig, crystal: CrystalConfig) -> float:
    """Longitudinal mismatch for an arbitrary signal mode (idler derived)."""
    return float(delta_kz_grid(mode.kx_per_m, mode.ky_per_m, mode.energy_kev,
                               pump, crystal))


def delta_kz_grid(kx, ky, energy_kev, pump: PumpConfig,
                  crystal: CrystalConfig) -> np.ndarray:
    """Vectorized delta_k_z over arrays of (kx, ky, signal energy)."""
    e = np.asarray(energy_kev, dtype=float)
    if np.any(e <= 0.0) or np.any(e >= pump.energy_kev):
        raise PhaseMatchingError("derived idler energy must stay positive")
    p = axis_wavenumber(pump, crystal)
    q2 = np.asarray(kx, dtype=float) ** 2 + np.asarray(ky, dtype=float) ** 2
    ks = _wavenumber(e)
    ki = _wavenumber(pump.energy_kev - e)
    ksz = np.sqrt(ks * ks - q2)
    kiz = np.sqrt(ki * ki - q2)
    return p - ksz - kiz


def biphoton_amplitude(mode: SignalMode, pump: PumpConfig,
                       crystal: CrystalConfig) -> complex:
    """Reduced biphoton amplitude (2pi)^3 kappa L e^{i x} sinc(x), x = dkz L/2."""
    x = 0.5 * delta_kz(mode, pump, crystal) * crystal.thickness_m
    kappa_l = crystal.kappa_per_m * crystal.thickness_m
    return (TWO_PI ** 3) * kappa_l * np.exp(1j * x) * np.sinc(x / math.pi)


# ---------------------------------------------------------------------------
# Crystal-output spectrum
# ---------------------------------------------------------------------------

@dataclass
class SpectrumResult:
    """Sampled spectral density plus the derived window/rate summary."""

    energy_kev: np.ndarray
    density_per_kev: np.ndarray          # absolute pair-rate density, pairs/s/keV
    density_normalized: np.ndarray       # peak-normalized
    window_kev: tuple[float, float]      # single-arm accepted window
    bandwidth_kev: float                 # width of that window
    pair_window_kev: tuple[float, float]  # both-photons-accepted window
    total_rate_pairs_s: float            # integral over the single-arm window
    pair_rate_pairs_s: float             # integral over the coincidence window
    warnings: list[str]


def aperture_window_kev(pump: PumpConfig, crystal: CrystalConfig,
                        aperture_deg: float) -> tuple[float, float]:
    """Signal energies whose emission angle stays inside the aperture.

    The aperture value is the full in-plane angular width accepted around
    the degenerate direction; this convention reproduces the one-to-one
    energy window of the reference configuration.
    """
    if aperture_deg <= 0:
        raise ValueError("aperture must be positive")
    half = math.radians(aperture_deg) / 2.0
    theta0 = float(ridge_angle(pump, crystal, pump.energy_kev / 2.0))
    lo_angle, hi_angle = theta0 - half, theta0 + half
    if lo_angle <= 0:
        raise PhaseMatchingError("aperture extends past the optical axis")

    # theta(E) is strictly decreasing; invert by bisection.
    def solve(target):
        a, b = 1e-3 * pump.energy_kev, pump.energy_kev * (1 - 1e-9)
        fa = float(ridge_angle(pump, crystal, a)) - target
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = float(ridge_angle(pump, crystal, m)) - target
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
            if b - a < 1e-9:
                break
        return 0.5 * (a + b)

    e_lo = solve(hi_angle)   # larger angle -> lower energy
    e_hi = solve(lo_angle)
    return e_lo, e_hi


def ridge_kx(pump: PumpConfig, crystal: CrystalConfig, energy_kev,
             ky, dkz) -> np.ndarray:
    """Invert delta_k_z to the in-plane transverse momentum of the ridge.

    Closed form: with M = P - dkz shared between the two longitudinal
    momenta, |q|^2 = k_s^2 - ((M^2 + k_s^2 - k_i^2)/(2M))^2.
    """
    p = axis_wavenumber(pump, crystal)
    e = np.asarray(energy_kev, dtype=float)
    ks = _wavenumber(e)
    ki = _wavenumber(pump.energy_kev - e)
    m = p - np.asarray(dkz, dtype=float)
    ksz = (m * m + ks * ks - ki * ki) / (2.0 * m)
    q2 = ks * ks - ksz * ksz
    kx2 = q2 - np.asarray(ky, dtype=float) ** 2
    return np.sqrt(np.maximum(kx2, 0.0)), kx2 > 0.0


def mode_volume_integral(pump: PumpConfig, crystal: CrystalConfig,
                         aperture_deg: float, energies_kev,
                         n_ky: int = 24, n_lobes: int = 6,
                         nodes_per_lobe: int = 8,
                         pair_aperture: bool = False):
    """Per-energy integral of sinc^2 over accepted transverse modes.

    Returns the integrand of the rate formula before the global prefactor:
    integral over (kx, ky) of sinc^2(dkz L / 2), in 1/m^2.  ``pair_aperture``
    additionally requires the derived idler angle inside the aperture.
    """
    half = math.radians(aperture_deg) / 2.0
    theta0 = float(ridge_angle(pump, crystal, pump.energy_kev / 2.0))
    L = crystal.thickness_m
    e = np.atleast_1d(np.asarray(energies_kev, dtype=float))
    ks = _wavenumber(e)
    ki = _wavenumber(pump.energy_kev - e)

    v_nodes, v_w = sinc_panels(n_lobes, nodes_per_lobe)   # v = dkz*L/2
    sinc2 = np.sinc(v_nodes / math.pi) ** 2
    out = np.zeros_like(e)
    gl_y, gl_wy = np.polynomial.legendre.leggauss(n_ky)
    for i, energy in enumerate(e):
        y_max = math.sin(half) * min(ks[i], ki[i])
        ky = gl_y * y_max
        wy = gl_wy * y_max
        KY, V = np.meshgrid(ky, v_nodes, indexing="ij")
        dkz = 2.0 * V / L
        kx, ok = ridge_kx(pump, crystal, energy, KY, dkz)
        ksz = np.sqrt(np.maximum(ks[i] ** 2 - kx**2 - KY**2, 1e-30))
        kiz = np.sqrt(np.maximum(ki[i] ** 2 - kx**2 - KY**2, 1e-30))
        s_x = kx / ksz + kx / kiz
        alpha_s = np.arcsin(np.clip(kx / ks[i], -1, 1))
        accept = ok & (np.abs(alpha_s - theta0) <= half)
        if pair_aperture:
            alpha_i = np.arcsin(np.clip(kx / ki[i], -1, 1))
            accept &= np.abs(alpha_i - theta0) <= half
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(accept & (s_x > 0), sinc2[None, :] / s_x, 0.0)
        out[i] = float(np.sum(wy[:, None] * v_w[None, :] * contrib)) * (2.0 / L)
    return out


def rate_prefactor(pump: PumpConfig, crystal: CrystalConfig) -> float:
    """Everything multiplying the mode integral in the pair-rate formula."""
    kappa_l2 = abs(crystal.kappa_per_m * crystal.thickness_m) ** 2
    return (RATE_CALIBRATION_S * pump.rate_per_s * kappa_l2
            * pump.area_m2 / (TWO_PI ** 3))


def accepted_pair_rate(pump: PumpConfig, crystal: CrystalConfig,
                       aperture_deg: float, pair_aperture: bool = False,
                       n_energy: int = 96, n_ky: int = 24) -> float:
    """Total pair rate (pairs/s) through the aperture.

    ``pair_aperture=False`` counts pairs whose signal photon is accepted
    (the published crystal-output convention); ``True`` requires both
    photons inside the aperture (the coincidence window).
    """
    e_lo, e_hi = aperture_window_kev(pump, crystal, aperture_deg)
    ep = pump.energy_kev
    if pair_aperture:
        e_lo, e_hi = max(e_lo, ep - e_hi), min(e_hi, ep - e_lo)
    gx, gw = np.polynomial.legendre.leggauss(n_energy)
    ee = 0.5 * (e_hi - e_lo) * gx + 0.5 * (e_hi + e_lo)
    ww = 0.5 * (e_hi - e_lo) * gw
    vol = mode_volume_integral(pump, crystal, aperture_deg, ee, n_ky=n_ky,
                               pair_aperture=pair_aperture)
    return float(np.sum(ww * vol) * rate_prefactor(pump, crystal) * KEV_TO_RAD_S)


def nlc_spectrum(pump: PumpConfig, crystal: CrystalConfig, aperture_deg: float,
                 energy_grid_kev: Sequence[float] | None = None,
                 n_energy: int = 320, n_ky: int = 24,
                 nodes_per_lobe: int = 8,
                 refinement_check: bool = True) -> SpectrumResult:
    """Spectral density and total rate of accepted photon pairs.

    The spectrum is reported against the signal energy with the detector
    aperture applied to the signal arm (the single-arm windowing
    convention); the coincidence window with both photons accepted is also
    integrated and reported, since the interferometer's identity-device
    consistency check works on that domain.
    """
    warnings: list[str] = []
    e_lo, e_hi = aperture_window_kev(pump, crystal, aperture_deg)
    margin = 0.02 * (e_hi - e_lo)
    if energy_grid_kev is None:
        energies = np.linspace(e_lo - margin, e_hi + margin, n_energy)
    else:
        energies = np.asarray(energy_grid_kev, dtype=float)
        if np.any(energies <= 0) or np.any(energies >= pump.energy_kev):
            raise ValueError("energy grid must lie inside (0, pump energy)")

    volume = mode_volume_integral(pump, crystal, aperture_deg, energies,
                                  n_ky=n_ky, nodes_per_lobe=nodes_per_lobe)
    pref = rate_prefactor(pump, crystal)
    density_rad_s = pref * volume                     # pairs/s per (rad/s)
    density_kev = density_rad_s * KEV_TO_RAD_S        # pairs/s per keV
    peak = float(np.max(density_kev)) if np.any(density_kev > 0) else 1.0

    ep = pump.energy_kev
    pair_lo = max(e_lo, ep - e_hi)
    pair_hi = min(e_hi, ep - e_lo)
    total_rate = accepted_pair_rate(pump, crystal, aperture_deg,
                                    pair_aperture=False, n_ky=n_ky)
    pair_rate = accepted_pair_rate(pump, crystal, aperture_deg,
                                   pair_aperture=True, n_ky=n_ky)

    if refinement_check:
        vol2 = mode_volume_integral(pump, crystal, aperture_deg,
                                    energies[:: max(len(energies) // 16, 1)],
                                    n_ky=n_ky, nodes_per_lobe=2 * nodes_per_lobe)
        vol1 = volume[:: max(len(energies) // 16, 1)]
        denom = np.maximum(np.abs(vol2), 1e-300)
        drift = float(np.max(np.abs(vol1 - vol2) / denom))
        if drift > 1e-3:
            warnings.append(
                f"transverse quadrature drift {drift:.2e} on refinement; "
                "increase nodes_per_lobe"
            )

    return SpectrumResult(
        energy_kev=energies,
        density_per_kev=density_kev,
        density_normalized=density_kev / peak,
        window_kev=(e_lo, e_hi),
        bandwidth_kev=e_hi - e_lo,
        pair_window_kev=(pair_lo, pair_hi),
        total_rate_pairs_s=total_rate,
        pair_rate_pairs_s=pair_rate,
        warnings=warnings,
    )
