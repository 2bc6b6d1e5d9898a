"""Coincidence-rate engine for the two-photon interferometer.

Assembles the coincidence integrand from the source amplitude and the
device responses, integrates over (k_x, k_y, omega) on a sinc-resolved
Gauss-Legendre grid, and sweeps the inter-photon delay T by reusing
precomputed node coefficients (each extra delay costs one short weighted
sum).

Coordinate bookkeeping (documented once here, used everywhere):

  * Integration variables are the signal photon's transverse momentum
    q = (k_x, k_y) in the optical-axis frame and its angular frequency
    omega; the idler sits at (-q, omega_p - omega) exactly.
  * Every device responds through the grazing angle of the photon that
    hits it.  A photon of energy nu sharing the node's |k_x| has in-plane
    angle alpha(nu) = asin(k_x / k(nu)) on its own side of the axis, and
    meets a device at  gamma = device_nominal + (alpha(nu) - theta_ref),
    where theta_ref is the degenerate-energy design angle.  Mirrored
    coordinates meet mirrored devices, so the same formula serves both
    arms; out-of-plane k_y never tilts a grazing angle (the devices
    disperse in-plane only).
  * Beam-splitter letters: A and D are the transmissions (equal by
    reciprocity), B the vacuum-face reflection, C the substrate-face
    reflection re-referenced to global plane-wave phases.  The identity
    device is A = D = 1, B = C = 0, M = 1.
  * Positive delay T means the idler (phase-shifter arm) arrives later;
    the delay enters as exp(i (omega_p - 2 omega) T).

The coincidence rate at each node is

    baseline  = |Ms(w) Mi(w') phi|^2 [ |A(w') D(w)|^2 + |B(w) C(w')|^2 ]
    interf    = Ms(w') Ms*(w) Mi(w) Mi*(w') phi*(q,w) phi(q_-ky, w')
                x [ A(w) B*(w) C*(w') D(w') + A*(w') B(w') C(w) D*(w) ]

with w' = omega_p - omega, and R(T) = sum w [baseline + interf e^{i O T}].
The two interference summands are conjugate partners under w <-> w', so on
an omega grid symmetric about the degenerate energy the summed rate is real
to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C_LIGHT_M_S, HBAR_KEV_S, HC_KEV_M, KEV_TO_RAD_S
from .multilayer import LayerStack, bragg_corrected_angle, stack_response
from .quadrature import gauss_legendre, sinc_panels
from .spdc import (
    CrystalConfig,
    PumpConfig,
    RATE_CALIBRATION_S,
    SignalMode,
    accepted_pair_rate,
    aperture_window_kev,
    ridge_angle,
    ridge_kx,
)

TWO_PI = 2.0 * math.pi


class HomError(ValueError):
    pass


class NoDipError(HomError):
    """Curve has no resolvable dip (visibility below threshold)."""


class GridConvergenceError(HomError):
    """Refinement check moved the dip metrics beyond tolerance."""


@dataclass(frozen=True)
class BenchGeometry:
    """Nominal device angles and the aperture of the bench.

    ``None`` angles default to the Bragg-corrected peak of the respective
    stack at the degenerate energy; ``theta_ref_rad=None`` defaults to the
    degenerate phase-matched emission angle.  The idler arm carries the
    phase shifter; ``symmetrize_bs_phases`` forces the two beam-splitter
    reflection phases equal (a diagnostic switch that removes the port
    asymmetry of a finite substrate; see node_coefficients).
    """

    aperture_deg: float = 0.4
    mirror_s_rad: float | None = None
    mirror_i_rad: float | None = None
    beam_splitter_rad: float | None = None
    theta_ref_rad: float | None = None
    delay_arm: str = "idler"
    symmetrize_bs_phases: bool = False


@dataclass(frozen=True)
class DeviceSet:
    """The three optical devices; ``None`` means an identity device.

    ``beam_splitter="ideal50"`` installs the lossless symmetric 50:50
    splitter (|A|=|B|=|C|=|D|=1/sqrt2, balanced phases).
    """

    mirror_s: LayerStack | None = None
    mirror_i: LayerStack | None = None
    beam_splitter: LayerStack | str | None = None


@dataclass
class QuadratureGrid:
    """Flattened tensor grid with weights; realness relies on the energy
    nodes pairing exactly under omega <-> omega_p - omega."""

    n_energy: int
    n_kx: int
    n_ky: int
    n_lobes: int
    energy_kev: np.ndarray        # per node
    kx: np.ndarray
    ky: np.ndarray
    v: np.ndarray                 # dkz * L / 2
    s_x: np.ndarray
    weight: np.ndarray            # full measure incl. jacobian & indicator
    omega_minus: np.ndarray       # omega_p - 2 omega, rad/s
    theta_ref_rad: float
    window_kev: tuple[float, float]


def build_grid(pump: PumpConfig, crystal: CrystalConfig,
               geometry: BenchGeometry, n_energy: int = 96, n_kx: int = 48,
               n_ky: int = 24, n_lobes: int = 6,
               energy_halfwidth_kev: float | None = None,
               clip_in_plane: bool = False) -> QuadratureGrid:
    """Tensor grid over the interferometer's mode space.

    The energy window is symmetric about the degenerate energy (the exact
    node pairing under omega <-> omega_p - omega is what keeps the summed
    rate real) and covers, with margin, the aperture-accepted window of the
    crystal output: in the assembled bench the in-plane acceptance is set by
    the devices' own angular responses, not by a hard detector edge, so the
    grid only stops where their product has died off.  Out-of-plane the
    aperture does bound the modes (the devices are dispersive in-plane
    only).  ``clip_in_plane=True`` restricts the domain to pairs with both
    photons inside the aperture instead; the identity-device reduction to
    the crystal-output pair rate holds on that domain by construction.
    """
    ep = pump.energy_kev
    half = math.radians(geometry.aperture_deg) / 2.0
    theta0 = (geometry.theta_ref_rad if geometry.theta_ref_rad is not None
              else float(ridge_angle(pump, crystal, ep / 2.0)))
    e_lo_s, e_hi_s = aperture_window_kev(pump, crystal, geometry.aperture_deg)
    if clip_in_plane:
        lo = max(e_lo_s, ep - e_hi_s)
        hi = min(e_hi_s, ep - e_lo_s)
        lo = min(lo, ep - hi)
        hi = ep - lo
    else:
        if energy_halfwidth_kev is None:
            # cover the accepted window plus margin for the device wings
            energy_halfwidth_kev = 1.6 * max(e_hi_s - ep / 2.0,
                                             ep / 2.0 - e_lo_s)
        hw = min(energy_halfwidth_kev, 0.42 * ep)
        lo, hi = ep / 2.0 - hw, ep / 2.0 + hw

    e_nodes, e_w = gauss_legendre(lo, hi, n_energy)
    nodes_per_lobe = max(n_kx // (2 * n_lobes), 2)
    v_nodes, v_w = sinc_panels(n_lobes, nodes_per_lobe)
    n_v = v_nodes.size
    y_base, y_w_base = np.polynomial.legendre.leggauss(n_ky)

    L = crystal.thickness_m
    k_of = lambda e: TWO_PI * np.asarray(e) / HC_KEV_M

    E = np.repeat(e_nodes, n_ky * n_v)
    WE = np.repeat(e_w, n_ky * n_v) * KEV_TO_RAD_S
    ks = k_of(E)
    ki = k_of(ep - E)
    y_scale = np.minimum(ks, ki) * math.sin(half)
    KY = (np.tile(np.repeat(y_base, n_v), n_energy)) * y_scale
    WY = (np.tile(np.repeat(y_w_base, n_v), n_energy)) * y_scale
    V = np.tile(v_nodes, n_energy * n_ky)
    WV = np.tile(v_w, n_energy * n_ky)

    dkz = 2.0 * V / L
    kx, ok = ridge_kx(pump, crystal, E, KY, dkz)
    ksz = np.sqrt(np.maximum(ks**2 - kx**2 - KY**2, 1e-300))
    kiz = np.sqrt(np.maximum(ki**2 - kx**2 - KY**2, 1e-300))
    s_x = kx / ksz + kx / kiz
    accept = ok & (s_x > 0)
    if clip_in_plane:
        alpha_s = np.arcsin(np.clip(kx / ks, -1.0, 1.0))
        alpha_i = np.arcsin(np.clip(kx / ki, -1.0, 1.0))
        accept &= (np.abs(alpha_s - theta0) <= half)
        accept &= (np.abs(alpha_i - theta0) <= half)

    with np.errstate(divide="ignore", invalid="ignore"):
        jac = np.where(accept, (2.0 / L) / np.where(s_x > 0, s_x, 1.0), 0.0)
    weight = WE * WY * WV * jac

    return QuadratureGrid(
        n_energy=n_energy, n_kx=n_kx, n_ky=n_ky, n_lobes=n_lobes,
        energy_kev=E, kx=kx, ky=KY, v=V, s_x=s_x, weight=weight,
        omega_minus=(ep - 2.0 * E) * KEV_TO_RAD_S,
        theta_ref_rad=theta0,
        window_kev=(lo, hi),
    )


# ---------------------------------------------------------------------------
# Device evaluation
# ---------------------------------------------------------------------------

def device_incidence(mode: SignalMode, geometry: BenchGeometry,
                     device: str, pump: PumpConfig | None = None,
                     crystal: CrystalConfig | None = None,
                     nominal_rad: float | None = None,
                     theta_ref_rad: float | None = None) -> float:
    """Grazing angle at which a probe mode meets a device.

    The probe convention traces one fixed ray direction through the bench:
    the signed in-plane deviation d = alpha - theta_ref adds to the nominal
    angle on the signal-side devices (mirror_s, bs_port1) and subtracts on
    their mirror images (mirror_i, bs_port2).  Out-of-plane k_y leaves every
    grazing angle unchanged.
    """
    known = ("mirror_s", "mirror_i", "beam_splitter_port1",
             "beam_splitter_port2")
    if device not in known:
        raise HomError(f"unknown device {device!r}; choose from {known}")
    theta_ref = theta_ref_rad
    if theta_ref is None:
        if geometry.theta_ref_rad is not None:
            theta_ref = geometry.theta_ref_rad
        elif pump is not None and crystal is not None:
            theta_ref = float(ridge_angle(pump, crystal, pump.energy_kev / 2.0))
        else:
            raise HomError("theta_ref unavailable: pass pump+crystal or geometry override")
    if nominal_rad is None:
        nominal = {
            "mirror_s": geometry.mirror_s_rad,
            "mirror_i": geometry.mirror_i_rad,
            "beam_splitter_port1": geometry.beam_splitter_rad,
            "beam_splitter_port2": geometry.beam_splitter_rad,
        }[device]
        if nominal is None:
            raise HomError(f"no nominal angle configured for {device!r}")
    else:
        nominal = nominal_rad
    k = TWO_PI * mode.energy_kev / HC_KEV_M
    alpha = math.asin(mode.kx_per_m / k)
    dev = alpha - theta_ref
    sign = +1.0 if device in ("mirror_s", "beam_splitter_port1") else -1.0
    gamma = nominal + sign * dev
    if gamma <= 0:
        raise HomError(f"non-positive grazing angle on {device}: {gamma:.3e} rad")
    return gamma


@dataclass
class _BsAmplitudes:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray


def _resolve_angles(geometry: BenchGeometry, devices: DeviceSet,
                    energy_kev: float):
    """Fill None nominal angles from the Bragg peaks at the given energy."""
    def auto(stack):
        if isinstance(stack, LayerStack):
            return bragg_corrected_angle(stack, energy_kev)
        return None

    ms = geometry.mirror_s_rad if geometry.mirror_s_rad is not None \
        else auto(devices.mirror_s)
    mi = geometry.mirror_i_rad if geometry.mirror_i_rad is not None \
        else auto(devices.mirror_i)
    bs = geometry.beam_splitter_rad if geometry.beam_splitter_rad is not None \
        else auto(devices.beam_splitter)
    return ms, mi, bs


def _mirror_response(stack, gamma, energy, polarization="s"):
    if stack is None:
        return np.ones_like(gamma, dtype=np.complex128)
    resp = stack_response(stack, gamma, energy, polarization)
    return np.asarray(resp.r_front, dtype=np.complex128)


def _bs_response(stack, gamma, energy, polarization="s"):
    n = np.shape(gamma)
    if stack is None:
        one = np.ones(n, dtype=np.complex128)
        zero = np.zeros(n, dtype=np.complex128)
        return _BsAmplitudes(a=one, b=zero, c=zero, d=one.copy())
    if isinstance(stack, str):
        if stack != "ideal50":
            raise HomError(f"unknown beam-splitter sentinel {stack!r}")
        t = np.full(n, 1.0 / math.sqrt(2.0), dtype=np.complex128)
        r = np.full(n, 1j / math.sqrt(2.0), dtype=np.complex128)
        return _BsAmplitudes(a=t, b=r, c=r.copy(), d=t.copy())
    resp = stack_response(stack, gamma, energy, polarization)
    return _BsAmplitudes(
        a=np.asarray(resp.t_front, dtype=np.complex128),
        b=np.asarray(resp.r_front, dtype=np.complex128),
        c=np.asarray(resp.r_back, dtype=np.complex128),
        d=np.asarray(resp.t_back, dtype=np.complex128),
    )


@dataclass
class NodeCoefficients:
    """Per-node T-independent pieces of the coincidence integrand, with the
    rate prefactor and quadrature weights folded in; plus the per-energy
    collapsed sums used by the cheap delay sweep."""

    baseline: np.ndarray          # real >= 0, weighted
    interference: np.ndarray      # complex, weighted
    omega_minus: np.ndarray       # rad/s
    baseline_total: float
    collapsed_interf: np.ndarray  # per unique energy node
    collapsed_omega: np.ndarray
    grid: QuadratureGrid


def node_coefficients(grid: QuadratureGrid, pump: PumpConfig,
                      crystal: CrystalConfig, geometry: BenchGeometry,
                      devices: DeviceSet) -> NodeCoefficients:
    """Evaluate every factor of the coincidence integrand on the grid."""
    ep = pump.energy_kev
    ms_nom, mi_nom, bs_nom = _resolve_angles(geometry, devices, ep / 2.0)
    theta0 = grid.theta_ref_rad
    live = grid.weight != 0.0

    E = grid.energy_kev
    Ei = ep - E
    k_s = TWO_PI * E / HC_KEV_M
    k_i = TWO_PI * Ei / HC_KEV_M
    alpha_w = np.arcsin(np.clip(grid.kx / k_s, -1.0, 1.0))
    alpha_wp = np.arcsin(np.clip(grid.kx / k_i, -1.0, 1.0))

    def gamma(nominal, alpha):
        if nominal is None:
            return np.where(live, alpha, theta0)  # identity device: unused
        g = nominal + (alpha - theta0)
        return np.where(live, g, nominal)

    ms_w = _mirror_response(devices.mirror_s, gamma(ms_nom, alpha_w), E)
    ms_wp = _mirror_response(devices.mirror_s, gamma(ms_nom, alpha_wp), Ei)
    mi_w = _mirror_response(devices.mirror_i, gamma(mi_nom, alpha_w), E)
    mi_wp = _mirror_response(devices.mirror_i, gamma(mi_nom, alpha_wp), Ei)
    bs_w = _bs_response(devices.beam_splitter, gamma(bs_nom, alpha_w), E)
    bs_wp = _bs_response(devices.beam_splitter, gamma(bs_nom, alpha_wp), Ei)

    # biphoton amplitude factors; the mismatch is invariant under the role
    # swap (q, w) -> (q, w'), so phi(q+-, w') shares the node's sinc argument
    kappa_l = crystal.kappa_per_m * crystal.thickness_m
    phi_w = (TWO_PI ** 3) * kappa_l * np.exp(1j * grid.v) * np.sinc(grid.v / math.pi)
    phi_wp = phi_w  # phi(kx, -ky, w'): even in k_y, symmetric under the swap

    pair_abs2 = np.abs(ms_w * mi_wp * phi_w) ** 2
    baseline_bracket = (np.abs(bs_wp.a * bs_w.d) ** 2
                        + np.abs(bs_w.b * bs_wp.c) ** 2)
    interf_bracket = (bs_w.a * np.conj(bs_w.b) * np.conj(bs_wp.c) * bs_wp.d
                      + np.conj(bs_wp.a) * bs_wp.b * bs_w.c * np.conj(bs_w.d))
    if geometry.symmetrize_bs_phases:
        # Force the two reflection phases equal relative to transmission.
        # Only the part of the port phase difference that is odd under
        # omega <-> omega' is a physical asymmetry (both two-photon
        # pathways cross the substrate the same total number of times, so
        # the common-mode phase cancels inside the bracket); removing the
        # odd part is a well-conditioned node-wise twist of small angle.
        def unit(z):
            mag = np.abs(z)
            return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0)

        g_w = unit(np.conj(bs_w.c) * bs_w.d * np.conj(bs_w.a * np.conj(bs_w.b)))
        g_wp = unit(np.conj(bs_wp.c) * bs_wp.d
                    * np.conj(bs_wp.a * np.conj(bs_wp.b)))
        mismatch = g_wp * np.conj(g_w)
        interf_bracket = interf_bracket * np.exp(-0.5j * np.angle(mismatch))
    mirror_product = ms_wp * np.conj(ms_w) * mi_w * np.conj(mi_wp)

    pref = (RATE_CALIBRATION_S * pump.rate_per_s * pump.area_m2
            / (TWO_PI ** 9))
    w = grid.weight * pref
    baseline = w * pair_abs2 * baseline_bracket
    interference = (w * mirror_product * np.conj(phi_w) * phi_wp
                    * interf_bracket)

    n_trans = baseline.size // grid.n_energy
    collapsed_interf = interference.reshape(grid.n_energy, n_trans).sum(axis=1)
    collapsed_omega = grid.omega_minus.reshape(grid.n_energy, n_trans)[:, 0]

    return NodeCoefficients(
        baseline=baseline,
        interference=interference,
        omega_minus=grid.omega_minus,
        baseline_total=float(np.sum(baseline)),
        collapsed_interf=collapsed_interf,
        collapsed_omega=collapsed_omega,
        grid=grid,
    )


def coincidence_rate(coeffs: NodeCoefficients, delay_s: float) -> float:
    """R_C(T); real part of the node sum (imaginary residue is diagnostic)."""
    z = np.sum(coeffs.collapsed_interf
               * np.exp(1j * coeffs.collapsed_omega * delay_s))
    return coeffs.baseline_total + float(np.real(z))


def coincidence_rates(coeffs: NodeCoefficients, delays_s) -> np.ndarray:
    t = np.atleast_1d(np.asarray(delays_s, dtype=float))
    phases = np.exp(1j * np.outer(t, coeffs.collapsed_omega))
    z = phases @ coeffs.collapsed_interf
    return coeffs.baseline_total + np.real(z)


def imaginary_residue(coeffs: NodeCoefficients, delay_s: float) -> float:
    z = np.sum(coeffs.collapsed_interf
               * np.exp(1j * coeffs.collapsed_omega * delay_s))
    return float(np.imag(z))


def mean_coincidence_rate(coeffs: NodeCoefficients, t1_s: float,
                          t2_s: float) -> float:
    """Delay-window average of R_C, evaluated in closed form per node.

    The oscillatory term averages to (e^{i O t2} - e^{i O t1})/(i O (t2-t1));
    far from the dip this is the physically meaningful (detector-integrated)
    rate, free of the sampling artifacts a discrete grid shows at delays it
    cannot resolve point-wise.
    """
    om = coeffs.collapsed_omega
    dt = t2_s - t1_s
    if dt <= 0:
        raise HomError("t2 must exceed t1")
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = np.where(
            np.abs(om) * dt < 1e-12,
            np.exp(1j * om * 0.5 * (t1_s + t2_s)),
            (np.exp(1j * om * t2_s) - np.exp(1j * om * t1_s))
            / (1j * om * dt),
        )
    return coeffs.baseline_total + float(np.real(
        np.sum(coeffs.collapsed_interf * avg)))


# ---------------------------------------------------------------------------
# Delay curve and dip metrics
# ---------------------------------------------------------------------------

@dataclass
class DipMetrics:
    fwhm_s: float
    visibility: float
    center_shift_s: float
    path_difference_m: float
    bandwidth_kev: float
    min_rate: float
    baseline_rate: float


@dataclass
class HomCurve:
    delay_s: np.ndarray
    rate_pairs_s: np.ndarray
    normalized: np.ndarray
    baseline_rate: float
    nlc_pair_rate: float
    metrics: DipMetrics | None
    notices: list[str]
    convergence_delta: float | None
    coefficients: NodeCoefficients | None = field(repr=False, default=None)


def _phase_slope_estimate(coeffs: NodeCoefficients) -> float:
    """Initial dip position from the weighted phase slope of the
    interference coefficients versus the beat frequency."""
    z = coeffs.collapsed_interf
    om = coeffs.collapsed_omega
    wts = np.abs(z)
    if np.all(wts == 0):
        return 0.0
    order = np.argsort(om)
    phase = np.unwrap(np.angle(z[order]))
    wt = wts[order]
    om_s = om[order]
    mean_om = np.average(om_s, weights=wt)
    mean_ph = np.average(phase, weights=wt)
    cov = np.average((om_s - mean_om) * (phase - mean_ph), weights=wt)
    var = np.average((om_s - mean_om) ** 2, weights=wt)
    return -cov / var if var > 0 else 0.0


def dip_metrics(curve: HomCurve, visibility_threshold: float = 0.01) -> DipMetrics:
    """Dip width/visibility/shift from half-depth crossings.

    FWHM by linear interpolation of the half-depth crossings of
    (baseline - rate); the equivalent spectral bandwidth uses the
    uncertainty-product convention  dE = hbar / FWHM  (recorded in output
    metadata alongside the number).
    """
    t, r = curve.delay_s, curve.rate_pairs_s
    base = curve.baseline_rate
    i_min = int(np.argmin(r))
    r_min = float(r[i_min])
    visibility = (base - r_min) / base if base > 0 else 0.0
    if visibility < visibility_threshold:
        raise NoDipError(f"no dip: visibility {visibility:.4f} below threshold")
    half_level = base - 0.5 * (base - r_min)

    def crossing(side):
        rng = range(i_min, 0, -1) if side == "left" else range(i_min, len(t) - 1)
        for j in rng:
            k = j - 1 if side == "left" else j + 1
            if (r[j] - half_level) * (r[k] - half_level) <= 0 and r[j] != r[k]:
                frac = (half_level - r[j]) / (r[k] - r[j])
                return float(t[j] + frac * (t[k] - t[j]))
        raise NoDipError(f"half-depth crossing not bracketed on {side} side")

    left = crossing("left")
    right = crossing("right")
    fwhm = right - left
    center = 0.5 * (left + right)
    return DipMetrics(
        fwhm_s=fwhm,
        visibility=visibility,
        center_shift_s=center,
        path_difference_m=C_LIGHT_M_S * fwhm,
        bandwidth_kev=HBAR_KEV_S / fwhm,
        min_rate=r_min,
        baseline_rate=base,
    )


def hom_curve(pump: PumpConfig, crystal: CrystalConfig,
              geometry: BenchGeometry, devices: DeviceSet,
              t_range_s: tuple[float, float] | None = None,
              n_delays: int = 400,
              grid: QuadratureGrid | None = None,
              refine: bool = False) -> HomCurve:
    """Coincidence rate versus delay with dip metrics attached.

    The dip is located first (phase-slope estimate plus a local scan, with
    a wide-scan fallback); a delay range that fails to bracket it is
    auto-widened and a notice records this.  The published normalization
    divides by the crystal-output pair rate through the same detector
    aperture.
    """
    notices: list[str] = []
    if grid is None:
        grid = build_grid(pump, crystal, geometry)
    coeffs = node_coefficients(grid, pump, crystal, geometry, devices)

    # published normalization: the crystal-output pair rate through the
    # same detector aperture
    nlc_rate = accepted_pair_rate(pump, crystal, geometry.aperture_deg)

    # locate the dip: weighted phase slope, refined by a local scan
    budget = float(np.sum(np.abs(coeffs.collapsed_interf)))
    t_dip = _phase_slope_estimate(coeffs)
    if budget > 0:
        t_local = np.linspace(t_dip - 5e-18, t_dip + 5e-18, 2001)
        r_local = coincidence_rates(coeffs, t_local)
        t_dip = float(t_local[np.argmin(r_local)])
        depth = (coeffs.baseline_total - float(np.min(r_local))) \
            / coeffs.baseline_total
        if depth < 0.3 * budget / coeffs.baseline_total:
            # phase-slope estimate missed; fall back to a wide scan
            t_wide = np.linspace(t_dip - 60e-18, t_dip + 60e-18, 24001)
            r_wide = coincidence_rates(coeffs, t_wide)
            t_dip = float(t_wide[np.argmin(r_wide)])
            notices.append("dip located by wide scan")

    if t_range_s is None:
        span = 2.5e-18
        t_range_s = (t_dip - span, t_dip + span)
        notices.append(f"auto delay window centered at {t_dip * 1e18:.3f} as")

    lo, hi = t_range_s
    if budget > 0:
        margin = 0.02 * (hi - lo)
        if not lo + margin <= t_dip <= hi - margin:
            half = 0.5 * (hi - lo)
            lo = min(lo, t_dip - half)
            hi = max(hi, t_dip + half)
            notices.append(
                f"delay window widened to [{lo * 1e18:.2f}, {hi * 1e18:.2f}] "
                "as to bracket the dip"
            )
    t = np.linspace(lo, hi, n_delays)
    r = coincidence_rates(coeffs, t)
    curve = HomCurve(
        delay_s=t,
        rate_pairs_s=r,
        normalized=r / nlc_rate if nlc_rate > 0 else r,
        baseline_rate=coeffs.baseline_total,
        nlc_pair_rate=nlc_rate,
        metrics=None,
        notices=notices,
        convergence_delta=None,
        coefficients=coeffs,
    )
    try:
        # metrics on a dense window around the located dip
        half_window = max(2.5e-18, 0.05 * (hi - lo))
        t_dense = np.linspace(t_dip - half_window, t_dip + half_window, 6001)
        dense = HomCurve(
            delay_s=t_dense,
            rate_pairs_s=coincidence_rates(coeffs, t_dense),
            normalized=np.empty(0),
            baseline_rate=coeffs.baseline_total,
            nlc_pair_rate=nlc_rate,
            metrics=None, notices=[], convergence_delta=None,
            coefficients=coeffs,
        )
        curve.metrics = dip_metrics(dense)
    except NoDipError:
        curve.metrics = None

    if refine:
        fine_grid = build_grid(pump, crystal, geometry,
                               n_energy=2 * grid.n_energy,
                               n_kx=2 * grid.n_kx, n_ky=2 * grid.n_ky,
                               n_lobes=grid.n_lobes)
        fine = hom_curve(pump, crystal, geometry, devices,
                         t_range_s=(float(t[0]), float(t[-1])),
                         n_delays=n_delays, grid=fine_grid, refine=False)
        if curve.metrics and fine.metrics:
            delta = abs(fine.metrics.fwhm_s - curve.metrics.fwhm_s) / \
                curve.metrics.fwhm_s
            curve.convergence_delta = delta
            if delta > 0.05:
                raise GridConvergenceError(
                    f"dip width moved {delta:.1%} on grid doubling"
                )
    return curve
