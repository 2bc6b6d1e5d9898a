import math

import numpy as np
import pytest

from xrayhom.constants import HC_KEV_M
from xrayhom.spdc import (
    CrystalConfig,
    PhaseMatchingError,
    PumpConfig,
    SignalMode,
    aperture_window_kev,
    axis_wavenumber,
    biphoton_amplitude,
    delta_kz,
    delta_kz_grid,
    nlc_spectrum,
    pump_bragg_angle,
    reciprocal_lattice_vector,
    ridge_angle,
    solve_phase_matching,
)

TWO_PI = 2.0 * math.pi


def reference_pump(**kw):
    return PumpConfig(energy_kev=21.0, deviation_mdeg=8.3136, **kw)


# ---------------------------------------------------------------------------
# reciprocal lattice vector
# ---------------------------------------------------------------------------

def test_g_definition():
    c = CrystalConfig(hkl=(1, 0, 0), lattice_m=TWO_PI)
    assert reciprocal_lattice_vector(c) == pytest.approx(1.0)


def test_g_diamond_660():
    c = CrystalConfig()
    assert reciprocal_lattice_vector(c) == pytest.approx(
        TWO_PI * math.sqrt(72.0) / 3.5668e-10)


def test_g_permutation_symmetry():
    a = reciprocal_lattice_vector(CrystalConfig(hkl=(6, 6, 0)))
    b = reciprocal_lattice_vector(CrystalConfig(hkl=(0, 6, 6)))
    assert a == pytest.approx(b)


# ---------------------------------------------------------------------------
# pump Bragg angle
# ---------------------------------------------------------------------------

def test_bragg_backscattering_limit():
    # choose lattice so G = 2 k_p exactly
    pump = reference_pump()
    g_target = 2.0 * pump.wavenumber
    a = TWO_PI * math.sqrt(72.0) / g_target
    crystal = CrystalConfig(lattice_m=a)
    assert pump_bragg_angle(pump, crystal) == pytest.approx(math.pi / 2)


def test_bragg_energy_scaling():
    crystal = CrystalConfig()
    th1 = pump_bragg_angle(reference_pump(), crystal)
    th2 = pump_bragg_angle(PumpConfig(energy_kev=42.0, deviation_mdeg=8.3136),
                           crystal)
    assert math.sin(th2) == pytest.approx(math.sin(th1) / 2.0)


def test_bragg_no_solution():
    pump = PumpConfig(energy_kev=2.0, deviation_mdeg=0.0)
    with pytest.raises(PhaseMatchingError):
        pump_bragg_angle(pump, CrystalConfig())


def test_bragg_brute_force_oracle():
    """Scan pump incidence angles for elastic diffraction |k_p + G| = k_p."""
    pump, crystal = reference_pump(), CrystalConfig()
    g = reciprocal_lattice_vector(crystal)
    kp = pump.wavenumber
    thetas = np.linspace(0.2, 1.4, 2_000_001)
    mismatch = np.abs(np.sqrt(kp**2 + g**2 - 2 * kp * g * np.sin(thetas)) - kp)
    best = thetas[np.argmin(mismatch)]
    assert pump_bragg_angle(pump, crystal) == pytest.approx(best, abs=1e-6)


# ---------------------------------------------------------------------------
# phase matching
# ---------------------------------------------------------------------------

def test_degenerate_angles_match_published_value(golden):
    st = solve_phase_matching(golden.pump, golden.crystal, 10.5)
    assert math.degrees(st.theta_s_rad) == pytest.approx(0.976, abs=0.005)
    assert math.degrees(st.theta_i_rad) == pytest.approx(-0.976, abs=0.005)
    assert abs(st.delta_kz_per_m) < 1e-6 * axis_wavenumber(golden.pump,
                                                           golden.crystal)


def test_signal_idler_swap_symmetry():
    pump, crystal = reference_pump(), CrystalConfig()
    for e in (9.0, 10.5, 12.3):
        a = solve_phase_matching(pump, crystal, e)
        b = solve_phase_matching(pump, crystal, pump.energy_kev - e)
        assert a.theta_s_rad == pytest.approx(-b.theta_i_rad, rel=1e-12)
        assert a.theta_i_rad == pytest.approx(-b.theta_s_rad, rel=1e-12)


def test_phase_matching_brute_force_oracle():
    """2-D grid over (theta_s, theta_i) minimizing the full vector mismatch."""
    pump, crystal = reference_pump(), CrystalConfig()
    e_s = 9.0
    ks = TWO_PI * e_s / HC_KEV_M
    ki = TWO_PI * (pump.energy_kev - e_s) / HC_KEV_M
    p = axis_wavenumber(pump, crystal)

    def grid_min(center_s, center_i, span):
        th_s = np.linspace(center_s - span, center_s + span, 801)
        th_i = np.linspace(center_i - span, center_i + span, 801)
        TS, TI = np.meshgrid(th_s, th_i, indexing="ij")
        # axis frame: pump+G along z, signal at +theta_s, idler at -theta_i
        dz = p - ks * np.cos(TS) - ki * np.cos(TI)
        dx = ks * np.sin(TS) - ki * np.sin(TI)
        i, j = np.unravel_index(np.argmin(np.hypot(dz, dx)), TS.shape)
        return th_s[i], th_i[j]

    # coarse scan over the full quadrant, then two zoom passes
    ts, ti = grid_min(math.radians(1.25), math.radians(1.25), math.radians(1.2))
    for span in (math.radians(6e-3), math.radians(3e-4)):
        ts, ti = grid_min(ts, ti, span)

    st = solve_phase_matching(pump, crystal, e_s)
    # oracle resolution: final zoom grid spacing ~1.3e-8 rad
    assert st.theta_s_rad == pytest.approx(ts, abs=2e-8)
    assert -st.theta_i_rad == pytest.approx(ti, abs=2e-8)


def test_evanescent_detection():
    pump = PumpConfig(energy_kev=21.0, deviation_mdeg=-8.0)  # closes the cone
    with pytest.raises(PhaseMatchingError):
        solve_phase_matching(pump, CrystalConfig(), 10.5)


# ---------------------------------------------------------------------------
# delta_kz
# ---------------------------------------------------------------------------

def _mode_at_solution(pump, crystal, e_s):
    st = solve_phase_matching(pump, crystal, e_s)
    ks = TWO_PI * e_s / HC_KEV_M
    return SignalMode(kx_per_m=ks * math.sin(st.theta_s_rad), ky_per_m=0.0,
                      energy_kev=e_s)


def test_delta_kz_zero_at_solutions():
    pump, crystal = reference_pump(), CrystalConfig()
    for e in np.linspace(8.6, 12.4, 25):
        mode = _mode_at_solution(pump, crystal, float(e))
        assert abs(delta_kz(mode, pump, crystal)) < 1e-4  # 1/m, ~1e-15 of k


def test_delta_kz_finite_difference_expansion():
    pump, crystal = reference_pump(), CrystalConfig()
    e_s = 10.5
    mode = _mode_at_solution(pump, crystal, e_s)
    ks = TWO_PI * e_s / HC_KEV_M
    # displace by +1 mdeg in-plane
    d_angle = math.radians(1e-3)
    alpha = math.asin(mode.kx_per_m / ks)
    displaced = SignalMode(kx_per_m=ks * math.sin(alpha + d_angle),
                           ky_per_m=0.0, energy_kev=e_s)
    got = delta_kz(displaced, pump, crystal)
    # numerical slope about the root
    h = math.radians(2e-5)
    up = SignalMode(kx_per_m=ks * math.sin(alpha + h), ky_per_m=0.0,
                    energy_kev=e_s)
    dn = SignalMode(kx_per_m=ks * math.sin(alpha - h), ky_per_m=0.0,
                    energy_kev=e_s)
    slope = (delta_kz(up, pump, crystal) - delta_kz(dn, pump, crystal)) / (2 * h)
    assert got != 0.0
    assert got == pytest.approx(slope * d_angle, rel=2e-3)


def test_delta_kz_even_in_ky():
    pump, crystal = reference_pump(), CrystalConfig()
    mode = _mode_at_solution(pump, crystal, 9.7)
    plus = SignalMode(mode.kx_per_m, 2e7, 9.7)
    minus = SignalMode(mode.kx_per_m, -2e7, 9.7)
    assert delta_kz(plus, pump, crystal) == pytest.approx(
        delta_kz(minus, pump, crystal), rel=1e-14)


def test_delta_kz_swap_invariance():
    # the mismatch is symmetric under the signal/idler role swap
    pump, crystal = reference_pump(), CrystalConfig()
    kx, ky = 8.8e8, 1.1e7
    a = delta_kz_grid(kx, ky, 12.0, pump, crystal)
    b = delta_kz_grid(kx, ky, 9.0, pump, crystal)
    assert float(a) == pytest.approx(float(b), rel=1e-14)


# ---------------------------------------------------------------------------
# biphoton amplitude
# ---------------------------------------------------------------------------

def test_amplitude_at_perfect_matching():
    pump, crystal = reference_pump(), CrystalConfig()
    mode = _mode_at_solution(pump, crystal, 10.5)
    amp = biphoton_amplitude(mode, pump, crystal)
    expected = (TWO_PI ** 3) * abs(crystal.kappa_per_m) * crystal.thickness_m
    assert abs(amp) == pytest.approx(expected, rel=1e-9)


def test_amplitude_sinc_zero_and_half_lobe():
    pump, crystal = reference_pump(), CrystalConfig()
    e_s = 10.5
    mode0 = _mode_at_solution(pump, crystal, e_s)
    ks = TWO_PI * e_s / HC_KEV_M
    alpha = math.asin(mode0.kx_per_m / ks)
    L = crystal.thickness_m

    def mode_with_dkz(target):
        # invert the local slope for the in-plane angle offset
        h = math.radians(2e-5)
        up = SignalMode(ks * math.sin(alpha + h), 0.0, e_s)
        dn = SignalMode(ks * math.sin(alpha - h), 0.0, e_s)
        slope = (delta_kz(up, pump, crystal) - delta_kz(dn, pump, crystal)) / (2 * h)
        guess = alpha + target / slope
        # Newton refinement
        for _ in range(20):
            m = SignalMode(ks * math.sin(guess), 0.0, e_s)
            f = delta_kz(m, pump, crystal) - target
            guess -= f / slope
        return SignalMode(ks * math.sin(guess), 0.0, e_s)

    peak = abs(biphoton_amplitude(mode0, pump, crystal))
    mode_pi = mode_with_dkz(2.0 * math.pi / L)       # dkz L/2 = pi
    assert abs(biphoton_amplitude(mode_pi, pump, crystal)) < 1e-6 * peak
    mode_half = mode_with_dkz(math.pi / L)           # dkz L/2 = pi/2
    ratio = abs(biphoton_amplitude(mode_half, pump, crystal)) ** 2 / peak**2
    assert ratio == pytest.approx((2.0 / math.pi) ** 2, rel=1e-6)


def test_amplitude_quadratic_in_kappa_and_length():
    pump = reference_pump()
    base = CrystalConfig()
    mode = _mode_at_solution(pump, base, 10.5)
    a0 = abs(biphoton_amplitude(mode, pump, base)) ** 2
    double_kappa = CrystalConfig(kappa_per_m=2e-19)
    assert abs(biphoton_amplitude(mode, pump, double_kappa)) ** 2 == \
        pytest.approx(4 * a0, rel=1e-12)
    # on the phase-matched ridge |phi|^2 is quadratic in L
    double_l = CrystalConfig(thickness_m=1.6e-3)
    mode_l = _mode_at_solution(pump, double_l, 10.5)
    assert abs(biphoton_amplitude(mode_l, pump, double_l)) ** 2 == \
        pytest.approx(4 * a0, rel=1e-9)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def spectrum():
    return nlc_spectrum(reference_pump(), CrystalConfig(), 0.4, n_energy=160)


def test_accepted_window(spectrum):
    lo, hi = spectrum.window_kev
    assert lo == pytest.approx(8.54, abs=0.05)
    assert hi == pytest.approx(12.89, abs=0.05)


def test_bandwidth(spectrum):
    assert spectrum.bandwidth_kev == pytest.approx(4.35, rel=0.05)


def test_total_rate_order_of_magnitude(spectrum):
    assert 0.05 <= spectrum.total_rate_pairs_s <= 0.45


def test_angle_energy_monotone():
    pump, crystal = reference_pump(), CrystalConfig()
    e = np.linspace(8.6, 12.8, 200)
    theta = ridge_angle(pump, crystal, e)
    assert np.all(np.diff(theta) < 0)


def test_spectrum_density_positive_inside_window(spectrum):
    lo, hi = spectrum.window_kev
    inside = (spectrum.energy_kev > lo + 0.05) & (spectrum.energy_kev < hi - 0.05)
    assert np.all(spectrum.density_per_kev[inside] > 0)
    outside = spectrum.energy_kev > hi + 0.05
    if np.any(outside):
        assert np.all(spectrum.density_per_kev[outside] == 0)


def test_idler_spectrum_is_mirror_of_signal():
    """Coincidence-window density is symmetric about the degenerate energy."""
    from xrayhom.spdc import mode_volume_integral
    pump, crystal = reference_pump(), CrystalConfig()
    e = np.array([9.0, 9.8, 10.2])
    a = mode_volume_integral(pump, crystal, 0.4, e, pair_aperture=True)
    b = mode_volume_integral(pump, crystal, 0.4, pump.energy_kev - e,
                             pair_aperture=True)
    assert a == pytest.approx(b, rel=1e-9)


def test_rate_scaling_linear_in_pump_and_kappa_squared():
    crystal = CrystalConfig()
    base = nlc_spectrum(reference_pump(), crystal, 0.4, n_energy=48).total_rate_pairs_s
    double_rate = nlc_spectrum(reference_pump(rate_per_s=2e13), crystal, 0.4,
                               n_energy=48).total_rate_pairs_s
    assert double_rate == pytest.approx(2 * base, rel=1e-12)
    double_kappa = nlc_spectrum(reference_pump(),
                                CrystalConfig(kappa_per_m=2e-19), 0.4,
                                n_energy=48).total_rate_pairs_s
    assert double_kappa == pytest.approx(4 * base, rel=1e-9)


def test_zero_aperture_rejected():
    with pytest.raises(ValueError):
        aperture_window_kev(reference_pump(), CrystalConfig(), 0.0)


def test_coarse_transverse_grid_warns():
    spec = nlc_spectrum(reference_pump(), CrystalConfig(), 0.4, n_energy=24,
                        nodes_per_lobe=1)
    assert any("drift" in w for w in spec.warnings)
    clean = nlc_spectrum(reference_pump(), CrystalConfig(), 0.4, n_energy=24)
    assert clean.warnings == []


def test_custom_energy_grid_matches_default_machinery():
    pump, crystal = reference_pump(), CrystalConfig()
    probe = np.array([9.2, 10.5, 12.1])
    custom = nlc_spectrum(pump, crystal, 0.4, energy_grid_kev=probe,
                          refinement_check=False)
    dense = nlc_spectrum(pump, crystal, 0.4, n_energy=200,
                         refinement_check=False)
    for e, d in zip(custom.energy_kev, custom.density_per_kev):
        j = int(np.argmin(np.abs(dense.energy_kev - e)))
        assert d == pytest.approx(dense.density_per_kev[j], rel=5e-3)
    with pytest.raises(ValueError):
        nlc_spectrum(pump, crystal, 0.4, energy_grid_kev=[25.0])
