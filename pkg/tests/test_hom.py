import math

import numpy as np
import pytest

from xrayhom.constants import C_LIGHT_M_S, HBAR_KEV_S, HC_KEV_M
from xrayhom.hom import (
    BenchGeometry,
    DeviceSet,
    HomCurve,
    HomError,
    NoDipError,
    build_grid,
    coincidence_rate,
    coincidence_rates,
    device_incidence,
    dip_metrics,
    hom_curve,
    imaginary_residue,
    mean_coincidence_rate,
    node_coefficients,
)
from xrayhom.multilayer import bragg_corrected_angle, stack_response
from xrayhom.spdc import (
    RATE_CALIBRATION_S,
    SignalMode,
    accepted_pair_rate,
    ridge_angle,
    ridge_kx,
    solve_phase_matching,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# device incidence map
# ---------------------------------------------------------------------------

def _mode(pump, crystal, energy, offset_deg=0.0):
    alpha = float(ridge_angle(pump, crystal, energy)) + math.radians(offset_deg)
    k = TWO_PI * energy / HC_KEV_M
    return SignalMode(kx_per_m=k * math.sin(alpha), ky_per_m=0.0,
                      energy_kev=energy)


def test_on_axis_degenerate_hits_nominal(golden):
    pump, crystal = golden.pump, golden.crystal
    mode = _mode(pump, crystal, pump.energy_kev / 2.0)
    nominal = math.radians(0.97)
    for device in ("mirror_s", "mirror_i", "beam_splitter_port1",
                   "beam_splitter_port2"):
        gamma = device_incidence(mode, golden.geometry, device,
                                 pump=pump, crystal=crystal,
                                 nominal_rad=nominal)
        assert gamma == pytest.approx(nominal, abs=1e-12)


def test_sign_convention_mirror_image(golden):
    pump, crystal = golden.pump, golden.crystal
    mode = _mode(pump, crystal, pump.energy_kev / 2.0, offset_deg=0.05)
    nominal = math.radians(0.97)
    g_s = device_incidence(mode, golden.geometry, "mirror_s", pump=pump,
                           crystal=crystal, nominal_rad=nominal)
    g_i = device_incidence(mode, golden.geometry, "mirror_i", pump=pump,
                           crystal=crystal, nominal_rad=nominal)
    assert math.degrees(g_s - nominal) == pytest.approx(+0.05, abs=1e-9)
    assert math.degrees(g_i - nominal) == pytest.approx(-0.05, abs=1e-9)


def test_ray_trace_oracle(golden):
    """Explicit vector geometry for the probe at three energies.

    The mirror plane contains the out-of-plane axis and is tilted by
    (theta_ref - nominal) from the optical axis so the reference ray meets
    it at exactly the nominal grazing angle.
    """
    pump, crystal = golden.pump, golden.crystal
    theta_ref = float(ridge_angle(pump, crystal, pump.energy_kev / 2.0))
    nominal = math.radians(0.9712)
    tilt = theta_ref - nominal
    normal = np.array([math.cos(tilt), 0.0, -math.sin(tilt)])
    for energy in (9.5, 10.0, 11.5):
        mode = _mode(pump, crystal, energy)
        k = TWO_PI * energy / HC_KEV_M
        alpha = math.asin(mode.kx_per_m / k)
        ray = np.array([math.sin(alpha), 0.0, math.cos(alpha)])
        grazing_oracle = math.asin(float(np.dot(ray, normal)))
        got = device_incidence(mode, golden.geometry, "mirror_s", pump=pump,
                               crystal=crystal, nominal_rad=nominal)
        assert got == pytest.approx(grazing_oracle, abs=1e-12)


def test_out_of_plane_does_not_tilt_grazing(golden):
    pump, crystal = golden.pump, golden.crystal
    base = _mode(pump, crystal, 10.5)
    tilted = SignalMode(base.kx_per_m, 2.0e7, base.energy_kev)
    nominal = math.radians(0.97)
    for device in ("mirror_s", "beam_splitter_port2"):
        a = device_incidence(base, golden.geometry, device, pump=pump,
                             crystal=crystal, nominal_rad=nominal)
        b = device_incidence(tilted, golden.geometry, device, pump=pump,
                             crystal=crystal, nominal_rad=nominal)
        assert a == b


def test_device_incidence_errors(golden):
    pump, crystal = golden.pump, golden.crystal
    mode = _mode(pump, crystal, 10.5)
    with pytest.raises(HomError):
        device_incidence(mode, golden.geometry, "kaleidoscope", pump=pump,
                         crystal=crystal, nominal_rad=math.radians(0.97))
    with pytest.raises(HomError, match="grazing"):
        device_incidence(_mode(pump, crystal, 10.5, offset_deg=-0.2),
                         golden.geometry, "mirror_s", pump=pump,
                         crystal=crystal, nominal_rad=math.radians(0.15))


# ---------------------------------------------------------------------------
# node coefficients
# ---------------------------------------------------------------------------

def test_identity_reduction_matches_source_rate(golden):
    grid = build_grid(golden.pump, golden.crystal, golden.geometry,
                      clip_in_plane=True)
    coeffs = node_coefficients(grid, golden.pump, golden.crystal,
                               golden.geometry, DeviceSet())
    reference = accepted_pair_rate(golden.pump, golden.crystal,
                                   golden.geometry.aperture_deg,
                                   pair_aperture=True)
    assert coeffs.baseline_total == pytest.approx(reference, rel=0.01)
    assert np.all(coeffs.interference == 0)


def test_interference_bound_at_degenerate_node(golden):
    """Cauchy-Schwarz on the bracket for a matched (degenerate) mode."""
    bs = golden.devices.beam_splitter
    gamma = bragg_corrected_angle(bs, 10.5)
    resp = stack_response(bs, gamma, 10.5)
    a = complex(resp.t_front)
    b = complex(resp.r_front)
    c = complex(resp.r_back)
    d = complex(resp.t_back)
    interf = abs(a * np.conj(b) * np.conj(c) * d
                 + np.conj(a) * b * c * np.conj(d))
    baseline = abs(a * d) ** 2 + abs(b * c) ** 2
    assert interf <= baseline + 1e-15


def test_node_against_compositional_oracle(golden, golden_grid, golden_coeffs):
    """One node at ~10.2 keV rebuilt by chaining the public operations."""
    pump, crystal, geom = golden.pump, golden.crystal, golden.geometry
    grid, coeffs = golden_grid, golden_coeffs
    live = np.flatnonzero(grid.weight > 0)
    target = live[np.argmin(np.abs(grid.energy_kev[live] - 10.2)
                            + np.abs(grid.v[live]) * 1e-3
                            + np.abs(grid.ky[live]) * 1e-9)]
    e_s = float(grid.energy_kev[target])
    e_i = pump.energy_kev - e_s
    kx, ky, v = (float(grid.kx[target]), float(grid.ky[target]),
                 float(grid.v[target]))

    # hand-chained factors
    theta0 = grid.theta_ref_rad
    k_s = TWO_PI * e_s / HC_KEV_M
    k_i = TWO_PI * e_i / HC_KEV_M
    alpha_w = math.asin(kx / k_s)
    alpha_wp = math.asin(kx / k_i)
    mirror = golden.devices.mirror_s
    bs = golden.devices.beam_splitter
    nom_m = bragg_corrected_angle(mirror, pump.energy_kev / 2.0)
    nom_b = bragg_corrected_angle(bs, pump.energy_kev / 2.0)

    def mirror_r(alpha, energy):
        return complex(stack_response(
            mirror, nom_m + (alpha - theta0), energy).r_front)

    def bs_resp(alpha, energy):
        return stack_response(bs, nom_b + (alpha - theta0), energy)

    ms_w, ms_wp = mirror_r(alpha_w, e_s), mirror_r(alpha_wp, e_i)
    mi_w, mi_wp = mirror_r(alpha_w, e_s), mirror_r(alpha_wp, e_i)
    r_w, r_wp = bs_resp(alpha_w, e_s), bs_resp(alpha_wp, e_i)
    a_w, b_w = complex(r_w.t_front), complex(r_w.r_front)
    c_w, d_w = complex(r_w.r_back), complex(r_w.t_back)
    a_wp, b_wp = complex(r_wp.t_front), complex(r_wp.r_front)
    c_wp, d_wp = complex(r_wp.r_back), complex(r_wp.t_back)
    kappa_l = crystal.kappa_per_m * crystal.thickness_m
    phi = (TWO_PI ** 3) * kappa_l * np.exp(1j * v) * np.sinc(v / math.pi)

    baseline_raw = (abs(ms_w * mi_wp * phi) ** 2
                    * (abs(a_wp * d_w) ** 2 + abs(b_w * c_wp) ** 2))
    interf_raw = (ms_wp * np.conj(ms_w) * mi_w * np.conj(mi_wp)
                  * np.conj(phi) * phi
                  * (a_w * np.conj(b_w) * np.conj(c_wp) * d_wp
                     + np.conj(a_wp) * b_wp * c_w * np.conj(d_w)))

    pref = (RATE_CALIBRATION_S * pump.rate_per_s * pump.area_m2
            / (TWO_PI ** 9)) * float(grid.weight[target])
    assert coeffs.baseline[target] == pytest.approx(pref * baseline_raw,
                                                    rel=1e-9)
    assert coeffs.interference[target] == pytest.approx(pref * interf_raw,
                                                        rel=1e-9)


# ---------------------------------------------------------------------------
# coincidence rate
# ---------------------------------------------------------------------------

def test_large_delay_washout(golden_coeffs, golden_curve):
    fwhm = golden_curve.metrics.fwhm_s
    t_far = 1e6 * fwhm
    mean = mean_coincidence_rate(golden_coeffs, 0.9 * t_far, 1.1 * t_far)
    assert mean == pytest.approx(golden_coeffs.baseline_total, rel=0.01)


def test_ideal_bs_perfect_null(golden):
    devices = DeviceSet(beam_splitter="ideal50")
    grid = build_grid(golden.pump, golden.crystal, golden.geometry,
                      n_energy=32, n_kx=24, n_ky=8, clip_in_plane=True)
    coeffs = node_coefficients(grid, golden.pump, golden.crystal,
                               golden.geometry, devices)
    r0 = coincidence_rate(coeffs, 0.0)
    assert r0 == pytest.approx(0.0, abs=1e-12 * coeffs.baseline_total)


def test_reference_dip_nearly_zero(golden_curve):
    m = golden_curve.metrics
    assert m.min_rate < 0.05 * m.baseline_rate


def test_realness(golden_coeffs):
    base = golden_coeffs.baseline_total
    for t in np.linspace(-2e-18, 2e-18, 25):
        r = coincidence_rate(golden_coeffs, float(t))
        residue = imaginary_residue(golden_coeffs, float(t))
        assert abs(residue) / r < 1e-8
        assert r >= -1e-10 * base


def test_nonnegative_over_wide_sweep(golden_coeffs):
    t = np.linspace(-50e-18, 50e-18, 1500)
    r = coincidence_rates(golden_coeffs, t)
    assert np.all(r >= -1e-10 * golden_coeffs.baseline_total)


def test_baseline_matches_node_sum(golden_coeffs):
    assert golden_coeffs.baseline_total == pytest.approx(
        float(np.sum(golden_coeffs.baseline)), rel=1e-14)
    assert np.all(golden_coeffs.baseline >= 0.0)
    assert golden_coeffs.baseline_total > 0.0


# ---------------------------------------------------------------------------
# curve and metrics
# ---------------------------------------------------------------------------

def test_reference_curve_headline_numbers(golden_curve):
    m = golden_curve.metrics
    assert m.fwhm_s == pytest.approx(0.6e-18, rel=0.20)
    assert m.visibility >= 0.95
    assert m.center_shift_s != 0.0
    assert 0.0 <= golden_curve.normalized.min()
    assert golden_curve.normalized.max() <= 1.0


def test_narrower_aperture_widens_dip(golden):
    """Time-bandwidth reciprocity on the aperture-clipped domain."""
    def clipped_fwhm(aperture_deg):
        geom = BenchGeometry(aperture_deg=aperture_deg)
        grid = build_grid(golden.pump, golden.crystal, geom,
                          n_energy=48, n_kx=24, n_ky=12, clip_in_plane=True)
        curve = hom_curve(golden.pump, golden.crystal, geom, golden.devices,
                          grid=grid)
        return curve.metrics.fwhm_s

    assert clipped_fwhm(0.2) > clipped_fwhm(0.4)


def test_symmetrized_phases_remove_shift(golden, golden_grid, golden_curve):
    geom = BenchGeometry(aperture_deg=golden.geometry.aperture_deg,
                         symmetrize_bs_phases=True)
    curve = hom_curve(golden.pump, golden.crystal, geom, golden.devices,
                      grid=golden_grid)
    sym_shift = abs(curve.metrics.center_shift_s)
    asym_shift = abs(golden_curve.metrics.center_shift_s)
    assert sym_shift < 0.01 * asym_shift
    # even about its minimum
    coeffs = curve.coefficients
    t0 = curve.metrics.center_shift_s
    dt = np.linspace(0.0, 1.2e-18, 120)
    asym = np.abs(coincidence_rates(coeffs, t0 + dt)
                  - coincidence_rates(coeffs, t0 - dt))
    assert np.max(asym) < 1e-3 * curve.baseline_rate


def test_identity_devices_give_flat_curve_and_no_dip(golden):
    geom = golden.geometry
    grid = build_grid(golden.pump, golden.crystal, geom,
                      n_energy=32, n_kx=24, n_ky=8, clip_in_plane=True)
    curve = hom_curve(golden.pump, golden.crystal, geom, DeviceSet(),
                      t_range_s=(-2e-18, 2e-18), grid=grid)
    assert curve.metrics is None
    assert np.ptp(curve.rate_pairs_s) < 1e-12 * curve.baseline_rate
    with pytest.raises(NoDipError):
        dip_metrics(curve)


def test_auto_widen_when_range_misses_dip(golden, golden_grid):
    curve = hom_curve(golden.pump, golden.crystal, golden.geometry,
                      golden.devices, t_range_s=(6e-18, 9e-18),
                      grid=golden_grid)
    assert any("widened" in n for n in curve.notices)
    assert curve.metrics is not None
    assert curve.metrics.visibility > 0.9


def test_dip_metric_conversions_on_synthetic_curve():
    base = 2.0
    t = np.linspace(-3e-18, 3e-18, 6001)
    width = 0.6e-18
    rate = base * (1.0 - 0.98 * np.exp(-4 * math.log(2) * (t / width) ** 2))
    curve = HomCurve(delay_s=t, rate_pairs_s=rate, normalized=rate / base,
                     baseline_rate=base, nlc_pair_rate=base, metrics=None,
                     notices=[], convergence_delta=None, coefficients=None)
    m = dip_metrics(curve)
    assert m.fwhm_s == pytest.approx(width, rel=1e-3)
    assert m.visibility == pytest.approx(0.98, rel=1e-3)
    assert m.path_difference_m == pytest.approx(C_LIGHT_M_S * width, rel=1e-3)
    assert m.path_difference_m == pytest.approx(1.8e-10, rel=0.01)
    assert m.bandwidth_kev == pytest.approx(HBAR_KEV_S / width, rel=1e-3)
    assert m.bandwidth_kev == pytest.approx(1.097, rel=0.01)
    assert m.center_shift_s == pytest.approx(0.0, abs=2e-21)


def test_grid_is_swap_symmetric(golden_grid, golden):
    lo, hi = golden_grid.window_kev
    assert lo + hi == pytest.approx(golden.pump.energy_kev, rel=1e-14)
    n_trans = golden_grid.energy_kev.size // golden_grid.n_energy
    e_nodes = golden_grid.energy_kev.reshape(golden_grid.n_energy, n_trans)[:, 0]
    assert np.allclose(e_nodes + e_nodes[::-1], golden.pump.energy_kev,
                       rtol=1e-14)


def test_grid_covers_accepted_window(golden_grid, golden):
    from xrayhom.spdc import aperture_window_kev
    lo, hi = aperture_window_kev(golden.pump, golden.crystal,
                                 golden.geometry.aperture_deg)
    assert golden_grid.window_kev[0] <= lo
    assert golden_grid.window_kev[1] >= hi
    assert np.all(golden_grid.weight >= 0)


def test_quadrature_convergence_small_to_default(golden):
    """Halved grid agrees with the default to ~1%, so the default has
    converged well below the acceptance threshold."""
    geom = golden.geometry
    small = build_grid(golden.pump, golden.crystal, geom,
                       n_energy=48, n_kx=24, n_ky=12)
    c_small = hom_curve(golden.pump, golden.crystal, geom, golden.devices,
                        grid=small)
    default = build_grid(golden.pump, golden.crystal, geom)
    c_def = hom_curve(golden.pump, golden.crystal, geom, golden.devices,
                      grid=default)
    assert c_small.metrics.fwhm_s == pytest.approx(c_def.metrics.fwhm_s,
                                                   rel=0.02)
    assert c_small.metrics.visibility == pytest.approx(
        c_def.metrics.visibility, abs=0.01)
