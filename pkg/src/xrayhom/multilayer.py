"""Stratified-media optics for grazing-incidence multilayers.

Complex amplitude reflection/transmission of a layer stack via the 2x2
characteristic-matrix method, exact for piecewise-constant media.  Waves are
e^{i(k.r - w t)}; the longitudinal root k_z = k0*sqrt(n^2 - cos^2(theta))
takes the branch with non-negative imaginary part so evanescent components
decay into the stack.

Conventions:
  * angles are grazing (between ray and surface), the natural variable here;
  * transmission amplitudes are referenced to the equivalent vacuum path
    across the stack's geometric extent, so an empty stack has t = 1 with
    zero phase and device phases carry only material/structure information
    (the interferometer treats rigid geometric paths as aligned);
  * the back-face reflection is likewise re-referenced to the front plane's
    vacuum phase so the port asymmetry of a finite-substrate splitter shows
    up purely as the internal optical-path difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HC_KEV_M
from .materials import Material, deltas_betas

TWO_PI = 2.0 * math.pi


class MultilayerError(ValueError):
    pass


class NoBraggPeakError(MultilayerError):
    """Bragg condition has no real solution at the requested order."""


class PeakNotFoundError(MultilayerError):
    """A scan contained no resolvable reflectivity peak."""


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness_m: float

    def __post_init__(self):
        if self.thickness_m < 0:
            raise MultilayerError("negative layer thickness")


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers from the entrance (vacuum) side plus a substrate.

    ``substrate_thickness_m is None`` marks a semi-infinite substrate
    (mirror); a finite value embeds the substrate as the last layer with
    vacuum behind it (beam splitter).
    """

    layers: tuple[Layer, ...] = ()
    substrate: Material | None = None
    substrate_thickness_m: float | None = None
    # descriptive fields used by the closed-form estimator
    n_bilayers: int = 0
    bilayer_m: float = 0.0
    gamma: float = 0.0
    absorber: Material | None = None
    spacer: Material | None = None
    bragg_order: int = 1

    @classmethod
    def periodic(cls, absorber: Material, spacer: Material, n_bilayers: int,
                 bilayer_m: float, gamma: float,
                 substrate: Material | None = None,
                 substrate_thickness_m: float | None = None,
                 bragg_order: int = 1) -> "LayerStack":
        """Absorber-first periodic stack; terminates on the spacer.

        gamma is the absorber fraction of the bilayer, d_a = gamma * d.
        """
        if not 0.0 < gamma < 1.0:
            raise MultilayerError("gamma must lie in (0, 1)")
        if n_bilayers < 0:
            raise MultilayerError("negative bilayer count")
        if bilayer_m <= 0 and n_bilayers > 0:
            raise MultilayerError("bilayer width must be positive")
        d_a = gamma * bilayer_m
        d_s = (1.0 - gamma) * bilayer_m
        layers = []
        for _ in range(n_bilayers):
            layers.append(Layer(absorber, d_a))
            layers.append(Layer(spacer, d_s))
        return cls(layers=tuple(layers), substrate=substrate,
                   substrate_thickness_m=substrate_thickness_m,
                   n_bilayers=n_bilayers, bilayer_m=bilayer_m, gamma=gamma,
                   absorber=absorber, spacer=spacer, bragg_order=bragg_order)

    @property
    def total_thickness_m(self) -> float:
        t = sum(layer.thickness_m for layer in self.layers)
        if self.substrate is not None and self.substrate_thickness_m is not None:
            t += self.substrate_thickness_m
        return t

    def sliced(self, n_slices: int) -> "LayerStack":
        """Same physical stack with each layer split into n identical slices."""
        layers = []
        for layer in self.layers:
            layers.extend(
                Layer(layer.material, layer.thickness_m / n_slices)
                for _ in range(n_slices)
            )
        return LayerStack(layers=tuple(layers), substrate=self.substrate,
                          substrate_thickness_m=self.substrate_thickness_m,
                          n_bilayers=self.n_bilayers, bilayer_m=self.bilayer_m,
                          gamma=self.gamma, absorber=self.absorber,
                          spacer=self.spacer, bragg_order=self.bragg_order)


@dataclass
class StackResponse:
    """Amplitude fields of one stack at (grazing angle, energy).

    r_front / t_front: illumination from the vacuum face;
    r_back / t_back: illumination from the opposite face.
    """

    r_front: np.ndarray
    r_back: np.ndarray
    t_front: np.ndarray
    t_back: np.ndarray
    grazing_rad: np.ndarray
    energy_kev: np.ndarray
    polarization: str


def fresnel_interface_r(n1: complex, n2: complex, grazing_rad: float,
                        polarization: str = "s") -> complex:
    """Fresnel amplitude at a single sharp interface, grazing-angle form.

    The in-plane invariant is k_x = k0*n1*cos(theta) with theta the grazing
    angle in the first medium.  At normal incidence (theta = pi/2) the s
    amplitude reduces to (n1-n2)/(n1+n2).
    """
    if not 0.0 < grazing_rad < math.pi / 2 + 1e-12:
        raise MultilayerError("grazing angle must lie in (0, pi/2]")
    kx2 = (n1 * math.cos(grazing_rad)) ** 2
    kz1 = np.sqrt(np.complex128(n1 * n1 - kx2))
    kz2 = np.sqrt(np.complex128(n2 * n2 - kx2))
    kz1 = _decaying_branch(kz1)
    kz2 = _decaying_branch(kz2)
    if polarization == "s":
        return complex((kz1 - kz2) / (kz1 + kz2))
    if polarization == "p":
        a = kz1 / (n1 * n1)
        b = kz2 / (n2 * n2)
        return complex((a - b) / (a + b))
    raise MultilayerError(f"unknown polarization {polarization!r}")


def _decaying_branch(kz):
    """Pick Im(kz) >= 0 so e^{i kz z} decays into the medium."""
    return np.where(np.imag(kz) < 0, -kz, kz)


def mean_decrement(stack: LayerStack, energy_kev: float) -> float:
    """Gamma-weighted refractive decrement of the bilayer."""
    if stack.absorber is None or stack.spacer is None:
        raise MultilayerError("stack has no periodic description")
    d_a, _ = deltas_betas(stack.absorber, energy_kev)
    d_s, _ = deltas_betas(stack.spacer, energy_kev)
    return float(stack.gamma * d_a[0] + (1.0 - stack.gamma) * d_s[0])


def bragg_corrected_angle(stack: LayerStack, energy_kev: float,
                          order: int | None = None) -> float:
    """Peak grazing angle from Bragg's law with the refraction correction.

    Solves n*lambda = 2 d sin(theta) sqrt(1 - (2 dbar - dbar^2)/sin^2 theta),
    i.e. sin^2 theta = (n lambda / 2d)^2 + 2 dbar - dbar^2.
    """
    n = stack.bragg_order if order is None else order
    if n < 1:
        raise NoBraggPeakError("Bragg order must be >= 1")
    lam = HC_KEV_M / energy_kev
    dbar = mean_decrement(stack, energy_kev)
    s2 = (n * lam / (2.0 * stack.bilayer_m)) ** 2 + 2.0 * dbar - dbar * dbar
    if not 0.0 < s2 <= 1.0:
        raise NoBraggPeakError(
            f"no real Bragg angle at order {n} and {energy_kev} keV"
        )
    return math.asin(math.sqrt(s2))


def tanh_reflectivity_estimate(stack: LayerStack, r_interface: float) -> float:
    """Closed-form intensity reflectivity tanh^2[2 N r sin(pi n Gamma)].

    Valid at Bragg incidence with refraction/substrate effects neglected;
    r is the (positive) interface amplitude magnitude.
    """
    r = abs(r_interface)
    arg = 2.0 * stack.n_bilayers * r * math.sin(
        math.pi * stack.bragg_order * stack.gamma
    )
    return math.tanh(arg) ** 2


# ---------------------------------------------------------------------------
# Characteristic-matrix solver
# ---------------------------------------------------------------------------

def _effective_layers(stack: LayerStack, reverse: bool):
    layers = list(stack.layers)
    exit_medium = None
    if stack.substrate is not None:
        if stack.substrate_thickness_m is None:
            exit_medium = stack.substrate       # semi-infinite
        else:
            layers.append(Layer(stack.substrate, stack.substrate_thickness_m))
    if reverse:
        if exit_medium is not None:
            # illumination from inside the semi-infinite substrate
            return list(reversed(layers)), exit_medium, None
        return list(reversed(layers)), None, None
    return layers, None, exit_medium


def stack_response(stack: LayerStack, grazing_rad, energy_kev,
                   polarization: str = "s") -> StackResponse:
    """All four amplitude fields of a stack, vectorized over angle/energy.

    Arrays broadcast; scalars are accepted.  Amplitudes relate global
    plane-wave coefficients (see module docstring): an empty stack returns
    r = 0, t = 1 exactly.
    """
    shape = np.broadcast_shapes(np.shape(grazing_rad), np.shape(energy_kev))
    theta = np.broadcast_to(np.asarray(grazing_rad, dtype=float), shape).ravel()
    energy = np.broadcast_to(np.asarray(energy_kev, dtype=float), shape).ravel()
    if theta.size == 0:
        raise MultilayerError("empty angle/energy grid")
    if np.any(theta <= 0.0) or np.any(theta >= math.pi / 2 + 1e-12):
        raise MultilayerError("grazing angles must lie in (0, pi/2]")

    rf, tf = _one_side(stack, theta, energy, polarization, reverse=False)
    rb, tb = _one_side(stack, theta, energy, polarization, reverse=True)
    return StackResponse(
        r_front=rf.reshape(shape),
        r_back=rb.reshape(shape),
        t_front=tf.reshape(shape),
        t_back=tb.reshape(shape),
        grazing_rad=theta.reshape(shape),
        energy_kev=energy.reshape(shape),
        polarization=polarization,
    )


def _kz_over_k0(material: Material, energy, cos2):
    d, b = deltas_betas(material, energy)
    n2 = (1.0 - d + 1j * b) ** 2
    return _decaying_branch(np.sqrt(n2 - cos2))


def _one_side(stack: LayerStack, theta, energy, polarization, reverse):
    cos2 = np.cos(theta) ** 2
    k0 = TWO_PI * energy / HC_KEV_M
    layers, entry_medium, exit_medium = _effective_layers(stack, reverse)

    def admittance(material):
        q = _kz_over_k0(material, energy, cos2)
        if polarization == "p":
            d, b = deltas_betas(material, energy)
            n2 = (1.0 - d + 1j * b) ** 2
            return q, q / n2
        if polarization != "s":
            raise MultilayerError(f"unknown polarization {polarization!r}")
        return q, q

    vac_q = np.sqrt(np.maximum(1.0 - cos2, 0.0)).astype(np.complex128)
    q_in = vac_q if entry_medium is None else admittance(entry_medium)[1]
    q_out = vac_q if exit_medium is None else admittance(exit_medium)[1]

    # characteristic matrix product, entrance to exit
    m11 = np.ones_like(energy, dtype=np.complex128)
    m12 = np.zeros_like(m11)
    m21 = np.zeros_like(m11)
    m22 = np.ones_like(m11)
    thickness_total = 0.0
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for layer in layers:
        key = id(layer.material)
        if key not in cache:
            cache[key] = admittance(layer.material)
        kz, q = cache[key]
        phi = kz * k0 * layer.thickness_m
        c = np.cos(phi)
        s = np.sin(phi)
        a11, a12 = c, -1j * s / q
        a21, a22 = -1j * q * s, c
        m11, m12, m21, m22 = (
            m11 * a11 + m12 * a21,
            m11 * a12 + m12 * a22,
            m21 * a11 + m22 * a21,
            m21 * a12 + m22 * a22,
        )
        thickness_total += layer.thickness_m

    denom = q_in * (m11 + m12 * q_out) + (m21 + m22 * q_out)
    r = (q_in * (m11 + m12 * q_out) - (m21 + m22 * q_out)) / denom
    t = 2.0 * q_in / denom

    # Global plane-wave referencing: the matrix quotes t at the exit face and
    # the back-side r at the far face; dividing out the rigid vacuum phase
    # across the stack extent expresses every coefficient in one common
    # convention (the interferometer's aligned-arms bookkeeping).
    vac_phase = np.exp(1j * vac_q * k0 * thickness_total)
    t = t / vac_phase
    if reverse and entry_medium is None:
        r = r / vac_phase**2
    return r, t


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------

@dataclass
class PeakMetrics:
    """Bragg-peak summary.  ``position`` is the midpoint of the
    half-maximum crossings: these peaks are flat-topped and skewed by
    absorption, so the bare argmax is degenerate at the percent level while
    the crossing midpoint tracks the physical peak center.  ``argmax`` keeps
    the raw sample maximum for reference."""

    position: float
    height: float
    fwhm: float
    argmax: float


@dataclass
class ScanResult:
    axis: str                      # "angle_deg" | "energy_keV"
    abscissa: np.ndarray
    response: StackResponse
    peak: PeakMetrics


def _half_max_crossings(x: np.ndarray, y: np.ndarray, i_peak: int):
    half = 0.5 * y[i_peak]
    left = None
    for j in range(i_peak, 0, -1):
        if y[j - 1] <= half <= y[j]:
            frac = (half - y[j - 1]) / (y[j] - y[j - 1])
            left = x[j - 1] + frac * (x[j] - x[j - 1])
            break
    right = None
    for j in range(i_peak, len(y) - 1):
        if y[j + 1] <= half <= y[j]:
            frac = (y[j] - half) / (y[j] - y[j + 1])
            right = x[j] + frac * (x[j + 1] - x[j])
            break
    if left is None or right is None:
        raise PeakNotFoundError("half-maximum crossings not bracketed by scan range")
    return left, right


def response_scan(stack: LayerStack, *, angle_deg=None, energy_kev=None,
                  polarization: str = "s") -> ScanResult:
    """Reflectivity scan with first-Bragg-peak metrics.

    Exactly one of the two arguments must be an array (the sweep); the other
    is the fixed value.  The peak search skips the total-reflection plateau
    by starting above ~1.5x the critical angle of the densest layer.
    """
    angle_is_array = np.ndim(angle_deg) > 0
    energy_is_array = np.ndim(energy_kev) > 0
    if angle_is_array == energy_is_array:
        raise MultilayerError("exactly one of angle/energy must be a sweep array")

    if angle_is_array:
        axis = "angle_deg"
        abscissa = np.asarray(angle_deg, dtype=float)
        resp = stack_response(stack, np.radians(abscissa), float(energy_kev),
                              polarization)
        reflect = np.abs(resp.r_front) ** 2
        # critical angle of the top layer sets the plateau extent
        if stack.layers:
            d, _ = deltas_betas(stack.layers[0].material, float(energy_kev))
            theta_c = math.degrees(math.sqrt(max(2.0 * d[0], 0.0)))
        else:
            theta_c = 0.0
        searchable = abscissa > 1.5 * theta_c
    else:
        axis = "energy_keV"
        abscissa = np.asarray(energy_kev, dtype=float)
        resp = stack_response(stack, math.radians(float(angle_deg)), abscissa,
                              polarization)
        reflect = np.abs(resp.r_front) ** 2
        searchable = np.ones_like(abscissa, dtype=bool)

    if not np.any(searchable) or np.all(reflect[searchable] <= 1e-12):
        raise PeakNotFoundError("no reflectivity peak above the plateau in range")

    idx_candidates = np.flatnonzero(searchable)
    local = idx_candidates[np.argmax(reflect[idx_candidates])]
    left, right = _half_max_crossings(abscissa, reflect, local)
    peak = PeakMetrics(position=float(0.5 * (left + right)),
                       height=float(reflect[local]),
                       fwhm=float(right - left),
                       argmax=float(abscissa[local]))
    return ScanResult(axis=axis, abscissa=abscissa, response=resp, peak=peak)
