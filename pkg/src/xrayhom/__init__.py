"""Desk-scale model of a hard-x-ray Hong-Ou-Mandel interferometer.

Submodules:
  materials   - scattering-factor tables, refractive indices, attenuation
  spdc        - crystal phase matching, biphoton amplitude, output spectrum
  multilayer  - grazing-incidence multilayer mirrors and beam splitter
  hom         - coincidence-rate engine and dip metrics
  config/cli  - run-configuration front end
"""

__version__ = "0.1.0"

from .materials import (
    Material,
    OpticalConstants,
    ScatteringTable,
    attenuation_length,
    builtin_material,
    load_scattering_table,
    refractive_index,
)
from .multilayer import (
    Layer,
    LayerStack,
    StackResponse,
    bragg_corrected_angle,
    fresnel_interface_r,
    response_scan,
    stack_response,
    tanh_reflectivity_estimate,
)
from .spdc import (
    CrystalConfig,
    PhaseMatchState,
    PumpConfig,
    SignalMode,
    biphoton_amplitude,
    delta_kz,
    nlc_spectrum,
    pump_bragg_angle,
    reciprocal_lattice_vector,
    solve_phase_matching,
)
from .hom import (
    BenchGeometry,
    DeviceSet,
    HomCurve,
    build_grid,
    coincidence_rate,
    device_incidence,
    dip_metrics,
    hom_curve,
    node_coefficients,
)
