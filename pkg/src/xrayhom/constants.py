"""Physical constants and unit helpers.

Public boundaries use keV for photon energies and SI internally:
meters, radians, seconds.  hc is pinned so golden numbers are reproducible.
"""

from __future__ import annotations

import math

HC_KEV_NM = 1.23984193            # h*c in keV*nm
HC_KEV_M = HC_KEV_NM * 1e-9       # h*c in keV*m
R_E_M = 2.8179403262e-15          # classical electron radius, m
N_AVOGADRO = 6.02214076e23        # 1/mol
C_LIGHT_M_S = 299792458.0         # m/s
HBAR_KEV_S = 6.582119569e-19      # hbar in keV*s
KEV_TO_RAD_S = 1.0 / HBAR_KEV_S   # angular frequency per keV

# Standard atomic weights (g/mol) for the elements the package ships tables
# for plus a few common companions used in compound definitions.
ATOMIC_MASS_G_MOL = {
    "H": 1.008,
    "B": 10.81,
    "C": 12.011,
    "N": 14.007,
    "O": 15.999,
    "Al": 26.982,
    "Si": 28.0855,
    "Ti": 47.867,
    "Cr": 51.996,
    "Fe": 55.845,
    "Ni": 58.693,
    "Cu": 63.546,
    "Mo": 95.95,
    "Ru": 101.07,
    "W": 183.84,
    "Ir": 192.217,
    "Pt": 195.084,
    "Au": 196.967,
}


def wavelength_m(energy_kev: float) -> float:
    """Vacuum wavelength for a photon energy in keV."""
    return HC_KEV_M / energy_kev


def wavenumber_per_m(energy_kev: float) -> float:
    """Vacuum wavenumber k = 2*pi/lambda for a photon energy in keV."""
    return 2.0 * math.pi * energy_kev / HC_KEV_M
