"""Atomic scattering-factor tables and derived optical constants.

Tables follow the Henke ``.nff`` layout: a header line, then whitespace
separated rows of (photon energy in eV, f1, f2) with strictly increasing
energy.  Rows carrying the f1 sentinel value -9999 (the below-edge marker
used by the table format) are retained but flagged unusable; queries whose
interpolation bracket touches a flagged row fail loudly rather than
extrapolate across an absorption edge.

Optical constants use the standard forward-scattering construction

    delta = (r_e * lambda^2 / 2*pi) * n_atoms * f1
    beta  = (r_e * lambda^2 / 2*pi) * n_atoms * f2

with f1, f2 interpolated log-log between tabulated energies and compounds
summing per-element contributions weighted by stoichiometry.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .constants import ATOMIC_MASS_G_MOL, HC_KEV_M, N_AVOGADRO, R_E_M

F1_SENTINEL = -9999.0

#: Densities (g/cm^3) of the materials shipped with the package.  All of
#: them are configuration-overridable.
BUILTIN_DENSITIES = {
    "Pt": 21.45,
    "C": 2.26,        # amorphous/sputtered carbon
    "Si": 2.33,
    "diamond": 3.515,
}

#: Element table backing each builtin material name.
_BUILTIN_ELEMENTS = {
    "Pt": "Pt",
    "C": "C",
    "Si": "Si",
    "diamond": "C",
}


class MaterialError(ValueError):
    """Base class for table and material failures."""


class TableParseError(MaterialError):
    """Malformed table stream; carries the offending line number."""


class TableRangeError(MaterialError):
    """Requested energy outside the tabulated range."""


class TableGapError(MaterialError):
    """Requested energy bracketed by a flagged (unusable) f1 row."""


@dataclass(frozen=True)
class ScatteringTable:
    """Tabulated f1/f2 for one element, energies in eV strictly increasing."""

    element: str
    energy_ev: np.ndarray
    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energy_ev, dtype=float)
        if e.size == 0:
            raise TableParseError(f"{self.element}: empty table")
        if np.any(np.diff(e) <= 0.0):
            raise TableParseError(f"{self.element}: energies not strictly increasing")
        if np.any(np.asarray(self.f2) < 0.0):
            raise TableParseError(f"{self.element}: negative f2 value")

    @property
    def usable(self) -> np.ndarray:
        return np.asarray(self.f1) != F1_SENTINEL

    def coverage_kev(self) -> tuple[float, float]:
        """Energy span (keV) over which f1 rows are usable."""
        ok = np.flatnonzero(self.usable)
        if ok.size == 0:
            raise TableGapError(f"{self.element}: no usable f1 rows")
        return self.energy_ev[ok[0]] / 1e3, self.energy_ev[ok[-1]] / 1e3

    def require_coverage(self, lo_kev: float, hi_kev: float) -> None:
        lo, hi = self.coverage_kev()
        if lo > lo_kev or hi < hi_kev:
            raise TableRangeError(
                f"{self.element}: table covers [{lo:.3f}, {hi:.3f}] keV, "
                f"need [{lo_kev:.3f}, {hi_kev:.3f}] keV"
            )

    def f1f2(self, energy_kev):
        """Log-log interpolated (f1, f2) at the given energy or energies."""
        e_ev = np.atleast_1d(np.asarray(energy_kev, dtype=float)) * 1e3
        grid = self.energy_ev
        if np.any(e_ev < grid[0]) or np.any(e_ev > grid[-1]):
            raise TableRangeError(
                f"{self.element}: energy outside table range "
                f"[{grid[0]:.1f}, {grid[-1]:.1f}] eV"
            )
        idx = np.searchsorted(grid, e_ev, side="right") - 1
        idx = np.clip(idx, 0, grid.size - 2)
        usable = self.usable
        bad = ~(usable[idx] & usable[idx + 1])
        exact = grid[idx] == e_ev
        bad &= ~(exact & usable[idx])
        if np.any(bad):
            e_bad = e_ev[np.argmax(bad)]
            raise TableGapError(
                f"{self.element}: energy {e_bad:.1f} eV bracketed by a flagged row"
            )
        loge = np.log(grid)
        x = np.log(e_ev)
        t = (x - loge[idx]) / (loge[idx + 1] - loge[idx])
        t = np.where(exact, 0.0, t)

        def _interp(values):
            v = np.asarray(values, dtype=float)
            # log-log in magnitude; linear fallback across sign changes
            left, right = v[idx], v[idx + 1]
            loglin = np.where(
                (left > 0) & (right > 0),
                np.exp(np.log(np.where(left > 0, left, 1.0)) * (1 - t)
                       + np.log(np.where(right > 0, right, 1.0)) * t),
                left * (1 - t) + right * t,
            )
            return loglin

        f1 = _interp(self.f1)
        f2 = _interp(self.f2)
        if np.ndim(energy_kev) == 0:
            return float(f1[0]), float(f2[0])
        return f1, f2


def load_scattering_table(source, element: str | None = None) -> ScatteringTable:
    """Parse a Henke-layout table from a path, text stream, or string.

    The first line is a header and is only used to infer the element symbol
    when ``element`` is not given.  Data lines are whitespace separated
    (E_eV, f1, f2) triples; malformed lines raise TableParseError naming the
    line number.
    """
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        with open(source, "r") as fh:
            return load_scattering_table(fh, element=element)
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source.read().splitlines() if hasattr(source, "read") else list(source)
    if not lines:
        raise TableParseError("empty table stream")

    header = lines[0].split()
    if element is None:
        element = header[0].capitalize() if header and header[0].isalpha() else "?"

    energies, f1s, f2s = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TableParseError(f"line {lineno}: expected 3 columns, got {len(parts)}")
        try:
            e, a, b = (float(p) for p in parts)
        except ValueError as exc:
            raise TableParseError(f"line {lineno}: {exc}") from None
        energies.append(e)
        f1s.append(a)
        f2s.append(b)
    if not energies:
        raise TableParseError("table has a header but no data rows")
    return ScatteringTable(
        element=element,
        energy_ev=np.asarray(energies),
        f1=np.asarray(f1s),
        f2=np.asarray(f2s),
    )


def _table_dir() -> Path:
    env = os.environ.get("XRAYHOM_TABLE_DIR")
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "data"


_TABLE_CACHE: dict[tuple[str, str], ScatteringTable] = {}


def element_table(symbol: str) -> ScatteringTable:
    """Load (and cache) the bundled table for an element symbol."""
    directory = _table_dir()
    key = (str(directory), symbol)
    if key not in _TABLE_CACHE:
        path = directory / f"{symbol.lower()}.nff"
        if not path.exists():
            raise MaterialError(f"no scattering table for element {symbol!r} in {directory}")
        _TABLE_CACHE[key] = load_scattering_table(path, element=symbol)
    return _TABLE_CACHE[key]


@dataclass(frozen=True)
class Material:
    """A named medium: density plus stoichiometry with resolved tables.

    ``density_g_cm3 == 0`` denotes vacuum (empty stoichiometry allowed);
    otherwise at least one element with positive count is required.
    ``lossless=True`` zeroes the absorption index while keeping the
    dispersion, for media modelled as transparent phase elements (e.g. a
    membrane substrate thin compared to its absorption length).
    """

    name: str
    density_g_cm3: float
    stoichiometry: tuple[tuple[str, float], ...] = ()
    tables: tuple[ScatteringTable, ...] = field(default=(), repr=False)
    lossless: bool = False

    def __post_init__(self):
        if self.density_g_cm3 < 0:
            raise MaterialError(f"{self.name}: negative density")
        if self.density_g_cm3 > 0:
            if not self.stoichiometry:
                raise MaterialError(f"{self.name}: no elements")
            if any(count <= 0 for _, count in self.stoichiometry):
                raise MaterialError(f"{self.name}: non-positive element count")
            symbols = {t.element for t in self.tables}
            missing = [s for s, _ in self.stoichiometry if s not in symbols]
            if missing:
                raise MaterialError(f"{self.name}: missing tables for {missing}")

    @classmethod
    def vacuum(cls) -> "Material":
        return cls(name="vacuum", density_g_cm3=0.0)

    @classmethod
    def from_formula(cls, name: str, density_g_cm3: float,
                     formula: Sequence[tuple[str, float]],
                     lossless: bool = False) -> "Material":
        tables = tuple(element_table(sym) for sym, _ in formula)
        return cls(name=name, density_g_cm3=density_g_cm3,
                   stoichiometry=tuple(formula), tables=tables,
                   lossless=lossless)

    @property
    def is_vacuum(self) -> bool:
        return self.density_g_cm3 == 0.0

    @property
    def molar_mass_g_mol(self) -> float:
        return sum(ATOMIC_MASS_G_MOL[s] * c for s, c in self.stoichiometry)

    def require_coverage(self, lo_kev: float, hi_kev: float) -> None:
        if self.is_vacuum:
            return
        for table in self.tables:
            table.require_coverage(lo_kev, hi_kev)


def builtin_material(name: str, density_g_cm3: float | None = None,
                     lossless: bool = False) -> Material:
    """One of the shipped materials (Pt, C, Si, diamond, vacuum)."""
    if name == "vacuum":
        return Material.vacuum()
    if name not in BUILTIN_DENSITIES:
        raise MaterialError(
            f"unknown builtin material {name!r}; "
            f"choices: {sorted(BUILTIN_DENSITIES)} + ['vacuum']"
        )
    density = BUILTIN_DENSITIES[name] if density_g_cm3 is None else density_g_cm3
    element = _BUILTIN_ELEMENTS[name]
    return Material.from_formula(name, density, [(element, 1.0)],
                                 lossless=lossless)


VACUUM = Material.vacuum()


@dataclass(frozen=True)
class OpticalConstants:
    """Refractive index decrement and absorption index, n = 1 - delta + i*beta."""

    delta: float
    beta: float
    energy_kev: float

    @property
    def n(self) -> complex:
        return complex(1.0 - self.delta, self.beta)


def deltas_betas(material: Material, energy_kev):
    """Vectorized (delta, beta) arrays for one material.

    Sums per-element contributions weighted by stoichiometry; the molecular
    number density follows from the mass density and the molar mass.
    """
    e = np.atleast_1d(np.asarray(energy_kev, dtype=float))
    if material.is_vacuum:
        z = np.zeros_like(e)
        return z, z.copy()
    lam = HC_KEV_M / e
    n_molecules = (material.density_g_cm3 / material.molar_mass_g_mol
                   * N_AVOGADRO * 1e6)  # molecules / m^3
    prefac = R_E_M * lam**2 / (2.0 * math.pi) * n_molecules
    f1_sum = np.zeros_like(e)
    f2_sum = np.zeros_like(e)
    table_by_symbol = {t.element: t for t in material.tables}
    for symbol, count in material.stoichiometry:
        f1, f2 = table_by_symbol[symbol].f1f2(e)
        f1_sum += count * np.atleast_1d(f1)
        f2_sum += count * np.atleast_1d(f2)
    if material.lossless:
        f2_sum = np.zeros_like(f2_sum)
    return prefac * f1_sum, prefac * f2_sum


def refractive_index(material: Material, energy_kev: float) -> OpticalConstants:
    """Optical constants of a material at a photon energy in keV."""
    d, b = deltas_betas(material, energy_kev)
    return OpticalConstants(delta=float(d[0]), beta=float(b[0]),
                            energy_kev=float(energy_kev))


def attenuation_length(material: Material, energy_kev: float) -> float:
    """1/e intensity decay length lambda/(4*pi*beta), in meters.

    beta == 0 (vacuum) reports infinite attenuation length, which is a
    distinguished value rather than an error.
    """
    oc = refractive_index(material, energy_kev)
    if oc.beta == 0.0:
        return math.inf
    return wavelength(energy_kev) / (4.0 * math.pi * oc.beta)


def wavelength(energy_kev: float) -> float:
    return HC_KEV_M / energy_kev
