"""Run-configuration parsing and validation.

The configuration is a flat sectioned key-value file (INI layout): sections
in brackets, one key per line, no programmable constructs, so golden
configs stay auditable and diff-friendly.  ``validate`` performs full
semantic validation and reports every violation rather than stopping at the
first.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .hom import BenchGeometry, DeviceSet
from .materials import (
    BUILTIN_DENSITIES,
    Material,
    MaterialError,
    builtin_material,
)
from .multilayer import LayerStack
from .spdc import CrystalConfig, PumpConfig

#: Materials must be tabulated over at least this span (keV) for any run.
REQUIRED_COVERAGE_KEV = (8.0, 22.0)

DEVICE_SECTIONS = ("mirror_s", "mirror_i", "beam_splitter")


@dataclass
class QuadratureSettings:
    energy_nodes: int = 96
    kx_nodes: int = 48
    ky_nodes: int = 24
    sinc_lobes: int = 6


@dataclass
class DipSettings:
    t_min_as: float | None = None     # None: locate the dip automatically
    t_max_as: float | None = None
    points: int = 400


@dataclass
class RunConfig:
    pump: PumpConfig
    crystal: CrystalConfig
    aperture_deg: float
    materials: dict[str, Material]
    devices: DeviceSet
    geometry: BenchGeometry
    quadrature: QuadratureSettings
    dip: DipSettings
    digest: str
    source_text: str = field(repr=False, default="")


def _parse_float(parser, section, key, diags, default=None, minimum=None,
                 maximum=None, exclusive_min=False):
    if not parser.has_option(section, key):
        if default is None:
            diags.append(f"[{section}] missing key {key}")
            return None
        return default
    raw = parser.get(section, key)
    try:
        value = float(raw)
    except ValueError:
        diags.append(f"[{section}] {key} = {raw!r} is not a number")
        return None
    if minimum is not None:
        if exclusive_min and value <= minimum:
            diags.append(f"[{section}] {key} = {value} must be > {minimum}")
            return None
        if not exclusive_min and value < minimum:
            diags.append(f"[{section}] {key} = {value} must be >= {minimum}")
            return None
    if maximum is not None and value > maximum:
        diags.append(f"[{section}] {key} = {value} must be <= {maximum}")
        return None
    return value


def _parse_int(parser, section, key, diags, default, minimum=1):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        value = int(raw)
    except ValueError:
        diags.append(f"[{section}] {key} = {raw!r} is not an integer")
        return None
    if value < minimum:
        diags.append(f"[{section}] {key} = {value} must be >= {minimum}")
        return None
    return value


def _parse_formula(raw: str, section: str, diags):
    formula = []
    for token in raw.replace(",", " ").split():
        if ":" in token:
            sym, _, count = token.partition(":")
        else:
            sym, count = token, "1"
        try:
            formula.append((sym, float(count)))
        except ValueError:
            diags.append(f"[{section}] formula token {token!r} has a bad count")
    if not formula:
        diags.append(f"[{section}] empty formula")
    return formula


def _load_materials(parser, diags) -> dict[str, Material]:
    materials: dict[str, Material] = {}
    for section in parser.sections():
        if not section.startswith("material:"):
            continue
        name = section.split(":", 1)[1]
        density = _parse_float(parser, section, "density_g_cm3", diags,
                               minimum=0.0)
        lossless = parser.get(section, "lossless", fallback="false").lower() \
            in ("1", "true", "yes")
        formula_raw = parser.get(section, "formula", fallback=None)
        if density is None:
            continue
        try:
            if formula_raw is None:
                if name in BUILTIN_DENSITIES or name == "vacuum":
                    materials[name] = builtin_material(
                        name, density_g_cm3=density or None, lossless=lossless)
                else:
                    diags.append(f"[{section}] needs a formula "
                                 f"(not a builtin material)")
                continue
            formula = _parse_formula(formula_raw, section, diags)
            if formula:
                materials[name] = Material.from_formula(
                    name, density, formula, lossless=lossless)
        except MaterialError as exc:
            diags.append(f"[{section}] {exc}")
    # builtins are always available unless shadowed
    for name in list(BUILTIN_DENSITIES) + ["vacuum"]:
        if name not in materials:
            try:
                materials[name] = builtin_material(name)
            except MaterialError as exc:
                diags.append(f"builtin material {name}: {exc}")
    return materials


def _load_stack(parser, section, materials, diags) -> LayerStack | None:
    if not parser.has_section(section):
        diags.append(f"missing device section [{section}]")
        return None

    def material_ref(key):
        name = parser.get(section, key, fallback=None)
        if name is None:
            diags.append(f"[{section}] missing key {key}")
            return None
        if name not in materials:
            diags.append(f"[{section}] {key} = {name!r} is not a declared material")
            return None
        return materials[name]

    absorber = material_ref("absorber")
    spacer = material_ref("spacer")
    substrate = material_ref("substrate")
    n_bilayers = _parse_int(parser, section, "n_bilayers", diags, default=None,
                            minimum=0)
    bilayer_nm = _parse_float(parser, section, "bilayer_nm", diags,
                              minimum=0.0, exclusive_min=True)
    gamma = _parse_float(parser, section, "gamma", diags)
    if gamma is not None and not 0.0 < gamma < 1.0:
        diags.append(f"[{section}] gamma = {gamma} must lie in (0, 1)")
        gamma = None

    sub_raw = parser.get(section, "substrate_um", fallback="semi_infinite")
    if sub_raw.strip().lower() in ("semi_infinite", "inf", "semi-infinite"):
        substrate_thickness = None
    else:
        try:
            substrate_thickness = float(sub_raw) * 1e-6
            if substrate_thickness <= 0:
                diags.append(f"[{section}] substrate_um must be positive")
                substrate_thickness = None
        except ValueError:
            diags.append(f"[{section}] substrate_um = {sub_raw!r} is neither a "
                         "number nor 'semi_infinite'")
            substrate_thickness = None

    if None in (absorber, spacer, substrate, n_bilayers, bilayer_nm, gamma):
        return None
    return LayerStack.periodic(
        absorber, spacer, n_bilayers, bilayer_nm * 1e-9, gamma,
        substrate=substrate, substrate_thickness_m=substrate_thickness,
    )


def parse_config(path: str | Path):
    """Parse and validate; returns (RunConfig | None, diagnostics)."""
    diags: list[str] = []
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        return None, [f"cannot read {path}: {exc}"]

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        return None, [f"syntax error: {exc}"]

    materials = _load_materials(parser, diags)

    # pump
    energy = _parse_float(parser, "pump", "energy_keV", diags,
                          minimum=0.0, exclusive_min=True) \
        if parser.has_section("pump") else diags.append("missing [pump]") or None
    deviation = _parse_float(parser, "pump", "deviation_mdeg", diags,
                             default=8.3136) if parser.has_section("pump") else None
    rate = _parse_float(parser, "pump", "rate_per_s", diags, default=1e13,
                        minimum=0.0) if parser.has_section("pump") else None
    area = _parse_float(parser, "pump", "area_mm2", diags, default=0.4,
                        minimum=0.0, exclusive_min=True) \
        if parser.has_section("pump") else None

    # crystal
    crystal = None
    if parser.has_section("crystal"):
        mat_name = parser.get("crystal", "material", fallback="diamond")
        if mat_name not in materials:
            diags.append(f"[crystal] material = {mat_name!r} is not declared")
            mat = None
        else:
            mat = materials[mat_name]
        thickness = _parse_float(parser, "crystal", "thickness_mm", diags,
                                 default=0.8, minimum=0.0, exclusive_min=True)
        lattice = _parse_float(parser, "crystal", "lattice_A", diags,
                               default=3.5668, minimum=0.0, exclusive_min=True)
        kappa = _parse_float(parser, "crystal", "kappa_per_m", diags,
                             default=1e-19)
        hkl_raw = parser.get("crystal", "hkl", fallback="6 6 0")
        try:
            hkl = tuple(int(tok) for tok in hkl_raw.replace(",", " ").split())
            if len(hkl) != 3:
                raise ValueError
            if all(v == 0 for v in hkl):
                diags.append("[crystal] hkl must not be all zero")
                hkl = None
        except ValueError:
            diags.append(f"[crystal] hkl = {hkl_raw!r} must be three integers")
            hkl = None
        if None not in (mat, thickness, lattice, kappa) and hkl:
            crystal = CrystalConfig(material=mat, thickness_m=thickness * 1e-3,
                                    hkl=hkl, lattice_m=lattice * 1e-10,
                                    kappa_per_m=kappa)
    else:
        diags.append("missing [crystal]")

    aperture = _parse_float(parser, "detector", "aperture_deg", diags,
                            minimum=0.0, exclusive_min=True) \
        if parser.has_section("detector") else \
        diags.append("missing [detector]") or None

    stacks = {}
    for section in DEVICE_SECTIONS:
        stacks[section] = _load_stack(parser, section, materials, diags)

    # geometry block (all optional; 'auto' keeps the Bragg-peak default)
    def geo_angle(key):
        if not parser.has_section("geometry"):
            return None
        raw = parser.get("geometry", key, fallback="auto").strip().lower()
        if raw == "auto":
            return None
        try:
            return math.radians(float(raw))
        except ValueError:
            diags.append(f"[geometry] {key} = {raw!r} is neither a number "
                         "nor 'auto'")
            return None

    quad = QuadratureSettings()
    if parser.has_section("quadrature"):
        quad.energy_nodes = _parse_int(parser, "quadrature", "energy_nodes",
                                       diags, 96) or 96
        quad.kx_nodes = _parse_int(parser, "quadrature", "kx_nodes", diags, 48) or 48
        quad.ky_nodes = _parse_int(parser, "quadrature", "ky_nodes", diags, 24) or 24
        quad.sinc_lobes = _parse_int(parser, "quadrature", "sinc_lobes",
                                     diags, 6) or 6

    dip = DipSettings()
    if parser.has_section("dip"):
        raw_min = parser.get("dip", "t_min_as", fallback="auto").strip().lower()
        raw_max = parser.get("dip", "t_max_as", fallback="auto").strip().lower()
        if raw_min != "auto" and raw_max != "auto":
            try:
                dip.t_min_as = float(raw_min)
                dip.t_max_as = float(raw_max)
                if dip.t_min_as >= dip.t_max_as:
                    diags.append("[dip] t_min_as must be below t_max_as")
                    dip.t_min_as = dip.t_max_as = None
            except ValueError:
                diags.append("[dip] t_min_as/t_max_as must be numbers or 'auto'")
        dip.points = _parse_int(parser, "dip", "points", diags, 400, minimum=8) or 400

    # table coverage for every material actually used
    used = set()
    if crystal is not None:
        used.add(crystal.material.name)
    for stack in stacks.values():
        if stack is not None:
            used.update(m.name for m in
                        (stack.absorber, stack.spacer, stack.substrate)
                        if m is not None)
    for name in sorted(used):
        mat = materials.get(name)
        if mat is None:
            continue
        try:
            mat.require_coverage(*REQUIRED_COVERAGE_KEV)
        except MaterialError as exc:
            diags.append(f"material {name}: {exc}")

    if diags:
        return None, diags

    pump = PumpConfig(energy_kev=energy, deviation_mdeg=deviation,
                      rate_per_s=rate, area_mm2=area)
    geometry = BenchGeometry(
        aperture_deg=aperture,
        mirror_s_rad=geo_angle("mirror_s_deg"),
        mirror_i_rad=geo_angle("mirror_i_deg"),
        beam_splitter_rad=geo_angle("beam_splitter_deg"),
        theta_ref_rad=geo_angle("reference_deg"),
    )
    devices = DeviceSet(mirror_s=stacks["mirror_s"],
                        mirror_i=stacks["mirror_i"],
                        beam_splitter=stacks["beam_splitter"])
    digest = hashlib.sha256(text.encode()).hexdigest()
    run = RunConfig(pump=pump, crystal=crystal, aperture_deg=aperture,
                    materials=materials, devices=devices, geometry=geometry,
                    quadrature=quad, dip=dip, digest=digest, source_text=text)
    return run, []
