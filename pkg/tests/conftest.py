import pathlib

import pytest

from xrayhom.config import parse_config
from xrayhom.hom import build_grid, hom_curve, node_coefficients

REPO = pathlib.Path(__file__).resolve().parents[1]
GOLDEN_CFG = REPO / "configs" / "reference.cfg"


@pytest.fixture(scope="session")
def golden():
    run, diags = parse_config(GOLDEN_CFG)
    assert not diags, diags
    return run


@pytest.fixture(scope="session")
def golden_grid(golden):
    q = golden.quadrature
    return build_grid(golden.pump, golden.crystal, golden.geometry,
                      n_energy=q.energy_nodes, n_kx=q.kx_nodes,
                      n_ky=q.ky_nodes, n_lobes=q.sinc_lobes)


@pytest.fixture(scope="session")
def golden_coeffs(golden, golden_grid):
    return node_coefficients(golden_grid, golden.pump, golden.crystal,
                             golden.geometry, golden.devices)


@pytest.fixture(scope="session")
def golden_curve(golden, golden_grid):
    return hom_curve(golden.pump, golden.crystal, golden.geometry,
                     golden.devices, grid=golden_grid)
