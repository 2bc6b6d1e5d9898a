"""Gauss-Legendre grids, including the sinc-resolved composite rule.

The pair-amplitude integrand carries sinc^2(dkz*L/2) across the transverse
direction; its support is thousands of times narrower than the detector
acceptance, so plain tensor quadrature over the aperture box cannot resolve
it.  Integrals therefore substitute u = dkz and use one Gauss-Legendre panel
per sinc half-lobe over a fixed number of lobes, which integrates the
oscillatory weight to high accuracy with few nodes while the remaining
factors vary slowly.
"""

from __future__ import annotations

import math

import numpy as np


def gauss_legendre(a: float, b: float, n: int):
    """Nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def sinc_panels(n_lobes: int, nodes_per_lobe: int):
    """Composite Gauss-Legendre nodes over v in [-n_lobes*pi, n_lobes*pi].

    One panel per half-lobe of sinc^2(v); the +-n_lobes*pi truncation leaves
    out about 1/(n_lobes*pi^2) of the sinc^2 mass, which cancels between
    numerator and normalization in every reported shape.
    """
    base_x, base_w = np.polynomial.legendre.leggauss(nodes_per_lobe)
    edges = np.arange(-n_lobes, n_lobes + 1) * math.pi
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (b - a) * base_x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * base_w)
    return np.concatenate(xs), np.concatenate(ws)
