"""Product quadrature rules over Euler angles.

The ``haar`` rule integrates against the normalized Haar measure
(uniform azimuths, uniform cos(theta)); with at least 4 azimuthal nodes
and 3 polar nodes it is exact for the degree-2 trigonometric integrands
produced by conjugating Stokes operators with rotations.

The ``flat`` rule integrates against d(phi) d(theta) d(psi) over
[0, 2pi) x [0, pi] x [0, 2pi), total volume 4 pi^3, with Gauss-Legendre
nodes in theta itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stokes import EulerAngles


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: tuple  # of EulerAngles
    weights: np.ndarray
    measure: str

    def __post_init__(self):
        if self.measure not in ("haar", "flat"):
            raise ValueError(f"unknown measure {self.measure!r}")
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.nodes) or (w < 0).any():
            raise ValueError("need one nonnegative weight per node")
        if self.measure == "haar" and abs(w.sum() - 1) > 1e-12:
            raise ValueError("haar weights must sum to 1")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.nodes)

    def angles(self) -> np.ndarray:
        """(n, 3) array of (phi, theta, psi)."""
        return np.array([tuple(e) for e in self.nodes], dtype=float).reshape(-1, 3)


def _azimuths(n: int) -> np.ndarray:
    return 2 * math.pi * np.arange(n) / n


def _product(phis, thetas, psis, w_theta, w_az, measure) -> QuadratureGrid:
    nodes, weights = [], []
    for phi in phis:
        for theta, wt in zip(thetas, w_theta):
            for psi in psis:
                nodes.append(EulerAngles(float(phi), float(theta), float(psi)))
                weights.append(wt * w_az)
    return QuadratureGrid(tuple(nodes), np.array(weights), measure)


def haar_grid(n_phi: int = 4, n_theta: int = 3, n_psi: int = 4) -> QuadratureGrid:
    if n_phi < 1 or n_theta < 1 or n_psi < 1:
        raise ValueError("node counts must be positive")
    x, w = np.polynomial.legendre.leggauss(n_theta)
    # x = cos(theta); reverse so theta increases
    thetas = np.arccos(x[::-1])
    return _product(_azimuths(n_phi), thetas, _azimuths(n_psi), w[::-1] / 2, 1.0 / (n_phi * n_psi), "haar")


def flat_grid(n_phi: int = 4, n_theta: int = 16, n_psi: int = 4) -> QuadratureGrid:
    if n_phi < 1 or n_theta < 1 or n_psi < 1:
        raise ValueError("node counts must be positive")
    x, w = np.polynomial.legendre.leggauss(n_theta)
    thetas = 0.5 * math.pi * (x + 1)
    az = (2 * math.pi / n_phi) * (2 * math.pi / n_psi)
    return _product(_azimuths(n_phi), thetas, _azimuths(n_psi), 0.5 * math.pi * w, az, "flat")
