"""Detected channels: Bob's homodyne phase quadrature and the Victor/Alice Bell pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tp_core import TransferMap

__all__ = ["ReadoutChannels", "homodyne_b2", "quadrature_row", "bell_project"]


@dataclass(frozen=True)
class ReadoutChannels:
    B2: TransferMap  # one row
    alpha: TransferMap  # two rows (alpha_1, alpha_2)

    def __post_init__(self):
        if self.B2.n_out != 1 or self.alpha.n_out != 2:
            raise ValueError("expected one B2 row and two alpha rows")


def quadrature_row(beam: TransferMap, zeta):
    """Row for X_zeta = X_1 sin(zeta) + X_2 cos(zeta); zeta = 0 picks the phase quadrature.

    ``zeta`` may be a scalar or a per-frequency array.
    """
    if beam.n_out != 2:
        raise ValueError("beam map must carry a quadrature pair")
    z = np.asarray(zeta, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    m = np.sin(z) * beam.matrix[:, 0, :] + np.cos(z) * beam.matrix[:, 1, :]
    return TransferMap(beam.registry, m[:, None, :])


def homodyne_b2(plant_map: TransferMap, lo_offset=0.0) -> TransferMap:
    """Bob's phase-quadrature row; ``lo_offset`` tilts the homodyne angle (LO phase error)."""
    return quadrature_row(plant_map, lo_offset)


def bell_project(victor_map: TransferMap, alice_map: TransferMap, arg_d=np.pi / 2, xi=(-np.pi / 2, np.pi)):
    """Bell observables (A_zetaA + V_zetaV)/sqrt2 for the two demodulation phases ``xi``.

    zeta_A = -xi + pi/2 + arg_d, zeta_V = xi + pi/2 + arg_d.  The defaults give
    (V1 - A1)/sqrt2 and (V2 + A2)/sqrt2.
    """
    if victor_map.registry != alice_map.registry:
        raise ValueError("Victor and Alice maps use different registries")
    rows = []
    for x in xi:
        za = -x + np.pi / 2 + arg_d
        zv = x + np.pi / 2 + arg_d
        row = quadrature_row(alice_map, za) + quadrature_row(victor_map, zv)
        rows.append(row.matrix[:, 0, :] / np.sqrt(2))
    return TransferMap(victor_map.registry, np.stack(rows, axis=1))
