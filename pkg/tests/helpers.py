"""Small builders shared by the pipeline tests."""

import numpy as np

from qtsqueeze.plant import ponderomotive_matrix, plant_angles
from qtsqueeze.readout import bell_project, homodyne_b2
from qtsqueeze.sources import epr_block, squeezed_block
from qtsqueeze.tp_core import (
    FrequencyGrid,
    InputCovariance,
    ModeRegistry,
    TransferMap,
    compose,
    register_port,
    rotation,
)
from qtsqueeze.wiener import cross_spectra


def ideal_channels(cav, omega, r, theta_v, beta_v=0.0, beta_a=0.0):
    """Lossless teleportation channels with Alice rotated by exactly -theta_b - theta_v."""
    n = omega.size
    reg = register_port(ModeRegistry(), "victor", squeezed_block(r))
    reg = register_port(reg, ("alice", "bob"), epr_block(r))
    s_in = InputCovariance.from_registry(reg, FrequencyGrid(omega))
    T, _ = ponderomotive_matrix(cav, omega)
    pa = plant_angles(cav, omega)
    bob = compose(T, TransferMap.port(reg, "bob", n))
    phase_v = np.exp(1j * np.broadcast_to(beta_v, (n,)))[:, None, None]
    phase_a = np.exp(1j * np.broadcast_to(beta_a, (n,)))[:, None, None]
    victor = compose(phase_v * rotation(np.broadcast_to(theta_v, (n,))), TransferMap.port(reg, "victor", n))
    alice = compose(phase_a * rotation(-pa.theta - theta_v), TransferMap.port(reg, "alice", n))
    b2 = homodyne_b2(bob)
    alpha = bell_project(victor, alice)
    return cross_spectra(b2, alpha, s_in), b2, alpha, s_in, pa
