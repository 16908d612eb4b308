"""Covariance blocks of the injected beams: EPR pair (Alice, Bob) and squeezed Victor.

Sign convention for the EPR pair: S_{a1 b1} = +sinh 2r, S_{a2 b2} = -sinh 2r, so
(a1 - b1)/sqrt2 and (a2 + b2)/sqrt2 are the squeezed combinations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tp_core import rotation

__all__ = [
    "SqueezeParams",
    "db_to_r",
    "r_to_db",
    "epr_block",
    "squeezed_block",
    "conditional_variance",
]


def db_to_r(db):
    """Squeeze factor from a squeezing level in dB (sign ignored)."""
    return abs(db) * np.log(10.0) / 20.0


def r_to_db(r):
    return 20.0 * r / np.log(10.0)


@dataclass(frozen=True)
class SqueezeParams:
    r: float
    delta_a: float = 0.0  # Alice detuning, rad/s
    delta_v: float = 0.0  # Victor detuning, rad/s

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeeze factor must be non-negative")

    @classmethod
    def from_db(cls, squeeze_db, **kw):
        return cls(r=db_to_r(squeeze_db), **kw)

    @property
    def squeeze_db(self):
        return r_to_db(self.r)


def _check_r(r):
    if r < 0:
        raise ValueError(f"squeeze factor must be non-negative, got {r}")


def epr_block(r):
    """Joint 4x4 covariance of (a1, a2, b1, b2) for a two-mode squeezed pair."""
    _check_r(r)
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    c = np.diag([sh, -sh])
    return np.block([[ch * np.eye(2), c], [c, ch * np.eye(2)]])


def squeezed_block(r, angle=0.0):
    """Victor's 2x2 covariance, diag(e^-2r, e^2r), optionally rotated by ``angle``."""
    _check_r(r)
    s = np.diag([np.exp(-2 * r), np.exp(2 * r)])
    if angle:
        rot = rotation(angle)
        s = rot @ s @ rot.T
    return s


def conditional_variance(joint, theta):
    """Variances of Bob's b_theta and b_{theta+pi/2} given a measurement of a_{-theta}.

    ``joint`` is the (a1, a2, b1, b2) covariance.  Uses the Schur complement
    Var(b) - Cov(b, a)^2 / Var(a).
    """
    joint = np.asarray(joint, dtype=float)
    if joint.shape != (4, 4):
        raise ValueError("joint covariance must be 4x4")
    c, s = np.cos(theta), np.sin(theta)
    a_meas = np.array([c, -s, 0.0, 0.0])
    b_sq = np.array([0.0, 0.0, c, s])
    b_anti = np.array([0.0, 0.0, -s, c])
    var_a = a_meas @ joint @ a_meas
    if var_a <= 1e-15 * np.abs(joint).max():
        raise ValueError("conditioning quadrature has vanishing variance")
    out = []
    for b in (b_sq, b_anti):
        cov = b @ joint @ a_meas
        out.append(b @ joint @ b - cov**2 / var_a)
    return tuple(out)
