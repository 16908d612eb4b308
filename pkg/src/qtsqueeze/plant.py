"""Scaling-law model of the detuned signal-recycled interferometer.

Bob (at the carrier frequency) sees an optomechanical cavity with effective
half-bandwidth gamma, detuning delta and normalised power Theta.  Victor and
Alice (detuned by Delta_v, Delta_a) see the same coupled cavity as an empty
filter cavity whose (gamma, delta) depend on their SEC phase and on where
Delta falls relative to the arm resonances.

Two routes to the lossless plant are provided and checked against each other
in the tests: the closed-form matrix ``ponderomotive_matrix`` and the
single-mode cavity model ``cavity_response``, which also carries losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.constants import hbar

__all__ = [
    "PlantParams",
    "EffectiveCavity",
    "PlantResponse",
    "CavityResponse",
    "IdlerResponse",
    "carrier_effective_cavity",
    "ponderomotive_matrix",
    "plant_angles",
    "cavity_response",
    "idler_response",
    "lossy_idler_response",
    "sec_scaling",
    "sec_denominator",
    "symmetric_mod",
    "h_sql",
]

LAMBDA_ETLF = 1550e-9
# footnote lengths of the ETLF parameter table, in carrier wavelengths
L_ARM_WAVES = 6451612903
L_SEC_WAVES = 64516129


@dataclass(frozen=True)
class PlantParams:
    wavelength: float = LAMBDA_ETLF
    T_ITM: float = 7000e-6
    T_SEM: float = 0.20
    mirror_mass: float = 211.0
    reduced_mass: float | None = None  # defaults to mirror_mass
    bs_power: float = 63.0
    arm_power: float | None = None  # defaults to lossless build-up of bs_power/2
    phi0: float = 0.75
    L_arm: float = L_ARM_WAVES * LAMBDA_ETLF
    L_SEC: float = L_SEC_WAVES * LAMBDA_ETLF
    A_arm: float = 45e-6
    A_SEC: float = 1000e-6

    def __post_init__(self):
        for name in ("T_ITM", "T_SEM", "A_arm", "A_SEC"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("wavelength", "mirror_mass", "bs_power", "L_arm", "L_SEC"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("reduced_mass", "arm_power"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def M(self):
        return self.mirror_mass if self.reduced_mass is None else self.reduced_mass

    @property
    def P_c(self):
        if self.arm_power is not None:
            return self.arm_power
        return 0.5 * self.bs_power * 4.0 / self.T_ITM

    @property
    def omega0(self):
        return 2 * np.pi * C_LIGHT / self.wavelength

    @property
    def R_SEM(self):
        return 1.0 - self.T_SEM

    @property
    def gamma_1arm(self):
        return C_LIGHT * self.T_ITM / (4 * self.L_arm)

    @property
    def fsr_arm(self):
        """Arm free spectral range, rad/s."""
        return np.pi * C_LIGHT / self.L_arm

    @property
    def fsr_sec(self):
        """SEC free spectral range, rad/s."""
        return np.pi * C_LIGHT / self.L_SEC

    @property
    def Theta(self):
        return 8 * self.omega0 * self.P_c / (self.M * C_LIGHT * self.L_arm)

    def with_tuning(self, q=0, p=0):
        """Lengths shifted by integer half-wavelengths: L_arm + q*lambda/2, L_SEC + p*lambda/2."""
        return replace(
            self,
            L_arm=self.L_arm + q * self.wavelength / 2,
            L_SEC=self.L_SEC + p * self.wavelength / 2,
        )


@dataclass(frozen=True)
class EffectiveCavity:
    """Single-cavity equivalent of the coupled arm/SEC system.

    ``gamma`` is the coupling (lossless) half-bandwidth; the loss rates add to
    it in the lossy model.  All rates in rad/s.
    """

    gamma: float
    delta: float
    Theta: float = 0.0
    gamma_arm_loss: float = 0.0
    gamma_sec_loss: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("effective half-bandwidth must be positive")
        if self.gamma_arm_loss < 0 or self.gamma_sec_loss < 0:
            raise ValueError("loss rates must be non-negative")

    @property
    def gamma_total(self):
        return self.gamma + self.gamma_arm_loss + self.gamma_sec_loss

    def lossless(self):
        return replace(self, gamma_arm_loss=0.0, gamma_sec_loss=0.0)


def sec_scaling(R_SEM, phi):
    """(1 - sqrt(R) e^{2i phi}) / (1 + sqrt(R) e^{2i phi})."""
    z = np.sqrt(R_SEM) * np.exp(2j * np.asarray(phi))
    return (1 - z) / (1 + z)


def sec_denominator(R_SEM, phi):
    return 1 + 2 * np.sqrt(R_SEM) * np.cos(2 * np.asarray(phi)) + R_SEM


def symmetric_mod(x, period):
    """x modulo period, mapped to [-period/2, period/2)."""
    return (np.asarray(x) + period / 2) % period - period / 2


def _loss_rates(p: PlantParams, phi):
    denom = sec_denominator(p.R_SEM, phi)
    g_arm = C_LIGHT * p.A_arm / (4 * p.L_arm)
    g_sec = C_LIGHT * p.T_ITM * p.A_SEC / (4 * p.L_arm * denom)
    return g_arm, g_sec


def carrier_phase(p: PlantParams, dphi=0.0):
    """One-way SEC phase of the carrier; ``dphi`` is an SEC length jitter in rad."""
    return (np.pi - p.phi0) / 2 + dphi


def carrier_effective_cavity(p: PlantParams, with_losses=False, dphi=0.0) -> EffectiveCavity:
    phi = carrier_phase(p, dphi)
    f = sec_scaling(p.R_SEM, phi)
    gamma = p.gamma_1arm * f.real
    delta = -p.gamma_1arm * f.imag
    g_arm, g_sec = _loss_rates(p, phi) if with_losses else (0.0, 0.0)
    return EffectiveCavity(float(gamma), float(delta), p.Theta, float(g_arm), float(g_sec))


def _mtilde_and_c(cav: EffectiveCavity, omega):
    W = np.asarray(omega, dtype=float)
    g, d, th = cav.gamma, cav.delta, cav.Theta
    mt = ((g - 1j * W) ** 2 + d**2) * W**2 - d * th
    c11 = W**2 * (W**2 - d**2 + g**2) + d * th
    c12 = 2 * d * g * W**2 - 2 * g * th
    c21 = -2 * d * g * W**2
    return mt, c11, c12, c21, c11


def ponderomotive_matrix(cav: EffectiveCavity, omega):
    """Closed-form lossless plant (1/M~) C and M~ at each frequency.

    Returns ``(T, mtilde)`` with T of shape (F, 2, 2).
    """
    W = np.atleast_1d(np.asarray(omega, dtype=float))
    mt, c11, c12, c21, c22 = _mtilde_and_c(cav, W)
    scale = np.maximum(W**4, 1.0)
    bad = np.abs(mt) <= 1e-13 * scale
    if np.any(bad):
        f0 = W[bad][0] / (2 * np.pi)
        raise ValueError(f"plant resonance M~ = 0 at {f0:.6g} Hz")
    T = np.stack([np.stack([c11, c12], -1), np.stack([c21, c22], -1)], -2) / mt[:, None, None]
    return T, mt


@dataclass(frozen=True)
class PlantResponse:
    Gamma: np.ndarray
    theta: np.ndarray
    beta: np.ndarray


def plant_angles(cav: EffectiveCavity, omega) -> PlantResponse:
    """Gain, rotation and phase of Bob's phase-quadrature output.

    Row 2 of the plant equals Gamma e^{i beta} (cos theta, -sin theta).
    """
    W = np.atleast_1d(np.asarray(omega, dtype=float))
    _, mt = ponderomotive_matrix(cav, W)
    _, _, _, c21, c22 = _mtilde_and_c(cav, W)
    norm = np.hypot(c21, c22)
    if np.any(norm == 0):
        raise ValueError("degenerate plant: C21 = C22 = 0")
    return PlantResponse(norm / np.abs(mt), np.arctan2(-c22, c21), np.angle(np.conj(mt)))


_J = np.array([[0.0, -1.0], [1.0, 0.0]])
_E21 = np.array([[0.0, 0.0], [1.0, 0.0]])
_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class CavityResponse:
    """Transfer of one beam through the (possibly lossy) effective cavity.

    ``main`` acts on the beam itself; ``loss[name]`` on the vacuum entering at
    that loss point; ``signal`` is the output per unit h/h_SQL.
    """

    main: np.ndarray  # (F, 2, 2)
    loss: dict = field(default_factory=dict)  # name -> (F, 2, 2)
    signal: np.ndarray | None = None  # (F, 2)


def cavity_response(cav: EffectiveCavity, omega, idler=False) -> CavityResponse:
    """Single-mode optomechanical cavity in the quadrature picture.

    Intracavity equation (amplitude/phase labelling)
    ``[(gamma_tot - i W) I - delta J + Theta/W^2 E21] e = sum_k sqrt(2 gamma_k) in_k``,
    output ``sqrt(2 gamma) e - b``.  The result is returned in the labelling of
    ``ponderomotive_matrix`` (quadratures 1 and 2 swapped), which it matches
    exactly when the loss rates vanish.

    For idler beams the cavity acts at detuning -delta with Theta = 0.
    """
    W = np.atleast_1d(np.asarray(omega, dtype=float))
    n = W.size
    delta = -cav.delta if idler else cav.delta
    theta = 0.0 if idler else cav.Theta
    eye = np.eye(2)
    X = (
        (cav.gamma_total - 1j * W)[:, None, None] * eye
        - delta * _J
        + (theta / W**2)[:, None, None] * _E21
    )
    Xi = np.linalg.inv(X)
    main = 2 * cav.gamma * Xi - eye
    loss = {}
    for name, rate in (("arm", cav.gamma_arm_loss), ("sec", cav.gamma_sec_loss)):
        if rate > 0:
            loss[name] = _SWAP @ (2 * np.sqrt(cav.gamma * rate) * Xi) @ _SWAP
    signal = None
    if not idler and theta > 0:
        drive = np.zeros((n, 2), complex)
        drive[:, 1] = np.sqrt(2 * theta) / W
        signal = (np.sqrt(2 * cav.gamma) * (Xi @ drive[:, :, None]))[:, :, 0] @ _SWAP
    return CavityResponse(_SWAP @ main @ _SWAP, loss, signal)


@dataclass(frozen=True)
class IdlerResponse:
    gamma: float
    delta: float
    theta: np.ndarray
    beta: np.ndarray
    phi: float
    A_eff: float = 0.0
    gamma_loss: float = 0.0

    @property
    def cavity(self):
        return EffectiveCavity(self.gamma, self.delta)


def _idler_cavity(p: PlantParams, Delta, dphi=0.0):
    phi = carrier_phase(p, dphi) + Delta * p.L_SEC / C_LIGHT
    f = sec_scaling(p.R_SEM, phi)
    gamma = p.gamma_1arm * f.real
    delta = symmetric_mod(Delta, p.fsr_arm) - p.gamma_1arm * f.imag
    return float(phi), float(gamma), float(delta)


def idler_rotation(gamma, delta, omega):
    """Rotation angle and phase of an empty filter cavity seen by an idler beam."""
    cav = EffectiveCavity(gamma, -delta)
    W = np.atleast_1d(np.asarray(omega, dtype=float))
    mt, c11, c12, _, _ = _mtilde_and_c(cav, W)
    return np.arctan2(-c12, c11), np.angle(np.conj(mt))


def idler_response(p: PlantParams, Delta, omega, dphi=0.0) -> IdlerResponse:
    """Effective (gamma, delta) and quadrature rotation for a beam detuned by Delta (rad/s)."""
    if Delta <= 0:
        raise ValueError("idler detuning must be positive")
    phi, gamma, delta = _idler_cavity(p, Delta, dphi)
    theta, beta = idler_rotation(gamma, delta, omega)
    return IdlerResponse(gamma, delta, theta, beta, phi)


def lossy_idler_response(p: PlantParams, Delta, omega, dphi=0.0):
    """Idler response with arm and SEC losses.

    Returns ``(IdlerResponse, EffectiveCavity)``; the response carries the
    loss-broadened bandwidth and the effective round-trip loss of the
    equivalent filter cavity of length L_arm.
    """
    base = idler_response(p, Delta, omega, dphi)
    g_arm, g_sec = _loss_rates(p, base.phi)
    A_eff = p.T_ITM * p.A_SEC / sec_denominator(p.R_SEM, base.phi) + p.A_arm
    cav = EffectiveCavity(base.gamma, base.delta, 0.0, float(g_arm), float(g_sec))
    resp = replace(base, A_eff=float(A_eff), gamma_loss=float(cav.gamma_total))
    return resp, cav


def h_sql(p: PlantParams, omega):
    """Free-mass standard quantum limit in strain, 1/sqrt(Hz)."""
    W = np.asarray(omega, dtype=float)
    return np.sqrt(8 * hbar / (p.M * W**2 * p.L_arm**2))
