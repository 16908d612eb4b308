"""Quantum-noise budgets for the teleportation scheme and the filter-cavity baseline.

Loss topology per beam: injection loss before the interferometer, arm and SEC
loss as extra decay channels of the effective cavity, readout loss just before
detection.  Every loss point is its own vacuum port, so per-source spectra are
disjoint and sum to the total.

Phase noise is added as a second-order Gaussian correction on top of the
nominal spectrum with the filter gains held at their nominal values; the
correction is booked under the anti-symmetric-port (AS) component.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.constants import c as C_LIGHT

from .plant import (
    EffectiveCavity,
    PlantParams,
    carrier_effective_cavity,
    cavity_response,
    h_sql,
    idler_response,
    lossy_idler_response,
    plant_angles,
    idler_rotation,
)
from .readout import bell_project, homodyne_b2
from .search import ETLF_FILTER_TARGETS, SearchTargets, _circular_center, refine_detuning
from .sources import epr_block, squeezed_block
from .tp_core import (
    FrequencyGrid,
    InputCovariance,
    ModeRegistry,
    TransferMap,
    block_contributions,
    compose,
    embed,
    propagate,
    register_port,
    rotation,
)
from .wiener import cross_spectra, teleported_output, wiener_gains

__all__ = [
    "LossBudgetParams",
    "PhaseNoiseParams",
    "NoiseBudget",
    "QTConfig",
    "qt_budget",
    "baseline_fds_budget",
    "no_squeeze_budget",
    "phase_noise_average",
    "monte_carlo_average",
    "strain_referral",
    "COMPONENTS",
]

COMPONENTS = ("AS", "injection", "arm", "SEC", "readout", "FC")
MAX_ANGLE_RMS = 0.3
ETLF_TUNING = (-30000, 14030)
ETLF_BRANCHES = (213, 642)


@dataclass(frozen=True)
class LossBudgetParams:
    injection_loss: float = 0.04
    arm_rtl: float = 45e-6
    sec_loss: float = 1000e-6
    readout_loss: float = 0.03
    fc_rtl: float = 20e-6
    fc_length: float = 1000.0

    def __post_init__(self):
        for name in ("injection_loss", "arm_rtl", "sec_loss", "readout_loss", "fc_rtl"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.fc_length <= 0:
            raise ValueError("fc_length must be positive")

    @classmethod
    def lossless(cls):
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    def apply_to(self, plant: PlantParams) -> PlantParams:
        return replace(plant, A_arm=self.arm_rtl, A_SEC=self.sec_loss)


@dataclass(frozen=True)
class PhaseNoiseParams:
    squeezer_rms: float = 0.01  # rad
    lo_rms: float = 0.01  # rad
    sec_length_rms: float = 1e-12  # m
    fc_length_rms: float = 1e-12  # m

    def __post_init__(self):
        for name in ("squeezer_rms", "lo_rms", "sec_length_rms", "fc_length_rms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def none(cls):
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class NoiseBudget:
    """Strain PSDs (1/Hz) on a frequency grid."""

    freq: np.ndarray  # Hz
    total: np.ndarray
    components: dict = field(default_factory=dict)
    reference: np.ndarray | None = None
    label: str = ""

    @property
    def asd(self):
        return np.sqrt(self.total)

    def improvement_db(self):
        if self.reference is None:
            raise ValueError("budget has no reference curve")
        return 10 * np.log10(self.reference / self.total)

    def component_sum(self):
        return sum(self.components.values())


@dataclass(frozen=True)
class QTConfig:
    """Operating point of the teleportation scheme.

    ``idler_mode`` is ``"cavity"`` (idlers through the interferometer at
    detunings Delta_a, Delta_v) or ``"ideal"`` (Alice's rotation set to exactly
    cancel the plant and Victor's rotation, no idler losses).
    """

    squeeze_db: float = 15.0
    tuning: tuple[int, int] = ETLF_TUNING
    branches: tuple[int, int] = ETLF_BRANCHES
    targets: SearchTargets = ETLF_FILTER_TARGETS
    Delta_a: float | None = None  # rad/s; refined from the targets if None
    Delta_v: float | None = None
    idler_mode: str = "cavity"

    def __post_init__(self):
        if self.idler_mode not in ("cavity", "ideal"):
            raise ValueError("idler_mode must be 'cavity' or 'ideal'")


def _angle_rms_check(name, sigma):
    if sigma >= MAX_ANGLE_RMS:
        raise ValueError(f"{name} = {sigma} rad too large for the second-order average")


def phase_noise_average(spectrum_fn: Callable, rms_params: dict, nominal=None):
    """Second-order Gaussian average around the nominal spectrum.

    ``rms_params`` maps a jitter name to ``(sigma, kind)``.  For ``kind ==
    "angle"`` the average is (1 - s^2) S(0) + s^2 S(pi/2); for ``"parameter"``
    it is the symmetric two-point rule [S(+s) + S(-s)]/2.  ``spectrum_fn`` takes
    ``{name: offset}`` and returns an array.  Returns ``(averaged, corrections)``
    where independent corrections add to the nominal.
    """
    s0 = spectrum_fn({}) if nominal is None else nominal
    corrections = {}
    for name, (sigma, kind) in rms_params.items():
        if sigma == 0:
            corrections[name] = np.zeros_like(s0)
            continue
        if kind == "angle":
            _angle_rms_check(name, sigma)
            avg = (1 - sigma**2) * s0 + sigma**2 * spectrum_fn({name: np.pi / 2})
        elif kind == "parameter":
            avg = 0.5 * (spectrum_fn({name: sigma}) + spectrum_fn({name: -sigma}))
        else:
            raise ValueError(f"unknown jitter kind {kind!r}")
        corrections[name] = avg - s0
    return s0 + sum(corrections.values(), np.zeros_like(s0)), corrections


def monte_carlo_average(spectrum_fn: Callable, rms_params: dict, n_samples=1000, seed=0):
    """Monte-Carlo cross-check: average over jointly drawn Gaussian offsets."""
    rng = np.random.default_rng(seed)
    names = list(rms_params)
    sig = np.array([rms_params[n][0] for n in names])
    draws = rng.standard_normal((n_samples, len(names))) * sig
    acc = None
    for row in draws:
        s = spectrum_fn(dict(zip(names, row)))
        acc = s if acc is None else acc + s
    return acc / n_samples


def strain_referral(output_psd, signal_transfer, plant: PlantParams, omega):
    """Strain PSD = h_SQL^2 * S_out / |signal transfer per unit h/h_SQL|^2."""
    sig2 = np.abs(np.asarray(signal_transfer)) ** 2
    if np.any(sig2 == 0):
        raise ZeroDivisionError("signal transfer vanishes on the grid")
    return h_sql(plant, omega) ** 2 * np.asarray(output_psd) / sig2


# ---------------------------------------------------------------------------
# beam assembly


class _Beam:
    """A quadrature pair as a TransferMap plus its signal content (F, 2)."""

    def __init__(self, tmap: TransferMap, signal=None):
        self.map = tmap
        self.signal = np.zeros((tmap.n_freq, 2), complex) if signal is None else signal

    def apply(self, outer):
        a = embed(outer, self.map.n_freq)
        return _Beam(compose(a, self.map), np.einsum("fij,fj->fi", a, self.signal))

    def lose(self, eta_loss, port_map: TransferMap):
        t = np.sqrt(1 - eta_loss)
        return _Beam(self.map.scale(t) + port_map.scale(np.sqrt(eta_loss)), t * self.signal)

    def add(self, tmap: TransferMap):
        return _Beam(self.map + tmap, self.signal)


def _through_cavity(beam: _Beam, resp, reg, n_freq, tag):
    out = beam.apply(resp.main)
    for name, mat in resp.loss.items():
        out = out.add(compose(mat, TransferMap.port(reg, f"{name}_{tag}", n_freq)))
    if resp.signal is not None:
        out = _Beam(out.map, out.signal + resp.signal)
    return out


def _band_offset(total_angle_fn, targets: SearchTargets):
    """Constant part of the in-band compensation angle (set by the squeeze angle)."""
    return _circular_center(total_angle_fn(targets.omega_band))


def _component_of(labels):
    name = labels[0]
    for prefix, comp in (("inj_", "injection"), ("arm_", "arm"), ("sec_", "SEC"), ("ro_", "readout"), ("fc", "FC")):
        if name.startswith(prefix):
            return comp
    return "AS"


def _components(row: TransferMap, s_in: InputCovariance):
    comps = {}
    for labels, psd in block_contributions(row, s_in).items():
        key = _component_of(labels)
        comps[key] = comps.get(key, 0.0) + psd
    return comps


@dataclass
class _QTPipeline:
    plant: PlantParams
    cfg: QTConfig
    losses: LossBudgetParams
    omega: np.ndarray
    Delta_a: float = 0.0
    Delta_v: float = 0.0
    victor_angle: float = 0.0
    registry: ModeRegistry = field(init=False)

    def __post_init__(self):
        self.plant = self.losses.apply_to(self.plant)
        r = self.cfg.squeeze_db * np.log(10) / 20
        self.r = abs(r)
        tuned = self.plant
        if self.cfg.idler_mode == "cavity":
            t = self.cfg.targets
            na, nv = self.cfg.branches
            self.Delta_a = self.cfg.Delta_a or refine_detuning(tuned, t.gamma_1, t.delta_1, na)[0]
            self.Delta_v = self.cfg.Delta_v or refine_detuning(tuned, t.gamma_2, t.delta_2, nv)[0]

            def total(W):
                th_b = plant_angles(carrier_effective_cavity(tuned), W).theta
                th_a = idler_response(tuned, self.Delta_a, W).theta
                th_v = idler_response(tuned, self.Delta_v, W).theta
                return th_a + th_v + th_b

            self.victor_angle = -_band_offset(total, self.cfg.targets)
        reg = register_port(ModeRegistry(), "victor", squeezed_block(self.r))
        reg = register_port(reg, ("alice", "bob"), epr_block(self.r))
        for prefix in ("inj", "arm", "sec", "ro"):
            for beam in ("victor", "alice", "bob"):
                reg = register_port(reg, f"{prefix}_{beam}")
        self.registry = reg
        self.s_in = InputCovariance.from_registry(reg, FrequencyGrid(self.omega))

    def channels(self, jitter=None):
        """Bob's row, Bell rows and Bob's row signal for a given set of offsets."""
        j = jitter or {}
        reg, W, n = self.registry, self.omega, self.omega.size
        L = self.losses
        sqz = j.get("squeezer", 0.0)
        lo = j.get("lo", 0.0)
        dphi = j.get("sec", 0.0)

        def injected(label, extra=0.0):
            beam = _Beam(TransferMap.port(reg, label, n)).apply(rotation(sqz + extra))
            return beam.lose(L.injection_loss, TransferMap.port(reg, f"inj_{label}", n))

        bob_cav = carrier_effective_cavity(self.plant, with_losses=True, dphi=dphi)
        bob = _through_cavity(injected("bob"), cavity_response(bob_cav, W), reg, n, "bob")
        victor = injected("victor", self.victor_angle)
        alice = injected("alice")
        if self.cfg.idler_mode == "cavity":
            for name, D in (("victor", self.Delta_v), ("alice", self.Delta_a)):
                _, icav = lossy_idler_response(self.plant, D, W, dphi=dphi)
                resp = cavity_response(icav, W, idler=True)
                beam = victor if name == "victor" else alice
                beam = _through_cavity(beam, resp, reg, n, name)
                if name == "victor":
                    victor = beam
                else:
                    alice = beam
        else:
            th_b = plant_angles(bob_cav.lossless(), W).theta
            alice = alice.apply(rotation(-th_b))
        bob = bob.lose(L.readout_loss, TransferMap.port(reg, "ro_bob", n))
        victor = victor.lose(L.readout_loss, TransferMap.port(reg, "ro_victor", n))
        alice = alice.lose(L.readout_loss, TransferMap.port(reg, "ro_alice", n))
        b2 = homodyne_b2(bob.map, lo)
        b2_signal = np.sin(lo) * bob.signal[:, 0] + np.cos(lo) * bob.signal[:, 1]
        alpha = bell_project(victor.map, alice.map, arg_d=np.pi / 2 + lo)
        return b2, alpha, b2_signal


def _resolve_grid(grid):
    if isinstance(grid, FrequencyGrid):
        return grid.values
    return FrequencyGrid(grid).values


def _phase_jitters(plant: PlantParams, pn: PhaseNoiseParams):
    sec_phase = 2 * np.pi * pn.sec_length_rms / plant.wavelength
    _angle_rms_check("squeezer_rms", pn.squeezer_rms)
    _angle_rms_check("lo_rms", pn.lo_rms)
    _angle_rms_check("sec phase rms", sec_phase)
    return {
        "squeezer": (pn.squeezer_rms, "angle"),
        "lo": (pn.lo_rms, "angle"),
        "sec": (sec_phase, "parameter"),
    }


def _spectrum(row: TransferMap, s_in: InputCovariance):
    return propagate(row, s_in).diag(0)


def qt_budget(
    plant: PlantParams | None = None,
    config: QTConfig | None = None,
    losses: LossBudgetParams | None = None,
    phase_noise: PhaseNoiseParams | None = None,
    grid=None,
    monte_carlo: int = 0,
    seed: int = 0,
) -> NoiseBudget:
    """Noise budget of the teleportation scheme, referred to strain.

    ``plant`` defaults to the ETLF parameters at the tuning in ``config``.
    With ``monte_carlo > 0`` the phase-noise average is drawn from that many
    Gaussian samples instead of the second-order rule.
    """
    cfg = config or QTConfig()
    base = plant or PlantParams()
    tuned = base.with_tuning(*cfg.tuning)
    losses = losses or LossBudgetParams()
    pn = phase_noise or PhaseNoiseParams()
    W = _resolve_grid(grid if grid is not None else FrequencyGrid.logspace_hz())
    pipe = _QTPipeline(tuned, cfg, losses, W)
    b2, alpha, sig = pipe.channels()
    gains = wiener_gains(cross_spectra(b2, alpha, pipe.s_in))
    row = teleported_output(b2, alpha, gains)
    comps = _components(row, pipe.s_in)
    nominal = _spectrum(row, pipe.s_in)

    def jittered(j):
        b, a, _ = pipe.channels(j)
        return _spectrum(teleported_output(b, a, gains), pipe.s_in)

    jit = _phase_jitters(tuned, pn)
    if monte_carlo:
        total_out = monte_carlo_average(jittered, jit, monte_carlo, seed)
    else:
        total_out, _ = phase_noise_average(jittered, jit, nominal)
    comps["AS"] = comps.get("AS", 0.0) + (total_out - nominal)
    ref = no_squeeze_output(pipe.plant, losses, W)
    budget = _refer(pipe.plant, W, total_out, comps, sig, ref, "qt")
    return budget


def no_squeeze_output(plant: PlantParams, losses: LossBudgetParams, omega):
    """(output PSD, signal) for vacuum into the same lossy interferometer and readout."""
    plant = losses.apply_to(plant)
    reg = register_port(ModeRegistry(), "as_vacuum")
    for name in ("arm_bob", "sec_bob", "ro_bob"):
        reg = register_port(reg, name)
    n = omega.size
    cav = carrier_effective_cavity(plant, with_losses=True)
    bob = _through_cavity(_Beam(TransferMap.port(reg, "as_vacuum", n)), cavity_response(cav, omega), reg, n, "bob")
    bob = bob.lose(losses.readout_loss, TransferMap.port(reg, "ro_bob", n))
    s_in = InputCovariance.from_registry(reg, FrequencyGrid(omega))
    row = homodyne_b2(bob.map)
    return _spectrum(row, s_in), bob.signal[:, 1], _components(row, s_in)


def no_squeeze_budget(plant=None, losses=None, grid=None, tuning=ETLF_TUNING) -> NoiseBudget:
    plant = (plant or PlantParams()).with_tuning(*tuning)
    losses = losses or LossBudgetParams()
    W = _resolve_grid(grid if grid is not None else FrequencyGrid.logspace_hz())
    out, sig, comps = no_squeeze_output(plant, losses, W)
    h2 = strain_referral(1.0, sig, plant, W)
    comps = {k: v * h2 for k, v in comps.items()}
    return NoiseBudget(W / (2 * np.pi), out * h2, comps, out * h2, "no-squeeze")


def _refer(plant, W, total_out, comps, sig, ref, label):
    h2 = strain_referral(1.0, sig, plant, W)
    ref_out, ref_sig, _ = ref
    ref_h = strain_referral(ref_out, ref_sig, plant, W)
    comps = {k: np.asarray(v) * h2 for k, v in comps.items()}
    return NoiseBudget(W / (2 * np.pi), total_out * h2, comps, ref_h, label)


def baseline_fds_budget(
    plant: PlantParams | None = None,
    losses: LossBudgetParams | None = None,
    phase_noise: PhaseNoiseParams | None = None,
    squeeze_db: float = 10.0,
    grid=None,
    targets: SearchTargets = ETLF_FILTER_TARGETS,
    tuning=ETLF_TUNING,
    monte_carlo: int = 0,
    seed: int = 0,
    filters: str = "cavity",
) -> NoiseBudget:
    """Squeezed vacuum through two external filter cavities, then the interferometer.

    ``filters="ideal"`` replaces the cavities by a lossless rotation that
    cancels the plant angle exactly at every frequency.
    """
    if filters not in ("cavity", "ideal"):
        raise ValueError("filters must be 'cavity' or 'ideal'")
    base = (plant or PlantParams()).with_tuning(*tuning)
    losses = losses or LossBudgetParams()
    pn = phase_noise or PhaseNoiseParams()
    tuned = losses.apply_to(base)
    W = _resolve_grid(grid if grid is not None else FrequencyGrid.logspace_hz())
    n = W.size
    r = abs(squeeze_db) * np.log(10) / 20
    fc_loss_rate = C_LIGHT * losses.fc_rtl / (4 * losses.fc_length)
    fcs = [
        EffectiveCavity(targets.gamma_1, targets.delta_1, 0.0, fc_loss_rate),
        EffectiveCavity(targets.gamma_2, targets.delta_2, 0.0, fc_loss_rate),
    ]

    def total(Wb):
        th = plant_angles(carrier_effective_cavity(tuned), Wb).theta
        for fc in fcs:
            th = th + idler_rotation(fc.gamma, fc.delta, Wb)[0]
        return th

    sq_angle = 0.0 if filters == "ideal" else -_band_offset(total, targets)
    ideal_rotation = rotation(-plant_angles(carrier_effective_cavity(tuned), W).theta)
    reg = register_port(ModeRegistry(), "sqz", squeezed_block(r))
    for name in ("inj_sqz", "fc1", "fc2", "arm_bob", "sec_bob", "ro_bob"):
        reg = register_port(reg, name)
    s_in = InputCovariance.from_registry(reg, FrequencyGrid(W))
    fc_detune_rms = tuned.omega0 * pn.fc_length_rms / losses.fc_length

    def channel(j):
        sqz, lo = j.get("squeezer", 0.0), j.get("lo", 0.0)
        beam = _Beam(TransferMap.port(reg, "sqz", n)).apply(rotation(sq_angle + sqz))
        beam = beam.lose(losses.injection_loss, TransferMap.port(reg, "inj_sqz", n))
        if filters == "ideal":
            beam = beam.apply(ideal_rotation)
        for k, fc in enumerate(fcs if filters == "cavity" else (), start=1):
            fc = replace(fc, delta=fc.delta + j.get(f"fc{k}", 0.0))
            resp = cavity_response(fc, W, idler=True)
            beam = beam.apply(resp.main)
            if "arm" in resp.loss:
                beam = beam.add(compose(resp.loss["arm"], TransferMap.port(reg, f"fc{k}", n)))
        cav = carrier_effective_cavity(tuned, with_losses=True, dphi=j.get("sec", 0.0))
        beam = _through_cavity(beam, cavity_response(cav, W), reg, n, "bob")
        beam = beam.lose(losses.readout_loss, TransferMap.port(reg, "ro_bob", n))
        sig = np.sin(lo) * beam.signal[:, 0] + np.cos(lo) * beam.signal[:, 1]
        return homodyne_b2(beam.map, lo), sig

    row, sig = channel({})
    nominal = _spectrum(row, s_in)
    comps = _components(row, s_in)
    jit = _phase_jitters(tuned, pn)
    jit["fc1"] = (fc_detune_rms, "parameter")
    jit["fc2"] = (fc_detune_rms, "parameter")

    def jittered(j):
        return _spectrum(channel(j)[0], s_in)

    if monte_carlo:
        total_out = monte_carlo_average(jittered, jit, monte_carlo, seed)
    else:
        total_out, _ = phase_noise_average(jittered, jit, nominal)
    comps["AS"] = comps.get("AS", 0.0) + (total_out - nominal)
    ref = no_squeeze_output(base, losses, W)
    return _refer(tuned, W, total_out, comps, sig, ref, f"baseline {squeeze_db:g} dB")
