"""Length and frequency tuning so the interferometer doubles as two filter cavities.

Integer tunings are signed half-wavelength counts: L_arm = L_arm0 + q*lambda/2
and L_SEC = L_SEC0 + p*lambda/2.  Alice uses SEC branch n_a and realises the
first filter (gamma_1, delta_1); Victor uses n_v and the second filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.optimize import minimize, minimize_scalar

from .plant import (
    EffectiveCavity,
    PlantParams,
    carrier_effective_cavity,
    idler_response,
    idler_rotation,
    plant_angles,
    symmetric_mod,
)

__all__ = [
    "SearchTargets",
    "SearchResult",
    "UnreachableBandwidth",
    "InfeasibleSearch",
    "ETLF_FILTER_TARGETS",
    "solve_detuning",
    "refine_detuning",
    "angle_error",
    "evaluate_candidate",
    "search_lengths",
    "target_filters_from_plant",
]

TWO_PI = 2 * np.pi


class UnreachableBandwidth(ValueError):
    """The requested bandwidth lies outside the range the SEC can realise."""


class InfeasibleSearch(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchTargets:
    """Target filter pairs in rad/s; ``band`` in Hz."""

    gamma_1: float
    delta_1: float
    gamma_2: float
    delta_2: float
    angle_tolerance: float = 0.1
    band: tuple[float, float] = (1.0, 100.0)
    rel_tol: float = 0.01
    n_band: int = 200

    def __post_init__(self):
        if not (self.gamma_1 > 0 and self.gamma_2 > 0):
            raise ValueError("target bandwidths must be positive")
        if not 0 < self.band[0] < self.band[1]:
            raise ValueError("band must be an increasing pair of positive frequencies")
        if self.rel_tol <= 0 or self.angle_tolerance <= 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def from_hz(cls, g1, d1, g2, d2, **kw):
        return cls(TWO_PI * g1, TWO_PI * d1, TWO_PI * g2, TWO_PI * d2, **kw)

    @property
    def omega_band(self):
        lo, hi = self.band
        return TWO_PI * np.logspace(np.log10(lo), np.log10(hi), self.n_band)

    def pair(self, which):
        return (self.gamma_1, self.delta_1) if which == 1 else (self.gamma_2, self.delta_2)


ETLF_FILTER_TARGETS = SearchTargets.from_hz(4.27, 19.54, 1.64, -7.62)


@dataclass(frozen=True)
class SearchResult:
    q: int
    p: int
    n_a: int
    n_v: int
    Delta_a: float
    Delta_v: float
    achieved_a: tuple[float, float]  # (gamma, delta) rad/s
    achieved_v: tuple[float, float]
    target_error: float  # max relative deviation from the targets
    omega: np.ndarray = field(repr=False)
    angle_curve: np.ndarray = field(repr=False)
    feasible: bool = True

    @property
    def max_angle_error(self):
        return float(np.max(np.abs(self.angle_curve)))

    def dL_arm(self, wavelength):
        return self.q * wavelength / 2

    def dL_SEC(self, wavelength):
        return self.p * wavelength / 2


def _arccos_argument(p: PlantParams, gamma_target):
    R = p.R_SEM
    return (p.T_SEM * p.gamma_1arm / gamma_target - 1 - R) / (2 * np.sqrt(R))


def solve_detuning(p: PlantParams, gamma_target, n):
    """Beam detuning (rad/s) giving effective bandwidth ``gamma_target`` in SEC branch ``n``."""
    if gamma_target <= 0:
        raise UnreachableBandwidth("target bandwidth must be positive")
    x = _arccos_argument(p, gamma_target)
    if abs(x) > 1:
        lo = p.gamma_1arm * p.T_SEM / (1 + np.sqrt(p.R_SEM)) ** 2
        hi = p.gamma_1arm * p.T_SEM / (1 - np.sqrt(p.R_SEM)) ** 2
        raise UnreachableBandwidth(
            f"gamma/2pi = {gamma_target / TWO_PI:.6g} Hz outside reachable "
            f"[{lo / TWO_PI:.6g}, {hi / TWO_PI:.6g}] Hz (arccos argument {x:.6g})"
        )
    return C_LIGHT / (2 * p.L_SEC) * (np.arccos(x) + (2 * n - 1) * np.pi + p.phi0)


def _gamma_delta(p: PlantParams, Delta):
    r = idler_response(p, Delta, np.array([1.0]))
    return r.gamma, r.delta


def _rel_err(achieved, target):
    (g, d), (gt, dt) = achieved, target
    return max(abs(g - gt) / gt, abs(d - dt) / max(abs(dt), 1e-12 * gt))


def refine_detuning(p: PlantParams, gamma_target, delta_target, n, width=0.02):
    """Continuously tune Delta near the branch-n solution for the best minimax fit.

    ``width`` is the relative bandwidth range explored.  Returns
    ``(Delta, (gamma, delta), relative_error)``.
    """
    target = (gamma_target, delta_target)
    lo_g, hi_g = gamma_target * (1 - width), gamma_target * (1 + width)
    ends = []
    for g in (lo_g, hi_g):
        try:
            ends.append(solve_detuning(p, g, n))
        except UnreachableBandwidth:
            ends.append(solve_detuning(p, gamma_target, n))
    a, b = sorted(ends)
    trial = np.linspace(a, b, 801)
    errs = np.array([_rel_err(_gamma_delta(p, D), target) for D in trial])
    i = int(np.argmin(errs))
    lo, hi = trial[max(i - 1, 0)], trial[min(i + 1, trial.size - 1)]
    # optimise the offset from the bracket centre: Brent's tolerance scales with |x|
    mid = 0.5 * (lo + hi)
    res = minimize_scalar(
        lambda u: _rel_err(_gamma_delta(p, mid + u), target),
        bounds=(lo - mid, hi - mid),
        method="bounded",
        options={"xatol": 1e-9 * (hi - lo)},
    )
    D = mid + res.x if res.fun <= errs[i] else trial[i]
    gd = _gamma_delta(p, D)
    return float(D), gd, _rel_err(gd, target)


def _circular_center(values):
    """Constant minimising max |wrap_pi(values - c)|: middle of the smallest covering arc."""
    v = np.sort(np.mod(values, np.pi))
    gaps = np.diff(np.concatenate([v, [v[0] + np.pi]]))
    k = int(np.argmax(gaps))
    start = v[(k + 1) % v.size]
    span = np.pi - gaps[k]
    return start + span / 2


def _wrap_pi(x):
    return np.mod(x + np.pi / 2, np.pi) - np.pi / 2


def angle_error(theta_a, theta_v, theta_b, remove_offset=True):
    """In-band compensation error theta_a + theta_v + theta_b modulo pi.

    A constant offset is removable by the readout and squeezer phases, so by
    default the minimax constant is subtracted.
    """
    total = np.asarray(theta_a) + np.asarray(theta_v) + np.asarray(theta_b)
    if remove_offset:
        total = total - _circular_center(total)
    return _wrap_pi(total)


def filter_angle_error(cav: EffectiveCavity, targets: SearchTargets, omega=None):
    """Angle error when two ideal filters with the target (gamma, delta) follow the plant."""
    W = targets.omega_band if omega is None else omega
    th_b = plant_angles(cav, W).theta
    th_a, _ = idler_rotation(targets.gamma_1, targets.delta_1, W)
    th_v, _ = idler_rotation(targets.gamma_2, targets.delta_2, W)
    return angle_error(th_a, th_v, th_b)


def evaluate_candidate(base: PlantParams, q, p, n_a, n_v, targets: SearchTargets) -> SearchResult:
    """Refine both detunings for one integer tuning and score the result."""
    tuned = base.with_tuning(q, p)
    Da, ach_a, ea = refine_detuning(tuned, targets.gamma_1, targets.delta_1, n_a)
    Dv, ach_v, ev = refine_detuning(tuned, targets.gamma_2, targets.delta_2, n_v)
    W = targets.omega_band
    cav = carrier_effective_cavity(tuned)
    th_b = plant_angles(cav, W).theta
    th_a = idler_response(tuned, Da, W).theta
    th_v = idler_response(tuned, Dv, W).theta
    curve = angle_error(th_a, th_v, th_b)
    err = max(ea, ev)
    ok = err <= targets.rel_tol and np.max(np.abs(curve)) <= targets.angle_tolerance
    return SearchResult(
        int(q), int(p), int(n_a), int(n_v), Da, Dv, ach_a, ach_v, err, W, curve, bool(ok)
    )


def _lattice_scores(base, targets, n_a, n_v, p_values, q_range):
    """Closed-form best q and linearised target error for every p.

    At the exact target bandwidth the SEC round-trip phase is fixed by the
    branch, so only the arm-modulo term of delta depends on the lengths, and it
    is linear in q.  The q zeroing each beam's mismatch is found directly; the
    bandwidth tolerance lets the two beams disagree, weighted by how far Delta
    can move along the branch.
    """
    p_values = np.asarray(p_values)
    L_sec = base.L_SEC + p_values * base.wavelength / 2
    beams = []
    for (gt, dt), n in ((targets.pair(1), n_a), (targets.pair(2), n_v)):
        h = 1e-6 * gt
        d_plus = _gamma_delta(base, solve_detuning(base, gt + h, n))[1]
        d_minus = _gamma_delta(base, solve_detuning(base, gt - h, n))[1]
        slope_g = (d_plus - d_minus) / (2 * h)
        x = _arccos_argument(base, gt)
        D = C_LIGHT / (2 * L_sec) * (np.arccos(x) + (2 * n - 1) * np.pi + base.phi0)
        _, d_ref = _gamma_delta(base, solve_detuning(base, gt, n))
        im_part = symmetric_mod(solve_detuning(base, gt, n), base.fsr_arm) - d_ref
        per_q = D * base.wavelength / (2 * base.L_arm)
        # unwrapped delta(q) = D*L_arm(q)/(pi c) arm cycles, minus the SEC term
        cycles0 = D * base.L_arm / (np.pi * C_LIGHT)
        q_root = ((dt + im_part) / base.fsr_arm - cycles0) / (per_q / base.fsr_arm)
        period = base.fsr_arm / per_q
        w = per_q / (abs(slope_g) * gt + abs(dt))
        beams.append((q_root, period, w))

    qlo, qhi = q_range
    qc = 0.5 * (qlo + qhi)
    cands = []
    for q_root, period, w in beams:
        k0 = np.rint((qc - q_root) / period)
        cands.append(np.stack([q_root + (k0 + k) * period for k in (-1, 0, 1)], -1))
    (qa, _, wa), (qv, _, wv) = (cands[0], None, beams[0][2]), (cands[1], None, beams[1][2])
    QA = qa[:, :, None]
    QV = qv[:, None, :]
    wa_, wv_ = wa[:, None, None], wv[:, None, None]
    qopt = np.clip(np.rint((wa_ * QA + wv_ * QV) / (wa_ + wv_)), qlo, qhi)
    s = np.maximum(wa_ * np.abs(qopt - QA), wv_ * np.abs(qopt - QV)).reshape(len(p_values), -1)
    j = np.argmin(s, axis=1)
    idx = np.arange(len(p_values))
    return qopt.reshape(len(p_values), -1)[idx, j].astype(np.int64), s[idx, j]


def search_lengths(
    base: PlantParams,
    targets: SearchTargets,
    n_a_range=(213, 213),
    n_v_range=(642, 642),
    q_range=(-50000, 50000),
    p_range=(-50000, 50000),
    n_verify=20,
) -> SearchResult:
    """Best integer tuning (q, p, n_a, n_v) for the target filter pairs.

    Candidates are ranked by the linearised target error, the best ``n_verify``
    are evaluated exactly, and the feasible one with the smallest in-band angle
    error is returned.  Raises ``InfeasibleSearch`` if none qualifies.
    """
    # reachability does not depend on the branch; fail early with the arccos message
    solve_detuning(base, targets.gamma_1, 1)
    solve_detuning(base, targets.gamma_2, 1)
    p_values = np.arange(p_range[0], p_range[1] + 1)
    ranked = []
    for n_a in range(n_a_range[0], n_a_range[1] + 1):
        for n_v in range(n_v_range[0], n_v_range[1] + 1):
            q_best, score = _lattice_scores(base, targets, n_a, n_v, p_values, q_range)
            order = np.argsort(score, kind="stable")[:n_verify]
            ranked += [(score[k], int(q_best[k]), int(p_values[k]), n_a, n_v) for k in order]
    ranked.sort()
    results = [evaluate_candidate(base, q, p, na, nv, targets) for _, q, p, na, nv in ranked[:n_verify]]
    feasible = [r for r in results if r.feasible]
    if not feasible:
        best = min(results, key=lambda r: r.target_error) if results else None
        detail = "" if best is None else f" (best target error {best.target_error:.3g})"
        raise InfeasibleSearch("no feasible tuning within the configured integer ranges" + detail)
    return min(feasible, key=lambda r: (r.max_angle_error, r.target_error))


def target_filters_from_plant(
    cav: EffectiveCavity, initial: SearchTargets | None = None, band=(1.0, 100.0), n_band=200
) -> SearchTargets:
    """Fit two filter pairs whose rotations cancel the plant rotation in band.

    Minimises the minimax angle error starting from ``initial`` (the ETLF
    targets by default).  Raises ``RuntimeError`` when the fit ends worse than
    its starting point.
    """
    if cav.delta == 0:
        raise ValueError("plant must be detuned")
    init = initial or ETLF_FILTER_TARGETS
    kw = dict(band=band, n_band=n_band, angle_tolerance=init.angle_tolerance, rel_tol=init.rel_tol)
    W = SearchTargets(init.gamma_1, init.delta_1, init.gamma_2, init.delta_2, **kw).omega_band
    th_b = plant_angles(cav, W).theta

    def unpack(x):
        return np.exp(x[0]), x[1] * TWO_PI, np.exp(x[2]), x[3] * TWO_PI

    def cost(x):
        g1, d1, g2, d2 = unpack(x)
        th_a, _ = idler_rotation(g1, d1, W)
        th_v, _ = idler_rotation(g2, d2, W)
        return float(np.max(np.abs(angle_error(th_a, th_v, th_b))))

    x0 = np.array(
        [np.log(init.gamma_1), init.delta_1 / TWO_PI, np.log(init.gamma_2), init.delta_2 / TWO_PI]
    )
    start = cost(x0)
    res = minimize(cost, x0, method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 4000})
    if res.fun > start:
        raise RuntimeError(f"filter fit did not converge (residual {res.fun:.3g} rad)")
    return SearchTargets(*unpack(res.x), **kw)
