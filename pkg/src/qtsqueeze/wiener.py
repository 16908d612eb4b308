"""Frequency-domain Wiener subtraction of the Bell channels from Bob's readout.

Index convention: ``S_aa[f, k, j] = E[alpha_k alpha_j^*]`` and
``S_Ba[f, k] = E[B alpha_k^*]``.  With the subtracted channel
``B - sum_k g_k alpha_k`` the optimal gains solve ``S_aa^T g = S_Ba``, which
for two channels is the familiar determinant formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tp_core import InputCovariance, TransferMap, propagate

__all__ = [
    "CrossSpectra",
    "FilterGains",
    "cross_spectra",
    "wiener_gains",
    "two_channel_gains",
    "residual_spectrum",
    "optimal_residual",
    "teleported_output",
]

RCOND = 1e-12


@dataclass(frozen=True)
class CrossSpectra:
    S_aa: np.ndarray  # (F, N, N)
    S_Ba: np.ndarray  # (F, N)
    S_BB: np.ndarray  # (F,)

    def __post_init__(self):
        S_aa = np.asarray(self.S_aa, dtype=complex)
        S_Ba = np.asarray(self.S_Ba, dtype=complex)
        S_BB = np.asarray(self.S_BB, dtype=float)
        if S_aa.ndim != 3 or S_aa.shape[1] != S_aa.shape[2]:
            raise ValueError("S_aa must have shape (F, N, N)")
        if S_Ba.shape != S_aa.shape[:2] or S_BB.shape != S_aa.shape[:1]:
            raise ValueError("inconsistent cross-spectra shapes")
        scale = max(1.0, float(np.abs(S_aa).max(initial=0.0)))
        if not np.allclose(S_aa, np.conj(np.swapaxes(S_aa, 1, 2)), atol=1e-10 * scale):
            raise ValueError("S_aa must be Hermitian")
        if np.any(S_BB < -1e-12 * max(1.0, float(np.abs(S_BB).max(initial=0.0)))):
            raise ValueError("S_BB must be non-negative")
        object.__setattr__(self, "S_aa", S_aa)
        object.__setattr__(self, "S_Ba", S_Ba)
        object.__setattr__(self, "S_BB", S_BB)

    @property
    def n_channels(self):
        return self.S_aa.shape[1]


@dataclass(frozen=True)
class FilterGains:
    g: np.ndarray  # (F, N)
    singular: np.ndarray  # (F,) bool, pseudo-inverse used


def cross_spectra(b_row: TransferMap, alpha_rows: TransferMap, s_in: InputCovariance) -> CrossSpectra:
    """Cross-spectra of one target row and N witness rows under the input covariance."""
    if b_row.n_out != 1:
        raise ValueError("target must be a single row")
    stacked = TransferMap(b_row.registry, np.concatenate([b_row.matrix, alpha_rows.matrix], axis=1))
    s = propagate(stacked, s_in).matrix
    return CrossSpectra(s[:, 1:, 1:], s[:, 0, 1:], np.real(s[:, 0, 0]))


def wiener_gains(cs: CrossSpectra) -> FilterGains:
    """Per-frequency optimal gains; minimum-norm pseudo-inverse where S_aa is singular."""
    A = np.swapaxes(cs.S_aa, 1, 2)
    n_f = A.shape[0]
    g = np.empty(cs.S_Ba.shape, complex)
    singular = np.zeros(n_f, bool)
    sv = np.linalg.svd(A, compute_uv=False)
    for f in range(n_f):
        if sv[f, -1] <= RCOND * sv[f, 0] or sv[f, 0] == 0:
            singular[f] = True
            g[f] = np.linalg.pinv(A[f], rcond=RCOND) @ cs.S_Ba[f]
        else:
            g[f] = np.linalg.solve(A[f], cs.S_Ba[f])
    return FilterGains(g, singular)


def two_channel_gains(cs: CrossSpectra) -> FilterGains:
    """Determinant formula for N = 2."""
    if cs.n_channels != 2:
        raise ValueError("two-channel formula needs exactly two witnesses")
    s11, s22 = cs.S_aa[:, 0, 0], cs.S_aa[:, 1, 1]
    s12, s21 = cs.S_aa[:, 0, 1], cs.S_aa[:, 1, 0]
    b1, b2 = cs.S_Ba[:, 0], cs.S_Ba[:, 1]
    det = s11 * s22 - np.abs(s12) ** 2
    singular = np.abs(det) <= RCOND * np.abs(s11 * s22)
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = (b1 * s22 - s21 * b2) / det
        g2 = (b2 * s11 - s12 * b1) / det
    return FilterGains(np.stack([g1, g2], -1), singular)


def residual_spectrum(cs: CrossSpectra, g) -> np.ndarray:
    """Spectrum of B - sum_k g_k alpha_k for arbitrary gains ``g`` of shape (F, N)."""
    g = np.asarray(g.g if isinstance(g, FilterGains) else g, dtype=complex)
    if g.shape != cs.S_Ba.shape:
        raise ValueError(f"gains shape {g.shape} does not match {cs.S_Ba.shape}")
    cross = np.einsum("fj,fj->f", np.conj(g), cs.S_Ba)
    quad = np.einsum("fk,fkj,fj->f", g, cs.S_aa, np.conj(g))
    return np.real(cs.S_BB - 2 * np.real(cross) + quad)


def optimal_residual(cs: CrossSpectra, gains: FilterGains | None = None) -> np.ndarray:
    """S_BB minus the part explained by the witnesses, at the optimal gains."""
    gains = gains or wiener_gains(cs)
    return cs.S_BB - np.real(np.einsum("fj,fj->f", np.conj(gains.g), cs.S_Ba))


def teleported_output(b_row: TransferMap, alpha_rows: TransferMap, g) -> TransferMap:
    """Transfer row of B - sum_k g_k alpha_k."""
    g = np.asarray(g.g if isinstance(g, FilterGains) else g, dtype=complex)
    if b_row.registry != alpha_rows.registry:
        raise ValueError("rows use different registries")
    if g.shape != alpha_rows.matrix.shape[:2]:
        raise ValueError("gain shape does not match the witness rows")
    m = b_row.matrix[:, 0, :] - np.einsum("fk,fkn->fn", g, alpha_rows.matrix)
    return TransferMap(b_row.registry, m[:, None, :])
