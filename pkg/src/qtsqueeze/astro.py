"""Inspiral horizon distance for equal-mass binaries over a noise curve."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.constants import G, c, parsec
from scipy.integrate import quad
from scipy.optimize import brentq

__all__ = [
    "AsdTable",
    "HorizonCurve",
    "Cosmology",
    "read_asd",
    "write_asd",
    "combine_asd",
    "snr",
    "horizon",
    "horizon_curve",
]

M_SUN = 1.98847e30  # kg
MPC = 1e6 * parsec
SKY_AVERAGE_SNR2 = 4.0 / 25.0


@dataclass(frozen=True)
class AsdTable:
    freq: np.ndarray  # Hz
    asd: np.ndarray  # 1/sqrt(Hz)
    label: str = ""

    def __post_init__(self):
        f = np.asarray(self.freq, dtype=float)
        a = np.asarray(self.asd, dtype=float)
        if f.ndim != 1 or f.shape != a.shape or f.size < 2:
            raise ValueError("frequency and ASD columns must be 1-d of equal length >= 2")
        if np.any(np.diff(f) <= 0) or f[0] <= 0:
            raise ValueError("frequencies must be positive and strictly increasing")
        if np.any(a <= 0) or not np.all(np.isfinite(a)):
            raise ValueError("ASD values must be positive and finite")
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "asd", a)

    def resample(self, freq):
        """Log-log interpolation; NaN outside the table's support."""
        freq = np.asarray(freq, dtype=float)
        out = np.exp(np.interp(np.log(freq), np.log(self.freq), np.log(self.asd)))
        out[(freq < self.freq[0]) | (freq > self.freq[-1])] = np.nan
        return out


def read_asd(path, label=None) -> AsdTable:
    """Two-column text file (frequency_Hz, asd_per_rtHz); '#' starts a comment."""
    data = np.loadtxt(path, comments="#", delimiter=None, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected two columns")
    return AsdTable(data[:, 0], data[:, 1], label or Path(path).stem)


def write_asd(table: AsdTable, path):
    np.savetxt(path, np.column_stack([table.freq, table.asd]), header="frequency_Hz asd_per_rtHz")


def combine_asd(tables, freq=None, label="combined") -> AsdTable:
    """Quadrature sum of several noise curves on their common frequency support."""
    tables = list(tables)
    if not tables:
        raise ValueError("nothing to combine")
    lo = max(t.freq[0] for t in tables)
    hi = min(t.freq[-1] for t in tables)
    if lo >= hi:
        raise ValueError("noise curves have disjoint frequency support")
    if freq is None:
        freq = np.unique(np.concatenate([t.freq for t in tables]))
    freq = np.asarray(freq, dtype=float)
    freq = freq[(freq >= lo) & (freq <= hi)]
    psd = sum(t.resample(freq) ** 2 for t in tables)
    return AsdTable(freq, np.sqrt(psd), label)


@dataclass(frozen=True)
class Cosmology:
    """Flat Lambda-CDM."""

    H0: float = 67.9  # km/s/Mpc
    Omega_m: float = 0.3065

    def luminosity_distance(self, z):
        """Mpc."""
        if z < 0:
            raise ValueError("redshift must be non-negative")
        E = lambda zz: 1.0 / np.sqrt(self.Omega_m * (1 + zz) ** 3 + 1 - self.Omega_m)
        dc = quad(E, 0.0, z, epsabs=0, epsrel=1e-10)[0] * (c / 1e3) / self.H0
        return (1 + z) * dc

    def redshift(self, d_l):
        """Invert the luminosity distance (Mpc)."""
        if d_l <= 0:
            return 0.0
        hi = 1.0
        while self.luminosity_distance(hi) < d_l:
            hi *= 2
            if hi > 1e4:
                raise ValueError("distance beyond redshift 1e4")
        return brentq(lambda z: self.luminosity_distance(z) - d_l, 0.0, hi, xtol=1e-14, rtol=1e-13)


def _isco(m_z_kg):
    return c**3 / (6**1.5 * np.pi * G * m_z_kg)


def _amp_sq_integral(asd: AsdTable, m_z_kg, f_low=None):
    """Integral of f^{-7/3}/S(f) from the band start to ISCO (log-log interpolated)."""
    f_hi = min(_isco(m_z_kg), asd.freq[-1])
    f_lo = asd.freq[0] if f_low is None else max(f_low, asd.freq[0])
    if f_hi <= f_lo:
        return 0.0
    f = np.geomspace(f_lo, f_hi, 2000)
    s = asd.resample(f) ** 2
    y = f ** (-7.0 / 3.0) / s
    return float(np.trapezoid(y, f))


def _amplitude_prefactor(m_z_kg):
    """|h(f)| * D / f^{-7/6} for an optimally oriented equal-mass inspiral (D in metres)."""
    chirp = 0.25 ** 0.6 * m_z_kg
    return np.sqrt(5.0 / 24.0) * np.pi ** (-2.0 / 3.0) * c * (G * chirp / c**3) ** (5.0 / 6.0)


def snr(asd: AsdTable, total_mass, distance_mpc, z=0.0, sky_average=False):
    """Matched-filter SNR at luminosity distance ``distance_mpc`` (source-frame mass in M_sun)."""
    if total_mass <= 0 or distance_mpc <= 0:
        raise ValueError("mass and distance must be positive")
    m_z = total_mass * M_SUN * (1 + z)
    a = _amplitude_prefactor(m_z) / (distance_mpc * MPC)
    rho2 = 4 * a**2 * _amp_sq_integral(asd, m_z)
    if sky_average:
        rho2 *= SKY_AVERAGE_SNR2
    return float(np.sqrt(rho2))


@dataclass(frozen=True)
class HorizonPoint:
    distance: float  # Mpc
    redshift: float
    residual: float  # |z - z(D_L)| at the returned point
    isco_below_band: bool = False


def horizon(asd: AsdTable, total_mass, snr_threshold=8.0, cosmology=None, sky_average=False) -> HorizonPoint:
    """Luminosity distance at which the redshifted signal reaches ``snr_threshold``."""
    if total_mass <= 0:
        raise ValueError("mass must be positive")
    cosmo = cosmology or Cosmology()
    below = _isco(total_mass * M_SUN) < asd.freq[0]

    # root-find on SNR^2, which stays smooth when the redshifted ISCO nears the band edge
    def excess(z):
        d = cosmo.luminosity_distance(z)
        return snr(asd, total_mass, d, z, sky_average) ** 2 - snr_threshold**2

    z_lo = 1e-9
    if excess(z_lo) <= 0:
        return HorizonPoint(0.0, 0.0, 0.0, bool(below))
    z_hi = 0.1
    while excess(z_hi) > 0:
        z_hi *= 2
        if z_hi > 1e4:
            raise ValueError("horizon beyond redshift 1e4")
    z = brentq(excess, z_lo, z_hi, xtol=1e-15, rtol=1e-14)
    # When the redshifted ISCO sits just inside the band, SNR(z) is too steep to
    # pin by z alone, so take the distance that meets the threshold exactly at this z.
    d = snr(asd, total_mass, 1.0, z, sky_average) / snr_threshold
    return HorizonPoint(d, z, abs(cosmo.redshift(d) - z), bool(below))


@dataclass(frozen=True)
class HorizonCurve:
    masses: np.ndarray  # M_sun
    distance: np.ndarray  # Mpc
    redshift: np.ndarray
    label: str = ""
    flags: np.ndarray = field(default=None, repr=False)


def horizon_curve(asd: AsdTable, masses, snr_threshold=8.0, cosmology=None, sky_average=False, label=""):
    masses = np.asarray(masses, dtype=float)
    if np.any(np.diff(masses) <= 0):
        raise ValueError("mass grid must be increasing")
    pts = [horizon(asd, m, snr_threshold, cosmology, sky_average) for m in masses]
    return HorizonCurve(
        masses,
        np.array([p.distance for p in pts]),
        np.array([p.redshift for p in pts]),
        label or asd.label,
        np.array([p.isco_below_band for p in pts]),
    )
