"""Two-photon-formalism linear algebra on a frequency grid.

Every beam in the simulation is represented as a linear map from the full set
of registered input quadrature pairs to one or more output quadratures.  The
covariance of the registered inputs is block diagonal (one block per source),
so output spectra and per-source contributions follow from ``T S T^dagger``.

Normalisation: one-sided spectral densities with vacuum equal to 1 per
quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FrequencyGrid",
    "ModeRegistry",
    "TransferMap",
    "InputCovariance",
    "OutputSpectrum",
    "register_port",
    "propagate",
    "compose",
    "rotation",
    "embed",
]


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def rotation(theta):
    """Quadrature rotation ``[[cos, -sin], [sin, cos]]``.

    ``theta`` may be a scalar or an array; the result has shape
    ``theta.shape + (2, 2)``.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


@dataclass(frozen=True)
class FrequencyGrid:
    """Sideband frequencies Omega in rad/s."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or v.size == 0:
            raise ValueError("frequency grid must be a non-empty 1-d array")
        if np.any(v <= 0):
            raise ValueError("frequencies must be strictly positive")
        if np.any(np.diff(v) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def logspace_hz(cls, fmin=1.0, fmax=1000.0, n=400):
        return cls(2 * np.pi * np.logspace(np.log10(fmin), np.log10(fmax), n))

    @property
    def hz(self):
        return self.values / (2 * np.pi)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class _Block:
    labels: tuple[str, ...]
    cov: np.ndarray  # (2k, 2k), real symmetric


@dataclass(frozen=True)
class ModeRegistry:
    """Ordered input quadrature pairs and their (white) covariance blocks."""

    blocks: tuple[_Block, ...] = ()

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for b in self.blocks for lab in b.labels)

    @property
    def n_ports(self):
        return len(self.labels)

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown port {label!r}") from None

    def columns(self, label):
        i = self.index(label)
        return slice(2 * i, 2 * i + 2)

    def block_columns(self):
        """Yield ``(labels, column indices, covariance)`` per source block."""
        start = 0
        for b in self.blocks:
            k = 2 * len(b.labels)
            yield b.labels, np.arange(start, start + k), b.cov
            start += k


def register_port(registry: ModeRegistry, label, block=None) -> ModeRegistry:
    """Return a registry with one more input.

    ``label`` is a port name and ``block`` a 2x2 covariance (default: vacuum).
    For an entangled pair pass a tuple of two labels and a joint 4x4 block.
    """
    labels = (label,) if isinstance(label, str) else tuple(label)
    k = len(labels)
    cov = np.eye(2 * k) if block is None else np.asarray(block, dtype=float)
    if cov.shape != (2 * k, 2 * k):
        raise ValueError(f"block for {labels} must be {2 * k}x{2 * k}, got {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise ValueError("covariance block must be symmetric")
    existing = set(registry.labels)
    for lab in labels:
        if lab in existing:
            raise ValueError(f"port {lab!r} already registered")
    if len(set(labels)) != k:
        raise ValueError("duplicate label inside block")
    return ModeRegistry(registry.blocks + (_Block(labels, _frozen(cov)),))


@dataclass(frozen=True)
class InputCovariance:
    """Per-frequency 2N x 2N covariance of all registered inputs."""

    registry: ModeRegistry
    matrix: np.ndarray  # (F, 2N, 2N)

    @classmethod
    def from_registry(cls, registry: ModeRegistry, grid: FrequencyGrid):
        n = 2 * registry.n_ports
        s = np.zeros((n, n))
        for _, cols, cov in registry.block_columns():
            s[np.ix_(cols, cols)] = cov
        m = np.broadcast_to(s, (len(grid), n, n))
        return cls(registry, _frozen(m, complex))


@dataclass(frozen=True)
class OutputSpectrum:
    """Per-frequency Hermitian matrix of output spectral densities."""

    matrix: np.ndarray  # (F, k, k)

    def diag(self, i=None):
        d = np.real(np.diagonal(self.matrix, axis1=-2, axis2=-1))
        return d if i is None else d[:, i]

    def cross(self, i, j):
        return self.matrix[:, i, j]


@dataclass(frozen=True)
class TransferMap:
    """Per-frequency complex matrices (F, k, 2N) from registered inputs to k outputs.

    k is 2 for a quadrature pair and 1 for a single detected channel.
    """

    registry: ModeRegistry
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 3:
            raise ValueError("transfer matrix must have shape (F, k, 2N)")
        if m.shape[2] != 2 * self.registry.n_ports:
            raise ValueError(
                f"transfer map has {m.shape[2]} columns, registry needs "
                f"{2 * self.registry.n_ports}"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def port(cls, registry: ModeRegistry, label, n_freq):
        """Identity on one registered quadrature pair, zero elsewhere."""
        m = np.zeros((n_freq, 2, 2 * registry.n_ports), complex)
        cols = registry.columns(label)
        m[:, 0, cols.start] = 1.0
        m[:, 1, cols.start + 1] = 1.0
        return cls(registry, m)

    @classmethod
    def zeros(cls, registry: ModeRegistry, n_freq, k=2):
        return cls(registry, np.zeros((n_freq, k, 2 * registry.n_ports), complex))

    @property
    def n_freq(self):
        return self.matrix.shape[0]

    @property
    def n_out(self):
        return self.matrix.shape[1]

    def row(self, i):
        return TransferMap(self.registry, self.matrix[:, i : i + 1, :])

    def _check(self, other):
        if other.registry != self.registry:
            raise ValueError("transfer maps are defined over different registries")
        if other.matrix.shape != self.matrix.shape:
            raise ValueError(f"shape mismatch {self.matrix.shape} vs {other.matrix.shape}")

    def __add__(self, other):
        self._check(other)
        return TransferMap(self.registry, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check(other)
        return TransferMap(self.registry, self.matrix - other.matrix)

    def scale(self, factor):
        """Multiply by a scalar or a per-frequency array of shape (F,)."""
        f = np.asarray(factor)
        if f.ndim == 1:
            f = f[:, None, None]
        return TransferMap(self.registry, self.matrix * f)

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)


def embed(outer, n_freq):
    """Broadcast a 2x2 (or per-frequency (F, k, 2)) matrix to shape (F, k, 2)."""
    a = np.asarray(outer, dtype=complex)
    if a.ndim == 2:
        a = np.broadcast_to(a, (n_freq,) + a.shape)
    if a.shape[0] != n_freq:
        raise ValueError(f"outer transfer has {a.shape[0]} frequencies, expected {n_freq}")
    return a


def compose(outer, inner: TransferMap) -> TransferMap:
    """Apply ``outer`` (2x2, or per-frequency (F, k, 2)) to the output pair of ``inner``."""
    a = embed(outer, inner.n_freq)
    if a.shape[-1] != inner.n_out:
        raise ValueError(f"outer transfer expects {a.shape[-1]} inputs, map has {inner.n_out}")
    return TransferMap(inner.registry, a @ inner.matrix)


def propagate(tmap: TransferMap, s_in: InputCovariance) -> OutputSpectrum:
    """Return ``T S_in T^dagger`` at every frequency."""
    if tmap.registry != s_in.registry:
        raise ValueError("transfer map and covariance use different registries")
    if s_in.matrix.shape[0] != tmap.n_freq or s_in.matrix.shape[1] != tmap.matrix.shape[2]:
        raise ValueError(
            f"dimension mismatch: map {tmap.matrix.shape}, covariance {s_in.matrix.shape}"
        )
    t = tmap.matrix
    out = t @ s_in.matrix @ np.conj(np.swapaxes(t, -1, -2))
    out = 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
    return OutputSpectrum(out)


def block_contributions(tmap: TransferMap, s_in: InputCovariance, i=0):
    """Split the diagonal spectrum of output ``i`` by source block.

    Returns ``{labels: psd}``.  The blocks are mutually uncorrelated, so the
    contributions sum to the total spectrum.
    """
    t = tmap.matrix[:, i, :]
    out = {}
    for labels, cols, _ in tmap.registry.block_columns():
        tc = t[:, cols]
        sc = s_in.matrix[:, cols[:, None], cols[None, :]]
        out[labels] = np.real(np.einsum("fi,fij,fj->f", tc, sc, np.conj(tc)))
    return out
