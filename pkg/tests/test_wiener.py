import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from qtsqueeze.plant import EffectiveCavity
from qtsqueeze.tp_core import propagate
from qtsqueeze.wiener import (
    CrossSpectra,
    optimal_residual,
    residual_spectrum,
    teleported_output,
    two_channel_gains,
    wiener_gains,
)

from helpers import ideal_channels

TWO_PI = 2 * np.pi
W = TWO_PI * np.logspace(0, 3, 40)
CAV = EffectiveCavity(TWO_PI * 3.4, TWO_PI * 20.7, 2.77e5)


def random_spectra(rng, n, n_freq=1):
    """Joint covariance of (B, alpha_1..alpha_n) as a random Hermitian PSD matrix."""
    a = rng.standard_normal((n_freq, n + 1, n + 1)) + 1j * rng.standard_normal((n_freq, n + 1, n + 1))
    joint = a @ np.conj(np.swapaxes(a, 1, 2))
    return CrossSpectra(joint[:, 1:, 1:], joint[:, 0, 1:], np.real(joint[:, 0, 0]))


def brute_force_residual(cs):
    """Numerically minimise the residual over complex gains."""
    n = cs.n_channels

    def f(x):
        g = (x[:n] + 1j * x[n:])[None, :]
        return residual_spectrum(cs, g)[0]

    x0 = np.zeros(2 * n)
    res = minimize(f, x0, method="BFGS", options={"gtol": 1e-12})
    return res.fun


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gains_beat_numerical_minimisation(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        cs = random_spectra(rng, n)
        best = residual_spectrum(cs, wiener_gains(cs))[0]
        assert best <= brute_force_residual(cs) + 1e-8


def test_two_channel_formula_matches_general():
    rng = np.random.default_rng(7)
    cs = random_spectra(rng, 2, n_freq=50)
    g_gen = wiener_gains(cs).g
    g_cf = two_channel_gains(cs).g
    assert np.allclose(g_gen, g_cf, rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_pointwise_optimality(seed, n):
    rng = np.random.default_rng(seed)
    cs = random_spectra(rng, n, n_freq=3)
    opt = residual_spectrum(cs, wiener_gains(cs))
    assert np.allclose(opt, optimal_residual(cs), rtol=1e-9, atol=1e-9)
    assert np.all(opt <= cs.S_BB + 1e-9)
    for _ in range(100):
        g = rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))
        assert np.all(opt <= residual_spectrum(cs, g) + 1e-9)


def test_no_correlation_means_no_gain():
    rng = np.random.default_rng(1)
    cs = random_spectra(rng, 3, 4)
    cs0 = CrossSpectra(cs.S_aa, np.zeros_like(cs.S_Ba), cs.S_BB)
    assert np.allclose(wiener_gains(cs0).g, 0)
    assert np.allclose(optimal_residual(cs0), cs0.S_BB)


@given(st.floats(-np.pi, np.pi))
def test_residual_invariant_under_common_witness_phase(phi):
    rng = np.random.default_rng(3)
    cs = random_spectra(rng, 2, 5)
    u = np.exp(1j * phi)
    rotated = CrossSpectra(cs.S_aa, cs.S_Ba * np.conj(u), cs.S_BB)
    assert np.allclose(optimal_residual(cs), optimal_residual(rotated), rtol=1e-10)


def test_singular_witnesses_flagged():
    rng = np.random.default_rng(5)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    S_aa = np.outer(v, np.conj(v))[None]
    cs = CrossSpectra(S_aa, 0.5 * S_aa[:, 0, :], np.array([10.0]))
    gains = wiener_gains(cs)
    assert gains.singular[0]
    assert np.all(np.isfinite(gains.g))
    assert residual_spectrum(cs, gains)[0] <= 10.0


def test_invalid_spectra_rejected():
    with pytest.raises(ValueError):
        CrossSpectra(np.array([[[1.0, 2.0], [0.0, 1.0]]]), np.zeros((1, 2)), np.ones(1))
    with pytest.raises(ValueError):
        CrossSpectra(np.eye(2)[None], np.zeros((1, 2)), -np.ones(1))


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 1.7269])
def test_lossless_gains_closed_form(r):
    theta_v = 0.4 * np.sin(W / 20)
    beta_a = 0.2
    cs, b2, alpha, s_in, pa = ideal_channels(CAV, W, r, theta_v, 0.1, beta_a)
    g = wiener_gains(cs).g
    pref = -np.sqrt(2) * pa.Gamma * np.exp(1j * (pa.beta - beta_a)) * np.sinh(2 * r) / (np.cosh(2 * r) + np.exp(-2 * r))
    assert np.allclose(g[:, 0], pref * np.cos(theta_v), atol=1e-12)
    assert np.allclose(g[:, 1], pref * np.sin(theta_v), atol=1e-12)
    if r == 0:
        assert np.allclose(g, 0)


def test_teleported_output_spectrum_equals_residual():
    r = 1.0
    cs, b2, alpha, s_in, pa = ideal_channels(CAV, W, r, 0.3)
    gains = wiener_gains(cs)
    row = teleported_output(b2, alpha, gains)
    s = propagate(row, s_in).diag(0)
    assert np.allclose(s, residual_spectrum(cs, gains), rtol=1e-12)
    eq9 = pa.Gamma**2 * (1 + np.exp(-2 * r) * np.cosh(2 * r)) / (np.exp(-2 * r) + np.cosh(2 * r))
    assert np.allclose(s, eq9, rtol=1e-10)
    assert np.allclose(teleported_output(b2, alpha, np.zeros((W.size, 2))).matrix, b2.matrix)
