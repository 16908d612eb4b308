import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtsqueeze.tp_core import (
    FrequencyGrid,
    InputCovariance,
    ModeRegistry,
    TransferMap,
    block_contributions,
    compose,
    propagate,
    register_port,
    rotation,
)

angles = st.floats(-10, 10, allow_nan=False)


def two_port_registry():
    reg = register_port(ModeRegistry(), "a", np.diag([0.5, 2.0]))
    return register_port(reg, "b")


def test_grid_validation():
    with pytest.raises(ValueError):
        FrequencyGrid([1.0, 1.0])
    with pytest.raises(ValueError):
        FrequencyGrid([0.0, 1.0])
    with pytest.raises(ValueError):
        FrequencyGrid([])
    g = FrequencyGrid.logspace_hz(1, 100, 3)
    assert g.hz == pytest.approx([1, 10, 100])
    assert len(g) == 3


def test_register_rejects_duplicates_and_bad_blocks():
    reg = register_port(ModeRegistry(), "a")
    with pytest.raises(ValueError):
        register_port(reg, "a")
    with pytest.raises(ValueError):
        register_port(reg, "b", np.eye(3))
    with pytest.raises(ValueError):
        register_port(reg, "b", np.array([[1.0, 0.3], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        register_port(reg, ("c", "c"), np.eye(4))
    with pytest.raises(KeyError):
        reg.index("zzz")


def test_vacuum_identity_passes_unchanged():
    reg = register_port(ModeRegistry(), "v")
    g = FrequencyGrid.logspace_hz(1, 10, 5)
    s = InputCovariance.from_registry(reg, g)
    out = propagate(TransferMap.port(reg, "v", len(g)), s)
    assert np.allclose(out.matrix, np.eye(2))


@given(angles)
def test_rotation_invariance_of_vacuum(theta):
    reg = register_port(ModeRegistry(), "v")
    g = FrequencyGrid([1.0, 2.0])
    s = InputCovariance.from_registry(reg, g)
    out = propagate(compose(rotation(theta), TransferMap.port(reg, "v", 2)), s)
    assert np.allclose(out.matrix, np.eye(2), atol=1e-12)


@given(angles, angles)
def test_rotation_group(a, b):
    assert np.allclose(rotation(a) @ rotation(b), rotation(a + b), atol=1e-12)
    assert np.allclose(rotation(a) @ rotation(a).T, np.eye(2), atol=1e-12)


def test_rotation_vectorised_shape():
    assert rotation(np.zeros(4)).shape == (4, 2, 2)


@settings(max_examples=50)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8))
def test_output_psd_positive_semidefinite(vals):
    reg = two_port_registry()
    g = FrequencyGrid([1.0])
    m = np.array(vals).reshape(1, 2, 4) + 0.5j * np.array(vals[::-1]).reshape(1, 2, 4)
    out = propagate(TransferMap(reg, m), InputCovariance.from_registry(reg, g))
    assert np.allclose(out.matrix, np.conj(np.swapaxes(out.matrix, 1, 2)))
    assert np.linalg.eigvalsh(out.matrix[0]).min() >= -1e-10


def test_mismatched_registry_raises():
    reg = two_port_registry()
    other = register_port(ModeRegistry(), "x")
    g = FrequencyGrid([1.0])
    with pytest.raises(ValueError):
        propagate(TransferMap.port(reg, "a", 1), InputCovariance.from_registry(other, g))
    with pytest.raises(ValueError):
        TransferMap(reg, np.zeros((1, 2, 3)))
    with pytest.raises(ValueError):
        TransferMap.port(reg, "a", 1) + TransferMap.port(other, "x", 1)


def test_block_contributions_sum_to_total():
    reg = two_port_registry()
    g = FrequencyGrid([1.0, 3.0])
    s = InputCovariance.from_registry(reg, g)
    t = TransferMap.port(reg, "a", 2).scale(0.7) + compose(rotation(0.4), TransferMap.port(reg, "b", 2))
    total = propagate(t, s).diag(0)
    parts = block_contributions(t, s)
    assert sum(parts.values()) == pytest.approx(total, rel=1e-12)
    assert parts[("a",)] == pytest.approx(0.49 * 0.5)


def test_transfer_algebra():
    reg = two_port_registry()
    a = TransferMap.port(reg, "a", 3)
    assert np.allclose((a + a).matrix, (2 * a).matrix)
    assert np.allclose((a - a).matrix, 0)
    assert np.allclose((-a).matrix, -a.matrix)
    per_f = a.scale(np.array([1.0, 2.0, 3.0]))
    assert per_f.matrix[2, 0, 0] == 3.0
    assert a.row(1).n_out == 1
