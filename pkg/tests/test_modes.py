import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmfnet.errors import CapacityError, GeometryError, UnsupportedDimensionError
from mmfnet.modes import (ChannelMap, ModeLabel, Port, foci_basis, macro_pixel_basis,
                          mub_set, port_modes, random_foci)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 9])
def test_macro_pixels_orthonormal(d):
    ms = macro_pixel_basis(d, 64)
    assert ms.label is ModeLabel.MACRO_PIXEL
    np.testing.assert_allclose(ms.gram(), np.eye(d), atol=1e-12)


def test_macro_pixel_disks_are_flat_and_disjoint():
    ms = macro_pixel_basis(4, 64)
    support = np.abs(ms.vectors) > 0
    assert not np.any(support.sum(axis=0) > 1)
    for row in ms.vectors:
        vals = np.abs(row[row != 0])
        np.testing.assert_allclose(vals, vals[0])
    # 8x8 grid, 2x2 lattice, radius 2: 12 pixel centres per disk
    assert list(support.sum(axis=1)) == [12, 12, 12, 12]


def test_macro_pixel_errors():
    with pytest.raises(GeometryError):
        macro_pixel_basis(2, 64, radius=3, centers=[(3, 3), (4, 4)])
    with pytest.raises(GeometryError):
        macro_pixel_basis(2, 64, radius=1, centers=[(3, 3)])
    with pytest.raises(GeometryError):
        macro_pixel_basis(1, 64, radius=1, centers=[(20, 3)])
    with pytest.raises(CapacityError):
        macro_pixel_basis(65, 64)
    with pytest.raises(GeometryError):
        macro_pixel_basis(2, 60)


def test_macro_pixel_rectangular_grid():
    ms = macro_pixel_basis(2, (4, 8), radius=1, centers=[(1.5, 1.5), (1.5, 5.5)])
    assert ms.n_pixels == 32
    np.testing.assert_allclose(ms.gram(), np.eye(2), atol=1e-12)


def test_foci():
    ms = foci_basis([0, 5, 9], 16, Port.OUT2)
    np.testing.assert_allclose(ms.gram(), np.eye(3))
    assert ms.port is Port.OUT2
    with pytest.raises(GeometryError):
        foci_basis([1, 1], 16)
    with pytest.raises(GeometryError):
        foci_basis([16], 16)


def test_random_foci_seeded():
    a = random_foci(4, 64, 3)
    b = random_foci(4, 64, 3)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_port_modes_shapes():
    inputs, outputs = port_modes(64, 4, seed=1)
    assert [m.port for m in inputs + outputs] == [Port.IN1, Port.IN2, Port.OUT1, Port.OUT2]
    assert all(m.dim == 4 for m in inputs + outputs)


def test_port_properties():
    assert Port.IN2.is_input and not Port.OUT1.is_input
    assert (Port.IN1.index, Port.OUT2.index) == (0, 1)


@pytest.mark.parametrize("d", [2, 3])
def test_mubs_are_unitary_and_unbiased(d):
    fam = mub_set(d)
    assert len(fam) == d + 1
    for U in fam.bases:
        np.testing.assert_allclose(U.conj().T @ U, np.eye(d), atol=1e-12)
    for m, n in itertools.combinations(range(d + 1), 2):
        overlaps = np.abs(fam.bases[m].conj().T @ fam.bases[n]) ** 2
        np.testing.assert_allclose(overlaps, 1 / d, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_mub_projectors_resolve_identity(d):
    P = mub_set(d).projectors()
    for m in range(d + 1):
        np.testing.assert_allclose(P[m].sum(axis=0), np.eye(d), atol=1e-12)


def test_qubit_mub_order():
    fam = mub_set(2)
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    v = fam.vector(1, 0)
    np.testing.assert_allclose(sx @ v, v)
    v = fam.vector(2, 0)
    np.testing.assert_allclose(sy @ v, v)


@pytest.mark.parametrize("d", [1, 4, 5])
def test_mub_unsupported(d):
    with pytest.raises(UnsupportedDimensionError):
        mub_set(d)


def test_channel_map_standard():
    cm = ChannelMap.standard()
    assert cm.channel(Port.IN1, 1) == (2, 3)
    assert cm.channel(Port.OUT2, 0) == (4, 5)
    assert cm.flatten(Port.IN2) == (4, 5, 6, 7)
    assert (cm.n_channels, cm.modes_per_port) == (2, 4)
    with pytest.raises(GeometryError):
        ChannelMap({Port.IN1: ((0, 1), (1, 2))})
    with pytest.raises(GeometryError):
        ChannelMap.standard(4, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 16), st.integers(4, 12))
def test_macro_pixel_orthonormal_property(d, side):
    if d > side * side:
        with pytest.raises(CapacityError):
            macro_pixel_basis(d, side * side)
        return
    try:
        ms = macro_pixel_basis(d, side * side)
    except GeometryError:
        return  # lattice too coarse for a non-empty disk
    np.testing.assert_allclose(ms.gram(), np.eye(d), atol=1e-12)
