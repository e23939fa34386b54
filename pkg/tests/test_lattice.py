from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phikit.errors import InvalidInput, ScaleOutOfRange
from phikit.field import GridSpec, lp_norm
from phikit.lattice import (DyadicCube, TruncatedLattice, admissible_scales, cube_geometry,
                            normalized_indicator, pair_geometry)


def test_cube_side_and_volume():
    assert DyadicCube(2, (1, 3)).side == Fraction(1, 4)
    assert DyadicCube(-1, (0, 0)).side == 2
    assert DyadicCube(1, (0, 0, 0)).volume == Fraction(1, 8)
    assert np.allclose(DyadicCube(1, (3, -2)).corner, [1.5, -1.0])


def test_default_admissible_scales_frozen():
    # fundamental 2 pi / 64 ~ 0.098, 0.9 Nyquist ~ 11.3 on N = 256
    assert admissible_scales(GridSpec(2, 64.0, 256)) == [-2, -1, 0, 1, 2]
    assert admissible_scales(GridSpec(2, 16.0, 64)) == [0, 1, 2]


def test_lattice_size_matches_count():
    lat = TruncatedLattice.default(GridSpec(2, 64.0, 256))
    assert lat.size == sum((64 * 2**nu) ** 2 for nu in range(-2, 3)) == 87296


@pytest.mark.parametrize("lo,hi", [(3, 3), (-3, 0), (1, 0)])
def test_lattice_rejects_bad_scales(lo, hi):
    with pytest.raises((ScaleOutOfRange, InvalidInput)):
        TruncatedLattice(GridSpec(2, 16.0, 64), lo, hi)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5375))
def test_index_cube_roundtrip(i):
    lat = TruncatedLattice(GridSpec(2, 16.0, 64), 0, 2)
    Q = lat.cube(i)
    assert lat.index(Q) == i
    assert np.allclose(lat.corners[i], Q.corner)
    assert lat.nus[i] == Q.nu


def test_index_wraps_periodically():
    lat = TruncatedLattice(GridSpec(2, 16.0, 64), 0, 2)
    assert lat.index(DyadicCube(1, (32, -1))) == lat.index(DyadicCube(1, (0, 31)))


@pytest.mark.parametrize("nu", [-1, 0, 1, 2])
def test_normalized_indicator_has_unit_norm(nu):
    g = GridSpec(2, 16.0, 64)
    f = normalized_indicator(g, DyadicCube(nu, (1, 2)))
    assert lp_norm(f, 2) == pytest.approx(1.0, rel=1e-14)


def test_normalized_indicator_too_small():
    with pytest.raises(ScaleOutOfRange):
        normalized_indicator(GridSpec(2, 16.0, 64), DyadicCube(3, (0, 0)))


def test_geometry_vectorized_agrees():
    P, Q = DyadicCube(1, (3, 4)), DyadicCube(-1, (1, 7))
    lo, hi, d = cube_geometry(P, Q, L=16.0)
    vlo, vhi, vd = pair_geometry(1, P.corner, -1, Q.corner, L=16.0)
    assert (lo, hi) == (Fraction(1, 2), 2)
    assert (float(vlo), float(vhi)) == (0.5, 2.0)
    assert d == pytest.approx(float(vd))
    # torus metric: (1.5, 2) - (2, 14) wraps to (-0.5, 4)
    assert d == pytest.approx(np.hypot(0.5, 4.0))
