import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phikit.errors import InvalidInput
from phikit.field import GridSpec, SampledField, random_band_limited
from phikit.lp import build_lp_pair
from phikit.lattice import DyadicCube
from phikit.operators import SparseSpectrum
from phikit.spaces import (SpaceIndex, cube_scales, lp_scales, riesz_shift_check, sequence_norm,
                           tl2_norm_sparse, tl_norm)
from phikit.transform import CoefficientSequence


def test_space_index_validation():
    with pytest.raises(InvalidInput):
        SpaceIndex(0.0, 0.5, 2)
    assert SpaceIndex(0, 1, np.inf).excluded_endpoint
    assert SpaceIndex(0, np.inf, 1).excluded_endpoint
    assert not SpaceIndex(0, np.inf, np.inf).excluded_endpoint


@pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
@pytest.mark.parametrize("q", [1.0, 2.0, np.inf])
@pytest.mark.parametrize("alpha", [-1.0, 0.0, 0.5])
@pytest.mark.parametrize("nu", [0, 2])
def test_unit_sequence_norm(small, p, q, alpha, nu):
    # a single cube: 2^{nu alpha} 2^{nu n/2} |Q|^{1/p}
    _, _, lat, _ = small
    s = CoefficientSequence.unit(lat, DyadicCube(nu, (3, 1)))
    expect = 2.0 ** (nu * alpha) * 2.0 ** nu * 2.0 ** (-2 * nu / p)
    assert sequence_norm(s, SpaceIndex(alpha, p, q)) == pytest.approx(expect, rel=1e-13)


@pytest.mark.parametrize("q", [1.0, 2.0, np.inf])
def test_unit_sequence_sup_branch(small, q):
    _, _, lat, _ = small
    s = CoefficientSequence.unit(lat, DyadicCube(1, (5, 7)), 3.0)
    assert sequence_norm(s, SpaceIndex(0.0, np.inf, q)) == pytest.approx(3.0 * 2.0, rel=1e-13)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), p=st.sampled_from([1.0, 2.0, 4.0]))
def test_sequence_norm_is_a_norm(small, seed, p):
    _, _, lat, _ = small
    rng = np.random.default_rng(seed)
    a = CoefficientSequence(lat, rng.standard_normal(lat.size))
    b = CoefficientSequence(lat, rng.standard_normal(lat.size))
    idx = SpaceIndex(0.5, p, 2.0)
    na, nb = sequence_norm(a, idx), sequence_norm(b, idx)
    assert sequence_norm(a + b, idx) <= na + nb + 1e-12
    assert sequence_norm(a * (-2.5), idx) == pytest.approx(2.5 * na)


@pytest.mark.parametrize("alpha", [-1.0, 0.0, 1.0])
def test_dense_norm_matches_parseval(small, alpha):
    g, pair, _, _ = small
    f = random_band_limited(g, np.random.default_rng(2), 0.3, 6.0)
    nz = np.flatnonzero(np.abs(f.spectrum.ravel()) > 0)
    modes = np.stack([np.broadcast_to(m, g.shape).ravel()[nz] for m in g.mode_indices], axis=1)
    sparse = SparseSpectrum(g, modes, f.spectrum.ravel()[nz])
    dense = tl_norm(f, SpaceIndex(alpha, 2, 2), pair, scales=lp_scales(g, pair))
    assert dense == pytest.approx(tl2_norm_sparse(sparse, alpha, pair), rel=1e-12)


def test_sup_branch_defaults_to_cube_scales(small):
    g, pair, _, _ = small
    f = random_band_limited(g, np.random.default_rng(4), 0.6, 3.0)
    assert cube_scales(g)[0] < 0 and 2.0 ** -cube_scales(g)[-1] == pytest.approx(g.h)
    v = tl_norm(f, SpaceIndex(0, np.inf, 2), pair)
    assert np.isfinite(v) and v > 0


def test_exact_cube_averages_close_to_sample_sums(small):
    g, pair, lat, _ = small
    f = random_band_limited(g, np.random.default_rng(8), 1.0, 3.0)
    idx = SpaceIndex(0, np.inf, 2)
    a = tl_norm(f, idx, pair, lat)
    b = tl_norm(f, idx, pair, lat, exact_cubes=False)
    assert a == pytest.approx(b, rel=0.05)


@pytest.mark.parametrize("p,q", [(2, 2), (1, 2), (2, 1), (np.inf, np.inf)])
@pytest.mark.parametrize("s", [1.0, -1.0])
def test_riesz_shift_in_bracket(small, p, q, s):
    g, pair, lat, _ = small
    lo, hi = pair.covered_band(lat.nu_min, lat.nu_max)
    f = random_band_limited(g, np.random.default_rng(9), lo, hi)
    rep = riesz_shift_check(f, s, SpaceIndex(0, p, q), pair, lat)
    assert rep["in_bracket"], rep


def test_riesz_shift_rejects_mean():
    g = GridSpec(2, 8.0, 16)
    with pytest.raises(InvalidInput):
        riesz_shift_check(SampledField(g, np.ones(g.shape)), 1.0, SpaceIndex(), build_lp_pair(g))
