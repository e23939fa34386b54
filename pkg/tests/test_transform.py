import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phikit.errors import InvalidInput
from phikit.field import inner, random_band_limited
from phikit.lattice import DyadicCube
from phikit.transform import (CoefficientSequence, analyze, cube_function, load_coefficients,
                              pairing_expansion, reconstruction_residual, save_coefficients, synthesize,
                              uncovered_fraction)


def _covered(small, seed):
    g, pair, lat, _ = small
    lo, hi = pair.covered_band(lat.nu_min, lat.nu_max)
    return random_band_limited(g, np.random.default_rng(seed), lo, hi)


@pytest.mark.parametrize("cube", [DyadicCube(0, (3, 5)), DyadicCube(1, (0, 31)), DyadicCube(2, (17, 2))])
@pytest.mark.parametrize("kind", ["phi", "psi"])
def test_fast_analysis_matches_direct_pairing(small, cube, kind):
    g, pair, lat, _ = small
    f = random_band_limited(g, np.random.default_rng(1), 0.2, 8.0, real=False)
    fast = analyze(f, pair, lat, kind).values[lat.index(cube)]
    direct = inner(f, cube_function(pair, lat, cube, kind))
    assert fast == pytest.approx(direct, rel=1e-12, abs=1e-14)


def test_synthesis_of_unit_is_cube_function(small):
    g, pair, lat, _ = small
    Q = DyadicCube(1, (4, 9))
    got = synthesize(CoefficientSequence.unit(lat, Q), pair)
    ref = cube_function(pair, lat, Q, "psi")
    assert np.allclose(got.values, ref.values, atol=1e-14)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_reconstruction_on_covered_band(small, seed):
    _, pair, lat, _ = small
    f = _covered(small, seed)
    assert uncovered_fraction(f, pair, lat) < 1e-14
    assert reconstruction_residual(f, pair, lat) < 1e-12


def test_reconstruction_fails_off_band(small):
    g, pair, lat, _ = small
    f = random_band_limited(g, np.random.default_rng(3), 0.1, 0.4)
    assert reconstruction_residual(f, pair, lat) > 0.5


def test_pairing_expansion(small):
    g, pair, lat, _ = small
    f = random_band_limited(g, np.random.default_rng(5), 0.1, 9.0, real=False)
    h = _covered(small, 6)
    rep = pairing_expansion(f, h, pair, lat)
    assert rep["ok"] and not rep["coverage_warning"]


def test_save_load_roundtrip(tiny, tmp_path):
    g, pair, lat, _ = tiny
    s = analyze(random_band_limited(g, np.random.default_rng(0), 0.5, 3.0), pair, lat)
    save_coefficients(tmp_path / "c.txt", s)
    back = load_coefficients(tmp_path / "c.txt")
    assert back.lattice.same_as(lat)
    assert np.array_equal(back.values, s.values)


def test_sequence_algebra(tiny):
    _, _, lat, _ = tiny
    a = CoefficientSequence.unit(lat, DyadicCube(0, (1, 1)), 2.0)
    b = CoefficientSequence.zeros(lat)
    assert np.array_equal((a + b).values, a.values)
    assert np.array_equal((3 * a - a).values, 2 * a.values)
    with pytest.raises(InvalidInput):
        CoefficientSequence(lat, np.zeros(3))
