import numpy as np
import pytest

from phikit.errors import InvalidInput, ScaleOutOfRange
from phikit.field import GridSpec, SampledField, random_band_limited
from phikit.lp import build_counterexample_phi
from phikit.operators import ZeroOperator, adjoint_identity_error, riesz_potential, riesz_transform
from phikit.t1 import (bump_family, compute_t1, counterexample_closed_form, full_t1_decomposition, paraproduct,
                       seeded_symbol, sharpness_experiment, vanishing_integral_check)
from phikit.transform import analyze


def _b(tiny, seed=0):
    _, pair, lat, _ = tiny
    return seeded_symbol(pair, lat, seed)


def test_seeded_symbol_band_is_clipped(tiny):
    g, pair, lat, _ = tiny
    b = _b(tiny)
    lo, hi = pair.covered_band(lat.nu_min, lat.nu_max)
    outside = (g.xi_norm < max(lo, 0.3)) | (g.xi_norm > min(hi, 2.0))
    assert np.max(np.abs(b.spectrum[outside])) < 1e-13 * np.max(np.abs(b.spectrum))
    with pytest.raises(InvalidInput):
        seeded_symbol(pair, lat, 0, band=(10.0, 12.0))


def test_t1_of_riesz_transform_vanishes(tiny):
    _, pair, lat, _ = tiny
    r = compute_t1(riesz_transform(0), pair, lat)
    assert r.stabilized
    assert r.to_dict()["max_phi_pairing"] < 1e-10
    assert r.cross_check["max_difference"] < 1e-10


def test_paraproduct_identities(tiny):
    g, pair, lat, moll = tiny
    b = _b(tiny)
    P = paraproduct(b, pair, moll, lat)
    one = SampledField(g, np.ones(g.shape))
    assert np.max(np.abs(P.apply(one).values - b.values)) < 1e-10 * np.max(np.abs(b.values))
    assert np.max(np.abs(P.transpose().apply(one).values)) < 1e-12
    t1 = compute_t1(P, pair, lat)
    assert t1.stabilized
    assert np.max(np.abs(t1.phi.values - analyze(b, pair, lat).values)) < 1e-9


def test_paraproduct_adjoint_and_diagonal(tiny):
    g, pair, lat, moll = tiny
    P = paraproduct(_b(tiny), pair, moll, lat)
    rng = np.random.default_rng(1)
    f = random_band_limited(g, rng, 0.1, 6.0, real=False)
    h = random_band_limited(g, rng, 0.1, 6.0, real=False)
    assert adjoint_identity_error(P, f, h) < 1e-12
    rep = P.diagonal_report(probe=64)
    assert rep["max_off_diagonal"] == 0.0 and rep["diagonal_matches"] == 0.0
    assert P.transpose().transpose().name == P.name


def test_decomposition_of_a_paraproduct_leaves_nothing(tiny):
    # T = Pi_b: T1 = b, T^t 1 = 0, so the remainder vanishes
    g, pair, lat, moll = tiny
    b = _b(tiny, 2)
    out = full_t1_decomposition(paraproduct(b, pair, moll, lat), pair, moll, lat, samples=5, adp=False)
    assert np.max(np.abs(out["a"].values - b.values)) < 1e-9
    assert np.max(np.abs(out["b"].values)) < 1e-9
    assert out["vanishing"]["passes"]
    assert out["reproduction_max_relative_error"] < 1e-12
    f = random_band_limited(g, np.random.default_rng(3), 0.2, 6.0)
    assert np.max(np.abs(out["S"].apply(f).values)) < 1e-8


def test_vanishing_integral_routes_agree(tiny):
    _, pair, lat, _ = tiny
    rep = vanishing_integral_check(riesz_transform(1), pair, lat, max_direct=64)
    assert rep["passes"] and rep["route_agreement"] < 1e-12


def test_sharpness_zero_operator_and_variants(default):
    _, pair, _, _ = default
    rep = sharpness_experiment(ZeroOperator(), pair)
    assert rep["verdict"] == "uniformly bounded" and rep["sup"] == 0.0
    with pytest.raises(InvalidInput):
        sharpness_experiment(ZeroOperator(), pair, variant="other")


def test_sharpness_order_minus_one_bounded(default):
    _, pair, _, _ = default
    rep = sharpness_experiment(riesz_potential(1), pair)
    assert rep["variant"] == "periodic" and len(rep["fit_j"]) >= 3
    assert rep["verdict"] == "uniformly bounded", rep


def test_sharpness_order_zero_scales_away(default):
    # R_0 has order 0: the F^{1,2} proxy of R_0(eta^j) halves with each step in j
    _, pair, _, _ = default
    rep = sharpness_experiment(riesz_transform(0), pair)
    assert rep["log_slope"] == pytest.approx(-np.log(2), rel=1e-3)
    assert rep["verdict"] == "decay trend"


def test_sharpness_small_box_is_inconclusive(small):
    # one admissible regularizer scale fits in a box of side 16
    _, pair, _, _ = small
    assert sharpness_experiment(riesz_transform(0), pair)["verdict"] == "inconclusive"


@pytest.fixture(scope="module")
def cex():
    g = GridSpec(2, 2 * np.pi * 64, 512)
    return g, build_counterexample_phi(g)


def test_closed_form_grows_like_sqrt_n(cex):
    g, pair = cex
    R = counterexample_closed_form(pair, GridSpec(2, g.L, 2**27), [1, 2, 4, 8])
    assert np.allclose(np.array(R[1:]) / np.array(R[:-1]), np.sqrt(2), rtol=1e-12)


def test_bump_family_modes(cex):
    g, _ = cex
    f = bump_family(g, 3)
    shifts = sorted({int(round(2.0**nu / g.fundamental)) for nu in (1, 2, 3)})
    centre = np.array([m[0] for m, c in zip(f.modes, f.coeffs) if m[1] == 0 and c == c.max()])
    assert set(shifts) <= set(f.modes[:, 0].tolist())
    assert centre.size >= 1


def test_bump_family_needs_characters():
    with pytest.raises(ScaleOutOfRange):
        bump_family(GridSpec(2, 50.0, 128), 2)
