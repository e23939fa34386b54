import numpy as np
import pytest

from phikit.errors import InvalidProfile, ScaleOutOfRange
from phikit.field import GridSpec
from phikit.lattice import TruncatedLattice
from phikit.lp import (COUNTEREXAMPLE_EDGES, DEFAULT_EDGES, build_counterexample_phi, build_lp_pair,
                       counterexample_certificate, hankel_radial, regularizer, smooth_step)
from phikit.transform import analyze


def test_smooth_step_limits():
    t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    s = smooth_step(t)
    assert s[0] == s[1] == 0 and s[3] == s[4] == 1
    assert s[2] == pytest.approx(0.5)


@pytest.mark.parametrize("edges", [(0.4, 0.7, 1.3, 1.9), (0.51, 0.75, 1.35, 1.6), (0.51, 0.9, 0.8, 1.9), (0.6, 0.7, 1.3, 1.9)])
def test_invalid_edges_rejected(edges):
    with pytest.raises(InvalidProfile):
        build_lp_pair(GridSpec(2, 16.0, 64), edges)


@pytest.mark.parametrize("edges", [DEFAULT_EDGES, COUNTEREXAMPLE_EDGES])
def test_validate_reports_admissible(default, edges):
    g = default[0]
    rep = build_lp_pair(g, edges).validate(-2, 2)
    assert rep["ok"], rep
    assert rep["partition_error"] <= 1e-10
    assert rep["rho_in_bracket"]


def test_partition_is_one_on_covered_band(small):
    _, pair, lat, _ = small
    lo, hi = pair.covered_band(lat.nu_min, lat.nu_max)
    r = np.linspace(lo, hi, 5001)
    assert np.max(np.abs(pair.partition_sum(r, lat.scales) - 1)) < 1e-14


@pytest.mark.parametrize("x", [0.0, 1.3, 4.0])
def test_hankel_matches_planar_quadrature(default, x):
    # two routes to phi(x): 1-d radial quadrature versus a midpoint rule over the frequency square
    _, pair, _, _ = default
    d = 0.005
    t = np.arange(-2, 2, d) + d / 2
    X, Y = np.meshgrid(t, t)
    direct = np.sum(pair.phi_hat(np.hypot(X, Y)) * np.cos(x * X)) * d * d / (2 * np.pi) ** 2
    assert float(pair.phi_radial(x)) == pytest.approx(direct, abs=1e-13)


def test_hankel_of_gaussian():
    # (2 pi)^{-2} int exp(-|xi|^2/2) e^{i x.xi} d xi = exp(-|x|^2 / 2) / (2 pi) in the plane
    r = np.array([0.0, 0.5, 1.0, 2.0])
    got = hankel_radial(lambda s: np.exp(-s * s / 2), (0.0, 12.0), 2, r)
    assert np.allclose(got, np.exp(-r * r / 2) / (2 * np.pi), atol=1e-14)


def test_mollifier_integrates_to_one(small):
    g, _, _, moll = small
    assert np.sum(moll.field.values).real * g.h**2 == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("j", [0, 1, 2])
def test_regularizer_is_one_at_origin(small, j):
    _, pair, _, _ = small
    assert regularizer(pair, j).values.flat[0] == pytest.approx(1.0)
    assert regularizer(pair, j, periodic=False).values.flat[0] == pytest.approx(1.0)


def test_regularizer_out_of_range(small):
    _, pair, _, _ = small
    with pytest.raises(ScaleOutOfRange):
        regularizer(pair, 6)


def test_regularizer_spectrum_inside_annulus(small):
    g, pair, _, _ = small
    eta = regularizer(pair, 1)
    r = g.xi_norm
    outside = (r < 0.5 / 2) | (r > 2.0 / 2)
    assert np.max(np.abs(eta.spectrum[outside])) < 1e-12 * np.max(np.abs(eta.spectrum))


def test_psi_pairings_vanish_below_lattice_band(small):
    # eta^2 lives at |xi| < 1.95 / 4 < 0.51, below every psi_Q with nu >= 0
    g, pair, lat, _ = small
    c = analyze(regularizer(pair, 2), pair, lat, "psi").values
    assert np.max(np.abs(c)) < 1e-14
    c1 = analyze(regularizer(pair, 0), pair, lat, "psi").values
    assert np.max(np.abs(c1)) > 1e-3


def test_counterexample_certificate():
    g = GridSpec(2, 2 * np.pi * 64, 512)
    pair = build_counterexample_phi(g)
    cert = counterexample_certificate(pair)
    assert cert["ok"] and cert["modes_in_ball"] >= 1
