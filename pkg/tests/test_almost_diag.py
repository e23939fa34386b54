import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phikit.almost_diag import (adp_ratios, adp_verdict, big_w, build_matrix, convolution_decay_check, omega,
                                omega_majorized_matrix, refinement_stable, scale_sum, scale_sum_check,
                                w_product_check)
from phikit.errors import HypothesisViolation, InvalidInput
from phikit.field import SampledField
from phikit.lattice import DyadicCube, TruncatedLattice
from phikit.matrix import DenseOperatorMatrix
from phikit.operators import riesz_transform


def test_omega_hand_value():
    # l_min = 1/2, l_max = 1, distance 1, eps = 1, n = 2: 2^{-5/2} 2^{-3}
    P, Q = DyadicCube(0, (0, 0)), DyadicCube(1, (2, 0))
    assert omega(P, Q, 1.0) == pytest.approx(2.0**-5.5, rel=1e-15)
    assert omega(P, Q, 1.0) == omega(Q, P, 1.0)


def test_big_w_hand_value():
    P, Q = DyadicCube(0, (0, 0)), DyadicCube(1, (2, 0))
    assert big_w(P, Q, 1.0, 1.0) == pytest.approx(2.0**-1.5 * 2.0**-3, rel=1e-15)
    assert big_w(P, P, 0.5, 0.5) == 1.0


@pytest.mark.parametrize("call", [lambda: omega(DyadicCube(0, (0,)), DyadicCube(0, (1,)), 0.0),
                                  lambda: big_w(DyadicCube(0, (0,)), DyadicCube(0, (1,)), 0.0, 1.0)])
def test_bad_exponents(call):
    with pytest.raises(InvalidInput):
        call()


def test_omega_majorized_matrix_has_unit_ratio(tiny):
    _, _, lat, _ = tiny
    A = omega_majorized_matrix(lat, 1.0, seed=3)
    rep = adp_ratios(A, (0.5, 1.0, 2.0))
    assert rep["r"][1] == pytest.approx(1.0, abs=1e-14)
    assert rep["monotone_in_eps"]


def test_fast_and_dense_ratios_agree(tiny):
    _, pair, lat, _ = tiny
    fast = build_matrix(riesz_transform(0), pair, lat)
    dense = DenseOperatorMatrix(lat, fast.dense())
    a, b = adp_ratios(fast), adp_ratios(dense)
    assert np.allclose(a["r"], b["r"], rtol=1e-12)
    c = adp_ratios((riesz_transform(0), lat), pair=pair)
    assert np.allclose(a["r"], c["r"], rtol=1e-12)


def test_adp_verdict_refined(tiny):
    _, pair, lat, _ = tiny
    A = build_matrix(riesz_transform(0), pair, lat)
    v = adp_verdict(A, 1.0, refined=A)
    assert v["stable"] and v["verdict"] == "ADP-consistent"
    assert refinement_stable(1.0, 1.04) and not refinement_stable(1.0, 1.06)


@settings(max_examples=15, deadline=None)
@given(alpha=st.floats(0.2, 1.0), extra=st.floats(0.1, 1.0), eps=st.floats(0.1, 1.0),
       lam=st.floats(0.1, 10.0))
def test_scale_sum_brute_force(alpha, extra, eps, lam):
    beta, J = alpha + extra, 5
    total = 0.0
    for nu, mu in itertools.product(range(-J, J + 1), repeat=2):
        m = min(nu, mu)
        total += 2.0 ** (-abs(nu - mu) * eps) * 2.0 ** (m * alpha) * (1 + 2.0**m * lam) ** (-beta)
    assert scale_sum(alpha, beta, eps, lam, J)[0] == pytest.approx(total, rel=1e-12)


def test_scale_sum_constant_settles():
    rep = scale_sum_check(0.5, 1.5, 1.0)
    assert rep["stable"] and rep["constant"] > 0


def test_w_product_settles():
    rep = w_product_check(1.0, 2.0, 3.0, levels=(3, 4, 5))
    assert rep["trace"][-1]["max_ratio"] >= rep["trace"][0]["max_ratio"]
    assert rep["relative_change"] < 0.1


@pytest.mark.parametrize("call", [
    lambda: w_product_check(1.0, 1.5, 1.5),
    lambda: w_product_check(2.0, 1.0, 1.5),
    lambda: w_product_check(1.0, -1.0, 4.0),
    lambda: scale_sum_check(1.0, 1.0, 1.0),
    lambda: scale_sum_check(0.5, 1.0, 0.0),
    lambda: scale_sum_check(0.5, 1.0, 1.0, lam=[-1.0]),
])
def test_hypothesis_violations_rejected(call):
    with pytest.raises(HypothesisViolation):
        call()


def test_convolution_check_needs_vanishing_integral(tiny):
    g, pair, _, _ = tiny
    bump = SampledField.from_function(g, lambda x, y: np.exp(-(x * x + y * y)))
    with pytest.raises(HypothesisViolation):
        convolution_decay_check(bump, bump, 0, 1, 1.0, (0.0, 0.0))
    with pytest.raises(HypothesisViolation):
        convolution_decay_check(bump, pair.psi, 1, 0, 1.0, (0.0, 0.0))
