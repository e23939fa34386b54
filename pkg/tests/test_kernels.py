import numpy as np
import pytest
from scipy.special import gamma

from phikit.almost_diag import build_matrix
from phikit.errors import InvalidInput
from phikit.field import GridSpec
from phikit.kernels import (SynthesizedKernel, calibrate_riesz_constant, check_standard_kernel, grid_kernel,
                            kernel_column, riesz_constant_quadrature, zero_operator_sanity)
from phikit.operators import ZeroOperator, riesz_potential, riesz_transform


def _closed_form(n, s):
    return gamma((n - s) / 2) / (2**s * np.pi ** (n / 2) * gamma(s / 2))


@pytest.mark.parametrize("n,s,frozen", [(2, 1.0, 0.15915494309189535), (3, 2.0, 0.07957747154594767),
                                        (3, 1.0, None), (2, 0.5, None)])
def test_riesz_constant_quadrature(n, s, frozen):
    c = riesz_constant_quadrature(n, s)
    assert c == pytest.approx(_closed_form(n, s), rel=1e-10)
    if frozen is not None:
        assert c == pytest.approx(frozen, rel=1e-12)


def test_calibration_recovers_constant():
    cal = calibrate_riesz_constant(GridSpec(2, 64.0, 256))
    assert cal.residual <= 0.05
    assert cal.c == pytest.approx(1 / (2 * np.pi), rel=0.02)


def test_calibration_rejects_bad_order():
    with pytest.raises(InvalidInput):
        calibrate_riesz_constant(GridSpec(2, 16.0, 64), s=2.5)


def _radial(power):
    return lambda x, y: np.linalg.norm(x - y, axis=-1) ** power


def test_order_minus_one_kernel_is_standard():
    rep = check_standard_kernel(_radial(-1.0), 1.0)
    assert rep["estimates"]["size"]["C"] == pytest.approx(1.0, rel=1e-12)
    assert rep["passes"] and not rep["diverging_toward_diagonal"]


def test_too_singular_kernel_fails():
    rep = check_standard_kernel(_radial(-2.0), 1.0)
    assert rep["diverging_toward_diagonal"] and not rep["passes"]


def test_standard_kernel_rejects_bad_delta():
    with pytest.raises(InvalidInput):
        check_standard_kernel(_radial(-1.0), 1.5)


@pytest.mark.parametrize("T", [riesz_transform(0), riesz_potential(1)], ids=["R0", "I1"])
def test_synthesized_kernel_matches_projected_symbol(tiny, T):
    # K(., 0) of T_psi A S_phi is the inverse transform of m chi^2, chi the partition sum
    g, pair, lat, _ = tiny
    A = build_matrix(T, pair, lat)
    chi = pair.partition_sum(g.xi_norm, lat.scales)
    ref = np.fft.ifftn(T.values(g.xi) * chi**2) / g.cell_volume
    col = kernel_column(A, pair, np.zeros(2)).values
    assert np.max(np.abs(col - ref)) < 1e-12 * np.max(np.abs(ref))


def test_rows_and_columns_agree(tiny):
    g, pair, lat, _ = tiny
    K = SynthesizedKernel(build_matrix(riesz_transform(1), pair, lat), pair)
    rng = np.random.default_rng(0)
    x = np.rint(rng.random((20, 2)) * g.N) * g.h
    y = np.rint(rng.random((20, 2)) * g.N) * g.h
    keep = g.torus_distance(x - y) > g.h
    assert np.allclose(K(x[keep], y[keep]), K.eval_rows(x[keep], y[keep]), atol=1e-13)
    with pytest.raises(InvalidInput):
        K(x[:1], x[:1])


def test_grid_kernel_lookup(tiny):
    g = tiny[0]
    table = np.arange(g.N**2, dtype=float).reshape(g.shape)
    K = grid_kernel(table, g)
    assert K(np.array([[3 * g.h, 0.0]]), np.array([[g.h, g.h]]))[0] == table[2, g.N - 1]


def test_zero_operator_has_zero_kernel(tiny):
    _, pair, lat, _ = tiny
    rep = zero_operator_sanity(ZeroOperator(), pair, lat)
    assert rep["zero_operator"] and rep["verdict"] == "pass" and rep["max_kernel"] == 0.0
    rep = zero_operator_sanity(riesz_transform(0), pair, lat)
    assert rep["verdict"] == "not a zero operator"
