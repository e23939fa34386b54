import numpy as np
import pytest

from phikit.almost_diag import build_matrix
from phikit.errors import InvalidInput
from phikit.field import GridSpec, random_band_limited
from phikit.lattice import TruncatedLattice
from phikit.lp import build_counterexample_phi
from phikit.matrix import DenseOperatorMatrix, load_matrix, save_matrix
from phikit.operators import (ConvolutionKernelOperator, LinearCombination, SparseSpectrum, ZeroOperator,
                              adjoint_identity_error, derivative, gradient_riesz_identity_check, identity,
                              matrix_operator, modulated_symbol_operator, quadrature_operator, riesz_potential,
                              riesz_transform, torus_kernel)


def _f(g, seed, lo=0.2, hi=5.0, real=False):
    return random_band_limited(g, np.random.default_rng(seed), lo, hi, real=real)


def test_gradient_riesz_identities():
    rep = gradient_riesz_identity_check(GridSpec(2, 16.0, 64))
    assert rep["ok"], rep


def test_riesz_potentials_compose(small):
    g = small[0]
    f = _f(g, 0)
    back = riesz_potential(-1).apply(riesz_potential(1).apply(f))
    assert np.allclose(back.values, f.values, atol=1e-12)
    lap = sum(derivative(j).apply(derivative(j).apply(f)).values for j in range(2))
    assert np.allclose(riesz_potential(-2).apply(f).values, -lap, atol=1e-10)


def test_linear_combination_and_zero(small):
    g = small[0]
    f = _f(g, 1)
    T = LinearCombination(((2.0, identity()), (-1.0, riesz_transform(0))))
    ref = 2 * f.values - riesz_transform(0).apply(f).values
    assert np.allclose(T.apply(f).values, ref, atol=1e-13)
    assert not np.any(ZeroOperator().apply(f).values)


def _ops(pair, g):
    kern = lambda d: 1.0 / np.sqrt(d[0] ** 2 + d[1] ** 2 + 1.0) + 1j * np.exp(-(d[0] ** 2))
    return [riesz_transform(1), riesz_potential(1), ConvolutionKernelOperator(kern),
            quadrature_operator(lambda x, y: np.exp(-np.sum((x[:, None] - y[None]) ** 2, -1)) * (1 + 1j * x[:, :1])),
            LinearCombination(((1j, riesz_transform(0)), (0.5, identity())))]


@pytest.mark.parametrize("k", range(5))
def test_transpose_is_adjoint(tiny, k):
    g, pair, _, _ = tiny
    T = _ops(pair, g)[k]
    assert adjoint_identity_error(T, _f(g, 2), _f(g, 3)) < 1e-12


def test_convolution_matches_quadrature(tiny):
    g = tiny[0]
    rad = lambda r: 1.0 / r
    conv = ConvolutionKernelOperator(lambda d: 1.0 / np.sqrt(d[0] ** 2 + d[1] ** 2))
    quad = quadrature_operator(torus_kernel(g, rad))
    f = _f(g, 4)
    assert np.allclose(conv.apply(f).values, quad.apply(f).values, atol=1e-11)


def test_kernel_rejects_diagonal_singularity_off_diagonal(tiny):
    g = tiny[0]
    with pytest.raises(InvalidInput):
        ConvolutionKernelOperator(lambda d: 1.0 / d[0]).apply(_f(g, 5))


@pytest.fixture(scope="module")
def ta_setup():
    g = GridSpec(2, 2 * np.pi * 16, 128)
    pair = build_counterexample_phi(GridSpec(2, 2 * np.pi * 64, 512)).on_grid(g)
    return g, pair


@pytest.mark.parametrize("adjoint", [False, True])
def test_sparse_and_dense_modulated_symbol_agree(ta_setup, adjoint):
    g, pair = ta_setup
    T = modulated_symbol_operator(pair, range(-3, 1))
    if adjoint:
        T = T.transpose()
    f = _f(g, 6, 0.2, 1.5)
    nz = np.flatnonzero(f.spectrum.ravel())
    modes = np.stack([np.broadcast_to(m, g.shape).ravel()[nz] for m in g.mode_indices], axis=1)
    sparse = T.apply(SparseSpectrum(g, modes, f.spectrum.ravel()[nz]))
    dense = T.apply(f)
    assert np.allclose(sparse.to_dense().values, dense.values, atol=1e-13)
    assert adjoint_identity_error(T, f, _f(g, 7, 0.2, 3.0)) < 1e-12


def test_modulated_symbol_needs_characters(ta_setup):
    _, pair = ta_setup
    g = GridSpec(2, 50.0, 128)
    with pytest.raises(InvalidInput):
        modulated_symbol_operator(pair.on_grid(g), [0]).apply(_f(g, 8))


@pytest.mark.parametrize("T", [riesz_transform(0), riesz_potential(1)], ids=["R0", "I1"])
def test_fast_matrix_matches_column_probing(tiny, T):
    _, pair, lat, _ = tiny
    fast = build_matrix(T, pair, lat)
    slow = build_matrix(T, pair, lat, fast=False)
    D = slow.dense()
    assert np.max(np.abs(fast.dense() - D)) < 1e-13 * np.max(np.abs(D))
    v = np.random.default_rng(0).standard_normal(lat.size)
    assert np.allclose(fast.apply(v), D @ v, atol=1e-12)
    assert np.allclose(fast.conj_transpose().dense(), D.conj().T, atol=1e-13)


def test_matrix_operator_reproduces_multiplier_on_band(tiny):
    g, pair, lat, _ = tiny
    T = riesz_transform(1)
    S = matrix_operator(build_matrix(T, pair, lat), pair)
    lo, hi = pair.covered_band(lat.nu_min, lat.nu_max)
    f = random_band_limited(g, np.random.default_rng(9), lo, hi)
    assert np.allclose(S.apply(f).values, T.apply(f).values, atol=1e-12)
    assert adjoint_identity_error(S, f, _f(g, 10)) < 1e-12


def test_matrix_save_load(tiny, tmp_path):
    g, pair, _, _ = tiny
    lat = TruncatedLattice(g, 0, 0)
    A = build_matrix(riesz_transform(0), pair, lat)
    save_matrix(tmp_path / "A.txt", A)
    B = load_matrix(tmp_path / "A.txt")
    assert isinstance(B, DenseOperatorMatrix)
    assert np.array_equal(B.dense(), A.dense())
    assert B.provenance == A.provenance
