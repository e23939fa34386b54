"""Operator backends: Fourier multipliers, convolution and quadrature kernels,
the modulated counterexample symbol and matrix-synthesized operators.

``transpose`` is the adjoint for ``<f, g> = int f conj(g)``; on real
operators it is the kernel swap ``K^t(x, y) = K(y, x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .field import GridSpec, SampledField, inner, lp_norm, random_band_limited
from .matrix import OperatorMatrix
from .transform import CoefficientSequence, analyze, synthesize

__all__ = [
    "Operator",
    "MultiplierOperator",
    "ConvolutionKernelOperator",
    "QuadratureOperator",
    "ModulatedSymbolOperator",
    "MatrixOperator",
    "LinearCombination",
    "ZeroOperator",
    "SparseSpectrum",
    "identity",
    "riesz_potential",
    "derivative",
    "riesz_transform",
    "quadrature_operator",
    "torus_kernel",
    "modulated_symbol_operator",
    "matrix_operator",
    "transpose",
    "gradient_riesz_identity_check",
    "maximal_inequality_check",
    "adjoint_identity_error",
]


def _norm(xi):
    return np.sqrt(sum(np.asarray(x, dtype=float) ** 2 for x in xi))


@dataclass(frozen=True, eq=False)
class SparseSpectrum:
    """Field given by finitely many grid modes of a (possibly huge) virtual grid.

    ``modes`` holds integer mode vectors ``(K, n)``; ``coeffs`` the spectrum
    values under the continuous convention. Only ``p = q = 2`` norms and
    translation-invariant or modulation operators act on it.
    """

    grid: GridSpec
    modes: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=np.int64).reshape(-1, self.grid.n)
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if len(m) != len(c):
            raise InvalidInput("modes and coefficients differ in length")
        object.__setattr__(self, "modes", m)
        object.__setattr__(self, "coeffs", c)

    @property
    def xi(self):
        return tuple(self.grid.fundamental * self.modes[:, a] for a in range(self.grid.n))

    @property
    def xi_norm(self):
        return _norm(self.xi)

    def combined(self) -> "SparseSpectrum":
        """Merge repeated modes."""
        u, inv = np.unique(self.modes, axis=0, return_inverse=True)
        c = np.zeros(len(u), complex)
        np.add.at(c, inv.ravel(), self.coeffs)
        return SparseSpectrum(self.grid, u, c)

    def to_dense(self, grid: GridSpec | None = None) -> SampledField:
        g = grid or self.grid
        if g.L != self.grid.L:
            raise InvalidInput("dense grid must share the box side")
        if np.any(np.abs(self.modes) >= g.N // 2):
            raise InvalidInput("modes exceed the dense grid")
        spec = np.zeros(g.shape, complex)
        np.add.at(spec, tuple((self.modes[:, a] % g.N) for a in range(g.n)), self.coeffs)
        return SampledField.from_spectrum(g, spec)


class Operator:
    """Linear operator on sampled fields."""

    tag = "abstract"
    name = "T"

    def apply(self, f: SampledField) -> SampledField:
        raise NotImplementedError

    def transpose(self) -> "Operator":
        raise NotImplementedError

    def __call__(self, f):
        return self.apply(f)

    def __add__(self, other):
        return LinearCombination(((1.0, self), (1.0, other)))

    def __sub__(self, other):
        return LinearCombination(((1.0, self), (-1.0, other)))

    def __rmul__(self, c):
        return LinearCombination(((c, self),))


class ZeroOperator(Operator):
    tag = "multiplier"
    name = "0"

    def apply(self, f):
        if isinstance(f, SparseSpectrum):
            return SparseSpectrum(f.grid, f.modes, np.zeros_like(f.coeffs))
        return SampledField.zeros(f.grid)

    def transpose(self):
        return self


@dataclass(frozen=True, eq=False)
class MultiplierOperator(Operator):
    """``F^{-1}(m(xi) f^)``; ``symbol`` maps frequency components to values.

    ``at_zero`` is the declared value of ``m(0)``.
    """

    symbol: object
    at_zero: complex = 0.0
    name: str = "m"
    conjugated: bool = False
    tag: str = field(default="multiplier", init=False)

    def values(self, xi) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.asarray(self.symbol(xi), dtype=complex)
        m = np.broadcast_to(m, np.broadcast_shapes(*[np.shape(x) for x in xi])).copy()
        zero = _norm(xi) == 0
        m[zero] = self.at_zero
        return np.conj(m) if self.conjugated else m

    def apply(self, f):
        if isinstance(f, SparseSpectrum):
            return SparseSpectrum(f.grid, f.modes, f.coeffs * self.values(f.xi))
        return SampledField.from_spectrum(f.grid, f.spectrum * self.values(f.grid.xi))

    def transpose(self):
        return MultiplierOperator(self.symbol, self.at_zero, self.name + "^t", not self.conjugated)


def identity() -> MultiplierOperator:
    return MultiplierOperator(lambda xi: np.ones_like(xi[0]), 1.0, "I")


def riesz_potential(s: float) -> MultiplierOperator:
    """``I^s = F^{-1}(|xi|^{-s} .)`` with ``m(0) = 0`` (zero-mean convention)."""
    s = float(s)
    return MultiplierOperator(lambda xi: _norm(xi) ** (-s), 0.0, f"I^{s:g}")


def derivative(j: int) -> MultiplierOperator:
    """``d/dx_j``: multiplier ``i xi_j``."""
    return MultiplierOperator(lambda xi: 1j * xi[j], 0.0, f"d{j}")


def riesz_transform(j: int) -> MultiplierOperator:
    """``R_j = d_j I^1``: multiplier ``i xi_j / |xi|``."""
    return MultiplierOperator(lambda xi: 1j * xi[j] / _norm(xi), 0.0, f"R{j}")


@dataclass(frozen=True, eq=False)
class LinearCombination(Operator):
    terms: tuple
    tag: str = field(default="composite", init=False)

    @property
    def name(self):
        return " + ".join(f"{c}*{op.name}" for c, op in self.terms)

    def apply(self, f):
        out = None
        for c, op in self.terms:
            g = op.apply(f)
            if isinstance(g, SparseSpectrum):
                g = SparseSpectrum(g.grid, g.modes, c * g.coeffs)
                out = g if out is None else SparseSpectrum(
                    g.grid, np.concatenate([out.modes, g.modes]), np.concatenate([out.coeffs, g.coeffs]))
            else:
                out = c * g if out is None else out + c * g
        if isinstance(out, SparseSpectrum):
            out = out.combined()
        return out

    def transpose(self):
        return LinearCombination(tuple((np.conj(c), op.transpose()) for c, op in self.terms))


@dataclass(frozen=True, eq=False)
class ConvolutionKernelOperator(Operator):
    """``T f(x) = sum_{y != x} k(x - y) f(y) h^n`` by FFT on the torus.

    ``kernel`` receives displacement components wrapped into ``[-L/2, L/2)``.
    """

    kernel: object
    name: str = "k*"
    reflected: bool = False
    tag: str = field(default="convolution-kernel", init=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def table(self, grid: GridSpec) -> np.ndarray:
        if grid not in self._cache:
            d = tuple(np.broadcast_to(c, grid.shape) for c in grid.centered_coords)
            if self.reflected:
                d = tuple(-x for x in d)
            zero = _norm(d) == 0
            with np.errstate(divide="ignore", invalid="ignore"):
                k = np.asarray(self.kernel(d), dtype=complex)
            k = np.broadcast_to(k, grid.shape).copy()
            k[zero] = 0
            if self.reflected:
                k = np.conj(k)
            if not np.all(np.isfinite(k)):
                raise InvalidInput("kernel is not finite off the diagonal")
            self._cache[grid] = k
        return self._cache[grid]

    def apply(self, f):
        g = f.grid
        k = self.table(g)
        return SampledField(g, np.fft.ifftn(np.fft.fftn(k) * np.fft.fftn(f.values)) * g.cell_volume)

    def transpose(self):
        return ConvolutionKernelOperator(self.kernel, self.name + "^t", not self.reflected)


@dataclass(frozen=True, eq=False)
class QuadratureOperator(Operator):
    """Dense quadrature ``T f(x) = sum_{y != x} K(x, y) f(y) h^n``.

    ``K(x, y)`` receives point arrays of shape ``(P, n)`` and ``(M, n)`` in
    box coordinates and returns ``(P, M)``. The singular cell ``y = x`` is
    dropped; for ``|K| <= C |x - y|^{1-n}`` the omitted mass is ``O(h)``.
    """

    kernel: object
    name: str = "K"
    swapped: bool = False
    block: int = 512
    tag: str = field(default="quadrature-kernel", init=False)

    def _K(self, x, y):
        if self.swapped:
            return np.conj(np.asarray(self.kernel(y, x)).T)
        return np.asarray(self.kernel(x, y))

    def apply(self, f):
        g = f.grid
        pts = np.stack([np.broadcast_to(c, g.shape).ravel() for c in g.coords], axis=1)
        fv = f.values.ravel()
        out = np.empty(fv.size, complex)
        for start in range(0, fv.size, self.block):
            rows = slice(start, min(start + self.block, fv.size))
            with np.errstate(divide="ignore", invalid="ignore"):
                K = np.array(self._K(pts[rows], pts), dtype=complex)
            diag = np.arange(rows.start, rows.stop)
            K[diag - rows.start, diag] = 0
            if not np.all(np.isfinite(K)):
                raise InvalidInput("kernel is not finite off the diagonal")
            out[rows] = K @ fv
        return SampledField(g, out.reshape(g.shape) * g.cell_volume)

    def transpose(self):
        return QuadratureOperator(self.kernel, self.name + "^t", not self.swapped, self.block)


def quadrature_operator(K, name: str = "K") -> QuadratureOperator:
    return QuadratureOperator(K, name)


def torus_kernel(grid: GridSpec, radial):
    """Wrap a radial function into a quadrature kernel with the torus metric."""

    def K(x, y):
        d = x[:, None, :] - y[None, :, :]
        d = (d + grid.L / 2) % grid.L - grid.L / 2
        return radial(np.sqrt(np.sum(d * d, axis=-1)))

    return K


@dataclass(frozen=True, eq=False)
class ModulatedSymbolOperator(Operator):
    """``T_a f = (2 pi)^{-n/2} sum_nu 2^{-nu} e^{-i 2^nu x_1} (phi_nu * f)``.

    The sum runs over ``scales``. Each modulation must be a character of the
    torus, i.e. ``2^nu L / (2 pi)`` an integer.
    """

    pair: object
    scales: tuple
    adjoint: bool = False
    name: str = "T_a"
    tag: str = field(default="modulated-symbol", init=False)

    def _shift(self, grid: GridSpec, nu: int) -> int:
        m = 2.0**nu * grid.L / (2 * np.pi)
        if abs(m - round(m)) > 1e-9:
            raise InvalidInput(f"e^(-i 2^{nu} x1) is not a torus character for L = {grid.L}")
        return int(round(m))

    def apply(self, f):
        g = f.grid
        n = g.n
        c = (2 * np.pi) ** (-n / 2)
        if isinstance(f, SparseSpectrum):
            modes, coeffs = [], []
            for nu in self.scales:
                sh = self._shift(g, nu)
                if self.adjoint:
                    m = f.modes.copy()
                    m[:, 0] += sh
                    xi = tuple(g.fundamental * m[:, a] for a in range(n))
                    w = self.pair.phi_hat(2.0 ** (-nu) * _norm(xi))
                    modes.append(m)
                    coeffs.append(c * 2.0 ** (-nu) * w * f.coeffs)
                else:
                    w = self.pair.phi_hat(2.0 ** (-nu) * f.xi_norm)
                    m = f.modes.copy()
                    m[:, 0] -= sh
                    modes.append(m)
                    coeffs.append(c * 2.0 ** (-nu) * w * f.coeffs)
            out = SparseSpectrum(g, np.concatenate(modes), np.concatenate(coeffs)).combined()
            keep = out.coeffs != 0
            return SparseSpectrum(g, out.modes[keep], out.coeffs[keep])
        spec = np.zeros(g.shape, complex)
        for nu in self.scales:
            sh = self._shift(g, nu)
            if self.adjoint:
                spec += c * 2.0 ** (-nu) * self.pair.scale_multiplier(nu, "phi") * np.roll(f.spectrum, sh, axis=0)
            else:
                spec += c * 2.0 ** (-nu) * np.roll(f.spectrum * self.pair.scale_multiplier(nu, "phi"), -sh, axis=0)
        return SampledField.from_spectrum(g, spec)

    def transpose(self):
        return ModulatedSymbolOperator(self.pair, self.scales, not self.adjoint, self.name + "^t")


def modulated_symbol_operator(pair, scales) -> ModulatedSymbolOperator:
    if not getattr(pair, "counterexample_mode", False):
        raise InvalidInput("pair is not in counterexample mode")
    return ModulatedSymbolOperator(pair, tuple(int(s) for s in scales))


@dataclass(frozen=True, eq=False)
class MatrixOperator(Operator):
    """``T_psi A S_phi``; the transpose analyses with psi and synthesizes with phi."""

    matrix: OperatorMatrix
    pair: object
    swapped: bool = False
    name: str = "T_psi A S_phi"
    tag: str = field(default="matrix-synthesized", init=False)

    def apply(self, f):
        lat = self.matrix.lattice
        if f.grid != lat.grid:
            raise InvalidInput("lattice mismatch between matrix and field")
        a, s = ("psi", "phi") if self.swapped else ("phi", "psi")
        coeffs = analyze(f, self.pair, lat, a)
        return synthesize(CoefficientSequence(lat, self.matrix.apply(coeffs.values)), self.pair, s)

    def transpose(self):
        return MatrixOperator(self.matrix.conj_transpose(), self.pair, not self.swapped, self.name + "^t")


def matrix_operator(A: OperatorMatrix, pair) -> MatrixOperator:
    if A.lattice.grid != pair.grid:
        raise InvalidInput("lattice mismatch between matrix and pair")
    return MatrixOperator(A, pair)


def transpose(T: Operator) -> Operator:
    return T.transpose()


def adjoint_identity_error(T: Operator, f: SampledField, g: SampledField) -> float:
    """``|<T f, g> - <f, T^t g>|`` relative to ``||T f|| ||g||``."""
    a = inner(T.apply(f), g)
    b = inner(f, T.transpose().apply(g))
    scale = max(T.apply(f).norm() * g.norm(), 1e-300)
    return abs(a - b) / scale


def gradient_riesz_identity_check(grid: GridSpec, samples: int = 5, seed: int = 0,
                                  band=(0.2, 3.0)) -> dict:
    """``d_j I^1 f = R_j f`` and ``sum_j R_j^2 = -I`` on seeded zero-mean fields."""
    rng = np.random.default_rng(seed)
    I1 = riesz_potential(1)
    err, comp, real_err = 0.0, 0.0, 0.0
    for _ in range(samples):
        f = random_band_limited(grid, rng, *band)
        scale = max(np.max(np.abs(f.values)), 1e-300)
        acc = np.zeros(grid.shape, complex)
        for j in range(grid.n):
            a = derivative(j).apply(I1.apply(f)).values
            b = riesz_transform(j).apply(f).values
            err = max(err, float(np.max(np.abs(a - b))) / scale)
            real_err = max(real_err, float(np.max(np.abs(b.imag))) / scale)
            acc += riesz_transform(j).apply(riesz_transform(j).apply(f)).values
        comp = max(comp, float(np.max(np.abs(acc + f.values))) / scale)
    return {"max_error": err, "riesz_square_error": comp, "max_imag_part": real_err,
            "ok": err <= 1e-12 and comp <= 1e-12 and real_err <= 1e-12}


def maximal_inequality_check(T: Operator, C_K: float, fields, slack_target: float = 0.10) -> dict:
    """Pointwise ``|T f| <= C_K I^1_q(|f|) (1 + slack)`` for ``f >= 0``.

    ``I^1_q`` is the quadrature form of ``int |f(y)| / |x - y|^{n-1} dy`` on
    the same grid, so the comparison isolates the kernel bound.
    """
    slack = 0.0
    for f in fields:
        g = f.grid
        ref = ConvolutionKernelOperator(lambda d: _norm(d) ** (1 - g.n), "|x|^(1-n)")
        bound = C_K * np.abs(ref.apply(SampledField(g, np.abs(f.values))).values)
        lhs = np.abs(T.apply(f).values)
        mask = bound > 1e-14 * bound.max()
        slack = max(slack, float(np.max(lhs[mask] / bound[mask])) - 1.0)
    slack = max(slack, 0.0)
    return {"slack": slack, "target": slack_target, "ok": slack <= slack_target}
