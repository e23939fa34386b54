"""The phi-transform ``S_phi``, its left inverse ``T_psi`` and diagnostics.

All pairings are computed in frequency. For one scale ``nu`` the analysis
coefficients are the samples, at the cube corners, of the inverse transform
of ``f^ . conj(phi^_nu)``; since cube corners form a sub-lattice of the grid,
the subsampling is done by folding the spectrum modulo the coarse grid.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CoverageWarning, InvalidInput
from .field import GridSpec, SampledField, inner
from .lattice import DyadicCube, TruncatedLattice

__all__ = [
    "CoefficientSequence",
    "analyze",
    "synthesize",
    "reconstruction_residual",
    "uncovered_fraction",
    "pairing_expansion",
    "cube_function",
    "save_coefficients",
    "load_coefficients",
]


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """Complex values ``s_Q`` indexed by the cubes of a lattice (flat order)."""

    lattice: TruncatedLattice
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        if v.size != self.lattice.size:
            raise InvalidInput(f"expected {self.lattice.size} values, got {v.size}")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, lattice: TruncatedLattice) -> "CoefficientSequence":
        return cls(lattice, np.zeros(lattice.size, complex))

    @classmethod
    def unit(cls, lattice: TruncatedLattice, cube: DyadicCube, value: complex = 1.0):
        v = np.zeros(lattice.size, complex)
        v[lattice.index(cube)] = value
        return cls(lattice, v)

    def scale_block(self, nu: int) -> np.ndarray:
        m = self.lattice.cubes_per_axis(nu)
        return self.values[self.lattice.scale_slice(nu)].reshape((m,) * self.lattice.grid.n)

    def _check(self, other):
        if not self.lattice.same_as(other.lattice):
            raise InvalidInput("sequences live on different lattices")

    def __add__(self, other):
        self._check(other)
        return CoefficientSequence(self.lattice, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return CoefficientSequence(self.lattice, self.values - other.values)

    def __mul__(self, c):
        return CoefficientSequence(self.lattice, self.values * c)

    __rmul__ = __mul__


def _multiplier(frame, nu: int, kind: str) -> np.ndarray:
    """Normalized spectrum factor of the scale-``nu`` mother function."""
    c = (2 * np.pi) ** (-frame.grid.n / 2)
    if kind == "Phi":
        return c * frame.scale_multiplier(nu)
    return c * frame.scale_multiplier(nu, kind)


def _fold(X: np.ndarray, M: int) -> np.ndarray:
    """Sum ``X`` over modes congruent modulo ``M`` on every axis."""
    N = X.shape[0]
    s = N // M
    for a in range(X.ndim):
        shape = X.shape[:a] + (s, M) + X.shape[a + 1:]
        X = X.reshape(shape).sum(axis=a)
    return X


def _tile(Y: np.ndarray, N: int) -> np.ndarray:
    M = Y.shape[0]
    idx = np.arange(N) % M
    for a in range(Y.ndim):
        Y = np.take(Y, idx, axis=a)
    return Y


def analyze_scale(spectrum: np.ndarray, frame, lattice: TruncatedLattice, nu: int, kind: str = "phi"):
    """``<f, g_Q>`` for all cubes of scale ``nu`` as an ``M^n`` array."""
    g = lattice.grid
    M = lattice.cubes_per_axis(nu)
    X = spectrum * _multiplier(frame, nu, kind)
    coarse = np.fft.ifftn(_fold(X, M)) * float(M) ** g.n
    return coarse * 2.0 ** (-nu * g.n / 2) * g.spectral_weight


def analyze(f: SampledField, frame, lattice: TruncatedLattice, kind: str = "phi") -> CoefficientSequence:
    """``(S_phi f)_Q = <f, phi_Q>`` for every lattice cube.

    ``kind`` selects the analysing family: ``"phi"``, ``"psi"``, or ``"Phi"``
    when ``frame`` is a :class:`~phikit.lp.Mollifier`.
    """
    if f.grid != lattice.grid:
        raise InvalidInput("field and lattice live on different grids")
    spec = f.spectrum
    blocks = [analyze_scale(spec, frame, lattice, nu, kind).ravel() for nu in lattice.scales]
    return CoefficientSequence(lattice, np.concatenate(blocks))


def synthesis_spectrum(s: CoefficientSequence, frame, kind: str = "psi") -> np.ndarray:
    lat = s.lattice
    g = lat.grid
    out = np.zeros(g.shape, complex)
    for nu in lat.scales:
        block = s.scale_block(nu)
        if not np.any(block):
            continue
        S = _tile(np.fft.fftn(block), g.N)
        out += 2.0 ** (-nu * g.n / 2) * _multiplier(frame, nu, kind) * S
    return out


def synthesize(s: CoefficientSequence, frame, kind: str = "psi") -> SampledField:
    """``T_psi s = sum_Q s_Q psi_Q``, accumulated scale by scale in frequency."""
    return SampledField.from_spectrum(s.lattice.grid, synthesis_spectrum(s, frame, kind))


def cube_function(frame, lattice: TruncatedLattice, cube: DyadicCube, kind: str = "psi") -> SampledField:
    """``g_Q`` for ``g`` in ``{phi, psi, Phi}``, built from its spectrum."""
    g = lattice.grid
    phase = np.exp(-1j * sum(x * xi for x, xi in zip(cube.corner, g.xi)))
    spec = float(cube.volume) ** 0.5 * phase * _multiplier(frame, cube.nu, kind)
    return SampledField.from_spectrum(g, spec)


def uncovered_fraction(f: SampledField, pair, lattice: TruncatedLattice) -> float:
    """Relative spectral mass of ``f`` not reproduced by the truncated partition."""
    chi = pair.partition_sum(lattice.grid.xi_norm, lattice.scales)
    num = np.sum(np.abs((1 - chi) * f.spectrum) ** 2)
    den = np.sum(np.abs(f.spectrum) ** 2)
    return float(np.sqrt(num / den)) if den > 0 else 0.0


def reconstruction_residual(f: SampledField, pair, lattice: TruncatedLattice) -> float:
    """``||f - T_psi S_phi f||_2 / ||f||_2`` (absolute residual when ``f = 0``)."""
    rec = synthesize(analyze(f, pair, lattice), pair)
    diff = (f - rec).norm()
    nf = f.norm()
    return diff / nf if nf > 0 else diff


def pairing_expansion(f: SampledField, g: SampledField, pair, lattice: TruncatedLattice,
                      tol: float = 1e-8) -> dict:
    """``sum_Q <f, phi_Q><psi_Q, g>`` against the direct ``<f, g>``."""
    a = analyze(f, pair, lattice, "phi").values
    b = np.conj(analyze(g, pair, lattice, "psi").values)
    value = complex(np.sum(a * b))
    direct = inner(f, g)
    cov = uncovered_fraction(g, pair, lattice)
    scale = max(abs(direct), f.norm() * g.norm(), 1e-300)
    err = abs(value - direct) / scale
    rep = {"value": value, "direct": direct, "relative_error": err, "uncovered_fraction_g": cov,
           "coverage_warning": cov > tol, "ok": err <= tol}
    if cov > tol:
        warnings.warn(f"g has uncovered spectral fraction {cov:.3g}", CoverageWarning, stacklevel=2)
    return rep


def save_coefficients(path, s: CoefficientSequence) -> None:
    lat = s.lattice
    with open(path, "w") as fh:
        fh.write("# " + json.dumps({"lattice": lat.to_dict()}) + "\n")
        cols = ["nu"] + [f"k{a}" for a in range(lat.grid.n)] + ["re", "im"]
        fh.write(" ".join(cols) + "\n")
        ks = np.rint(lat.corners * 2.0 ** lat.nus[:, None]).astype(np.int64)
        for nu, k, v in zip(lat.nus, ks, s.values):
            fh.write(f"{nu} {' '.join(str(int(x)) for x in k)} {float(v.real)!r} {float(v.imag)!r}\n")


def load_coefficients(path) -> CoefficientSequence:
    with open(path) as fh:
        header = json.loads(fh.readline()[2:])
        fh.readline()
        rows = [line.split() for line in fh if line.strip()]
    ld = header["lattice"]
    lat = TruncatedLattice(GridSpec(**ld["grid"]), ld["nu_min"], ld["nu_max"])
    vals = np.zeros(lat.size, complex)
    n = lat.grid.n
    for r in rows:
        cube = DyadicCube(int(r[0]), tuple(int(x) for x in r[1:1 + n]))
        vals[lat.index(cube)] = complex(float(r[1 + n]), float(r[2 + n]))
    return CoefficientSequence(lat, vals)
