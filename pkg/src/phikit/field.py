"""Sampled periodic fields with a continuous-convention Fourier transform.

The box ``[0, L)^n`` is sampled at ``x_j = j h`` with ``h = L / N``. Spectra
use the convention ``f^(xi) = (2 pi)^{-n/2} int f(x) e^{-i x.xi} dx``, i.e.

    spectrum = (2 pi)^{-n/2} h^n fftn(values),

indexed by the integer modes ``m`` of ``numpy.fft.fftfreq`` with
``xi_m = 2 pi m / L``. Parseval then reads
``h^n sum |f|^2 = (2 pi / L)^n sum |f^|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from .errors import InvalidInput, ScaleOutOfRange

__all__ = [
    "GridSpec",
    "SampledField",
    "forward_transform",
    "inverse_transform",
    "dilate",
    "translate",
    "modulate",
    "second_difference",
    "hl_maximal",
    "lp_norm",
    "inner",
    "random_band_limited",
]


def _is_pow2(N: int) -> bool:
    return N >= 1 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Periodic box ``[0, L)^n`` with ``N`` samples per axis."""

    n: int = 2
    L: float = 64.0
    N: int = 256

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInput(f"dimension n must be an integer >= 1, got {self.n}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise InvalidInput(f"box side L must be positive, got {self.L}")
        if int(self.N) != self.N or not _is_pow2(int(self.N)):
            raise InvalidInput(f"N must be a power of two, got {self.N}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @property
    def spectral_weight(self) -> float:
        """Quadrature weight ``(2 pi / L)^n`` of one frequency mode."""
        return (2 * np.pi / self.L) ** self.n

    @property
    def fundamental(self) -> float:
        return 2 * np.pi / self.L

    @property
    def nyquist(self) -> float:
        return np.pi / self.h

    @property
    def supports_kernels(self) -> bool:
        """Order -1 kernels ``|x|^{1-n}`` need ``n >= 2``."""
        return self.n >= 2

    def _axes(self, v: np.ndarray) -> tuple[np.ndarray, ...]:
        out = []
        for a in range(self.n):
            shape = [1] * self.n
            shape[a] = self.N
            out.append(v.reshape(shape))
        return tuple(out)

    @cached_property
    def mode_indices(self) -> tuple[np.ndarray, ...]:
        """Integer modes per axis in FFT order, broadcastable."""
        m = np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(np.int64)
        return self._axes(m)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        return tuple(self.fundamental * m for m in self.mode_indices)

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(sum(np.broadcast_to(x, self.shape) ** 2 for x in self.xi))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Sample positions ``j h`` in ``[0, L)``."""
        return self._axes(np.arange(self.N) * self.h)

    @cached_property
    def centered_coords(self) -> tuple[np.ndarray, ...]:
        """Sample positions wrapped into ``[-L/2, L/2)`` (origin at index 0)."""
        j = np.fft.fftfreq(self.N, 1.0 / self.N)
        return self._axes(j * self.h)

    @cached_property
    def centered_radius(self) -> np.ndarray:
        return np.sqrt(sum(np.broadcast_to(x, self.shape) ** 2 for x in self.centered_coords))

    def torus_displacement(self, d) -> np.ndarray:
        """Wrap displacements into ``[-L/2, L/2)`` per axis."""
        d = np.asarray(d, dtype=float)
        return (d + self.L / 2) % self.L - self.L / 2

    def torus_distance(self, d) -> np.ndarray:
        w = self.torus_displacement(d)
        return np.sqrt(np.sum(w**2, axis=-1))

    def to_dict(self) -> dict:
        return {"n": int(self.n), "L": float(self.L), "N": int(self.N)}


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex samples on a :class:`GridSpec`, with a cached spectrum."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise InvalidInput(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("field has non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SampledField":
        return cls(grid, np.zeros(grid.shape, complex))

    @classmethod
    def from_function(cls, grid: GridSpec, fn, centered: bool = True) -> "SampledField":
        xs = grid.centered_coords if centered else grid.coords
        return cls(grid, np.broadcast_to(fn(*xs), grid.shape))

    @classmethod
    def from_spectrum(cls, grid: GridSpec, spectrum: np.ndarray) -> "SampledField":
        spectrum = np.asarray(spectrum, dtype=complex)
        scale = (2 * np.pi) ** (-grid.n / 2) * grid.cell_volume
        f = cls(grid, np.fft.ifftn(spectrum) / scale)
        object.__setattr__(f, "spectrum", spectrum.copy())
        f.spectrum.setflags(write=False)
        return f

    @cached_property
    def spectrum(self) -> np.ndarray:
        g = self.grid
        s = (2 * np.pi) ** (-g.n / 2) * g.cell_volume * np.fft.fftn(self.values)
        s.setflags(write=False)
        return s

    # pointwise algebra
    def _coerce(self, other):
        if isinstance(other, SampledField):
            if other.grid != self.grid:
                raise InvalidInput("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return SampledField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return SampledField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return SampledField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return SampledField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return SampledField(self.grid, -self.values)

    def conj(self) -> "SampledField":
        return SampledField(self.grid, np.conj(self.values))

    @property
    def real(self) -> "SampledField":
        return SampledField(self.grid, self.values.real)

    def norm(self) -> float:
        return lp_norm(self, 2)

    def resample(self, grid: GridSpec) -> "SampledField":
        """Trigonometric interpolation onto a finer grid with the same box.

        Modes are copied by their signed index; the Nyquist row of an even
        grid has no unique signed index and must be empty.
        """
        g = self.grid
        if grid.L != g.L or grid.n != g.n or grid.N < g.N:
            raise InvalidInput("resample needs the same box and a grid at least as fine")
        spec = self.spectrum
        nyq = np.zeros(g.shape, bool)
        for ax in g.mode_indices:
            nyq |= np.abs(ax) == g.N // 2
        if np.any(np.abs(spec[nyq]) > 1e-12 * max(np.abs(spec).max(), 1e-300)):
            raise InvalidInput("field has Nyquist content; interpolation is ambiguous")
        out = np.zeros(grid.shape, complex)
        idx = np.argwhere(~nyq)
        signed = np.where(idx >= g.N // 2, idx - g.N, idx) % grid.N
        out[tuple(signed.T)] = spec[tuple(idx.T)]
        f = SampledField.from_spectrum(grid, out)
        return f if np.iscomplexobj(self.values) else SampledField(grid, f.values.real)

    def mean_integral(self) -> complex:
        """``int f`` over the box, equal to ``(2 pi)^{n/2}`` times the zero mode."""
        return complex(self.values.sum() * self.grid.cell_volume)


def forward_transform(f: SampledField) -> np.ndarray:
    """Spectrum of ``f`` at the grid modes (continuous convention)."""
    return f.spectrum


def inverse_transform(grid: GridSpec, spectrum: np.ndarray) -> SampledField:
    return SampledField.from_spectrum(grid, spectrum)


def inner(f: SampledField, g: SampledField) -> complex:
    """``<f, g> = int f conj(g)`` by box quadrature."""
    if f.grid != g.grid:
        raise InvalidInput("fields live on different grids")
    return complex(np.vdot(g.values, f.values) * f.grid.cell_volume)


def lp_norm(f: SampledField, p: float) -> float:
    """Riemann-sum ``L^p`` norm; ``p = inf`` gives the max modulus."""
    if not p >= 1:
        raise InvalidInput(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * f.grid.cell_volume))
    return float((np.sum(a**p) * f.grid.cell_volume) ** (1.0 / p))


def translate(f: SampledField, y) -> SampledField:
    """``tau_y f (x) = f(x - y)``, exact in frequency for any real ``y``."""
    g = f.grid
    y = np.broadcast_to(np.asarray(y, dtype=float), (g.n,))
    phase = np.exp(-1j * sum(yi * xi for yi, xi in zip(y, g.xi)))
    return SampledField.from_spectrum(g, f.spectrum * phase)


def modulate(f: SampledField, mode) -> SampledField:
    """Multiply by the grid character ``e^{i xi_m . x}`` for integer mode ``m``."""
    g = f.grid
    m = np.broadcast_to(np.asarray(mode, dtype=np.int64), (g.n,))
    phase = np.exp(1j * sum(mi * g.fundamental * x for mi, x in zip(m, g.coords)))
    return SampledField(g, f.values * phase)


def second_difference(f: SampledField, step) -> SampledField:
    """``tau_{-h} f + tau_h f - 2 f`` for a lattice step ``h`` (integer samples)."""
    g = f.grid
    step = np.asarray(step)
    if step.shape != (g.n,) or not np.all(step == np.round(step)):
        raise InvalidInput("step must be an integer vector of length n (sample units)")
    s = tuple(int(v) for v in step)
    axes = tuple(range(g.n))
    fwd = np.roll(f.values, s, axis=axes)
    bwd = np.roll(f.values, tuple(-v for v in s), axis=axes)
    return SampledField(g, fwd + bwd - 2 * f.values)


def dilate(f: SampledField, nu: int, tol: float = 1e-10) -> SampledField:
    """Return ``f_nu(x) = 2^{nu n} f(2^nu x)`` so that ``(f_nu)^(xi) = f^(2^{-nu} xi)``.

    For ``nu > 0`` one period is compressed into the centered window of side
    ``L / 2^nu`` and the rest is zero; for ``nu < 0`` the spectrum is
    subsampled. Either way the part that cannot be represented is measured
    and a :class:`ScaleOutOfRange` is raised if its relative energy exceeds
    ``tol``.
    """
    nu = int(nu)
    if nu == 0:
        return f
    g = f.grid
    s = 2 ** abs(nu)
    if s >= g.N:
        raise ScaleOutOfRange(f"dilation 2^{nu} collapses below one sample on N={g.N}")
    total = float(np.sum(np.abs(f.spectrum) ** 2))
    if nu > 0:
        m = np.broadcast_arrays(*g.mode_indices)
        beyond = np.zeros(g.shape, bool)
        for mi in m:
            beyond |= np.abs(mi) >= g.N // (2 * s)
        lost = float(np.sum(np.abs(f.spectrum[beyond]) ** 2))
        if total > 0 and lost > tol * total:
            raise ScaleOutOfRange(
                f"dilate({nu}): relative spectral energy {lost / total:.3g} beyond the "
                "compressed band"
            )
        j = np.fft.fftfreq(g.N, 1.0 / g.N).astype(np.int64)
        inside = np.abs(j) < g.N // (2 * s)
        idx = (j * s) % g.N
        out = f.values
        for a in range(g.n):
            out = np.take(out, idx, axis=a)
        mask = np.ones(g.shape, bool)
        for a in range(g.n):
            shape = [1] * g.n
            shape[a] = g.N
            mask = mask & inside.reshape(shape)
        return SampledField(g, np.where(mask, out * float(s) ** g.n, 0))
    r = g.centered_coords
    outside = np.zeros(g.shape, bool)
    for x in r:
        outside |= np.abs(x) >= g.L / (2 * s)
    energy = float(np.sum(np.abs(f.values) ** 2))
    lost = float(np.sum(np.abs(f.values[outside]) ** 2))
    if energy > 0 and lost > tol * energy:
        raise ScaleOutOfRange(
            f"dilate({nu}): relative spatial energy {lost / energy:.3g} outside the "
            "window that stretches onto the box"
        )
    j = np.fft.fftfreq(g.N, 1.0 / g.N).astype(np.int64)
    idx = (j * s) % g.N
    keep = np.abs(j * s) < g.N // 2
    spec = f.spectrum
    for a in range(g.n):
        spec = np.take(spec, idx, axis=a)
    mask = np.ones(g.shape, bool)
    for a in range(g.n):
        shape = [1] * g.n
        shape[a] = g.N
        mask = mask & keep.reshape(shape)
    return SampledField.from_spectrum(g, np.where(mask, spec, 0))


def hl_maximal(f: SampledField) -> SampledField:
    """Discrete Hardy-Littlewood maximal function over centered cubes.

    Cubes have side ``2r + 1`` samples for ``r`` in ``{0, 1, 2, 4, ...}``
    with ``2r + 1 <= N``.
    """
    g = f.grid
    a = np.abs(f.values)
    out = a.copy()
    r = 1
    while 2 * r + 1 <= g.N:
        avg = ndimage.uniform_filter(a, size=2 * r + 1, mode="wrap")
        np.maximum(out, avg, out=out)
        r *= 2
    return SampledField(g, out)


def random_band_limited(
    grid: GridSpec,
    rng: np.random.Generator,
    lo: float,
    hi: float,
    real: bool = True,
) -> SampledField:
    """Seeded field with complex Gaussian spectrum on ``lo <= |xi| <= hi``.

    With ``real=True`` the spectrum is symmetrized so the samples are real.
    """
    mask = (grid.xi_norm >= lo) & (grid.xi_norm <= hi)
    spec = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * mask
    f = SampledField.from_spectrum(grid, spec)
    if real:
        f = SampledField(grid, f.values.real)
    return f
