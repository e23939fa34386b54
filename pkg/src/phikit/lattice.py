"""Dyadic cubes, truncated lattices and L2-normalized localization."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import InvalidInput, ScaleOutOfRange
from .field import GridSpec, SampledField, dilate, translate

__all__ = [
    "DyadicCube",
    "TruncatedLattice",
    "admissible_scales",
    "cube_arrays",
    "localize",
    "normalized_indicator",
    "cube_geometry",
    "pair_geometry",
]


@dataclass(frozen=True, order=True)
class DyadicCube:
    """``Q_{nu k} = 2^{-nu} (k + [0, 1)^n)``."""

    nu: int
    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "nu", int(self.nu))
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 2**self.nu) if self.nu >= 0 else Fraction(2 ** (-self.nu))

    @property
    def volume(self) -> Fraction:
        return self.side**self.n

    @property
    def corner(self) -> np.ndarray:
        return np.array(self.k, dtype=float) * float(self.side)

    def to_tuple(self) -> tuple:
        return (self.nu,) + self.k


def _scale_ok(grid: GridSpec, nu: int) -> tuple[bool, str]:
    if not 2.0 ** (nu - 1) > grid.fundamental:
        return False, f"annulus of scale {nu} reaches below the fundamental mode"
    if not 2.0 ** (nu + 1) < 0.9 * grid.nyquist:
        return False, f"annulus of scale {nu} reaches beyond 0.9 Nyquist"
    m = grid.L * 2.0**nu
    if abs(m - round(m)) > 1e-9 or round(m) < 1:
        return False, f"L 2^{nu} = {m:g} is not an integer: cubes do not tile the box"
    if grid.N % int(round(m)):
        return False, f"cube corners of scale {nu} are not grid samples"
    return True, ""


def admissible_scales(grid: GridSpec) -> list[int]:
    lo = int(np.floor(np.log2(grid.fundamental))) - 2
    hi = int(np.ceil(np.log2(grid.nyquist))) + 1
    return [nu for nu in range(lo, hi + 1) if _scale_ok(grid, nu)[0]]


def cube_arrays(n: int, L: float, nus) -> tuple[np.ndarray, np.ndarray]:
    """Scales and lower-left corners of all cubes of the given scales tiling ``[0, L)^n``."""
    all_nu, all_x = [], []
    for nu in nus:
        m = int(round(L * 2.0**nu))
        if m < 1 or abs(m - L * 2.0**nu) > 1e-9:
            raise ScaleOutOfRange(f"scale {nu} does not tile a box of side {L}")
        grids = np.meshgrid(*([np.arange(m)] * n), indexing="ij")
        k = np.stack([gg.ravel() for gg in grids], axis=1)
        all_nu.append(np.full(len(k), nu, dtype=np.int64))
        all_x.append(k * 2.0 ** (-nu))
    return np.concatenate(all_nu), np.concatenate(all_x)


@dataclass(frozen=True, eq=False)
class TruncatedLattice:
    """All dyadic cubes of scales ``nu_min..nu_max`` tiling the periodic box.

    Cubes are stored scale by scale in C order of ``k``; ``offsets[i]`` is the
    flat index of the first cube of scale ``nu_min + i``.
    """

    grid: GridSpec
    nu_min: int
    nu_max: int

    def __post_init__(self):
        if self.nu_max < self.nu_min:
            raise InvalidInput("empty scale range")
        for nu in self.scales:
            ok, why = _scale_ok(self.grid, nu)
            if not ok:
                raise ScaleOutOfRange(why)

    @classmethod
    def default(cls, grid: GridSpec) -> "TruncatedLattice":
        s = admissible_scales(grid)
        if not s:
            raise ScaleOutOfRange(f"no admissible dyadic scale on {grid}")
        return cls(grid, s[0], s[-1])

    @property
    def scales(self) -> range:
        return range(self.nu_min, self.nu_max + 1)

    def cubes_per_axis(self, nu: int) -> int:
        return int(round(self.grid.L * 2.0**nu))

    def stride(self, nu: int) -> int:
        """Samples per cube side at scale ``nu``."""
        return self.grid.N // self.cubes_per_axis(nu)

    def scale_count(self, nu: int) -> int:
        return self.cubes_per_axis(nu) ** self.grid.n

    @cached_property
    def offsets(self) -> np.ndarray:
        counts = [self.scale_count(nu) for nu in self.scales]
        return np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def __len__(self) -> int:
        return self.size

    def scale_slice(self, nu: int) -> slice:
        i = nu - self.nu_min
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @cached_property
    def _arrays(self):
        return cube_arrays(self.grid.n, self.grid.L, self.scales)

    @property
    def nus(self) -> np.ndarray:
        return self._arrays[0]

    @property
    def corners(self) -> np.ndarray:
        return self._arrays[1]

    @property
    def sides(self) -> np.ndarray:
        return 2.0 ** (-self.nus.astype(float))

    def index(self, cube: DyadicCube) -> int:
        if cube.nu not in self.scales:
            raise InvalidInput(f"scale {cube.nu} not in lattice")
        m = self.cubes_per_axis(cube.nu)
        k = np.mod(cube.k, m)
        flat = int(np.ravel_multi_index(tuple(k), (m,) * self.grid.n))
        return int(self.offsets[cube.nu - self.nu_min]) + flat

    def cube(self, i: int) -> DyadicCube:
        nu = int(self.nus[i])
        m = self.cubes_per_axis(nu)
        k = np.unravel_index(i - int(self.offsets[nu - self.nu_min]), (m,) * self.grid.n)
        return DyadicCube(nu, tuple(int(v) for v in k))

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "nu_min": int(self.nu_min), "nu_max": int(self.nu_max)}

    def same_as(self, other: "TruncatedLattice") -> bool:
        return self.grid == other.grid and self.nu_min == other.nu_min and self.nu_max == other.nu_max


def localize(f: SampledField, Q: DyadicCube) -> SampledField:
    """``f_Q = |Q|^{1/2} f_nu(x - x_Q)``; spectrum ``|Q|^{1/2} e^{-i x_Q.xi} f^(2^-nu xi)``."""
    g = f.grid
    if Q.n != g.n:
        raise InvalidInput("cube dimension does not match the grid")
    fn = dilate(f, Q.nu)
    return translate(fn, Q.corner) * float(Q.volume) ** 0.5


def normalized_indicator(grid: GridSpec, Q: DyadicCube) -> SampledField:
    """``|Q|^{-1/2} chi_Q`` sampled on the grid (periodic wrap)."""
    side = float(Q.side)
    s = side / grid.h
    if s < 1 or abs(s - round(s)) > 1e-9:
        raise ScaleOutOfRange(f"cube side {side} is not a whole number of samples (h={grid.h})")
    s = int(round(s))
    mask = np.ones(grid.shape, bool)
    for a in range(grid.n):
        start = int(round(Q.corner[a] / grid.h)) % grid.N
        idx = (start + np.arange(s)) % grid.N
        ax = np.zeros(grid.N, bool)
        ax[idx] = True
        shape = [1] * grid.n
        shape[a] = grid.N
        mask = mask & ax.reshape(shape)
    return SampledField(grid, mask / float(Q.volume) ** 0.5)


def cube_geometry(P: DyadicCube, Q: DyadicCube, L: float | None = None):
    """``(l(P) ^ l(Q), l(P) v l(Q), |x_P - x_Q|)``; torus metric when ``L`` is given."""
    lp, lq = P.side, Q.side
    d = P.corner - Q.corner
    if L is not None:
        d = (d + L / 2) % L - L / 2
    return min(lp, lq), max(lp, lq), float(np.sqrt(np.sum(d * d)))


def pair_geometry(nu_p, x_p, nu_q, x_q, L: float | None = None):
    """Vectorized :func:`cube_geometry` on scale and corner arrays."""
    lp = 2.0 ** (-np.asarray(nu_p, dtype=float))
    lq = 2.0 ** (-np.asarray(nu_q, dtype=float))
    d = np.asarray(x_p, dtype=float) - np.asarray(x_q, dtype=float)
    if L is not None:
        d = (d + L / 2) % L - L / 2
    return np.minimum(lp, lq), np.maximum(lp, lq), np.sqrt(np.sum(d * d, axis=-1))
