"""Littlewood-Paley pairs, the paraproduct mollifier and the regularizers.

Radial profiles are stored as functions of ``|xi|``. They are the
unnormalized Fourier transforms; the spectrum of the sampled field under the
``(2 pi)^{-n/2}`` convention is ``(2 pi)^{-n/2}`` times the profile. With
that constant the partition identity ``sum_nu phi^ psi^(2^-nu xi) = 1`` and
the frame identity ``f = sum_Q <f, phi_Q> psi_Q`` hold together.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import jv

from .errors import InvalidProfile, ScaleOutOfRange
from .field import GridSpec, SampledField

__all__ = [
    "DEFAULT_EDGES",
    "COUNTEREXAMPLE_EDGES",
    "COUNTEREXAMPLE_EPS",
    "smooth_step",
    "radial_profile",
    "LittlewoodPaleyPair",
    "Mollifier",
    "build_lp_pair",
    "build_counterexample_phi",
    "build_mollifier",
    "regularizer",
    "hankel_radial",
]

DEFAULT_EDGES = (0.51, 0.75, 1.35, 1.95)
COUNTEREXAMPLE_EDGES = (0.55, 0.60, 5.0 / 3.0, 1.85)
COUNTEREXAMPLE_EPS = 0.05
MOLLIFIER_EDGES = (0.5, 0.95)


def _e(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    a = _e(t)
    b = _e(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def radial_profile(r, edges):
    r0, r1, r2, r3 = edges
    r = np.asarray(r, dtype=float)
    return smooth_step((r - r0) / (r1 - r0)) * smooth_step((r3 - r) / (r3 - r2))


def _gauss_nodes(breaks, per_piece=200):
    x, w = np.polynomial.legendre.leggauss(per_piece)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        nodes.append((x + 1) / 2 * (b - a) + a)
        weights.append(w * (b - a) / 2)
    return np.concatenate(nodes), np.concatenate(weights)


def hankel_radial(profile, breaks, n: int, r, per_piece: int = 200) -> np.ndarray:
    """Spatial values of the function whose unnormalized transform is ``profile``.

    Computes ``(2 pi)^{-n} int profile(|xi|) e^{i x.xi} d xi`` at ``|x| = r``
    through the Hankel form
    ``(2 pi)^{-n/2} r^{1-n/2} int profile(p) J_{n/2-1}(r p) p^{n/2} dp``.
    """
    rho, w = _gauss_nodes(np.asarray(breaks, float), per_piece)
    wf = w * profile(rho)
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    out = np.empty(flat.shape)
    order = n / 2 - 1
    zero = flat == 0
    if np.any(zero):
        from scipy.special import gamma

        lim = np.sum(wf * (rho / 2) ** order / gamma(n / 2) * rho ** (n / 2))
        out[zero] = lim
    nz = np.flatnonzero(~zero)
    for start in range(0, nz.size, 2048):
        idx = nz[start:start + 2048]
        rr = flat[idx][:, None]
        kern = jv(order, rr * rho[None, :]) * rr ** (-order) * rho ** (n / 2)
        out[idx] = kern @ wf
    return (2 * np.pi) ** (-n / 2) * out.reshape(r.shape)


def _validate_edges(edges):
    if len(edges) != 4:
        raise InvalidProfile("need four radial breakpoints")
    r0, r1, r2, r3 = (float(e) for e in edges)
    ok = 0.5 < r0 < r1 <= r2 < r3 < 2.0 and r0 < 0.6 and r3 > 5.0 / 3.0
    if not ok:
        raise InvalidProfile(
            "breakpoints must satisfy 1/2 < r0 < r1 <= r2 < r3 < 2 with r0 < 3/5 and "
            f"r3 > 5/3, got {edges}"
        )
    return (r0, r1, r2, r3)


@dataclass(frozen=True, eq=False)
class LittlewoodPaleyPair:
    """Admissible pair ``(phi, psi)`` sampled on a grid.

    ``psi^ = phi^ / rho`` with ``rho(xi) = sum_nu phi^(2^nu xi)^2``. In
    counterexample mode ``eps_cex`` records the radius of the ball around
    ``e_1`` where ``phi^ = 1`` and its neighbours vanish.
    """

    grid: GridSpec
    edges: tuple = DEFAULT_EDGES
    eps_cex: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def counterexample_mode(self) -> bool:
        return self.eps_cex is not None

    @property
    def spectrum_constant(self) -> float:
        return (2 * np.pi) ** (-self.grid.n / 2)

    def phi_hat(self, r):
        return radial_profile(r, self.edges)

    def rho(self, r):
        r = np.asarray(r, dtype=float)
        r0, _, _, r3 = self.edges
        out = np.zeros_like(r)
        pos = r > 0
        if not np.any(pos):
            return out
        lo = int(np.floor(np.log2(r0 / r[pos].max()))) - 1
        hi = int(np.ceil(np.log2(r3 / r[pos].min()))) + 1
        for nu in range(lo, hi + 1):
            out = out + self.phi_hat(2.0**nu * r) ** 2
        return out

    def psi_hat(self, r):
        r = np.asarray(r, dtype=float)
        p = self.phi_hat(r)
        out = np.zeros_like(r)
        nz = p != 0
        out[nz] = p[nz] / self.rho(r[nz])
        return out

    def profile(self, kind: str):
        if kind == "phi":
            return self.phi_hat
        if kind == "psi":
            return self.psi_hat
        raise ValueError(f"unknown profile {kind!r}")

    def scale_multiplier(self, nu: int, kind: str = "phi") -> np.ndarray:
        """Profile ``kind^(2^-nu |xi|)`` at the grid modes (read-only, cached)."""
        key = (kind, int(nu))
        if key not in self._cache:
            m = self.profile(kind)(2.0 ** (-nu) * self.grid.xi_norm)
            m.setflags(write=False)
            self._cache[key] = m
        return self._cache[key]

    @cached_property
    def phi(self) -> SampledField:
        return SampledField.from_spectrum(self.grid, self.spectrum_constant * self.scale_multiplier(0, "phi"))

    @cached_property
    def psi(self) -> SampledField:
        return SampledField.from_spectrum(self.grid, self.spectrum_constant * self.scale_multiplier(0, "psi"))

    def phi_radial(self, r) -> np.ndarray:
        """Continuum ``phi(x)`` at ``|x| = r`` (no periodization)."""
        return hankel_radial(self.phi_hat, self.edges, self.grid.n, r)

    @cached_property
    def phi0(self) -> float:
        return float(self.phi_radial(0.0))

    @cached_property
    def lower_bound(self) -> float:
        r = np.linspace(0.6, 5.0 / 3.0, 4001)
        return float(np.min(np.abs(self.phi_hat(r))))

    def on_grid(self, grid: GridSpec) -> "LittlewoodPaleyPair":
        return LittlewoodPaleyPair(grid, self.edges, self.eps_cex)

    def profile_hash(self) -> str:
        payload = json.dumps({"edges": [float(e) for e in self.edges], "eps_cex": self.eps_cex})
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def covered_band(self, nu_min: int, nu_max: int) -> tuple[float, float]:
        """Radii where ``sum_{nu_min..nu_max} phi^ psi^(2^-nu xi) = 1``."""
        r0, _, _, r3 = self.edges
        return (2.0**nu_min * r3 / 2, 2.0**nu_max * 2 * r0)

    def partition_sum(self, r, nus) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return sum(self.phi_hat(2.0 ** (-nu) * r) * self.psi_hat(2.0 ** (-nu) * r) for nu in nus)

    def validate(self, nu_min: int | None = None, nu_max: int | None = None) -> dict:
        """Machine-check the admissibility conditions on the grid modes."""
        g = self.grid
        r = g.xi_norm
        p = self.scale_multiplier(0, "phi")
        r0, _, _, r3 = self.edges
        outside = (r <= 0.5) | (r >= 2.0)
        support_ok = bool(np.all(p[outside] == 0))
        spec = self.phi.spectrum
        real_ok = bool(np.max(np.abs(spec.imag)) <= 1e-12 * np.max(np.abs(spec)))
        radial_err = _radial_symmetry_error(p)
        c = self.lower_bound
        rhos = self.rho(np.linspace(0.6, 1.2, 2001))
        report = {
            "edges": [float(e) for e in self.edges],
            "support_in_annulus": support_ok,
            "real": real_ok,
            "radial_symmetry_error": radial_err,
            "lower_bound_c": c,
            "rho_min": float(rhos.min()),
            "rho_max": float(rhos.max()),
            "rho_in_bracket": bool(rhos.min() >= c * c - 1e-12 and rhos.max() <= 2 + 1e-12),
            "phi0": self.phi0,
        }
        if nu_min is not None and nu_max is not None:
            lo, hi = self.covered_band(nu_min, nu_max)
            cov = (r >= lo) & (r <= hi)
            ps = self.partition_sum(r[cov], range(nu_min, nu_max + 1))
            report["partition_error"] = float(np.max(np.abs(ps - 1))) if ps.size else 0.0
            report["covered_modes"] = int(cov.sum())
        report["ok"] = bool(
            support_ok and real_ok and radial_err <= 1e-10 and c > 0 and report["rho_in_bracket"]
            and report.get("partition_error", 0.0) <= 1e-10
        )
        return report


def _radial_symmetry_error(m: np.ndarray) -> float:
    """Max deviation of ``m`` under axis permutations and reflections."""
    err = 0.0
    n = m.ndim
    for a in range(n):
        refl = np.roll(np.flip(m, axis=a), 1, axis=a)
        err = max(err, float(np.max(np.abs(refl - m))))
    for a in range(n - 1):
        err = max(err, float(np.max(np.abs(np.swapaxes(m, a, a + 1) - m))))
    return err


def build_lp_pair(grid: GridSpec, edges=DEFAULT_EDGES) -> LittlewoodPaleyPair:
    """Construct and check a Littlewood-Paley pair with the smooth-step profile."""
    edges = _validate_edges(edges)
    pair = LittlewoodPaleyPair(grid, edges)
    if not pair.phi0 > 0:
        raise InvalidProfile("phi(0) must be positive")
    return pair


def build_counterexample_phi(grid: GridSpec, eps: float = COUNTEREXAMPLE_EPS) -> LittlewoodPaleyPair:
    """Pair with ``phi^ = 1`` on ``B(e_1, eps)`` and zero at ``2 xi``, ``xi / 2`` there."""
    edges = COUNTEREXAMPLE_EDGES
    if grid.fundamental > eps:
        need_L = 2 * np.pi / eps
        raise ScaleOutOfRange(
            f"grid too coarse to certify B(e1, {eps}): mode spacing {grid.fundamental:.4g} > {eps}; "
            f"need L >= {need_L:.4g} (and N >= {int(2 ** np.ceil(np.log2(need_L * 2 * 1.05 / np.pi / 0.9)))})"
        )
    if 2 * (1 + eps) >= 0.9 * grid.nyquist:
        need_N = int(2 ** np.ceil(np.log2(2 * (1 + eps) * grid.L / (0.9 * np.pi))))
        raise ScaleOutOfRange(f"grid too coarse to certify B(e1, {eps}); need N >= {need_N}")
    pair = LittlewoodPaleyPair(grid, edges, eps_cex=float(eps))
    rep = counterexample_certificate(pair)
    if not rep["ok"]:
        raise InvalidProfile(f"counterexample conditions fail: {rep}")
    return pair


def counterexample_certificate(pair: LittlewoodPaleyPair) -> dict:
    """Exhaustive scan of grid modes inside ``B(e_1, eps)``."""
    g = pair.grid
    d2 = (np.broadcast_to(g.xi[0], g.shape) - 1.0) ** 2
    for x in g.xi[1:]:
        d2 = d2 + np.broadcast_to(x, g.shape) ** 2
    ball = d2 <= pair.eps_cex**2
    r = g.xi_norm[ball]
    flat = float(np.max(np.abs(pair.phi_hat(r) - 1))) if r.size else np.inf
    neigh = float(np.max(np.abs(pair.phi_hat(2 * r)) + np.abs(pair.phi_hat(r / 2)))) if r.size else np.inf
    return {"modes_in_ball": int(ball.sum()), "flat_error": flat, "neighbour_max": neigh,
            "ok": bool(r.size > 0 and flat == 0 and neigh == 0)}


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Radial bump ``Phi`` with ``Phi^ = 1`` on ``B(0, 0.5)`` and support in ``B(0, 0.95)``."""

    grid: GridSpec
    edges: tuple = MOLLIFIER_EDGES
    _cache: dict = field(default_factory=dict, repr=False)

    def profile(self, r):
        a, b = self.edges
        return smooth_step((b - np.asarray(r, dtype=float)) / (b - a))

    def scale_multiplier(self, nu: int) -> np.ndarray:
        key = int(nu)
        if key not in self._cache:
            m = self.profile(2.0 ** (-nu) * self.grid.xi_norm)
            m.setflags(write=False)
            self._cache[key] = m
        return self._cache[key]

    @cached_property
    def field(self) -> SampledField:
        c = (2 * np.pi) ** (-self.grid.n / 2)
        return SampledField.from_spectrum(self.grid, c * self.scale_multiplier(0))

    def on_grid(self, grid: GridSpec) -> "Mollifier":
        return Mollifier(grid, self.edges)


def build_mollifier(grid: GridSpec) -> Mollifier:
    return Mollifier(grid)


def regularizer(pair: LittlewoodPaleyPair, j: int, periodic: bool = True) -> SampledField:
    """``eta^j(x) = phi(x / 2^j) / phi(0)``.

    ``periodic=True`` builds the field from its exact spectrum
    ``2^{jn} phi^(2^j xi)`` and normalizes by its own value at the origin; the
    annulus must contain grid modes and stay below Nyquist.
    ``periodic=False`` samples the continuum function on the centered box
    without periodization; it tends to 1 as ``j`` grows, which is what
    stabilized T1 pairings need.
    """
    g = pair.grid
    j = int(j)
    if periodic:
        r0, _, _, r3 = pair.edges
        if r3 * 2.0 ** (-j) <= g.fundamental:
            raise ScaleOutOfRange(f"eta^{j}: annulus below the fundamental mode; use stabilization")
        if r3 * 2.0 ** (-j) >= 0.9 * g.nyquist:
            raise ScaleOutOfRange(f"eta^{j}: annulus beyond 0.9 Nyquist")
        spec = pair.spectrum_constant * 2.0 ** (j * g.n) * pair.phi_hat(2.0**j * g.xi_norm)
        f = SampledField.from_spectrum(g, spec)
        return SampledField(g, f.values / f.values.flat[0])
    key = ("eta", j)
    if key not in pair._cache:
        if "radii" not in pair._cache:
            idx2 = sum(np.broadcast_to(np.rint(x / g.h).astype(np.int64), g.shape) ** 2
                       for x in g.centered_coords)
            pair._cache["radii"] = np.unique(idx2.ravel(), return_inverse=True)
        u, inv = pair._cache["radii"]
        vals = _phi_table(pair)(np.sqrt(u) * g.h / 2.0**j) / pair.phi0
        pair._cache[key] = vals[inv].reshape(g.shape)
    return SampledField(g, pair._cache[key])


def _phi_table(pair: LittlewoodPaleyPair):
    """Cubic spline of the radial ``phi`` on ``[0, sqrt(n) L / 2]``, spacing 0.01."""
    if "phi_spline" not in pair._cache:
        from scipy.interpolate import CubicSpline

        rmax = np.sqrt(pair.grid.n) * pair.grid.L / 2 + 0.1
        r = np.linspace(0.0, rmax, int(np.ceil(rmax / 0.01)) + 1)
        pair._cache["phi_spline"] = CubicSpline(r, pair.phi_radial(r), bc_type=((1, 0.0), "not-a-knot"))
    return pair._cache["phi_spline"]
