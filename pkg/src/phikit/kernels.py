"""Standard-kernel estimates, kernel synthesis from operator matrices, Riesz
constant calibration and the zero-operator sanity check."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationFailure, InvalidInput
from .field import GridSpec, SampledField
from .matrix import OperatorMatrix
from .operators import Operator, riesz_potential
from .transform import CoefficientSequence, analyze, cube_function, synthesize

__all__ = [
    "check_standard_kernel",
    "sample_kernel_points",
    "SynthesizedKernel",
    "synthesize_kernel",
    "kernel_column",
    "grid_kernel",
    "RieszCalibration",
    "calibrate_riesz_constant",
    "riesz_constant_quadrature",
    "zero_operator_sanity",
    "kernel_loop_check",
]


def _directions(n: int, count: int, rng) -> np.ndarray:
    if n == 2:
        t = np.pi * np.arange(count) / count * 2 + 0.1
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_kernel_points(n: int, separations, directions: int = 12, h_fractions=(0.5, 0.25, 0.125),
                         h_directions: int = 6, base_points: int = 2, seed: int = 0,
                         grid: GridSpec | None = None) -> dict:
    """Stratified ``(x, y, h)`` samples with ``0 < |h| <= |x - y| / 2``.

    With ``grid`` all points and steps are rounded to grid vectors (steps that
    round to zero or leave the constraint region are dropped).
    """
    rng = np.random.default_rng(seed)
    separations = np.asarray(separations, dtype=float)
    if np.any(separations <= 0):
        raise InvalidInput("diagonal evaluation requested (separation <= 0)")
    box = grid.L if grid is not None else 1.0
    ys = rng.random((base_points, n)) * box
    udir = _directions(n, directions, rng)
    hdir = _directions(n, h_directions, np.random.default_rng(seed + 1))
    hdir = hdir @ np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]]).T if n == 2 else hdir
    rows = {"x": [], "y": [], "h": [], "stratum": []}
    snap = (lambda v: np.rint(v / grid.h) * grid.h) if grid is not None else (lambda v: v)
    if grid is not None:
        ys = snap(ys)
    for k, d in enumerate(separations):
        for y in ys:
            for u in udir:
                dx = snap(d * u)
                r = np.linalg.norm(dx)
                if r == 0:
                    continue
                for fr in h_fractions:
                    for v in hdir:
                        hv = snap(fr * r * v)
                        hr = np.linalg.norm(hv)
                        if hr == 0 or hr > r / 2 + 1e-12:
                            continue
                        rows["x"].append(y + dx)
                        rows["y"].append(y)
                        rows["h"].append(hv)
                        rows["stratum"].append(k)
    out = {key: np.array(v) for key, v in rows.items()}
    if grid is not None:
        out["x"] = np.mod(out["x"], grid.L)
    return out


def check_standard_kernel(K, delta: float, n: int = 2, separations=None, grid: GridSpec | None = None,
                          seed: int = 0, directions: int = 12, base_points: int = 2,
                          diverge_slope: float = -0.5, stratum_tol: float = 0.10) -> dict:
    """Least constants in the size and second-difference estimates of an
    order ``-1`` kernel, per separation stratum and overall.

    ``K(x, y)`` is evaluated pointwise on ``(m, n)`` arrays. On a ``grid`` the
    separations default to a geometric range from 4 cells to ``L/4``. A kernel
    fails when a constant is not finite or the size constant grows toward the
    diagonal (log-log slope of the stratum constants below ``diverge_slope``).
    """
    if not 0 < delta <= 1:
        raise InvalidInput("need 0 < delta <= 1")
    if separations is None:
        lo, hi = (4 * grid.h, grid.L / 4) if grid is not None else (1e-2, 1.0)
        separations = np.geomspace(lo, hi, 6)
    separations = np.asarray(separations, dtype=float)
    S = sample_kernel_points(n, separations, directions=directions, base_points=base_points, seed=seed, grid=grid)
    x, y, h, strat = S["x"], S["y"], S["h"], S["stratum"]
    dist = np.linalg.norm(x - y if grid is None else grid.torus_displacement(x - y), axis=1)
    hn = np.linalg.norm(h, axis=1)
    k0 = K(x, y)
    size = np.abs(k0) / dist ** (1 - n)
    d2x = K(x + h, y) + K(x - h, y) - 2 * k0
    d2y = K(x, y + h) + K(x, y - h) - 2 * k0
    env = hn ** (1 + delta) / dist ** (n + delta)
    est = {"size": size, "x_difference": np.abs(d2x) / env, "y_difference": np.abs(d2y) / env}
    report = {"delta": delta, "samples": int(len(x)), "separations": separations.tolist(), "estimates": {}}
    for name, vals in est.items():
        per = [float(np.max(vals[strat == k])) if np.any(strat == k) else np.nan for k in range(len(separations))]
        per_a = np.array(per)
        ok = np.isfinite(per_a) & (per_a > 0)
        slope = float(np.polyfit(np.log(separations[ok]), np.log(per_a[ok]), 1)[0]) if ok.sum() >= 2 else 0.0
        finite = bool(np.all(np.isfinite(vals)))
        report["estimates"][name] = {
            "C": float(np.max(vals)) if finite else float("inf"),
            "per_stratum": per,
            "stratum_variation": float(np.nanmax(per_a) / np.nanmin(per_a) - 1) if ok.all() else float("inf"),
            "log_slope": slope,
            "finite": finite,
        }
    e = report["estimates"]
    report["C_K"] = max(v["C"] for v in e.values())
    report["diverging_toward_diagonal"] = bool(e["size"]["log_slope"] < diverge_slope)
    report["scale_honest"] = bool(all(v["stratum_variation"] <= stratum_tol for v in e.values()))
    # continuity spot check: first differences at the finest stratum shrink with the step
    fine = strat == 0
    step = hn[fine][:, None] / 8 * (h[fine] / hn[fine][:, None]) if grid is None else None
    if step is not None and np.any(fine):
        jump = np.abs(K(x[fine] + step, y[fine]) - k0[fine]) / np.maximum(np.abs(k0[fine]), 1e-300)
        report["continuity_max_relative_jump"] = float(np.max(jump))
    report["passes"] = bool(all(v["finite"] for v in e.values()) and not report["diverging_toward_diagonal"])
    return report


class SynthesizedKernel:
    """``K(x, y) = sum_{Q,P} A_{Q,P} conj(phi_P(y)) psi_Q(x)`` evaluated at grid points.

    Columns ``K(., y)`` are ``T_psi A S_phi delta_y``; rows ``K(x, .)`` come
    from the conjugate-transposed matrix. Both are cached by grid index.
    """

    def __init__(self, A: OperatorMatrix, pair):
        self.A = A
        self.pair = pair
        self.lattice = A.lattice
        self.grid = A.lattice.grid
        self._cols: dict = {}
        self._rows: dict = {}
        self._AH = None

    def _index(self, p) -> tuple:
        g = self.grid
        k = np.asarray(p, dtype=float) / g.h
        r = np.rint(k)
        if np.max(np.abs(k - r)) > 1e-6:
            raise InvalidInput("kernel points must lie on the grid")
        return tuple(int(v) % g.N for v in r)

    def _delta(self, idx) -> SampledField:
        g = self.grid
        v = np.zeros(g.shape, complex)
        v[idx] = 1.0 / g.cell_volume
        return SampledField(g, v)

    def column(self, y) -> np.ndarray:
        idx = self._index(y)
        if idx not in self._cols:
            a = analyze(self._delta(idx), self.pair, self.lattice, "phi")
            w = CoefficientSequence(self.lattice, self.A.apply(a.values))
            self._cols[idx] = synthesize(w, self.pair, "psi").values
        return self._cols[idx]

    def row(self, x) -> np.ndarray:
        idx = self._index(x)
        if idx not in self._rows:
            if self._AH is None:
                self._AH = self.A.conj_transpose()
            a = analyze(self._delta(idx), self.pair, self.lattice, "psi")
            w = CoefficientSequence(self.lattice, self._AH.apply(a.values))
            self._rows[idx] = np.conj(synthesize(w, self.pair, "phi").values)
        return self._rows[idx]

    def __call__(self, x, y) -> np.ndarray:
        """Pointwise evaluation on ``(m, n)`` arrays (grouped by ``y``)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x, y = np.broadcast_arrays(x, y)
        g = self.grid
        if np.any(g.torus_distance(x - y) < g.h * (1 - 1e-9)):
            raise InvalidInput("diagonal evaluation requested (x = y)")
        out = np.empty(len(x), complex)
        yk = [self._index(p) for p in y]
        xk = np.mod(np.rint(x / g.h).astype(np.int64), g.N)
        for key in set(yk):
            sel = np.array([k == key for k in yk])
            col = self.column(np.array(key) * g.h)
            out[sel] = col[tuple(xk[sel].T)]
        return out

    def eval_rows(self, x, y) -> np.ndarray:
        """Like ``__call__`` but through cached rows (grouped by ``x``)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x, y = np.broadcast_arrays(x, y)
        g = self.grid
        out = np.empty(len(x), complex)
        xk = [self._index(p) for p in x]
        yk = np.mod(np.rint(y / g.h).astype(np.int64), g.N)
        for key in set(xk):
            sel = np.array([k == key for k in xk])
            out[sel] = self.row(np.array(key) * g.h)[tuple(yk[sel].T)]
        return out


def synthesize_kernel(A: OperatorMatrix, pair, x, y) -> complex:
    """Truncated double sum ``K(x, y)`` at one pair of grid points."""
    return complex(SynthesizedKernel(A, pair)(x, y)[0])


def kernel_column(A: OperatorMatrix, pair, y) -> SampledField:
    """``K(., y)`` over the whole grid."""
    K = SynthesizedKernel(A, pair)
    return SampledField(K.grid, K.column(y))


def grid_kernel(table: np.ndarray, grid: GridSpec):
    """Pointwise translation-invariant kernel ``K(x, y) = table[x - y]`` on grid points."""

    def K(x, y):
        d = np.mod(np.rint((np.asarray(x) - np.asarray(y)) / grid.h).astype(np.int64), grid.N)
        return table[tuple(np.atleast_2d(d).T)]

    return K


@dataclass(frozen=True)
class RieszCalibration:
    c: float
    offset: float
    residual: float
    s: float
    n: int
    window: tuple

    def kernel(self, r):
        return self.c * np.asarray(r, dtype=float) ** (self.s - self.n)

    def to_dict(self) -> dict:
        return {"c": self.c, "offset": self.offset, "residual": self.residual, "s": self.s, "n": self.n,
                "window": list(self.window)}


def calibrate_riesz_constant(grid: GridSpec, s: float = 1.0, operator: Operator | None = None,
                             window=None, width_cells: float = 1.5, max_residual: float = 0.05) -> RieszCalibration:
    """Fit ``c`` in ``c |x - y|^{s-n} + offset`` to the spatial kernel of ``I^s``.

    The kernel is obtained by applying the operator to a narrow Gaussian bump
    and dividing out the bump spectrum. The offset absorbs the missing zero
    mode of the torus operator. ``window`` defaults to ``[8 h, L/8]``.
    """
    n = grid.n
    if n < 2:
        raise InvalidInput("need n >= 2")
    if not 0 < s < n:
        raise InvalidInput("need 0 < s < n")
    T = operator if operator is not None else riesz_potential(s)
    sigma = width_cells * grid.h
    bump = SampledField.from_function(grid, lambda *xs: np.exp(-sum(x * x for x in xs) / (2 * sigma**2)))
    u = T.apply(bump)
    B = bump.spectrum
    keep = np.abs(B) > 1e-10 * np.abs(B).max()
    spec = np.where(keep, u.spectrum / np.where(keep, B, 1), 0)
    # kernel table k with T f = k * f: k(x) = (2 pi)^{-n} int m e^{i x.xi}
    k = np.fft.ifftn(spec).real / grid.cell_volume
    r = grid.centered_radius
    lo, hi = window if window is not None else (8 * grid.h, grid.L / 8)
    m = (r >= lo) & (r <= hi)
    if m.sum() < 8:
        raise InvalidInput(f"fit window [{lo}, {hi}] holds too few samples on this grid")
    X = np.stack([r[m] ** (s - n), np.ones(m.sum())], axis=1)
    coef, *_ = np.linalg.lstsq(X, k[m], rcond=None)
    fit = X @ coef
    resid = float(np.max(np.abs(fit - k[m]) / np.abs(coef[0] * r[m] ** (s - n))))
    cal = RieszCalibration(float(coef[0]), float(coef[1]), resid, float(s), n, (float(lo), float(hi)))
    if resid > max_residual:
        raise CalibrationFailure(f"Riesz kernel fit residual {resid:.3g} exceeds {max_residual}")
    return cal


def riesz_constant_quadrature(n: int, s: float = 1.0) -> float:
    """``c`` with ``(2 pi)^{-n} int |xi|^{-s} e^{i x.xi} dxi = c |x|^{s-n}``, by pairing
    both sides with a Gaussian and integrating radially."""
    from scipy.integrate import quad
    from scipy.special import gamma

    area = 2 * np.pi ** (n / 2) / gamma(n / 2)
    lhs = (2 * np.pi) ** (-n / 2) * area * quad(lambda r: r ** (n - 1 - s) * np.exp(-r * r / 2), 0, np.inf)[0]
    rhs = area * quad(lambda r: r ** (s - 1) * np.exp(-r * r / 2), 0, np.inf)[0]
    return lhs / rhs


def zero_operator_sanity(source, pair, lattice=None, probe_points: int = 4, seed: int = 0,
                         zero_tol: float = 1e-10, kernel_tol: float = 1e-9) -> dict:
    """If the operator kills every lattice ``psi_P``, its synthesized kernel must vanish.

    ``source`` is an :class:`OperatorMatrix` (acting as ``T_psi A S_phi``) or
    an :class:`Operator` (whose matrix is built on ``lattice``).
    """
    from .almost_diag import build_matrix

    if isinstance(source, OperatorMatrix):
        A = source
        lattice = A.lattice
        apply = lambda f: synthesize(CoefficientSequence(lattice, A.apply(analyze(f, pair, lattice).values)), pair)
    else:
        if lattice is None:
            raise InvalidInput("lattice required for operator input")
        A = build_matrix(source, pair, lattice)
        apply = source.apply
    worst = 0.0
    for i in range(lattice.size):
        worst = max(worst, float(np.max(np.abs(apply(cube_function(pair, lattice, lattice.cube(i), "psi")).values))))
        if worst > zero_tol:
            break
    is_zero = worst <= zero_tol
    K = SynthesizedKernel(A, pair)
    rng = np.random.default_rng(seed)
    g = lattice.grid
    ys = np.rint(rng.random((probe_points, g.n)) * g.N) % g.N * g.h
    kmax = 0.0
    for y in ys:
        col = K.column(y).copy()
        col[tuple((np.rint(y / g.h).astype(int) % g.N))] = 0  # diagonal excluded
        kmax = max(kmax, float(np.max(np.abs(col))))
    out = {"zero_operator": bool(is_zero), "max_image": worst, "max_kernel": kmax}
    if is_zero:
        out["verdict"] = "pass" if kmax <= kernel_tol else "fail"
    else:
        out["verdict"] = "not a zero operator"
    return out


def kernel_loop_check(A: OperatorMatrix, pair, calibration: RieszCalibration, y=None, window=None,
                      tol: float = 0.02) -> dict:
    """Compare the synthesized kernel column ``K(., y)`` with ``c |x - y|^{s-n}``.

    The comparison is modulo an additive constant: the reported error is
    ``min_C max |K - c r^{s-n} - C| / (c r^{s-n})`` over grid points with
    ``r = |x - y|`` in ``window`` (default the octave ``[L/32, L/16]``).
    """
    from scipy.optimize import minimize_scalar

    g = pair.grid
    y = np.zeros(g.n) if y is None else np.asarray(y, dtype=float)
    lo, hi = window if window is not None else (g.L / 32, g.L / 16)
    col = np.roll(kernel_column(A, pair, y).values,
                  tuple(-np.rint(y / g.h).astype(int)), axis=tuple(range(g.n)))
    r = g.centered_radius
    m = (r >= lo) & (r <= hi)
    if m.sum() < 8:
        raise InvalidInput(f"window [{lo}, {hi}] holds too few grid points")
    ref = calibration.kernel(r[m])
    d = col[m].real - ref
    w = 1.0 / np.abs(ref)
    res = minimize_scalar(lambda C: float(np.max(np.abs(d - C) * w)), bounds=(d.min(), d.max()),
                          method="bounded", options={"xatol": 1e-14})
    err = float(res.fun)
    return {"window": [float(lo), float(hi)], "points": int(m.sum()), "c": calibration.c,
            "offset": float(res.x), "max_relative_error": err,
            "max_imaginary": float(np.max(np.abs(col.imag))), "passes": bool(err <= tol)}
