"""Sequence norms, Triebel-Lizorkin norms and boundedness-ratio statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .field import GridSpec, SampledField, lp_norm, random_band_limited
from .lattice import TruncatedLattice
from .transform import CoefficientSequence

__all__ = [
    "SpaceIndex",
    "sequence_norm",
    "lp_stack",
    "lp_scales",
    "cube_scales",
    "tl2_norm_sparse",
    "tl_norm",
    "riesz_shift_check",
    "boundedness_ratio",
    "sobolev_proxy_bracket",
]


@dataclass(frozen=True)
class SpaceIndex:
    """Smoothness ``alpha`` and integrability indices ``p, q`` in ``[1, inf]``."""

    alpha: float = 0.0
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1):
                raise InvalidInput(f"{name} must lie in [1, inf], got {v}")

    @property
    def excluded_endpoint(self) -> bool:
        """True for the ``(1, inf)`` and ``(inf, 1)`` pairs outside the boundedness corollary."""
        return (self.p == 1 and np.isinf(self.q)) or (np.isinf(self.p) and self.q == 1)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "p": _num(self.p), "q": _num(self.q)}


def _num(v):
    return "inf" if np.isinf(v) else float(v)


def _block_sum(a: np.ndarray, M: int) -> np.ndarray:
    """Sum an ``(M r)^n`` array over ``r^n`` blocks."""
    r = a.shape[0] // M
    for ax in range(a.ndim):
        shape = a.shape[:ax] + (M, r) + a.shape[ax + 1:]
        a = a.reshape(shape).sum(axis=ax + 1)
    return a


def _upsample(a: np.ndarray, M: int) -> np.ndarray:
    r = M // a.shape[0]
    for ax in range(a.ndim):
        a = np.repeat(a, r, axis=ax)
    return a


def sequence_norm(s: CoefficientSequence, idx: SpaceIndex, report: bool = False):
    """Norm of ``s`` in the sequence space with index ``idx`` (all four branches)."""
    lat = s.lattice
    n = lat.grid.n
    a, p, q = idx.alpha, idx.p, idx.q
    blocks = {nu: np.abs(s.scale_block(nu)) * 2.0 ** (nu * n * (a / n + 0.5)) for nu in lat.scales}
    info = {}
    if np.isinf(p) and np.isinf(q):
        val = max(float(b.max()) for b in blocks.values())
    elif np.isinf(p):
        best, arg = 0.0, None
        wq = {nu: b**q * 2.0 ** (-nu * n) for nu, b in blocks.items()}
        for nu_p in lat.scales:
            Mp = lat.cubes_per_axis(nu_p)
            acc = np.zeros((Mp,) * n)
            for nu_q in lat.scales:
                if nu_q >= nu_p:
                    acc += _block_sum(wq[nu_q], Mp)
            vals = acc * 2.0 ** (nu_p * n)
            i = int(np.argmax(vals))
            if vals.flat[i] > best:
                last = _block_sum(wq[lat.nu_max], Mp).flat[i] * 2.0 ** (nu_p * n)
                best, arg = float(vals.flat[i]), (nu_p, i, float(last / vals.flat[i]) if vals.flat[i] else 0.0)
        val = best ** (1.0 / q)
        if arg is not None:
            info = {"argmax_scale": arg[0], "argmax_flat": arg[1], "finest_share": arg[2],
                    "wall_hit": arg[2] > 1e-3}
    else:
        Mf = lat.cubes_per_axis(lat.nu_max)
        if np.isinf(q):
            g = np.zeros((Mf,) * n)
            for nu, b in blocks.items():
                g = np.maximum(g, _upsample(b, Mf))
        else:
            g = np.zeros((Mf,) * n)
            for nu, b in blocks.items():
                g += _upsample(b**q, Mf)
            g = g ** (1.0 / q)
        cell = 2.0 ** (-lat.nu_max * n)
        val = float((np.sum(g**p) * cell) ** (1.0 / p))
    return (val, info) if report else val


def lp_scales(grid: GridSpec, pair) -> list[int]:
    """Scales whose profile support meets a nonzero grid mode below Nyquist."""
    r0, _, _, r3 = pair.edges
    lo = int(np.floor(np.log2(grid.fundamental / r3))) + 1
    hi = int(np.floor(np.log2(grid.nyquist / r0)))
    out = []
    for nu in range(lo, hi + 1):
        if np.any(pair.scale_multiplier(nu, "phi")):
            out.append(nu)
    return out


def lp_stack(f: SampledField, pair, scales, alpha: float = 0.0) -> dict:
    """``{nu: 2^{nu alpha} |phi_nu * f|}`` on the grid."""
    out = {}
    for nu in scales:
        # the spectrum of phi_nu * f is profile(2^-nu xi) f^(xi)
        conv = np.fft.ifftn(f.spectrum * pair.scale_multiplier(nu, "phi"))
        conv *= (2 * np.pi) ** (f.grid.n / 2) / f.grid.cell_volume
        out[nu] = 2.0 ** (nu * alpha) * np.abs(conv)
    return out


def cube_scales(grid: GridSpec) -> list[int]:
    """Every scale whose cubes tile the box on grid samples (coarsest: one cube)."""
    out = []
    nu = int(np.floor(np.log2(1.0 / grid.L))) - 1
    while 2.0 ** (-nu) >= grid.h * (1 - 1e-12):
        m = grid.L * 2.0**nu
        if m >= 1 - 1e-9 and abs(m - round(m)) < 1e-9 and grid.N % int(round(m)) == 0:
            out.append(nu)
        nu += 1
    return out


def tl_norm(f: SampledField, idx: SpaceIndex, pair, lattice: TruncatedLattice | None = None,
            scales=None, sup_scales=None, exact_cubes: bool = True) -> float:
    """Triebel-Lizorkin norm from the Littlewood-Paley stack (all branches).

    The ``p = inf`` branch takes the supremum over the cubes ``P`` of
    ``sup_scales`` (default: the lattice scales, else every scale tiling the
    box) and keeps only scales
    ``nu >= nu_P``. For ``q = 2`` the cube averages are exact: the squared
    pieces are band-limited on the doubled grid and are integrated over each
    cube in frequency (``exact_cubes=False`` uses sample sums).
    """
    g = f.grid
    if scales is None:
        scales = list(lattice.scales) if lattice is not None else lp_scales(g, pair)
    stack = lp_stack(f, pair, scales, idx.alpha)
    p, q = idx.p, idx.q
    if not np.isinf(p):
        if np.isinf(q):
            G = np.max(np.stack(list(stack.values())), axis=0)
        else:
            G = np.sum(np.stack([v**q for v in stack.values()]), axis=0) ** (1.0 / q)
        return lp_norm(SampledField(g, G), p)
    if sup_scales is None:
        sup_scales = list(lattice.scales) if lattice is not None else cube_scales(g)
        if not sup_scales:
            raise InvalidInput("no cube scale tiles the box: the p = inf branch has no supremum")
    if q == 2 and exact_cubes:
        return _exact_cube_sup(f, pair, scales, sup_scales, idx.alpha)
    best = 0.0
    for nu_p in sup_scales:
        Mp = int(round(g.L * 2.0**nu_p))
        keep = [nu for nu in scales if nu >= nu_p]
        if not keep:
            continue
        if np.isinf(q):
            G = np.max(np.stack([stack[nu] for nu in keep]), axis=0)
            best = max(best, float(G.max()))
            continue
        G = np.sum(np.stack([stack[nu] ** q for nu in keep]), axis=0)
        avg = _block_sum(G, Mp) * g.cell_volume * 2.0 ** (nu_p * g.n)
        best = max(best, float(avg.max()))
    return best if np.isinf(q) else best ** (1.0 / q)


def _pad(X: np.ndarray, N2: int) -> np.ndarray:
    N = X.shape[0]
    out = np.zeros((N2,) * X.ndim, complex)
    j = np.fft.fftfreq(N, 1.0 / N).astype(np.int64) % N2
    out[np.ix_(*([j] * X.ndim))] = X
    return out


def _exact_cube_sup(f: SampledField, pair, scales, sup_scales, alpha: float) -> float:
    g = f.grid
    n, N2 = g.n, 2 * g.N
    h2 = g.h / 2
    c = (2 * np.pi) ** (n / 2) / g.cell_volume * 2.0**n
    G = {}
    for nu in scales:
        vals = np.fft.ifftn(_pad(f.spectrum * pair.scale_multiplier(nu, "phi"), N2)) * c
        G[nu] = np.fft.fftn(2.0 ** (2 * nu * alpha) * np.abs(vals) ** 2)
    xi = 2 * np.pi * np.fft.fftfreq(N2, h2)
    best = 0.0
    acc = np.zeros((N2,) * n, complex)
    added = set()
    for nu_p in sorted(sup_scales, reverse=True):
        for nu in scales:
            if nu >= nu_p and nu not in added:
                acc += G[nu]
                added.add(nu)
        if not added:
            continue
        l = 2.0 ** (-nu_p)
        with np.errstate(invalid="ignore", divide="ignore"):
            w1 = np.where(xi == 0, l, (np.exp(1j * xi * l) - 1) / (1j * xi))
        W = w1
        for _ in range(n - 1):
            W = np.multiply.outer(W, w1)
        stride = int(round(l / h2))
        integ = np.fft.ifftn(acc * W)[(slice(None, None, stride),) * n].real
        best = max(best, float(integ.max()) / l**n)
    return float(np.sqrt(max(best, 0.0)))


def riesz_shift_check(f: SampledField, s: float, idx: SpaceIndex, pair, lattice=None,
                      scales=None, bracket: float | None = None) -> dict:
    """Ratio ``||I^s f||_{alpha+s} / ||f||_alpha`` for a band-limited zero-mean ``f``."""
    from .operators import riesz_potential

    zero = abs(f.spectrum.flat[0])
    if zero > 1e-12 * max(np.max(np.abs(f.spectrum)), 1e-300):
        raise InvalidInput("spectrum touches xi = 0 (multiplier singular there)")
    g = riesz_potential(s).apply(f)
    num = tl_norm(g, SpaceIndex(idx.alpha + s, idx.p, idx.q), pair, lattice, scales)
    den = tl_norm(f, idx, pair, lattice, scales)
    ratio = num / den
    C = bracket if bracket is not None else 2.0 ** (abs(s) + 1)
    return {"s": s, "index": idx.to_dict(), "ratio": ratio, "bracket": [1 / C, C],
            "in_bracket": bool(1 / C <= ratio <= C)}


def boundedness_ratio(T, source: SpaceIndex, target: SpaceIndex, pair, grid: GridSpec,
                      band: tuple[float, float], samples: int = 20, seed: int = 0,
                      lattice=None, scales=None, operator_name: str = "T") -> dict:
    """Statistics of ``||T f||_target / ||f||_source`` over seeded band-limited ``f``."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(samples):
        f = random_band_limited(grid, rng, *band)
        den = tl_norm(f, source, pair, lattice, scales)
        if den == 0:
            continue
        ratios.append(tl_norm(T.apply(f), target, pair, lattice, scales) / den)
    r = np.array(ratios)
    return {"operator": operator_name, "source": source.to_dict(), "target": target.to_dict(),
            "max_ratio": float(r.max()), "min_ratio": float(r.min()),
            "quantiles": {k: float(np.quantile(r, v)) for k, v in
                          (("q10", 0.1), ("q50", 0.5), ("q90", 0.9))},
            "seeds": [seed], "samples": int(r.size), "ratios": r.tolist()}


def sobolev_proxy_bracket(fields, p: float) -> dict:
    """Bracket of ``||I^{-1} f||_p / ||grad f||_p`` over the given fields."""
    from .operators import derivative, riesz_potential

    ratios = []
    for f in fields:
        n = f.grid.n
        grad = np.sqrt(sum(np.abs(derivative(j).apply(f).values) ** 2 for j in range(n)))
        den = lp_norm(SampledField(f.grid, grad), p)
        ratios.append(lp_norm(riesz_potential(-1).apply(f), p) / den)
    r = np.array(ratios)
    return {"p": _num(p), "min": float(r.min()), "max": float(r.max()), "count": int(r.size)}


def tl2_norm_sparse(f, alpha: float, pair) -> float:
    """``||f||_{F_2^{alpha,2}}`` of a sparse spectrum by Parseval, summed over every
    scale whose annulus meets a mode."""
    r = f.xi_norm
    keep = r > 0
    if not np.any(keep):
        return 0.0
    r, c = r[keep], f.coeffs[keep]
    r0, _, _, r3 = pair.edges
    lo = int(np.floor(np.log2(r.min() / r3))) - 1
    hi = int(np.ceil(np.log2(r.max() / r0))) + 1
    w = np.zeros_like(r)
    for nu in range(lo, hi + 1):
        w += 2.0 ** (2 * nu * alpha) * pair.phi_hat(2.0 ** (-nu) * r) ** 2
    return float(np.sqrt(f.grid.spectral_weight * np.sum(np.abs(c) ** 2 * w)))
