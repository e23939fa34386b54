"""Almost-diagonality weights, operator matrices, ADP verdicts and the
numerical checks of the decay and summation lemmas."""
from __future__ import annotations

import numpy as np

from .errors import HypothesisViolation, InvalidInput
from .field import SampledField
from .lattice import DyadicCube, TruncatedLattice, cube_arrays, cube_geometry, pair_geometry
from .matrix import ConvolutionOperatorMatrix, DenseOperatorMatrix, OperatorMatrix
from .operators import LinearCombination, Operator, ZeroOperator
from .spaces import SpaceIndex, sequence_norm
from .transform import CoefficientSequence, analyze, cube_function

__all__ = [
    "EPS_GRID",
    "omega",
    "big_w",
    "omega_arrays",
    "w_arrays",
    "is_translation_invariant",
    "build_matrix",
    "matrix_columns",
    "adp_ratios",
    "adp_verdict",
    "refinement_stable",
    "cube_image_decay_check",
    "convolution_decay_check",
    "w_product_check",
    "scale_sum_check",
    "matrix_apply_bound",
    "omega_majorized_matrix",
]

EPS_GRID = (0.25, 0.5, 1.0, 2.0)


def omega_arrays(lmin, lmax, dist, n: int, eps: float):
    return lmin ** (1 + (n + eps) / 2) / lmax ** ((n + eps) / 2) * (1 + dist / lmax) ** (-(n + eps))


def w_arrays(lmin, lmax, dist, n: int, beta: float, gamma: float):
    return (lmin / lmax) ** ((n + gamma) / 2) * (1 + dist / lmax) ** (-(n + beta))


def omega(P: DyadicCube, Q: DyadicCube, eps: float, L: float | None = None) -> float:
    """``omega_{P,Q}(eps)``; torus distance when ``L`` is given."""
    if not eps > 0:
        raise InvalidInput("eps must be positive")
    lmin, lmax, d = cube_geometry(P, Q, L)
    return float(omega_arrays(float(lmin), float(lmax), d, P.n, eps))


def big_w(P: DyadicCube, Q: DyadicCube, beta: float, gamma: float, L: float | None = None) -> float:
    """``W_{P,Q}(beta, gamma) = 2^{-|nu-mu|(n+gamma)/2} (1 + |x_Q - x_P| / l_max)^{-(n+beta)}``."""
    if not (beta > 0 and gamma > 0):
        raise InvalidInput("beta and gamma must be positive")
    lmin, lmax, d = cube_geometry(P, Q, L)
    return float(w_arrays(float(lmin), float(lmax), d, P.n, beta, gamma))


def is_translation_invariant(T: Operator) -> bool:
    if isinstance(T, LinearCombination):
        return all(is_translation_invariant(op) for _, op in T.terms)
    return isinstance(T, ZeroOperator) or T.tag in ("multiplier", "convolution-kernel")


def _provenance(T, pair):
    return {"operator": getattr(T, "name", "T"), "pair": pair.profile_hash()}


def matrix_columns(T: Operator, pair, lattice: TruncatedLattice):
    """Yield ``(i, column)`` with ``column[Q] = <T(psi_P), phi_Q>`` for ``P = cube i``."""
    for i in range(lattice.size):
        u = T.apply(cube_function(pair, lattice, lattice.cube(i), "psi"))
        yield i, analyze(u, pair, lattice, "phi").values


def build_matrix(T: Operator, pair, lattice: TruncatedLattice, fast: bool | None = None) -> OperatorMatrix:
    """All entries ``<T(psi_P), phi_Q>``.

    Translation-invariant operators use one table per scale pair; other
    operators are probed column by column.
    """
    if fast is None:
        fast = is_translation_invariant(T)
    g = lattice.grid
    if fast:
        tables = {}
        c = (2 * np.pi) ** (-g.n / 2)
        for nu_p in lattice.scales:
            u = T.apply(cube_function(pair, lattice, DyadicCube(nu_p, (0,) * g.n), "psi"))
            for nu_q in lattice.scales:
                X = u.spectrum * pair.scale_multiplier(nu_q, "phi")
                if not np.any(X):
                    tables[(nu_q, nu_p)] = np.zeros(g.shape, complex)
                    continue
                tables[(nu_q, nu_p)] = (np.fft.ifftn(X) * float(g.N) ** g.n * c
                                        * 2.0 ** (-nu_q * g.n / 2) * g.spectral_weight)
        return ConvolutionOperatorMatrix(lattice, tables, _provenance(T, pair))
    D = np.zeros((lattice.size, lattice.size), complex)
    for i, col in matrix_columns(T, pair, lattice):
        D[:, i] = col
    return DenseOperatorMatrix(lattice, D, _provenance(T, pair))


def _cube_tuple(lattice, i):
    return list(lattice.cube(int(i)).to_tuple())


def adp_ratios(source, eps_grid=EPS_GRID, pair=None) -> dict:
    """``r(eps) = max |A_{Q,P}| / omega_{P,Q}(eps)`` with arg-max witnesses.

    ``source`` is an :class:`OperatorMatrix` or ``(T, lattice)`` for streaming
    columns without storing the matrix (``pair`` then required).
    """
    eps_grid = tuple(float(e) for e in eps_grid)
    best = {e: (0.0, None) for e in eps_grid}

    def update(vals, lmin, lmax, dist, qidx, pidx, n):
        a = np.abs(vals)
        if not np.any(a):
            return
        for e in eps_grid:
            r = a / omega_arrays(lmin, lmax, dist, n, e)
            k = int(np.argmax(r))
            if r.flat[k] > best[e][0]:
                best[e] = (float(r.flat[k]), (int(np.ravel(qidx)[k]), int(np.ravel(pidx)[k])))

    if isinstance(source, ConvolutionOperatorMatrix):
        lat = source.lattice
        g = lat.grid
        for (nq, np_), tab in source.tables.items():
            if not np.any(tab):
                continue
            s = lat.stride(max(nq, np_))
            sub = tab[(slice(None, None, s),) * g.n]
            M = sub.shape[0]
            d = np.stack(np.meshgrid(*([np.arange(M) * s * g.h] * g.n), indexing="ij"), axis=-1)
            dist = g.torus_distance(d)
            lq, lp = 2.0**-nq, 2.0**-np_
            a = np.abs(sub)
            for e in eps_grid:
                r = a / omega_arrays(min(lq, lp), max(lq, lp), dist, g.n, e)
                k = int(np.argmax(r))
                if r.flat[k] > best[e][0]:
                    disp = np.array(np.unravel_index(k, sub.shape)) * s
                    # witness: the coarser cube at the origin
                    if nq >= np_:
                        iq = lat.index(DyadicCube(nq, tuple(int(v) for v in disp // lat.stride(nq))))
                        ip = lat.index(DyadicCube(np_, (0,) * g.n))
                    else:
                        back = (-disp) % g.N
                        iq = lat.index(DyadicCube(nq, (0,) * g.n))
                        ip = lat.index(DyadicCube(np_, tuple(int(v) for v in back // lat.stride(np_))))
                    best[e] = (float(r.flat[k]), (iq, ip))
        lat_used = lat
    elif isinstance(source, OperatorMatrix):
        lat = source.lattice
        D = source.dense()
        for i in range(lat.size):
            lmin, lmax, dist = pair_geometry(lat.nus[i], lat.corners[i], lat.nus, lat.corners, lat.grid.L)
            update(D[:, i], lmin, lmax, dist, np.arange(lat.size), np.full(lat.size, i), lat.grid.n)
        lat_used = lat
    else:
        T, lat = source
        for i, col in matrix_columns(T, pair, lat):
            lmin, lmax, dist = pair_geometry(lat.nus[i], lat.corners[i], lat.nus, lat.corners, lat.grid.L)
            update(col, lmin, lmax, dist, np.arange(lat.size), np.full(lat.size, i), lat.grid.n)
        lat_used = lat
    out = {"eps": list(eps_grid), "r": [best[e][0] for e in eps_grid], "witness": []}
    for e in eps_grid:
        w = best[e][1]
        out["witness"].append(None if w is None else {"Q": _cube_tuple(lat_used, w[0]),
                                                       "P": _cube_tuple(lat_used, w[1])})
    r = out["r"]
    out["monotone_in_eps"] = bool(all(b >= a * (1 - 1e-12) for a, b in zip(r, r[1:])))
    return out


def refinement_stable(r_coarse: float, r_fine: float, tol: float = 0.05) -> bool:
    if r_coarse == 0 and r_fine == 0:
        return True
    return abs(r_fine / r_coarse - 1) <= tol if r_coarse else False


def adp_verdict(A, eps: float = 1.0, refined=None, eps_grid=EPS_GRID, tol: float = 0.05, pair=None) -> dict:
    """ADP verdict at ``eps``: ``r(eps)`` finite and stable under one refinement."""
    if not eps > 0:
        raise InvalidInput("eps must be positive")
    grid_eps = tuple(sorted(set(eps_grid) | {float(eps)}))
    rep = adp_ratios(A, grid_eps, pair)
    k = rep["eps"].index(float(eps))
    out = {"eps": float(eps), "r": rep["r"][k], "witness": rep["witness"][k], "profile": rep,
           "finite": bool(np.isfinite(rep["r"][k]))}
    if refined is not None:
        rep2 = adp_ratios(refined, grid_eps, pair)
        out["r_refined"] = rep2["r"][k]
        out["profile_refined"] = rep2
        out["stable"] = refinement_stable(out["r"], out["r_refined"], tol)
        out["verdict"] = "ADP-consistent" if out["stable"] and out["finite"] else "not ADP-consistent"
    return out


def _shell_envelope(values, dist, l, lo, hi, shells_per_octave=4):
    edges = lo * 2.0 ** (np.arange(int(np.log2(hi / lo) * shells_per_octave) + 1) / shells_per_octave)
    rho = dist / l
    xs, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        m = (rho >= a) & (rho < b)
        if np.any(m):
            xs.append(np.sqrt(a * b))
            ys.append(float(np.max(values[m])))
    return np.array(xs), np.array(ys)


def cube_image_decay_check(T: Operator, pair, lattice: TruncatedLattice, Q: DyadicCube, delta: float = 1.0,
                           far=(32.0, None)) -> dict:
    """Decay of ``T(psi_Q)`` and ``T^t(phi_Q)`` against ``l(Q) |Q|^{-1/2} (1 + |x - x_Q| / l(Q))^{-(n+delta)}``.

    The far-field slope is the log-log fit of the shell maxima of ``|T(psi_Q)|``
    over ``far[0] <= |x - x_Q| / l(Q) <= far[1]`` (default upper end: 0.45 of
    the box side). Windows shorter than half an octave are reported as
    unresolved and carry no slope.
    """
    g = lattice.grid
    n = g.n
    l = float(Q.side)
    fields = {
        "T(psi_Q)": T.apply(cube_function(pair, lattice, Q, "psi")),
        "T^t(phi_Q)": T.transpose().apply(cube_function(pair, lattice, Q, "phi")),
    }
    d = np.stack([np.broadcast_to(c, g.shape) for c in g.coords], axis=-1) - Q.corner
    dist = g.torus_distance(d)
    env = l * l ** (-n / 2) * (1 + dist / l) ** (-(n + delta))
    hi = far[1] if far[1] is not None else 0.45 * g.L / l
    resolved = hi >= far[0] * np.sqrt(2)
    out = {"cube": list(Q.to_tuple()), "delta": delta, "n": n}
    for key, u in fields.items():
        a = np.abs(u.values)
        ratio = a / env
        k = int(np.argmax(ratio))
        slope, xs, ys = None, np.zeros(0), np.zeros(0)
        if resolved:
            xs, ys = _shell_envelope(a, dist, l, far[0], hi)
            good = ys > 0
            if good.sum() >= 2:
                slope = float(np.polyfit(np.log(xs[good]), np.log(ys[good]), 1)[0])
        out[key] = {
            "C": float(ratio.flat[k]),
            "argmax_distance": float(dist.flat[k] / l),
            "near_field": float(a.flat[np.argmin(dist)] / (l * l ** (-n / 2))),
            "far_slope": slope,
            "series": {"distance": xs.tolist(), "value": ys.tolist(),
                       "envelope": (l ** (1 - n / 2) * (1 + xs) ** (-(n + delta))).tolist()},
        }
    out["far_field_resolved"] = bool(resolved)
    slopes = [out[k]["far_slope"] for k in fields]
    out["slope_ok"] = None if any(v is None for v in slopes) else bool(max(slopes) <= -(n + delta))
    edge = Q.nu in (lattice.nu_min, lattice.nu_max)
    out["edge_scale_warning"] = bool(edge)
    return out


def convolution_decay_check(g: SampledField, h: SampledField, nu: int, mu: int, delta: float,
                            x1, zero_tol: float = 1e-10) -> dict:
    """Fit the constant in ``|g * h(x)| <= C 2^{-(mu-nu)(n/2+delta/2)} (1 + 2^nu |x - x1|)^{-(n+delta)}``."""
    if nu > mu:
        raise HypothesisViolation("need nu <= mu")
    grid = g.grid
    n = grid.n
    l1 = float(np.sum(np.abs(h.values)) * grid.cell_volume)
    mean = abs(h.mean_integral())
    if mean > zero_tol * l1:
        raise HypothesisViolation(f"h has nonzero integral {mean:.3g} (relative {mean / l1:.3g})")
    x1 = np.asarray(x1, dtype=float)
    pts = np.stack([np.broadcast_to(c, grid.shape) for c in grid.coords], axis=-1)
    conv = np.fft.ifftn(np.fft.fftn(g.values) * np.fft.fftn(h.values)) * grid.cell_volume
    dist1 = grid.torus_distance(pts - x1)
    dist0 = grid.torus_distance(pts)
    bound = 2.0 ** (-(mu - nu) * (n / 2 + delta / 2)) * (1 + 2.0**nu * dist1) ** (-(n + delta))
    ratio = np.abs(conv) / bound
    k = int(np.argmax(ratio))
    C_g = float(np.max(np.abs(g.values) / (2.0 ** (nu * n / 2) * (1 + 2.0**nu * dist0) ** (-(n + delta)))))
    C_h = float(np.max(np.abs(h.values) / (2.0 ** (mu * n / 2) * (1 + 2.0**mu * dist1) ** (-(n + delta)))))
    return {"nu": nu, "mu": mu, "delta": delta, "C": float(ratio.flat[k]),
            "argmax": pts.reshape(-1, n)[k].tolist(), "C_g": C_g, "C_h": C_h,
            "C_over_CgCh": float(ratio.flat[k] / (C_g * C_h)) if C_g * C_h > 0 else np.nan,
            "peak": float(np.abs(conv).max())}


def w_product_check(beta: float, gamma1: float, gamma2: float, n: int = 2,
                    levels=(3, 4), side: float = 2.0, pair_scales=(0, 1)) -> dict:
    """``sum_R W_{P,R}(beta, g1) W_{R,Q}(beta, g2)`` against ``W_{P,Q}(beta, g1 ^ g2)``.

    Level ``k`` is the lattice of scales ``0..k-1`` in ``[0, side)^n`` (no
    wrap); at ``side = 2`` level 3 holds 4^3 finest cubes. The pairs
    ``(P, Q)`` are all cubes at ``pair_scales``, kept fixed while ``R`` runs
    over the growing lattice, so the maximal ratio is a partial sum that
    should settle.
    """
    if not (beta > 0 and gamma1 > 0 and gamma2 > 0):
        raise HypothesisViolation("beta, gamma1, gamma2 must be positive")
    if gamma1 == gamma2:
        raise HypothesisViolation("gamma1 != gamma2 violated")
    if not gamma1 + gamma2 > 2 * beta:
        raise HypothesisViolation(f"gamma1 + gamma2 > 2 beta violated ({gamma1} + {gamma2} <= {2 * beta})")
    if max(pair_scales) >= min(levels):
        raise InvalidInput("pair scales must lie inside the smallest lattice")
    trace = []
    for k in levels:
        nu, x = cube_arrays(n, side, range(k))
        sel = np.flatnonzero(np.isin(nu, pair_scales))
        lmin, lmax, dist = pair_geometry(nu[sel, None], x[sel, None, :], nu[None, :], x[None, :, :])
        W1 = w_arrays(lmin, lmax, dist, n, beta, gamma1)
        W2 = w_arrays(lmin, lmax, dist, n, beta, gamma2)  # W symmetric in its cubes
        S = W1 @ W2.T
        lmin, lmax, dist = pair_geometry(nu[sel, None], x[sel, None, :], nu[None, sel], x[None, sel, :])
        ratio = S / w_arrays(lmin, lmax, dist, n, beta, min(gamma1, gamma2))
        p, q = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        trace.append({"level": k, "cubes": int(len(nu)), "finest_cubes": int(round(side * 2 ** (k - 1))) ** n,
                      "pairs": int(len(sel)) ** 2, "max_ratio": float(ratio.max()),
                      "min_diag_ratio": float(np.min(np.diag(ratio))),
                      "witness": {"P": [int(nu[sel[p]])] + x[sel[p]].tolist(),
                                  "Q": [int(nu[sel[q]])] + x[sel[q]].tolist()}})
    r = [t["max_ratio"] for t in trace]
    change = abs(r[-1] / r[-2] - 1) if len(r) > 1 else 0.0
    return {"beta": beta, "gamma1": gamma1, "gamma2": gamma2, "n": n, "pair_scales": list(pair_scales),
            "trace": trace, "constant": r[-1], "relative_change": change, "stable": bool(change <= 0.10)}


def scale_sum(alpha: float, beta: float, eps: float, lam, J: int) -> np.ndarray:
    nus = np.arange(-J, J + 1)
    nu, mu = np.meshgrid(nus, nus, indexing="ij")
    m = np.minimum(nu, mu)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    terms = (2.0 ** (-np.abs(nu - mu) * eps) * 2.0 ** (m * alpha))[None]
    terms = terms * (1 + 2.0 ** m[None] * lam[:, None, None]) ** (-beta)
    return terms.sum(axis=(1, 2))


def scale_sum_check(alpha: float, beta: float, eps: float, lam=None, Js=(8, 12, 16)) -> dict:
    """``sum_{nu,mu} 2^{-|nu-mu| eps} 2^{(mu^nu) alpha} (1 + 2^{mu^nu} lam)^{-beta} <= C lam^{-alpha}``."""
    if not beta > alpha > 0:
        raise HypothesisViolation(f"beta > alpha > 0 violated (alpha={alpha}, beta={beta})")
    if not eps > 0:
        raise HypothesisViolation("eps must be positive")
    if lam is None:
        lam = np.logspace(-1, 1, 21)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam <= 0):
        raise HypothesisViolation("lambda must be positive")
    trace = []
    for J in Js:
        S = scale_sum(alpha, beta, eps, lam, J)
        C = S * lam**alpha
        S2 = scale_sum(alpha, beta, eps, 2 * lam, J)
        trace.append({"J": int(J), "C": float(C.max()), "argmax_lambda": float(lam[int(np.argmax(C))]),
                      "doubling_ratio_error": float(np.max(np.abs(S2 / S / 2.0 ** (-alpha) - 1)))})
    Cs = np.array([t["C"] for t in trace])
    change = float(np.max(np.abs(Cs / Cs[-1] - 1)))
    return {"alpha": alpha, "beta": beta, "eps": eps, "lambda_range": [float(lam.min()), float(lam.max())],
            "trace": trace, "constant": float(Cs[-1]), "relative_change": change,
            "stable": bool(change <= 0.05)}


def omega_majorized_matrix(lattice: TruncatedLattice, eps: float = 1.0, seed: int | None = None) -> DenseOperatorMatrix:
    """Entries ``omega_{P,Q}(eps)`` (times seeded unimodular signs when ``seed`` is given)."""
    lat = lattice
    lmin, lmax, dist = pair_geometry(lat.nus[:, None], lat.corners[:, None, :], lat.nus[None, :],
                                     lat.corners[None, :, :], lat.grid.L)
    A = omega_arrays(lmin, lmax, dist, lat.grid.n, eps).astype(complex)
    if seed is not None:
        rng = np.random.default_rng(seed)
        A = A * np.exp(2j * np.pi * rng.random(A.shape))
    return DenseOperatorMatrix(lat, A, {"operator": f"omega({eps})", "seed": seed})


def matrix_apply_bound(A: OperatorMatrix, s, alpha: float, p: float, q: float) -> dict:
    """``||A s||_{f_p^{1+alpha,q}} / ||s||_{f_p^{alpha q}}``; ``s`` may be a list (batch)."""
    extrapolated = not (-1 <= alpha <= 0 and 1 <= p < np.inf and 1 <= q < np.inf)
    seqs = s if isinstance(s, (list, tuple)) else [s]
    ratios = []
    for seq in seqs:
        src = sequence_norm(seq, SpaceIndex(alpha, p, q))
        out = CoefficientSequence(A.lattice, A.apply(seq.values))
        tgt = sequence_norm(out, SpaceIndex(1 + alpha, p, q))
        ratios.append(tgt / src if src > 0 else 0.0)
    return {"alpha": alpha, "p": p, "q": q, "max_ratio": float(max(ratios)), "ratios": ratios,
            "extrapolation": extrapolated}
