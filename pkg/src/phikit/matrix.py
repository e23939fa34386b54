"""Operator matrices ``A_{Q,P} = <T(psi_P), phi_Q>`` over a truncated lattice.

Two storages: a dense array for small lattices, and a table form for
translation-invariant operators, where ``A_{Q,P}`` depends only on
``(nu_Q, nu_P, x_Q - x_P)`` and each scale pair keeps one grid-sized table
indexed by the displacement.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import InvalidInput
from .field import GridSpec
from .lattice import DyadicCube, TruncatedLattice
from .transform import _tile

__all__ = ["OperatorMatrix", "DenseOperatorMatrix", "ConvolutionOperatorMatrix",
           "save_matrix", "load_matrix"]

DENSE_LIMIT = 6000


class OperatorMatrix:
    """Common interface; ``provenance`` records the operator and pair hash."""

    lattice: TruncatedLattice
    provenance: dict

    @property
    def shape(self):
        return (self.lattice.size, self.lattice.size)

    def apply(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def column(self, i: int) -> np.ndarray:
        e = np.zeros(self.lattice.size, complex)
        e[i] = 1.0
        return self.apply(e)

    def dense(self) -> np.ndarray:
        raise NotImplementedError

    def conj_transpose(self) -> "OperatorMatrix":
        raise NotImplementedError

    def __add__(self, other):
        return DenseOperatorMatrix(self.lattice, self.dense() + other.dense(),
                                   {"operator": "sum"})

    def __sub__(self, other):
        return DenseOperatorMatrix(self.lattice, self.dense() - other.dense(),
                                   {"operator": "difference"})

    def scaled(self, c):
        return DenseOperatorMatrix(self.lattice, c * self.dense(), dict(self.provenance))


class DenseOperatorMatrix(OperatorMatrix):
    def __init__(self, lattice: TruncatedLattice, entries: np.ndarray, provenance: dict | None = None):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape != (lattice.size, lattice.size):
            raise InvalidInput(f"matrix shape {entries.shape} does not match lattice size {lattice.size}")
        self.lattice = lattice
        self.entries = entries
        self.provenance = provenance or {}

    @classmethod
    def identity(cls, lattice):
        return cls(lattice, np.eye(lattice.size), {"operator": "identity"})

    @classmethod
    def zeros(cls, lattice):
        return cls(lattice, np.zeros((lattice.size, lattice.size)), {"operator": "zero"})

    def apply(self, values):
        return self.entries @ values

    def column(self, i):
        return self.entries[:, i].copy()

    def dense(self):
        return self.entries

    def conj_transpose(self):
        prov = dict(self.provenance)
        prov["transposed"] = not prov.get("transposed", False)
        return DenseOperatorMatrix(self.lattice, self.entries.conj().T, prov)


class ConvolutionOperatorMatrix(OperatorMatrix):
    """``A_{Q,P} = tables[(nu_Q, nu_P)][x_Q - x_P]`` with displacements on the grid."""

    def __init__(self, lattice: TruncatedLattice, tables: dict, provenance: dict | None = None):
        self.lattice = lattice
        self.tables = tables
        self.provenance = provenance or {}

    def _corner_index(self, nu):
        g = self.lattice.grid
        return np.arange(self.lattice.cubes_per_axis(nu)) * self.lattice.stride(nu)

    def block(self, nu_q: int, nu_p: int) -> np.ndarray:
        """Dense block ``(Q at nu_q) x (P at nu_p)``."""
        lat = self.lattice
        g = lat.grid
        tab = self.tables[(nu_q, nu_p)]
        cq = lat.corners[lat.scale_slice(nu_q)] / g.h
        cp = lat.corners[lat.scale_slice(nu_p)] / g.h
        d = np.rint(cq[:, None, :] - cp[None, :, :]).astype(np.int64) % g.N
        return tab[tuple(d[..., a] for a in range(g.n))]

    def entry(self, iq: int, ip: int) -> complex:
        lat = self.lattice
        g = lat.grid
        nq, np_ = int(lat.nus[iq]), int(lat.nus[ip])
        d = np.rint((lat.corners[iq] - lat.corners[ip]) / g.h).astype(np.int64) % g.N
        return complex(self.tables[(nq, np_)][tuple(d)])

    def dense(self):
        lat = self.lattice
        if lat.size > DENSE_LIMIT:
            raise InvalidInput(f"lattice of {lat.size} cubes is too large for a dense matrix")
        out = np.zeros((lat.size, lat.size), complex)
        for nq in lat.scales:
            for np_ in lat.scales:
                out[lat.scale_slice(nq), lat.scale_slice(np_)] = self.block(nq, np_)
        return out

    def apply(self, values):
        lat = self.lattice
        g = lat.grid
        values = np.asarray(values, dtype=complex)
        out = np.zeros(lat.size, complex)
        ffts = {}
        for np_ in lat.scales:
            blk = values[lat.scale_slice(np_)].reshape((lat.cubes_per_axis(np_),) * g.n)
            if np.any(blk):
                ffts[np_] = _tile(np.fft.fftn(blk), g.N)
        for nq in lat.scales:
            acc = np.zeros(g.shape, complex)
            for np_, F in ffts.items():
                tab = self.tables[(nq, np_)]
                if not np.any(tab):
                    continue
                acc += np.fft.fftn(tab) * F
            if not np.any(acc):
                continue
            s = lat.stride(nq)
            full = np.fft.ifftn(acc)
            out[lat.scale_slice(nq)] = full[(slice(None, None, s),) * g.n].ravel()
        return out

    def conj_transpose(self):
        g = self.lattice.grid
        tables = {}
        for (nq, np_), tab in self.tables.items():
            flipped = tab
            for a in range(g.n):
                flipped = np.roll(np.flip(flipped, axis=a), 1, axis=a)
            tables[(np_, nq)] = np.conj(flipped)
        prov = dict(self.provenance)
        prov["transposed"] = not prov.get("transposed", False)
        return ConvolutionOperatorMatrix(self.lattice, tables, prov)


def save_matrix(path, A: OperatorMatrix) -> None:
    """Columnar text: JSON header, then ``nu_Q k_Q.. nu_P k_P.. re im`` per nonzero entry."""
    lat = A.lattice
    D = A.dense()
    ks = np.rint(lat.corners * 2.0 ** lat.nus[:, None]).astype(np.int64)
    with open(path, "w") as fh:
        head = {"lattice": lat.to_dict(), "provenance": A.provenance, "omitted": "exact zeros"}
        fh.write("# " + json.dumps(head, sort_keys=True) + "\n")
        n = lat.grid.n
        cols = ["nu_Q"] + [f"kQ{a}" for a in range(n)] + ["nu_P"] + [f"kP{a}" for a in range(n)] + ["re", "im"]
        fh.write(" ".join(cols) + "\n")
        iq, ip = np.nonzero(D)
        for a, b in zip(iq, ip):
            v = D[a, b]
            kq = " ".join(str(int(x)) for x in ks[a])
            kp = " ".join(str(int(x)) for x in ks[b])
            fh.write(f"{lat.nus[a]} {kq} {lat.nus[b]} {kp} {float(v.real)!r} {float(v.imag)!r}\n")


def load_matrix(path) -> DenseOperatorMatrix:
    with open(path) as fh:
        head = json.loads(fh.readline()[2:])
        fh.readline()
        rows = [line.split() for line in fh if line.strip()]
    ld = head["lattice"]
    lat = TruncatedLattice(GridSpec(**ld["grid"]), ld["nu_min"], ld["nu_max"])
    n = lat.grid.n
    D = np.zeros((lat.size, lat.size), complex)
    for r in rows:
        q = DyadicCube(int(r[0]), tuple(int(x) for x in r[1:1 + n]))
        p = DyadicCube(int(r[1 + n]), tuple(int(x) for x in r[2 + n:2 + 2 * n]))
        D[lat.index(q), lat.index(p)] = complex(float(r[2 + 2 * n]), float(r[3 + 2 * n]))
    return DenseOperatorMatrix(lat, D, head["provenance"])
