"""1D Lagrange assembly (degrees 1-3) for the transmission pencil.

Stiffness integrates a(x) u' v' exactly: elements cut by the coefficient
jump at b are integrated by splitting the element integral at b, so the
approximation space (not quadrature) is responsible for any reduced rates.
The Robin term adds c at the x=1 DOF; the Dirichlet DOF at x=0 is
eliminated.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..analytic1d import ModelParams
from ..meshing import IntervalMesh
from .common import Pencil

__all__ = ["assemble_interval", "Function1D", "lagrange_basis"]


def lagrange_basis(p: int):
    """Lagrange basis on equispaced nodes of [0,1]; returns (vals, ders).

    Both are callables mapping reference points (m,) to arrays (p+1, m).
    """
    nodes = np.linspace(0.0, 1.0, p + 1)
    polys = []
    for i in range(p + 1):
        roots = np.delete(nodes, i)
        coeffs = np.poly(roots) / np.prod(nodes[i] - roots)
        polys.append(np.poly1d(coeffs))
    ders = [poly.deriv() for poly in polys]

    def vals(t):
        return np.array([poly(t) for poly in polys])

    def derivs(t):
        return np.array([d(t) for d in ders])

    return vals, derivs


def _gauss(nq: int):
    x, w = np.polynomial.legendre.leggauss(nq)
    return 0.5 * (x + 1.0), 0.5 * w  # on [0,1]


def _coeff_a(params: ModelParams, x):
    return np.where(np.asarray(x) <= params.b, 1.0 + 0.0j, params.a_R)


def assemble_interval(mesh: IntervalMesh, params: ModelParams, p: int) -> Pencil:
    """Assemble the pencil (A, B) for degree p Lagrange elements."""
    if p not in (1, 2, 3):
        raise ValueError(f"degree must be 1, 2 or 3, got {p}")
    xs = mesh.nodes
    nel = mesh.n_elements
    nnode = nel * p + 1
    node_x = np.empty(nnode)
    for k in range(nel):
        node_x[k * p : (k + 1) * p + 1] = xs[k] + (xs[k + 1] - xs[k]) * np.linspace(
            0.0, 1.0, p + 1
        )

    vals, ders = lagrange_basis(p)
    tq, wq = _gauss(p + 1)

    rows, cols, a_data, b_data = [], [], [], []
    dofs = np.arange(p + 1)
    for k in range(nel):
        xl, xr = xs[k], xs[k + 1]
        h = xr - xl
        gdofs = k * p + dofs
        # split at the jump if it lies strictly inside the element
        if xl < params.b < xr:
            segs = [(xl, params.b), (params.b, xr)]
        else:
            segs = [(xl, xr)]
        Ae = np.zeros((p + 1, p + 1), dtype=complex)
        Be = np.zeros((p + 1, p + 1), dtype=float)
        for sl, sr in segs:
            xq = sl + (sr - sl) * tq
            tref = (xq - xl) / h
            phi = vals(tref)  # (p+1, nq)
            dphi = ders(tref) / h
            aq = _coeff_a(params, 0.5 * (sl + sr) * np.ones_like(xq))
            wseg = (sr - sl) * wq
            Ae += np.einsum("q,iq,jq->ij", aq * wseg, dphi, dphi)
            Be += np.einsum("q,iq,jq->ij", wseg, phi, phi).real
        rows.append(np.repeat(gdofs, p + 1))
        cols.append(np.tile(gdofs, p + 1))
        a_data.append(Ae.ravel())
        b_data.append(Be.ravel())

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    A = sp.coo_matrix(
        (np.concatenate(a_data), (rows, cols)), shape=(nnode, nnode)
    ).tocsr()
    B = sp.coo_matrix(
        (np.concatenate(b_data).astype(complex), (rows, cols)),
        shape=(nnode, nnode),
    ).tocsr()
    # Robin contribution at x = 1
    A = A.tolil()
    A[nnode - 1, nnode - 1] += params.c
    A = A.tocsr()

    free = np.arange(1, nnode)  # eliminate the Dirichlet DOF at x = 0
    A = A[free][:, free].tocsr()
    B = B[free][:, free].tocsr()
    meta = {
        "kind": "interval",
        "p": p,
        "dim": 1,
        "mesh": mesh,
        "params": params,
        "node_x": node_x,
        "h": mesh.h,
    }
    return Pencil(A=A, B=B, free=free, meta=meta)


class Function1D:
    """Discrete FEM function from a pencil and a free-DOF vector."""

    def __init__(self, pencil: Pencil, vec: np.ndarray):
        if pencil.meta.get("kind") != "interval":
            raise ValueError("Function1D needs an interval pencil")
        self.pencil = pencil
        self.p = pencil.meta["p"]
        self.mesh = pencil.meta["mesh"]
        self.node_x = pencil.meta["node_x"]
        full = np.zeros(len(self.node_x), dtype=complex)
        full[pencil.free] = vec
        self.coeffs = full
        self._vals, self._ders = lagrange_basis(self.p)

    def __call__(self, x):
        """Values and first derivatives at points x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xs = self.mesh.nodes
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        xl, xr = xs[k], xs[k + 1]
        h = xr - xl
        tref = (x - xl) / h
        phi = self._vals(tref)  # (p+1, m)
        dphi = self._ders(tref) / h
        p = self.p
        gdofs = k[None, :] * p + np.arange(p + 1)[:, None]
        c = self.coeffs[gdofs]
        return np.sum(c * phi, axis=0), np.sum(c * dphi, axis=0)
