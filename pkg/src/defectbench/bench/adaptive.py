"""Residual a posteriori estimator, Dörfler marking, and the adaptive loop.

The estimator sums, over the cluster pairs (lambda, u_h), element volume
residuals h_T^2 ||div(a grad u_h) + lambda u_h||^2, interior flux jumps
h_E ||[a grad u_h . n]||^2, and Robin boundary residuals
h_E ||a grad u_h . n + c u_h||^2.  The adjoint half is computed with
conjugated data (valid since the assemblies are complex symmetric, so
adjoint eigenpairs are conjugates of primal ones) and added.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..eigensolve import eigs_near, mean_of_cluster, select_cluster
from ..fem import Coefficient2D, assemble_triangles
from ..fem.triangles import _EG_W, _EG_X, _basis, _dof_layout
from ..meshing import ROBIN, TriMesh, initial_square_triangulation, nvb_refine
from .cases import BenchmarkCase
from .convergence import ConvergenceRow, ConvergenceTable, solver_floor

__all__ = [
    "EstimatorField",
    "residual_estimator",
    "dorfler_mark",
    "adaptive_loop",
]

# reference vertices; local edges (0,1), (1,2), (2,0)
_LREF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_LOC_ENDS = ((0, 1), (1, 2), (2, 0))

# reference Hessians of the P2 basis (constant); order matches _basis(2)
_HESS_P2 = np.array(
    [
        [[4.0, 4.0], [4.0, 4.0]],
        [[4.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 4.0]],
        [[-8.0, -4.0], [-4.0, 0.0]],
        [[0.0, 4.0], [4.0, 0.0]],
        [[0.0, -4.0], [-4.0, -8.0]],
    ]
)


@dataclass
class EstimatorField:
    eta_sq: np.ndarray  # per-triangle indicator, >= 0

    @property
    def total(self) -> float:
        return float(np.sum(self.eta_sq))


def _half(mesh: TriMesh, pairs, coeff: Coefficient2D, p: int) -> np.ndarray:
    """Per-triangle squared indicators of one (primal or adjoint) half."""
    vals, grads = _basis(p)
    coords, tri_dofs, _ = _dof_layout(mesh, p)
    v, t = mesh.vertices, mesh.triangles
    nt = len(t)
    lams = np.array([lam for lam, _ in pairs])
    U = np.stack([u for _, u in pairs])  # (m, ndof)
    ce = U[:, tri_dofs]  # (m, nt, ndl)

    P0, P1, P2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    J = np.stack([P1 - P0, P2 - P0], axis=-1)
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJT = (
        np.stack(
            [
                np.stack([J[:, 1, 1], -J[:, 1, 0]], axis=-1),
                np.stack([-J[:, 0, 1], J[:, 0, 0]], axis=-1),
            ],
            axis=1,
        )
        / detJ[:, None, None]
    )
    area = 0.5 * np.abs(detJ)
    edge_vecs = np.stack([P1 - P0, P2 - P1, P0 - P2], axis=1)  # (nt, 3, 2)
    edge_len = np.linalg.norm(edge_vecs, axis=2)  # (nt, 3)
    h_T = edge_len.max(axis=1)

    eta = np.zeros(nt)

    # --- volume residual -------------------------------------------------
    from ..fem.triangles import _QPTS, _QWTS

    phi = vals(_QPTS)  # (ndl, nq)
    if p == 2:
        # physical Hessians: invJT (d/dref -> d/dx) applied on both sides
        Hp = np.einsum("tab,kbc,tdc->tkad", invJT, _HESS_P2, invJT)
        uxx_c, uyy_c = Hp[:, :, 0, 0], Hp[:, :, 1, 1]
    for q in range(len(_QWTS)):
        xq = P0 + _QPTS[q, 0] * (P1 - P0) + _QPTS[q, 1] * (P2 - P0)
        ax, ay = coeff.axis(xq[:, 0]), coeff.axis(xq[:, 1])
        uq = np.einsum("mtk,k->mt", ce, phi[:, q])
        r = lams[:, None] * uq
        if p == 2:
            r = r + ax * np.einsum("mtk,tk->mt", ce, uxx_c)
            r = r + ay * np.einsum("mtk,tk->mt", ce, uyy_c)
        eta += h_T**2 * (_QWTS[q] * area) * np.sum(np.abs(r) ** 2, axis=0)

    # --- slot-wise edge data ---------------------------------------------
    # for every triangle-edge slot: outward normal flux and trace values at
    # the 3 Gauss points of the edge (orientation follows the vertex order,
    # so outward assumes positively oriented triangles)
    nq_e = len(_EG_X)
    fluxn = np.empty((len(pairs), nt, 3, nq_e), dtype=complex)
    utrace = np.empty((len(pairs), nt, 3, nq_e), dtype=complex)
    for loc, (ia, ib) in enumerate(_LOC_ENDS):
        ref = _LREF[ia][None, :] * (1 - _EG_X)[:, None] + _LREF[ib][
            None, :
        ] * _EG_X[:, None]
        gref = grads(ref)  # (ndl, nq_e, 2)
        gphys = np.einsum("tab,kqb->tkqa", invJT, gref)
        du = np.einsum("mtk,tkqa->mtqa", ce, gphys)  # (m, nt, nq_e, 2)
        xq = (
            v[t[:, ia]][:, None, :] * (1 - _EG_X)[None, :, None]
            + v[t[:, ib]][:, None, :] * _EG_X[None, :, None]
        )  # (nt, nq_e, 2)
        ax, ay = coeff.axis(xq[:, :, 0]), coeff.axis(xq[:, :, 1])
        tang = v[t[:, ib]] - v[t[:, ia]]
        ln = edge_len[:, loc]
        nx, ny = tang[:, 1] / ln, -tang[:, 0] / ln  # outward for ccw order
        fluxn[:, :, loc, :] = (
            ax * du[..., 0] * nx[None, :, None]
            + ay * du[..., 1] * ny[None, :, None]
        )
        utrace[:, :, loc, :] = np.einsum("mtk,kq->mtq", ce, vals(ref))

    # --- edge adjacency ---------------------------------------------------
    uniq, tri_edge_ids, counts = mesh.edges()
    slot_edge = tri_edge_ids.ravel()
    order = np.argsort(slot_edge, kind="stable")
    starts = np.cumsum(counts) - counts

    interior = np.flatnonzero(counts == 2)
    sL, sR = order[starts[interior]], order[starts[interior] + 1]
    tL, locL = sL // 3, sL % 3
    tR, locR = sR // 3, sR % 3
    lenE = edge_len[tL, locL]
    # both sides traverse the shared edge in opposite directions, so the
    # symmetric Gauss points match after reversal
    jump = fluxn[:, tL, locL, :] + fluxn[:, tR, locR, ::-1]
    contrib = lenE**2 * np.einsum("q,meq->e", _EG_W, np.abs(jump) ** 2)
    np.add.at(eta, tL, 0.5 * contrib)
    np.add.at(eta, tR, 0.5 * contrib)

    bnd_ids = np.flatnonzero(counts == 1)
    if len(bnd_ids):
        _, tags = mesh.boundary_edges()  # aligned with uniq[counts == 1]
        robin = bnd_ids[np.array(tags) == ROBIN]
        if len(robin):
            s = order[starts[robin]]
            tb, locb = s // 3, s % 3
            lenE = edge_len[tb, locb]
            r = fluxn[:, tb, locb, :] + coeff.robin_c * utrace[:, tb, locb, :]
            contrib = lenE**2 * np.einsum("q,meq->e", _EG_W, np.abs(r) ** 2)
            np.add.at(eta, tb, contrib)
    return eta


def residual_estimator(mesh: TriMesh, pairs, coeff: Coefficient2D,
                       p: int = 1) -> EstimatorField:
    """Cluster residual estimator; primal plus conjugate-adjoint halves.

    pairs: (eigenvalue, full-DOF coefficient vector) for each cluster member.
    """
    if not pairs:
        return EstimatorField(eta_sq=np.zeros(mesh.n_triangles))
    adj_coeff = Coefficient2D(
        b=coeff.b, a_R=np.conj(coeff.a_R), robin_c=np.conj(coeff.robin_c)
    )
    # the indicators sum over cluster members, so process one pair at a
    # time: the slot-wise edge arrays would otherwise carry a full cluster
    # axis over every triangle (GBs on fine adaptive meshes)
    eta = np.zeros(mesh.n_triangles)
    for lam, u in pairs:
        eta += _half(mesh, [(lam, u)], coeff, p)
        eta += _half(mesh, [(np.conj(lam), np.conj(u))], adj_coeff, p)
    return EstimatorField(eta_sq=eta)


def dorfler_mark(field: EstimatorField, theta: float):
    """Minimal set (greedy, ties by index) with theta of the total mass."""
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must be in (0, 1], got {theta}")
    eta = field.eta_sq
    total = float(eta.sum())
    if total == 0.0:
        return []
    order = np.argsort(-eta, kind="stable")
    csum = np.cumsum(eta[order])
    k = int(np.searchsorted(csum, theta * total)) + 1
    k = min(k, len(order))
    # never mark zero-indicator triangles (theta = 1 edge case)
    marked = [int(i) for i in order[:k] if eta[i] > 0.0]
    return marked


def adaptive_loop(case: BenchmarkCase, theta: float = 0.5,
                  max_dofs: int = 100_000, p: int = 1,
                  tol: float = 1e-9, n0: int = 4) -> ConvergenceTable:
    """Solve -> estimate -> mark -> refine until the DOF budget is spent."""
    if case.family != "tri":
        raise ValueError("adaptive loop runs on triangular cases")
    par = case.config.params
    coeff = Coefficient2D(b=par.b, a_R=par.a_R, robin_c=par.c)
    target, m = case.target, case.m_alg
    table = ConvergenceTable(case_id=case.id, p=p, target=target)

    mesh = initial_square_triangulation(n0)
    level = 0
    while True:
        pencil = assemble_triangles(mesh, coeff, p)
        if pencil.n > max_dofs:
            break
        try:
            spectrum = eigs_near(pencil, target, m, tol=tol)
        except Exception:
            table.rows.append(
                ConvergenceRow(level, pencil.n, pencil.meta["h"],
                               np.array([]), np.array([]), 0j, np.nan,
                               failed=True)
            )
            break
        idx = select_cluster(spectrum, target, m)
        values = spectrum.values[idx]
        mean = mean_of_cluster(values)
        ndof_full = len(pencil.meta["coords"])
        pairs = []
        for s, j in enumerate(idx):
            full = np.zeros(ndof_full, dtype=complex)
            full[pencil.free] = spectrum.vectors[:, j]
            pairs.append((values[s], full))
        fld = residual_estimator(mesh, pairs, coeff, p)
        table.rows.append(
            ConvergenceRow(
                level=level,
                N=pencil.n,
                h=pencil.meta["h"],
                values=values,
                errors=np.sort(np.abs(target - values))[::-1],
                mean_value=mean,
                mean_error=float(abs(target - mean)),
                eta_total=np.sqrt(fld.total),
                floor=solver_floor(pencil),
            )
        )
        marked = dorfler_mark(fld, theta)
        if not marked:
            break
        mesh = nvb_refine(mesh, marked)
        level += 1
    table.fit_all()
    return table
