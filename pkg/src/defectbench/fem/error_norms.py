"""H1 distances between discrete functions and analytic spans.

Eigenfunctions are defined up to a complex scalar, so errors are measured
after projecting onto the span of the supplied analytic evaluators: the
reported value is min over complex coefficients of the quadrature H1 norm
of (linear combination - u_h).
"""

from __future__ import annotations

import numpy as np

from .interval import Function1D

__all__ = ["h1_error", "h1_norm"]


class SingularAlignmentError(RuntimeError):
    """The Gram matrix of the alignment space is numerically singular."""


def _quad_points(func: Function1D):
    """Per-element Gauss points of order 2p+2, split at the coefficient jump."""
    mesh, p = func.mesh, func.p
    b = func.pencil.meta["params"].b
    nq = p + 2  # Gauss with p+2 points integrates degree 2p+3 >= 2p+2
    gx, gw = np.polynomial.legendre.leggauss(nq)
    gx, gw = 0.5 * (gx + 1.0), 0.5 * gw
    pts, wts = [], []
    for xl, xr in zip(mesh.nodes[:-1], mesh.nodes[1:]):
        segs = [(xl, b), (b, xr)] if xl < b < xr else [(xl, xr)]
        for sl, sr in segs:
            pts.append(sl + (sr - sl) * gx)
            wts.append((sr - sl) * gw)
    return np.concatenate(pts), np.concatenate(wts)


def h1_norm(func: Function1D) -> float:
    x, w = _quad_points(func)
    v, d = func(x)
    return float(np.sqrt(np.sum(w * (np.abs(v) ** 2 + np.abs(d) ** 2))))


def h1_error(u_h: Function1D, w, alignment_space=None) -> float:
    """min over gamma of ||sum gamma_i w_i - u_h||_{H1(0,1)}.

    Each evaluator maps points x to a (values, derivatives) pair.  With a
    single evaluator this is scalar alignment.
    """
    if alignment_space is None:
        alignment_space = [w]
    x, wq = _quad_points(u_h)
    sq = np.sqrt(wq)
    uv, ud = u_h(x)
    rhs = np.concatenate([sq * uv, sq * ud])
    cols = []
    for wi in alignment_space:
        vv, vd = wi(x)
        cols.append(np.concatenate([sq * vv, sq * vd]))
    design = np.column_stack(cols)
    gram = design.conj().T @ design
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularAlignmentError(
            f"alignment Gram matrix is singular (cond {cond:.3e})"
        )
    gamma, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    return float(np.linalg.norm(design @ gamma - rhs))
