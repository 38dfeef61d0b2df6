"""Shared pencil container and the coercivity shift."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = ["Pencil", "coercivity_shift", "dump_matrix"]


@dataclass
class Pencil:
    """Complex sparse matrix pair (A, B) on the free (non-Dirichlet) DOFs.

    Both matrices are complex symmetric (A^T = A, B^T = B); B is real
    positive definite.  meta carries degree/dimension/mesh information the
    drivers and error norms need to reconstruct discrete functions.
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    free: np.ndarray  # indices of free DOFs in the full node numbering
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __post_init__(self):
        if self.A.shape != self.B.shape or self.A.shape[0] != self.A.shape[1]:
            raise ValueError("A and B must be square and of equal size")


def coercivity_shift(alpha0: float, c0: float, C_trace: float,
                     has_dirichlet: bool) -> float:
    """Shift making the form coercive (reported, not used by the solver)."""
    if alpha0 <= 0 or C_trace <= 0:
        raise ValueError("need alpha0 > 0 and C_trace > 0")
    if c0 >= 0:
        return 0.0 if has_dirichlet else alpha0
    return alpha0 + C_trace * c0**2 / alpha0


def dump_matrix(M: sp.spmatrix) -> str:
    """Coordinate text dump `i j re im`, sorted by (i, j)."""
    coo = M.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [
        f"{coo.row[k]} {coo.col[k]} {coo.data[k].real!r} {coo.data[k].imag!r}"
        for k in order
    ]
    return "\n".join(lines) + "\n"
