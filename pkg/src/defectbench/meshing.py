"""Interval meshes, tensor grids, and NVB-refined triangulations.

Triangles are stored as vertex-index triples (v0, v1, v2) where the
refinement edge is (v0, v1) and v2 is the newest vertex.  Newest-vertex
bisection of (v0, v1, v2) with edge midpoint m produces (v2, v0, m) and
(v1, v2, m).  Boundary tags on the unit square follow the geometric rule:
Dirichlet on {x=0} and {y=0}, Robin on {x=1} and {y=1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntervalMesh",
    "TriMesh",
    "TensorGrid",
    "uniform_interval_mesh",
    "refine_interval",
    "initial_square_triangulation",
    "nvb_refine",
    "tensor_grid",
]

DIRICHLET = "DIRICHLET"
ROBIN = "ROBIN"
_GEOM_TOL = 1e-12


@dataclass(frozen=True)
class IntervalMesh:
    nodes: np.ndarray
    jump_aligned: bool = False

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes[0] != 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must increase strictly from 0 to 1")

    @property
    def n_elements(self) -> int:
        return len(self.nodes) - 1

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.nodes)))


def uniform_interval_mesh(n: int, force_node: float | None = None) -> IntervalMesh:
    """n equal elements on [0,1], optionally with an extra node inserted."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    nodes = np.linspace(0.0, 1.0, n + 1)
    aligned_at = None
    if force_node is not None:
        if not 0.0 < force_node < 1.0:
            raise ValueError("force_node must be in (0,1)")
        if not np.any(np.abs(nodes - force_node) <= _GEOM_TOL):
            nodes = np.sort(np.append(nodes, force_node))
        aligned_at = force_node
    mesh = IntervalMesh(nodes=nodes, jump_aligned=aligned_at is not None)
    return mesh


def contains_node(mesh: IntervalMesh, x: float, tol: float = _GEOM_TOL) -> bool:
    return bool(np.any(np.abs(mesh.nodes - x) <= tol))


def refine_interval(mesh: IntervalMesh) -> IntervalMesh:
    """Bisect every element at its midpoint."""
    nodes = mesh.nodes
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    new = np.sort(np.concatenate([nodes, mids]))
    return IntervalMesh(nodes=new, jump_aligned=mesh.jump_aligned)


@dataclass(frozen=True)
class TensorGrid:
    dim: int
    axis_mesh: IntervalMesh

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")

    @property
    def n_points(self) -> int:
        return len(self.axis_mesh.nodes) ** self.dim


def tensor_grid(dim: int, axis: IntervalMesh) -> TensorGrid:
    return TensorGrid(dim=dim, axis_mesh=axis)


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangulation of the unit square.

    vertices: (nv, 2) float array; triangles: (nt, 3) int array with the
    refinement-edge convention from the module docstring.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edges(self):
        """All unique edges as sorted vertex pairs, plus per-triangle edges."""
        t = self.triangles
        tri_edges = np.stack(
            [t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1
        )  # (nt, 3, 2)
        flat = np.sort(tri_edges.reshape(-1, 2), axis=1)
        uniq, inv, counts = np.unique(
            flat, axis=0, return_inverse=True, return_counts=True
        )
        return uniq, inv.reshape(-1, 3), counts

    def boundary_edges(self):
        """(ne, 2) boundary edges with their tags, by the geometric rule."""
        uniq, _, counts = self.edges()
        bnd = uniq[counts == 1]
        tags = []
        v = self.vertices
        for e in bnd:
            p, q = v[e[0]], v[e[1]]
            if (abs(p[0]) <= _GEOM_TOL and abs(q[0]) <= _GEOM_TOL) or (
                abs(p[1]) <= _GEOM_TOL and abs(q[1]) <= _GEOM_TOL
            ):
                tags.append(DIRICHLET)
            elif (
                abs(p[0] - 1) <= _GEOM_TOL and abs(q[0] - 1) <= _GEOM_TOL
            ) or (abs(p[1] - 1) <= _GEOM_TOL and abs(q[1] - 1) <= _GEOM_TOL):
                tags.append(ROBIN)
            else:
                raise ValueError(f"boundary edge {e} not on the unit square")
        return bnd, tags

    def areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        d1 = v[t[:, 1]] - v[t[:, 0]]
        d2 = v[t[:, 2]] - v[t[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def min_angle(self) -> float:
        v = self.vertices
        t = self.triangles
        angles = []
        for i in range(3):
            a = v[t[:, i]]
            b = v[t[:, (i + 1) % 3]]
            c = v[t[:, (i + 2) % 3]]
            u, w = b - a, c - a
            cosang = np.sum(u * w, axis=1) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
            )
            angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return float(np.min(angles))

    def dump(self) -> str:
        """Line-oriented debug format: v x y / t i j k r / e i j TAG."""
        lines = [f"v {p[0]!r} {p[1]!r}" for p in self.vertices]
        # refinement edge is (v0, v1): local index 0
        lines += [f"t {t[0]} {t[1]} {t[2]} 0" for t in self.triangles]
        bnd, tags = self.boundary_edges()
        lines += [f"e {e[0]} {e[1]} {tag}" for e, tag in zip(bnd, tags)]
        return "\n".join(lines) + "\n"


def initial_square_triangulation(n0: int) -> TriMesh:
    """n0 x n0 squares, each split by the bottom-left to top-right diagonal.

    The diagonal is the longest edge and becomes the refinement edge.
    """
    if n0 < 1:
        raise ValueError(f"need n0 >= 1, got {n0}")
    xs = np.linspace(0.0, 1.0, n0 + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):  # column i, row j
        return j * (n0 + 1) + i

    tris = []
    for j in range(n0):
        for i in range(n0):
            bl, br = vid(i, j), vid(i + 1, j)
            tl, tr = vid(i, j + 1), vid(i + 1, j + 1)
            # diagonal bl-tr is the refinement edge of both children;
            # vertex order keeps the orientation positive
            tris.append((tr, bl, br))
            tris.append((bl, tr, tl))
    return TriMesh(vertices=vertices, triangles=np.array(tris, dtype=np.int64))


def nvb_refine(mesh: TriMesh, marked) -> TriMesh:
    """Newest-vertex bisection of marked triangles + conforming closure."""
    marked = set(int(i) for i in marked)
    if not marked:
        return mesh
    t = mesh.triangles
    nt = len(t)
    uniq_edges, tri_edge_ids, _ = mesh.edges()
    # tri_edge_ids[:, 0] is the refinement edge (v0, v1)

    # closure: any triangle touching a marked edge must have its refinement
    # edge marked too
    edge_marked = np.zeros(len(uniq_edges), dtype=bool)
    edge_marked[tri_edge_ids[sorted(marked), 0]] = True
    while True:
        touches = edge_marked[tri_edge_ids].any(axis=1)
        need = touches & ~edge_marked[tri_edge_ids[:, 0]]
        if not need.any():
            break
        edge_marked[tri_edge_ids[need, 0]] = True

    # midpoints for all marked edges
    nv = len(mesh.vertices)
    marked_ids = np.flatnonzero(edge_marked)
    mid_of = {int(e): nv + k for k, e in enumerate(marked_ids)}
    midpoints = 0.5 * (
        mesh.vertices[uniq_edges[marked_ids, 0]]
        + mesh.vertices[uniq_edges[marked_ids, 1]]
    )
    vertices = np.vstack([mesh.vertices, midpoints])

    def edge_id(a, b, lookup={}):
        return lookup[(min(a, b), max(a, b))]

    edge_lookup = {
        (int(e[0]), int(e[1])): i for i, e in enumerate(uniq_edges)
    }

    out = []

    def bisect(tri):
        v0, v1, v2 = tri
        key = (min(v0, v1), max(v0, v1))
        eid = edge_lookup.get(key)
        if eid is None or not edge_marked[eid]:
            out.append(tri)
            return
        m = mid_of[eid]
        bisect((v2, v0, m))
        bisect((v1, v2, m))

    for tri in t:
        bisect((int(tri[0]), int(tri[1]), int(tri[2])))

    return TriMesh(vertices=vertices, triangles=np.array(out, dtype=np.int64))
