"""RBF-FD approximation of the Laplace-Beltrami operator.

The surface Laplacian of a radial function centered at ``x_i``, evaluated at
a point with unit normal ``n`` and curvature ``kappa``, has the closed form

    (1 + (r.n)^2/r^2 - kappa*(r.n)) * phi'(r)/r
    + (1 - (r.n)^2/r^2) * phi''(r)

with ``r`` the vector from the evaluation point to ``x_i``.  Per-stencil
weights come from the augmented interpolation system (constant term
included, which forces every weight row to sum to zero); rows are stacked
into a sparse N x N differentiation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from ._linalg import solve_with_cond
from .errors import ConditioningError
from .kernels import Kernel
from .nodesets import NodeSet, Stencil, nearest_neighbors
from .surface_geom import SurfaceFrame


@dataclass(frozen=True)
class StencilGeometry:
    """Geometry of one weight solve: stencil points plus the center's frame.

    ``r_vectors[j] = center - points[j]`` (so the first row is zero), and
    ``distances`` are their norms.
    """

    center: np.ndarray
    points: np.ndarray
    r_vectors: np.ndarray
    distances: np.ndarray
    normal: np.ndarray
    curvature: float

    @classmethod
    def from_points(cls, points, normal, curvature):
        """Build from stencil points (center first) and the center's frame."""
        points = np.asarray(points, dtype=float)
        center = points[0]
        r_vectors = center - points
        return cls(
            center=center,
            points=points,
            r_vectors=r_vectors,
            distances=np.linalg.norm(r_vectors, axis=1),
            normal=np.asarray(normal, dtype=float),
            curvature=float(curvature),
        )

    @classmethod
    def from_stencil(cls, nodes: NodeSet, stencil: Stencil, frames: SurfaceFrame):
        i = stencil.center_index
        return cls.from_points(
            nodes.points[stencil.all_indices()], frames.normals[i], frames.curvatures[i]
        )

    @property
    def size(self):
        return len(self.points)


def _lbo_of_rbf_rows(kernel, r_vectors, distances, normal, kappa):
    """Vectorized closed-form surface Laplacian of phi over stencil rows.

    With c = (r.n)/r the row is (1 + c^2 - kappa r.n) phi'/r + (1 - c^2) phi'',
    the ambient Laplacian minus the normal-derivative and second-normal
    terms of a radial function.
    """
    rn = r_vectors @ normal
    ratio = np.divide(rn, distances, out=np.zeros_like(distances), where=distances > 0)
    q = ratio * ratio
    return (1.0 + q - kappa * rn) * kernel.dphi_over_r(distances) + (
        1.0 - q
    ) * kernel.d2phi(distances)


def lbo_of_rbf(kernel: Kernel, r_vec, normal, kappa):
    """Surface Laplacian of an RBF for a single displacement vector.

    At ``r = 0`` the tangential-approach limit applies: ``(r.n)/r := 0``, so
    the value reduces to ``phi'(r)/r|_0 + phi''(0)``.
    """
    rv = np.asarray(r_vec, dtype=float).reshape(1, 3)
    d = np.linalg.norm(rv, axis=1)
    return float(_lbo_of_rbf_rows(kernel, rv, d, np.asarray(normal, dtype=float), kappa)[0])


def _weight_system(geom: StencilGeometry, kernel: Kernel):
    m = geom.size
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = kernel.phi(cdist(geom.points, geom.points))
    A[:m, m] = 1.0
    A[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[:m] = _lbo_of_rbf_rows(kernel, geom.r_vectors, geom.distances, geom.normal, geom.curvature)
    return A, rhs


def stencil_weights(geom: StencilGeometry, kernel: Kernel, gate=True, return_cond=False):
    """Solve the augmented weight system for one stencil.

    Returns the M weights; the extra unknown attached to the constant basis
    function is solved for and discarded.  The constraint row makes the
    weights sum to zero, which is exactness on constants.  With
    ``return_cond`` the estimated condition number of the system comes back
    alongside the weights.
    """
    A, rhs = _weight_system(geom, kernel)
    sol, cond = solve_with_cond(A, rhs, gate=gate)
    return (sol[:-1], cond) if return_cond else sol[:-1]


def assemble_operator(nodes: NodeSet, frames: SurfaceFrame, m: int, kernel: Kernel):
    """Assemble the sparse N x N differentiation matrix, M weights per row.

    Row i holds the stencil weights of node i at its stencil's columns.
    Rows are independent, so assembly order cannot change the values.
    Conditioning failures are collected and reported together with the
    offending node indices.
    """
    n = len(nodes)
    if len(frames) != n:
        raise ValueError("frames must cover every node")
    if not 1 <= m <= n:
        raise ValueError(f"stencil size must satisfy 1 <= M <= {n}, got {m}")

    indptr = np.arange(0, (n + 1) * m, m)
    indices = np.empty(n * m, dtype=np.int64)
    data = np.empty(n * m)
    failed = []
    worst_cond = 0.0
    for i in range(n):
        stencil = nearest_neighbors(nodes, i, m)
        geom = StencilGeometry.from_stencil(nodes, stencil, frames)
        try:
            w = stencil_weights(geom, kernel)
        except ConditioningError as exc:
            failed.append(i)
            worst_cond = max(worst_cond, exc.cond or np.inf)
            continue
        cols = stencil.all_indices()
        order = np.argsort(cols)
        indices[i * m:(i + 1) * m] = cols[order]
        data[i * m:(i + 1) * m] = w[order]
    if failed:
        shown = ", ".join(map(str, failed[:10])) + ("..." if len(failed) > 10 else "")
        raise ConditioningError(
            f"{len(failed)} stencil systems numerically singular (nodes {shown})",
            cond=worst_cond,
            node_indices=failed,
        )
    matrix = sparse.csr_matrix((data, indices, indptr), shape=(n, n))
    return SparseOperator(matrix, stencil_size=m)


class SparseOperator:
    """Sparse differentiation matrix with a fixed number of entries per row."""

    def __init__(self, matrix, stencil_size):
        matrix = sparse.csr_matrix(matrix)
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError("operator must be square")
        self.matrix = matrix
        self.stencil_size = int(stencil_size)

    @property
    def n(self):
        return self.matrix.shape[0]

    def apply(self, field):
        """Matrix-vector product against a nodal field of length N."""
        field = np.asarray(field, dtype=float)
        if field.shape[-1] != self.n:
            raise ValueError(f"field length {field.shape[-1]} does not match N={self.n}")
        return self.matrix @ field if field.ndim == 1 else field @ self.matrix.T

    def row_sums(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def to_dense(self):
        return self.matrix.toarray()

    def save(self, path):
        """Text format: header ``N M``, then 0-based ``row col weight`` triplets."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.n} {self.stencil_size}\n")
            for r, c, w in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r} {c} {w:.17g}\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline().split()
            if len(first) != 2:
                raise ValueError("operator file must start with an 'N M' header")
            n, m = int(first[0]), int(first[1])
            rows, cols, vals = [], [], []
            for line in fh:
                if not line.strip():
                    continue
                r, c, w = line.split()
                rows.append(int(r))
                cols.append(int(c))
                vals.append(float(w))
        matrix = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(n, n)
        )
        return cls(matrix, stencil_size=m)


def apply_operator(op: SparseOperator, field):
    """Functional alias for :meth:`SparseOperator.apply`."""
    return op.apply(field)
