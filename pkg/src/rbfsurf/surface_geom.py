"""Normals and curvature estimated from the point cloud alone.

Around each node a local implicit model of the surface is fitted: an RBF
interpolant constrained to vanish at the stencil nodes and to take the
values +1 and -1 at two points placed off the surface along a rough normal.
The gradient of that level-set function gives the unit normal; its
divergence gives the curvature ``kappa = div(n)`` (equal to 2 on the unit
sphere with the outward normal).

Per-node fits fix the normal only up to sign.  A breadth-first pass over the
stencil graph makes the signs globally consistent, and each connected
component is flipped, if needed, so normals point away from the centroid on
average.  Curvature flips sign together with the normal.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._linalg import solve_with_cond
from .errors import ConditioningError, GeometryError
from .kernels import Kernel
from .nodesets import ImplicitSurface, NodeSet, Stencil, nearest_neighbors

_COLLINEAR_TOL = 1e-10
# selection threshold on the sine of the subtended angle: the two nearest
# neighbors of a quasi-uniform node are often nearly opposite each other
# (deviation angle on the order of the local spacing), and a nearly
# collinear pair yields a tangent (useless) normal guess
_SELECTION_SIN = 0.5
_GRAD_TOL = 1e-12


@dataclass(frozen=True)
class LevelSetFit:
    """Local implicit surface model around one stencil.

    ``Psi(x) = sum_k coefficients[k] * phi(|x - centers[k]|) + constant``
    with the last two centers being the off-surface points.  The
    coefficients sum to zero (augmented-constant constraint).
    """

    coefficients: np.ndarray
    constant: float
    centers: np.ndarray
    kernel: Kernel
    cond: float

    def __call__(self, x):
        """Evaluate Psi at a point."""
        r = np.linalg.norm(np.asarray(x, dtype=float) - self.centers, axis=1)
        return float(self.coefficients @ self.kernel.phi(r) + self.constant)


@dataclass
class SurfaceFrame:
    """Per-node unit normals (N, 3) and curvatures (N,)."""

    normals: np.ndarray
    curvatures: np.ndarray

    def __post_init__(self):
        self.normals = np.asarray(self.normals, dtype=float)
        self.curvatures = np.asarray(self.curvatures, dtype=float)
        if self.normals.shape != (len(self.curvatures), 3):
            raise ValueError("normals must be (N, 3) matching curvatures (N,)")

    def __len__(self):
        return len(self.curvatures)

    def flipped(self):
        """Frames with every normal (and hence curvature) sign-flipped."""
        return SurfaceFrame(-self.normals, -self.curvatures)


def approx_normal(center, a, b):
    """Rough unit normal from two stencil points, used to place off-surface points.

    Returns the normalized cross product ``(center - a) x (center - b)``;
    its sign is arbitrary. Raises :class:`GeometryError` if the three points
    are (nearly) collinear.
    """
    center = np.asarray(center, dtype=float)
    u = center - np.asarray(a, dtype=float)
    v = center - np.asarray(b, dtype=float)
    n = np.cross(u, v)
    norm = np.linalg.norm(n)
    scale = np.linalg.norm(u) * np.linalg.norm(v)
    if norm <= _COLLINEAR_TOL * scale or scale == 0.0:
        raise GeometryError("stencil points are collinear with the center")
    return n / norm


def _stencil_normal_guess(points):
    """Normal guess from the nearest neighbor and the first well-separated b.

    b advances through the stencil by distance order until the pair
    subtends a healthy angle at the center (sine above the selection
    threshold); failing that, the widest available pair is used as long as
    it clears the collinearity precondition.
    """
    center = points[0]
    u = center - points[1]
    u_norm = np.linalg.norm(u)
    best_j, best_sin = None, 0.0
    for j in range(2, len(points)):
        v = center - points[j]
        scale = u_norm * np.linalg.norm(v)
        if scale == 0.0:
            continue
        sin = np.linalg.norm(np.cross(u, v)) / scale
        if sin >= _SELECTION_SIN:
            return approx_normal(center, points[1], points[j])
        if sin > best_sin:
            best_j, best_sin = j, sin
    if best_j is not None and best_sin > _COLLINEAR_TOL:
        return approx_normal(center, points[1], points[best_j])
    raise GeometryError("all stencil points are collinear; cannot orient off-surface points")


def fit_levelset(stencil: Stencil, nodes: NodeSet, kernel: Kernel, h: float):
    """Fit the local level-set interpolant for one stencil.

    The augmented (M+3) x (M+3) system enforces Psi = 0 at the M stencil
    nodes, Psi = +1 / -1 at the two points offset by ``h`` along the rough
    normal, and a zero-sum constraint on the RBF coefficients.
    """
    if stencil.size < 5:
        raise ValueError(f"level-set fit needs a stencil of at least 5 nodes, got {stencil.size}")
    if not h > 0:
        raise ValueError(f"off-surface offset must be positive, got {h}")
    pts = nodes.points[stencil.all_indices()]
    n_app = _stencil_normal_guess(pts)
    centers = np.vstack([pts, pts[0] + h * n_app, pts[0] - h * n_app])

    m2 = len(centers)  # M + 2
    A = np.zeros((m2 + 1, m2 + 1))
    A[:m2, :m2] = kernel.phi(cdist(centers, centers))
    A[:m2, m2] = 1.0
    A[m2, :m2] = 1.0
    rhs = np.zeros(m2 + 1)
    rhs[m2 - 2] = 1.0
    rhs[m2 - 1] = -1.0

    sol, cond = solve_with_cond(A, rhs)
    return LevelSetFit(sol[:m2], float(sol[m2]), centers, kernel, cond)


def levelset_gradient(fit: LevelSetFit, x):
    """Gradient of the fitted Psi at a point (chain rule through phi(r))."""
    rv = np.asarray(x, dtype=float) - fit.centers
    r = np.linalg.norm(rv, axis=1)
    # phi'(r)/r is finite at r = 0 and the r-vector vanishes there, so the
    # center contributes nothing, as it should.
    return (fit.kernel.dphi_over_r(r) * fit.coefficients) @ rv


def levelset_normal(fit: LevelSetFit, x):
    """Unit normal grad(Psi)/|grad(Psi)| at a point."""
    g = levelset_gradient(fit, x)
    norm = np.linalg.norm(g)
    if norm <= _GRAD_TOL:
        raise GeometryError(f"level-set gradient vanished (|grad| = {norm:.3e})")
    return g / norm


def levelset_curvature(fit: LevelSetFit, x, normal):
    """Curvature div(n) of the fitted level set at a point.

    ``normal`` is the unit normal at ``x`` (only its direction squared
    enters, so the sign does not matter here).
    """
    g = levelset_gradient(fit, x)
    grad_norm = np.linalg.norm(g)
    if grad_norm <= _GRAD_TOL:
        raise GeometryError(f"level-set gradient vanished (|grad| = {grad_norm:.3e})")
    rv = np.asarray(x, dtype=float) - fit.centers
    r = np.linalg.norm(rv, axis=1)
    rn = rv @ np.asarray(normal, dtype=float)
    # (r.n)/r -> 0 as r -> 0: the in-surface approach direction is tangent.
    ratio = np.divide(rn, r, out=np.zeros_like(r), where=r > 0)
    q = ratio * ratio
    terms = (1.0 + q) * fit.kernel.dphi_over_r(r) + (1.0 - q) * fit.kernel.d2phi(r)
    return float(fit.coefficients @ terms) / grad_norm


def _orient_frames(points, normals, curvatures, adjacency):
    """Make normal signs globally consistent.

    Signs propagate over the stencil graph from the lowest unvisited index,
    always crossing the geometrically shortest frontier edge next (a Prim
    traversal).  Short edges connect nearby nodes whose true normals are
    nearly parallel, so flipping a newcomer whenever its normal opposes its
    tree parent's is reliable; plain first-in-first-out order is not, since
    wide stencils put far-apart (even antipodal) nodes on one edge.  Each
    component is then flipped as a whole if its mean normal points toward
    the centroid.
    """
    n_nodes = len(points)
    centroid = points.mean(axis=0)
    visited = np.zeros(n_nodes, dtype=bool)
    for root in range(n_nodes):
        if visited[root]:
            continue
        component = [root]
        visited[root] = True
        frontier = [(np.linalg.norm(points[j] - points[root]), root, j)
                    for j in adjacency[root]]
        heapq.heapify(frontier)
        while frontier:
            _, i, j = heapq.heappop(frontier)
            if visited[j]:
                continue
            if normals[i] @ normals[j] < 0:
                normals[j] = -normals[j]
                curvatures[j] = -curvatures[j]
            visited[j] = True
            component.append(j)
            for k in adjacency[j]:
                if not visited[k]:
                    heapq.heappush(frontier, (np.linalg.norm(points[k] - points[j]), j, k))
        comp = np.array(component)
        outward = np.einsum("ij,ij->i", normals[comp], points[comp] - centroid)
        if outward.mean() < 0:
            normals[comp] = -normals[comp]
            curvatures[comp] = -curvatures[comp]


def estimate_frames(nodes: NodeSet, m: int, kernel: Kernel):
    """Estimate the SurfaceFrame at every node of a point cloud.

    Each node gets an independent level-set fit over its M-node stencil,
    with the off-surface offset equal to the nearest-neighbor distance;
    a deterministic orientation pass then fixes the global sign.
    """
    n = len(nodes)
    if m < 5:
        raise ValueError(f"frame estimation needs stencils of at least 5 nodes, got M={m}")
    if m > n:
        raise ValueError(f"stencil size M={m} exceeds node count N={n}")

    normals = np.zeros((n, 3))
    curvatures = np.zeros(n)
    adjacency = [set() for _ in range(n)]
    for i in range(n):
        stencil = nearest_neighbors(nodes, i, m)
        for j in stencil.neighbor_indices:
            adjacency[i].add(int(j))
            adjacency[j].add(i)
        try:
            fit = fit_levelset(stencil, nodes, kernel, h=float(stencil.neighbor_distances[0]))
            normals[i] = levelset_normal(fit, nodes.points[i])
            curvatures[i] = levelset_curvature(fit, nodes.points[i], normals[i])
        except ConditioningError as exc:
            raise ConditioningError(
                f"frame estimation failed at node {i}: {exc}", cond=exc.cond, node_indices=[i]
            ) from exc
        except GeometryError as exc:
            raise GeometryError(f"frame estimation failed at node {i}: {exc}", node_index=i) from exc

    adjacency = [sorted(a) for a in adjacency]
    _orient_frames(nodes.points, normals, curvatures, adjacency)
    return SurfaceFrame(normals, curvatures)


def analytic_frames(surface: ImplicitSurface, points):
    """Exact frames of an implicit surface, oriented along grad(F).

    Requires the surface to carry a Hessian; curvature is
    ``div(grad F / |grad F|) = (lap F - n.H.n) / |grad F|``.
    """
    if surface.hessF is None:
        raise ValueError("surface has no Hessian; analytic curvature unavailable")
    points = np.asarray(points, dtype=float)
    g = surface.gradF(points)
    norms = np.linalg.norm(g, axis=-1)
    if np.any(norms <= _GRAD_TOL):
        raise GeometryError("surface gradient vanished at a node")
    n = g / norms[:, None]
    H = surface.hessF(points)
    lap = np.trace(H, axis1=-2, axis2=-1)
    nHn = np.einsum("...i,...ij,...j->...", n, H, n)
    return SurfaceFrame(n, (lap - nHn) / norms)


# ---------------------------------------------------------------------------
# frame CSV I/O
# ---------------------------------------------------------------------------

FRAME_CSV_HEADER = "x,y,z,nx,ny,nz,kappa"


def save_frames(nodes: NodeSet, frames: SurfaceFrame, path):
    """Write frames as CSV with columns x,y,z,nx,ny,nz,kappa, node order preserved."""
    if len(frames) != len(nodes):
        raise ValueError("frame count does not match node count")
    data = np.column_stack([nodes.points, frames.normals, frames.curvatures])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=FRAME_CSV_HEADER, comments="")


def load_frames(path):
    """Read a frame CSV; returns (points, SurfaceFrame) in file order."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 7:
        raise ValueError(f"frame CSV must have 7 columns ({FRAME_CSV_HEADER})")
    return data[:, :3], SurfaceFrame(data[:, 3:6], data[:, 6])
