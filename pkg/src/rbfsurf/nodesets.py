"""Surface node sets: file I/O, generation, projection, neighbor queries.

A :class:`NodeSet` is an immutable cloud of 3D surface samples.  Stencils for
the finite-difference-style weights are built from nearest neighbors, queried
either brute-force or through a k-d tree; both paths break distance ties by
node index so they return identical stencils.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import NodeFileError, ProjectionError

# Below this size a linear scan beats tree construction.
_BRUTE_FORCE_MAX_N = 512

_MIN_SEPARATION = 1e-12


@dataclass(frozen=True)
class Stencil:
    """A node plus its nearest neighbors, ordered by increasing distance.

    ``neighbor_indices`` never contains the center; ``neighbor_distances``
    are the matching Euclidean distances (non-decreasing).
    """

    center_index: int
    neighbor_indices: np.ndarray
    neighbor_distances: np.ndarray

    @property
    def size(self):
        """Stencil size M (center included)."""
        return len(self.neighbor_indices) + 1

    def all_indices(self):
        """Center index followed by the neighbor indices."""
        return np.concatenate(([self.center_index], self.neighbor_indices))


class NodeSet:
    """N surface sample points in 3D with neighbor-query support.

    Points are validated on construction: at least 4 nodes, and no pair
    closer than 1e-12.  The point array is read-only afterwards.
    """

    def __init__(self, points, label=None):
        pts = np.ascontiguousarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
        if len(pts) < 4:
            raise ValueError(f"need at least 4 nodes, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        close = cKDTree(pts).query_pairs(_MIN_SEPARATION)
        if close:
            i, j = sorted(close)[0]
            raise ValueError(f"nodes {i} and {j} coincide (separation <= {_MIN_SEPARATION:g})")
        pts.setflags(write=False)
        self.points = pts
        self.label = label
        self._tree = None

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<NodeSet{tag} N={len(self)}>"

    @property
    def kdtree(self):
        """Lazily built k-d tree over the points."""
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree


def load_nodes(source):
    """Read a NodeSet from a text stream or file path.

    Format: one whitespace-separated ``x y z`` triple per line; lines whose
    first non-blank character is ``#`` and blank lines are skipped.

    Raises
    ------
    NodeFileError
        On a malformed line, with the 1-based line number.
    ValueError
        If the parsed points violate NodeSet invariants (too few nodes,
        coincident nodes).
    """
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()

    rows = []
    for line_no, line in enumerate(io.StringIO(text), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise NodeFileError(
                f"line {line_no}: expected 3 coordinates, got {len(parts)}", line_no
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise NodeFileError(f"line {line_no}: could not parse {stripped!r}", line_no) from None
    return NodeSet(np.array(rows, dtype=float).reshape(-1, 3))


def save_nodes(nodes, path):
    """Write a NodeSet in the plain ``x y z`` text format."""
    header = f"# {nodes.label}\n" if nodes.label else ""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        for p in nodes.points:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")


# ---------------------------------------------------------------------------
# implicit surfaces
# ---------------------------------------------------------------------------

class SurfaceKind(enum.Enum):
    UNIT_SPHERE = "sphere"
    SCHWARZ_P = "schwarz-p"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ImplicitSurface:
    """A surface given as the zero set of a scalar field F.

    ``F`` maps points of shape (..., 3) to scalars; ``gradF`` to (..., 3).
    ``hessF`` (optional, (..., 3, 3)) enables analytic curvature; both
    built-in surfaces supply it.
    """

    kind: SurfaceKind
    F: Callable[[np.ndarray], np.ndarray]
    gradF: Callable[[np.ndarray], np.ndarray]
    hessF: Optional[Callable[[np.ndarray], np.ndarray]] = None


def unit_sphere():
    """Unit sphere as F(x) = ||x||^2 - 1."""

    def F(p):
        p = np.asarray(p, dtype=float)
        return np.sum(p * p, axis=-1) - 1.0

    def gradF(p):
        return 2.0 * np.asarray(p, dtype=float)

    def hessF(p):
        p = np.asarray(p, dtype=float)
        eye = 2.0 * np.eye(3)
        return np.broadcast_to(eye, p.shape[:-1] + (3, 3)).copy()

    return ImplicitSurface(SurfaceKind.UNIT_SPHERE, F, gradF, hessF)


def schwarz_p():
    """Schwarz primitive minimal surface, cos(2 pi x) + cos(2 pi y) + cos(2 pi z) = 0."""
    w = 2.0 * np.pi

    def F(p):
        p = np.asarray(p, dtype=float)
        return np.sum(np.cos(w * p), axis=-1)

    def gradF(p):
        p = np.asarray(p, dtype=float)
        return -w * np.sin(w * p)

    def hessF(p):
        p = np.asarray(p, dtype=float)
        diag = -w * w * np.cos(w * p)
        out = np.zeros(p.shape[:-1] + (3, 3))
        for a in range(3):
            out[..., a, a] = diag[..., a]
        return out

    return ImplicitSurface(SurfaceKind.SCHWARZ_P, F, gradF, hessF)


def surface_by_name(name):
    """Look up a built-in surface by its CLI name."""
    surfaces = {"sphere": unit_sphere, "schwarz-p": schwarz_p}
    try:
        return surfaces[name]()
    except KeyError:
        raise ValueError(f"unknown surface {name!r}; expected one of {sorted(surfaces)}") from None


# ---------------------------------------------------------------------------
# node generation
# ---------------------------------------------------------------------------

def _fibonacci_sphere(n):
    # Spherical Fibonacci lattice: latitudes at midpoints, golden-angle longitudes.
    i = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * (i + 0.5) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = np.pi * (3.0 - np.sqrt(5.0)) * i
    pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _riesz2_energy_and_forces(pts, chunk=1024):
    """Riesz-2 energy sum(1/r^2) over pairs and its descent direction per point."""
    n = len(pts)
    energy = 0.0
    forces = np.zeros_like(pts)
    for start in range(0, n, chunk):
        block = pts[start:start + chunk]
        diff = block[:, None, :] - pts[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        np.fill_diagonal(r2[:, start:start + len(block)], np.inf)
        inv_r2 = 1.0 / r2
        energy += 0.5 * inv_r2.sum()
        # -grad of energy: sum_j (x_i - x_j) / r_ij^4 (up to a positive factor)
        forces[start:start + len(block)] = np.einsum("ij,ijk->ik", inv_r2 * inv_r2, diff)
    return energy, forces


def _repulsion_refine(pts, rng, max_iter=500, tol=1e-8):
    """Descend the Riesz-2 energy on the sphere starting from ``pts``."""
    pts = pts.copy()
    n = len(pts)
    # Tangential jitter breaks the lattice symmetry so descent can rearrange.
    jitter = rng.normal(scale=0.05 / np.sqrt(n), size=pts.shape)
    pts += jitter - pts * np.einsum("ij,ij->i", jitter, pts)[:, None]
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)

    h = np.sqrt(4.0 * np.pi / n)  # nominal spacing
    energy, forces = _riesz2_energy_and_forces(pts)
    step = 0.05 * h / max(np.linalg.norm(forces, axis=1).max(), 1e-30)
    for _ in range(max_iter):
        # keep moves tangential so the sphere projection stays small
        tang = forces - pts * np.einsum("ij,ij->i", pts, forces)[:, None]
        trial = pts + step * tang
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        new_energy, new_forces = _riesz2_energy_and_forces(trial)
        if new_energy < energy:
            moved = np.linalg.norm(trial - pts, axis=1).max()
            pts, energy, forces = trial, new_energy, new_forces
            if moved < tol:
                break
            step *= 1.2
        else:
            step *= 0.5
            if step * np.linalg.norm(forces, axis=1).max() < tol:
                break
    return pts


def gen_sphere_nodes(n, method="fibonacci", seed=0):
    """Generate n quasi-uniform nodes on the unit sphere.

    ``method="fibonacci"`` is the deterministic spherical Fibonacci lattice;
    ``method="repulsion"`` refines that lattice by seeded gradient descent on
    the Riesz-2 energy (mutually repelling particles), stopping once the max
    per-iteration displacement drops below 1e-8 or after 500 iterations.
    """
    if n < 4:
        raise ValueError(f"need n >= 4 nodes, got {n}")
    if method not in ("fibonacci", "repulsion"):
        raise ValueError(f"unknown method {method!r}; expected 'fibonacci' or 'repulsion'")
    pts = _fibonacci_sphere(n)
    if method == "repulsion":
        pts = _repulsion_refine(pts, np.random.default_rng(seed))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return NodeSet(pts, label=f"sphere-{method}-{n}")


# ---------------------------------------------------------------------------
# radial projection onto an implicit surface
# ---------------------------------------------------------------------------

def _project_direction(direction, surface, t_lo=0.05, t_hi=1.5, samples=400):
    """First root of F(t * direction) for t in [t_lo, t_hi], or None."""
    ts = np.linspace(t_lo, t_hi, samples)
    vals = surface.F(ts[:, None] * direction[None, :])
    sign_change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    exact = np.nonzero(vals == 0.0)[0]
    if len(exact) and (not len(sign_change) or exact[0] <= sign_change[0]):
        return ts[exact[0]]
    if not len(sign_change):
        return None
    a, b = ts[sign_change[0]], ts[sign_change[0] + 1]
    fa = vals[sign_change[0]]
    while b - a > 1e-12:
        mid = 0.5 * (a + b)
        fm = float(surface.F(mid * direction))
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    # Newton polish on g(t) = F(t d), g'(t) = gradF . d
    t = 0.5 * (a + b)
    for _ in range(4):
        p = t * direction
        g = float(surface.F(p))
        dg = float(surface.gradF(p) @ direction)
        if dg == 0.0:
            break
        t -= g / dg
    return t


def project_radial(nodes, surface, drop_misses=False, residual_tol=1e-10):
    """Project each node radially (along x/||x||) onto an implicit surface.

    Roots are bracketed on t in [0.05, 1.5], bisected to 1e-12 and polished
    with one Newton sweep; the nearest root to the origin is taken.

    With ``drop_misses=False`` (default) a direction whose ray never crosses
    the surface raises :class:`ProjectionError` with the node index; with
    ``drop_misses=True`` such nodes are silently removed from the output.
    """
    dirs = nodes.points / np.linalg.norm(nodes.points, axis=1, keepdims=True)
    projected = []
    for i, d in enumerate(dirs):
        t = _project_direction(d, surface)
        if t is None or abs(float(surface.F(t * d))) > residual_tol:
            if drop_misses:
                continue
            raise ProjectionError(f"no surface crossing along ray of node {i}", node_index=i)
        projected.append(t * d)
    label = f"{nodes.label or 'nodes'}>{surface.kind.value}"
    return NodeSet(np.array(projected), label=label)


# ---------------------------------------------------------------------------
# nearest-neighbor stencils
# ---------------------------------------------------------------------------

def _order_by_distance(nodes, i, candidates):
    d = np.linalg.norm(nodes.points[candidates] - nodes.points[i], axis=1)
    order = np.lexsort((candidates, d))
    return candidates[order], d[order]


def _neighbors_brute(nodes, i, m):
    idx = np.arange(len(nodes))
    idx, d = _order_by_distance(nodes, i, idx)
    # self sits first (exact zero distance; coincident nodes are excluded by NodeSet)
    return idx[1:m], d[1:m]


def _neighbors_kdtree(nodes, i, m):
    n = len(nodes)
    k = min(n, m + 8)
    while True:
        _, cand = nodes.kdtree.query(nodes.points[i], k=k)
        cand = np.atleast_1d(cand)
        idx, d = _order_by_distance(nodes, i, cand)
        # Safe cut: everything strictly closer than the farthest fetched
        # candidate is guaranteed fetched, so ties at the cut force a re-query.
        if k == n or d[m - 1] < d[-1]:
            return idx[1:m], d[1:m]
        k = min(n, 2 * k)


def nearest_neighbors(nodes, i, m, method="auto"):
    """Stencil of node i and its m-1 nearest neighbors.

    Ties in distance are broken by the smaller node index, so the brute-force
    and k-d tree paths return identical stencils.
    """
    n = len(nodes)
    if not 1 <= m <= n:
        raise ValueError(f"stencil size must satisfy 1 <= M <= {n}, got {m}")
    if not 0 <= i < n:
        raise ValueError(f"node index {i} out of range")
    if method == "auto":
        method = "brute" if n < _BRUTE_FORCE_MAX_N else "kdtree"
    if method == "brute":
        neigh, dists = _neighbors_brute(nodes, i, m)
    elif method == "kdtree":
        neigh, dists = _neighbors_kdtree(nodes, i, m)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Stencil(i, neigh, dists)
