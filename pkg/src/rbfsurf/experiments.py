"""Accuracy studies on the unit sphere: shape-parameter sweeps, convergence
orders, and surface-frame errors.

The reference field is f(x, y, z) = x (1 + y (1 + z)), a combination of
degree 1..3 spherical harmonics whose surface Laplacian on the unit sphere
is -2x (1 + 3y (1 + 2z)).  All sweeps report the max-over-nodes error and
the worst stencil condition number so the ill-conditioned regime is visible
in the output rather than fatal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .kernels import Kernel, KernelFamily
from .lbo import StencilGeometry, stencil_weights
from .nodesets import (
    ImplicitSurface,
    NodeSet,
    SurfaceKind,
    gen_sphere_nodes,
    nearest_neighbors,
    unit_sphere,
)
from .surface_geom import SurfaceFrame, analytic_frames, estimate_frames

_MIN_FIT_POINTS = 3
_SPREAD_TOL = 1e-12


def reference_field(points):
    """f = x (1 + y (1 + z)) evaluated at (..., 3) points."""
    x, y, z = np.moveaxis(np.asarray(points, dtype=float), -1, 0)
    return x * (1.0 + y * (1.0 + z))


def reference_lbo(points):
    """Surface Laplacian of the reference field on the unit sphere.

    f = x + xy + xyz restricts to spherical harmonics of degree 1, 2, 3
    with eigenvalues -2, -6, -12, so the result is -2x - 6xy - 12xyz.
    """
    x, y, z = np.moveaxis(np.asarray(points, dtype=float), -1, 0)
    return -2.0 * x * (1.0 + 3.0 * y * (1.0 + 2.0 * z))


@dataclass(frozen=True)
class SweepRow:
    """One (N, M, eps) cell of a sweep."""

    n: int
    m: int
    eps: float
    max_error: float
    max_cond: float
    failures: int = 0


@dataclass
class ConvergenceTable:
    """Sweep rows plus the least-squares order fits they support."""

    rows: list
    columns = ("n", "m", "eps", "max_error", "max_cond", "failures")

    def column(self, name):
        return np.array([getattr(row, name) for row in self.rows])

    def orders(self):
        """Fitted order mu for each stencil size present in the table."""
        return fit_order(self.rows)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def fit_order(rows) -> dict:
    """Least-squares convergence order per stencil size.

    The model is error proportional to (sqrt N)^(-mu), so mu is minus the
    slope of log(max_error) against log(sqrt N).  Requires at least three
    distinct node counts per stencil size and a non-degenerate spread.
    """
    by_m = {}
    for row in rows:
        by_m.setdefault(row.m, {})[row.n] = row.max_error
    orders = {}
    for m, cells in sorted(by_m.items()):
        ns = np.array(sorted(cells))
        if len(ns) < _MIN_FIT_POINTS:
            raise ValueError(
                f"need at least {_MIN_FIT_POINTS} distinct node counts for M={m}, got {len(ns)}"
            )
        log_h = np.log(np.sqrt(ns))
        if log_h.max() - log_h.min() < _SPREAD_TOL:
            raise ValueError(f"node counts for M={m} span a degenerate range")
        errors = np.array([cells[n] for n in ns])
        if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
            raise ValueError(f"errors for M={m} must be finite and positive to fit in log scale")
        slope = np.polyfit(log_h, np.log(errors), 1)[0]
        orders[m] = -float(slope)
    return orders


def _sphere_nodes_and_frames(n, nodes, analytic, frame_m, frame_kernel, seed, method):
    if nodes is None:
        nodes = gen_sphere_nodes(n, method=method, seed=seed)
    if analytic:
        frames = analytic_frames(unit_sphere(), nodes.points)
    else:
        frames = estimate_frames(nodes, frame_m, frame_kernel)
    return nodes, frames


def _max_lbo_error(nodes, frames, m, kernel, f, lf, node=None):
    """Worst nodal error of the stencil approximation against the exact LBO.

    Conditioning is never gated here; the caller sees the worst condition
    number and how many solves failed outright.
    """
    indices = range(len(nodes)) if node is None else [node]
    worst_err = 0.0
    worst_cond = 0.0
    failures = 0
    for i in indices:
        stencil = nearest_neighbors(nodes, i, m)
        geom = StencilGeometry.from_stencil(nodes, stencil, frames)
        w, cond = stencil_weights(geom, kernel, gate=False, return_cond=True)
        worst_cond = max(worst_cond, cond)
        if not np.all(np.isfinite(w)):
            failures += 1
            continue
        approx = float(w @ f[stencil.all_indices()])
        worst_err = max(worst_err, abs(approx - lf[i]))
    if failures and worst_err == 0.0:
        worst_err = np.inf
    return worst_err, worst_cond, failures


def lbo_error_sweep(surface: ImplicitSurface, n, m, eps_grid,
                    use_analytic_frames=True, *, family=KernelFamily.GAUSSIAN,
                    nodes: Optional[NodeSet] = None, node: Optional[int] = None,
                    seed=0, method="fibonacci") -> ConvergenceTable:
    """Max LBO error on the sphere for each shape parameter in the grid.

    Scalar or iterable ``n``, ``m`` are accepted; the grid is the cartesian
    product in the given order.  With ``use_analytic_frames`` off, frames
    are re-estimated per cell with the same stencil size and kernel.
    ``node`` restricts the error to a single node id.
    """
    if surface.kind is not SurfaceKind.UNIT_SPHERE:
        raise ValueError("the analytic reference field lives on the unit sphere")
    ns = [n] if np.isscalar(n) else list(n)
    ms = [m] if np.isscalar(m) else list(m)
    rows = []
    for n_i in ns:
        for m_i in ms:
            for eps in eps_grid:
                kernel = Kernel(family, float(eps))
                nodeset, frames = _sphere_nodes_and_frames(
                    n_i, nodes, use_analytic_frames, m_i, kernel, seed, method)
                f = reference_field(nodeset.points)
                lf = reference_lbo(nodeset.points)
                err, cond, failures = _max_lbo_error(nodeset, frames, m_i, kernel, f, lf, node)
                rows.append(SweepRow(len(nodeset), m_i, float(eps), err, cond, failures))
    return ConvergenceTable(rows)


def frame_error_sweep(n, m, eps_grid, *, family=KernelFamily.GAUSSIAN,
                      nodes: Optional[NodeSet] = None, seed=0,
                      method="fibonacci") -> tuple:
    """Normal and curvature errors of estimated frames on the unit sphere.

    For each (N, M, eps) cell, E_n is the worst infinity-norm deviation of
    the oriented unit normal from the exact outward normal (the position
    itself on the unit sphere), and E_kappa the worst |kappa - 2|.  Returns
    two tables with max_error = E_n and E_kappa respectively.
    """
    ns = [n] if np.isscalar(n) else list(n)
    ms = [m] if np.isscalar(m) else list(m)
    normal_rows = []
    curvature_rows = []
    for n_i in ns:
        nodeset = nodes if nodes is not None else gen_sphere_nodes(n_i, method=method, seed=seed)
        for m_i in ms:
            for eps in eps_grid:
                kernel = Kernel(family, float(eps))
                frames = estimate_frames(nodeset, m_i, kernel)
                e_n = float(np.abs(frames.normals - nodeset.points).max())
                e_k = float(np.abs(frames.curvatures - 2.0).max())
                normal_rows.append(SweepRow(len(nodeset), m_i, float(eps), e_n, 0.0))
                curvature_rows.append(SweepRow(len(nodeset), m_i, float(eps), e_k, 0.0))
    return ConvergenceTable(normal_rows), ConvergenceTable(curvature_rows)


def save_table_csv(table: ConvergenceTable, path):
    """Write sweep rows as CSV, one header row naming every column."""
    data = np.array([[row.n, row.m, row.eps, row.max_error, row.max_cond, row.failures]
                     for row in table.rows])
    np.savetxt(path, data, fmt=["%d", "%d", "%.17g", "%.17g", "%.17g", "%d"],
               delimiter=",", header=",".join(table.columns), comments="")


def table_report(table: ConvergenceTable, orders: Optional[dict] = None):
    """Plain dict view of a table (rows plus optional fitted orders)."""
    report = {
        "columns": list(table.columns),
        "rows": [[row.n, row.m, row.eps, row.max_error, row.max_cond, row.failures]
                 for row in table.rows],
    }
    if orders is not None:
        report["orders"] = {str(m): mu for m, mu in orders.items()}
    return report
