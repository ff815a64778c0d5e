"""Dense LU solves with a 1-norm condition estimate.

Every local system in this package (interpolation, level-set fit, weight
solve) goes through :func:`solve_with_cond`, so the conditioning policy
lives in one place: estimate > 1e12 warns, > 1e15 raises.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import linalg as sla

from .errors import ConditioningError

COND_ERROR_LIMIT = 1e15
COND_WARN_LIMIT = 1e12


def solve_with_cond(A, b, gate=True):
    """Solve ``A x = b`` by LU with partial pivoting; return ``(x, cond)``.

    ``cond`` is the 1-norm condition estimate from the LU factors.  With
    ``gate=True`` a condition estimate above 1e15 raises
    :class:`ConditioningError` (above 1e12 warns); with ``gate=False`` the
    solve always proceeds and the caller inspects ``cond`` itself, which is
    what the shape-parameter sweeps do to chart the breakdown region.
    """
    A = np.asarray(A, dtype=float)
    with warnings.catch_warnings():
        if not gate:
            warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    anorm = np.abs(A).sum(axis=0).max()
    rcond, info = sla.lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0.0 or info != 0 else 1.0 / rcond
    if gate:
        if not cond < COND_ERROR_LIMIT:
            raise ConditioningError(
                f"local system numerically singular (cond ~ {cond:.3e})", cond=cond
            )
        if cond > COND_WARN_LIMIT:
            warnings.warn(
                f"local system poorly conditioned (cond ~ {cond:.3e})", stacklevel=2
            )
    x = sla.lu_solve((lu, piv), b, check_finite=False)
    return x, cond
