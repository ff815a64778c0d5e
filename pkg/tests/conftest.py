"""Shared fixtures: node sets and operators reused across test modules.

The expensive objects (1000-node sphere, assembled operator) are session
scoped; tests must not mutate them.
"""

from pathlib import Path

import pytest

from rbfsurf.kernels import Kernel, KernelFamily
from rbfsurf.lbo import assemble_operator
from rbfsurf.nodesets import gen_sphere_nodes, load_nodes, unit_sphere
from rbfsurf.surface_geom import analytic_frames

DATA_DIR = Path(__file__).parent / "data"


def repulsion_nodes(n):
    """Pregenerated repulsion node set (identical to method='repulsion', seed=0)."""
    return load_nodes(DATA_DIR / f"sphere_repulsion_{n}.txt")


@pytest.fixture(scope="session")
def sphere1000():
    return gen_sphere_nodes(1000)


@pytest.fixture(scope="session")
def sphere1000_frames(sphere1000):
    return analytic_frames(unit_sphere(), sphere1000.points)


@pytest.fixture(scope="session")
def sphere1000_op(sphere1000, sphere1000_frames):
    """M=31, eps=2 operator on the 1000-node sphere with exact frames."""
    return assemble_operator(sphere1000, sphere1000_frames, 31, Kernel(KernelFamily.GAUSSIAN, 2.0))
