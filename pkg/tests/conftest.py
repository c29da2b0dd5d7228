import numpy as np
import pytest

from cellwell import charge as ch
from cellwell.mesh import build_mesh
from cellwell.params import load_config


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def params(config):
    return config.cell


@pytest.fixture(scope="session")
def mesh_bundle(params):
    return build_mesh(params, 10, 10, 10, 20)


def uniform_problem(params, mesh, current, bc_mode="correct", gauge=None, ce=1000.0,
                    y_neg=0.8, y_pos=0.3, T=298.15):
    """Charge problem for spatially uniform concentrations."""
    return ch.assemble_from_fields(
        np.full(mesh.n, ce), np.full(mesh.n_neg, y_neg * params.cs_max_neg),
        np.full(mesh.n_pos, y_pos * params.cs_max_pos), T, current, params, mesh,
        bc_mode, gauge)


def graded_problem(params, mesh, current, gauge=None):
    """Charge problem with smoothly varying concentrations (nonzero drift term)."""
    x = mesh.centers / params.L
    ce = 1000.0 * (1.0 + 0.3 * np.cos(np.pi * x))
    xn = x[mesh.neg]
    xp = x[mesh.pos]
    cs_neg = params.cs_max_neg * (0.75 + 0.1 * xn)
    cs_pos = params.cs_max_pos * (0.35 + 0.2 * xp)
    return ch.assemble_from_fields(ce, cs_neg, cs_pos, 300.0, current, params, mesh,
                                   "correct", gauge)
