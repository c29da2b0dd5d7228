import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cellwell.errors import ConfigurationError
from cellwell.mesh import build_mesh, build_radial_mesh
from cellwell.params import Region


def test_interfaces_are_faces(params):
    mesh, _ = build_mesh(params, 7, 3, 11, 5)
    i1, i2 = mesh.special_faces[1:3]
    assert mesh.faces[0] == 0.0
    assert mesh.faces[i1] == params.L1
    assert mesh.faces[i2] == params.L1 + params.delta
    assert mesh.faces[-1] == params.L


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(2, 40), st.integers(2, 40), st.integers(2, 40))
def test_mesh_partitions_cell(n_neg, n_sep, n_pos, n_r):
    from cellwell.params import load_config

    params = load_config().cell
    mesh, (rn, rp) = build_mesh(params, n_neg, n_sep, n_pos, n_r)
    assert mesh.n == n_neg + n_sep + n_pos
    assert np.all(np.diff(mesh.faces) > 0)
    assert mesh.widths.sum() == pytest.approx(params.L, rel=1e-14)
    np.testing.assert_allclose(np.diff(mesh.faces), mesh.widths, rtol=1e-12)
    assert rn.volumes.sum() == pytest.approx(rn.volume, rel=1e-13)
    assert rp.radius == params.Rs_pos
    assert mesh.regions.count(Region.SEPARATOR) == n_sep


def test_too_few_cells_rejected(params):
    with pytest.raises(ConfigurationError):
        build_mesh(params, 1, 5, 5, 5)
    with pytest.raises(ConfigurationError):
        build_mesh(params, 5, 5, 5, 1)


def test_region_integrals(params, mesh_bundle):
    mesh, _ = mesh_bundle
    assert mesh.integrate(1.0) == pytest.approx(params.L, rel=1e-14)
    assert mesh.integrate(1.0, Region.SEPARATOR) == pytest.approx(params.delta, rel=1e-13)
    assert mesh.integrate(mesh.centers) == pytest.approx(params.L ** 2 / 2, rel=1e-13)


def test_radial_r2_integral_of_constant():
    rm = build_radial_mesh(2.0, 9)
    assert rm.weighted_r2_integral(np.ones(9)) == pytest.approx(8.0 / 3.0, rel=1e-14)
    assert rm.face_areas[0] == 0.0
    assert rm.dr == pytest.approx(2.0 / 9)
