import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeroflux.errors import DomainError, InvalidMeshError, MeshSizeError
from zeroflux.mesh import build_interval_mesh, build_rectangle_mesh, mesh_from_dict


def test_uniform_four_cells():
    m = build_interval_mesh(0, 1, 4)
    np.testing.assert_allclose(m.volumes, 0.25)
    np.testing.assert_allclose(m.centers[:, 0], [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(m.transmissivity, 4.0)


def test_two_cells_single_interface():
    m = build_interval_mesh(0, 1, 2)
    assert m.n_interfaces == 1
    assert m.transmissivity[0] == pytest.approx(2.0)


def test_graded_square_map():
    m = build_interval_mesh(0, 1, 3, "s^2")
    np.testing.assert_allclose(m.layout["nodes"], [0, 1 / 9, 4 / 9, 1], atol=1e-15)
    assert m.measure == pytest.approx(1.0, rel=1e-12)


def test_graded_callable_matches_expression():
    a = build_interval_mesh(0, 2, 5, lambda s: s**2)
    b = build_interval_mesh(0, 2, 5, "s^2")
    np.testing.assert_allclose(a.volumes, b.volumes, rtol=1e-14)


@pytest.mark.parametrize("grading", ["1-s", "s*(1-s)", "4*(s-0.5)^2"])
def test_non_monotone_grading_rejected(grading):
    with pytest.raises(InvalidMeshError):
        build_interval_mesh(0, 1, 4, grading)


def test_size_errors():
    with pytest.raises(MeshSizeError):
        build_interval_mesh(0, 1, 1)
    with pytest.raises(InvalidMeshError):
        build_interval_mesh(1, 0, 4)
    with pytest.raises(InvalidMeshError):
        build_rectangle_mesh(0, 1, 2, 2)
    with pytest.raises(MeshSizeError):
        build_rectangle_mesh(1, 1, 1, 3)


def test_unit_square_quartered():
    m = build_rectangle_mesh(1, 1, 2, 2)
    assert m.n_cells == 4 and m.n_interfaces == 4
    np.testing.assert_allclose(m.volumes, 0.25)
    np.testing.assert_allclose(m.transmissivity, 1.0)


def test_anisotropic_rectangle_transmissivities():
    m = build_rectangle_mesh(2, 1, 4, 2)
    vertical = np.abs(m.iface_normal[:, 0]) > 0.5
    np.testing.assert_allclose(m.transmissivity[vertical], 0.5 / 0.5)
    np.testing.assert_allclose(m.transmissivity[~vertical], 0.5 / 0.5)


def test_three_by_three_counts():
    m = build_rectangle_mesh(1, 1, 3, 3)
    assert (m.n_cells, m.n_interfaces, m.n_boundary_faces) == (9, 12, 12)


def test_rectangle_ids_row_major():
    m = build_rectangle_mesh(1, 1, 3, 2)
    # cell id = j*nx + i
    assert m.locate([[0.9, 0.1]])[0] == 2
    assert m.locate([[0.1, 0.9]])[0] == 3


def test_boundary_normals_point_outward():
    for m in (build_interval_mesh(0, 1, 5), build_rectangle_mesh(1, 2, 3, 4)):
        out = m.bface_center - m.centers[m.bface_cell]
        assert np.all(np.sum(out * m.bface_normal, axis=1) > 0)


def test_locate_and_domain_error():
    m = build_interval_mesh(0, 1, 4)
    np.testing.assert_array_equal(m.locate(np.array([[0.0], [0.25], [0.99], [1.0]])), [0, 1, 3, 3])
    with pytest.raises(DomainError):
        m.locate([[1.5]])


def test_serialisation_roundtrip():
    for m in (build_interval_mesh(0, 1, 6, "s^2"), build_rectangle_mesh(2, 1, 4, 3)):
        again = mesh_from_dict(m.to_dict())
        np.testing.assert_allclose(again.volumes, m.volumes)
        np.testing.assert_allclose(again.transmissivity, m.transmissivity)


def test_diamond_halves_partition_the_diamond():
    for m in (build_interval_mesh(0, 1, 5, "s^2"), build_rectangle_mesh(2, 1, 4, 3)):
        meas, _ = m.diamond_halves()
        np.testing.assert_allclose(meas.sum(axis=1), m.iface_measure * m.iface_dist / m.dim)


def _check_invariants(m, total):
    K, L = m.iface_cells[:, 0], m.iface_cells[:, 1]
    assert np.all(K != L)
    assert m.measure == pytest.approx(total, rel=1e-12)
    assert np.all(m.transmissivity > 0)
    for i, (k, l) in enumerate(m.iface_cells):
        assert i in m.cell_interfaces(k) and i in m.cell_interfaces(l)
    # every interface listed exactly twice across the per-cell lists
    counts = np.bincount(np.concatenate([m.cell_interfaces(c) for c in range(m.n_cells)]),
                         minlength=m.n_interfaces)
    assert np.all(counts == 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.floats(1.0, 3.0), st.floats(-5, 5), st.floats(0.1, 10))
def test_interval_invariants(n, power, a, length):
    m = build_interval_mesh(a, a + length, n, f"s^{power}")
    _check_invariants(m, length)
    assert m.n_boundary_faces == 2
    nodes = m.layout["nodes"]
    np.testing.assert_allclose(np.diff(nodes), m.volumes, rtol=1e-9)
    assert np.all(np.diff(m.centers[:, 0]) > 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(2, 8), st.floats(0.2, 4), st.floats(0.2, 4))
def test_rectangle_invariants(nx, ny, lx, ly):
    m = build_rectangle_mesh(lx, ly, nx, ny)
    _check_invariants(m, lx * ly)
    assert m.n_boundary_faces == 2 * (nx + ny)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.floats(1.0, 2.5))
def test_refinement_halves_h_and_keeps_measure(n, power):
    m = build_interval_mesh(0, 1, n, f"s^{power}")
    r = m.refine()
    assert r.n_cells == 2 * n
    assert r.h == pytest.approx(m.h / 2, rel=1e-12)
    assert r.measure == pytest.approx(m.measure, rel=1e-12)
