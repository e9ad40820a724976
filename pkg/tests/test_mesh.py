"""Grid geometry, field containers, and the discrete divergence.

Frozen oracles: face/cell counts for a 4x3 grid are pure combinatorics
(n_xfaces = (nx+1)*ny etc.), and the divergence of the linear flux
(fx, fy) = (x, y) is exactly 2 in every cell because two-point differences
of a linear function are exact.
"""

import numpy as np
import pytest

from dpnpsim.mesh import (
    BoundaryField,
    CellField,
    FaceField,
    build_grid,
    cell_divergence,
)


def test_grid_counts_4x3():
    g = build_grid(4, 3, 2.0, 1.5)
    assert g.n_cells == 12
    assert g.n_xfaces == 5 * 3
    assert g.n_yfaces == 4 * 4
    assert g.n_faces == 31
    assert g.n_boundary_faces == 2 * 4 + 2 * 3
    assert g.n_interior_faces == 31 - 14
    assert g.hx == pytest.approx(0.5)
    assert g.hy == pytest.approx(0.5)
    assert g.cell_volume == pytest.approx(0.25)
    assert g.total_volume == pytest.approx(3.0)


def test_grid_coordinates_are_cell_and_face_midpoints():
    g = build_grid(4, 2, 1.0, 1.0)
    assert np.allclose(g.xc, [0.125, 0.375, 0.625, 0.875])
    assert np.allclose(g.xf, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(g.yc, [0.25, 0.75])
    assert np.allclose(g.yf, [0.0, 0.5, 1.0])
    X, Y = g.cell_centers()
    assert X.shape == (2, 4)
    assert X[0, 1] == pytest.approx(0.375)
    assert Y[1, 0] == pytest.approx(0.75)


def test_grid_rejects_bad_dimensions():
    for bad in [(0, 1, 1.0, 1.0), (1, 0, 1.0, 1.0), (1, 1, 0.0, 1.0), (1, 1, 1.0, -2.0)]:
        with pytest.raises(ValueError):
            build_grid(*bad)


def test_side_lengths_and_face_counts():
    g = build_grid(4, 3, 2.0, 1.5)
    assert g.side_length("left") == pytest.approx(0.5)
    assert g.side_length("bottom") == pytest.approx(0.5)
    assert g.side_faces("left") == 3
    assert g.side_faces("top") == 4


def test_cell_field_shape_and_integral():
    g = build_grid(3, 2, 1.0, 1.0)
    f = CellField.full(g, 2.0)
    assert f.values.shape == (2, 3)
    assert f.volume_integral() == pytest.approx(2.0)
    # size-matching input is reshaped (solvers hand back flat vectors)
    assert CellField(g, np.arange(6.0)).values.shape == (2, 3)
    with pytest.raises(ValueError):
        CellField(g, np.ones((2, 4)))
    with pytest.raises(ValueError):
        CellField(g, np.full((2, 3), np.nan))


def test_cell_field_from_function_samples_cell_centers():
    g = build_grid(2, 2, 1.0, 1.0)
    f = CellField.from_function(g, lambda x, y: x + 10.0 * y)
    assert f.values[0, 0] == pytest.approx(0.25 + 2.5)
    assert f.values[1, 1] == pytest.approx(0.75 + 7.5)


def test_divergence_of_linear_flux_is_exactly_two():
    g = build_grid(5, 4, 1.25, 2.0)
    fx = np.tile(g.xf, (g.ny, 1))
    fy = np.tile(g.yf[:, None], (1, g.nx))
    div = cell_divergence(g, FaceField(g, fx, fy))
    assert np.allclose(div.values, 2.0, atol=1e-14)


def test_divergence_of_constant_flux_is_zero():
    g = build_grid(4, 4, 1.0, 3.0)
    div = cell_divergence(g, FaceField(g, np.full((4, 5), 0.7), np.full((5, 4), -1.3)))
    assert np.allclose(div.values, 0.0, atol=1e-14)


def test_boundary_field_broadcast_and_integrals():
    g = build_grid(2, 3, 1.0, 1.5)  # hy = 0.5, hx = 0.5
    bf = BoundaryField(g, left=2.0, right=np.array([1.0, 1.0, 1.0]), top=-1.0)
    # integral = sum over sides of value * face length
    assert bf.boundary_integral() == pytest.approx(2.0 * 3 * 0.5 + 1.0 * 3 * 0.5 - 1.0 * 2 * 0.5)
    assert bf.abs_integral() == pytest.approx(2.0 * 1.5 + 1.0 * 1.5 + 1.0 * 1.0)
    assert bf.max_abs() == pytest.approx(2.0)
    assert bf.scaled(0.5).max_abs() == pytest.approx(1.0)


def test_boundary_field_rejects_wrong_length():
    g = build_grid(2, 3, 1.0, 1.0)
    with pytest.raises(ValueError):
        BoundaryField(g, left=np.ones(2))  # left needs ny = 3 values


def test_face_field_outward_boundary_round_trip():
    """Outward boundary convention: left/bottom values flip sign in storage.

    Stored fluxes are +x/+y oriented; a positive outward value on the left
    side means flux pointing in -x, so the stored entry is its negation.
    """
    g = build_grid(3, 2, 1.0, 1.0)
    ff = FaceField.zeros(g)
    bf = BoundaryField(g, left=1.0, right=2.0, bottom=3.0, top=4.0)
    ff.set_boundary_outward(bf)
    assert np.allclose(ff.fx[:, 0], -1.0)
    assert np.allclose(ff.fx[:, -1], 2.0)
    assert np.allclose(ff.fy[0, :], -3.0)
    assert np.allclose(ff.fy[-1, :], 4.0)
    back = ff.boundary_outward()
    assert np.allclose(back.left, 1.0)
    assert np.allclose(back.right, 2.0)
    assert np.allclose(back.bottom, 3.0)
    assert np.allclose(back.top, 4.0)


def test_divergence_theorem_random_flux():
    """sum over cells of div * vol equals the outward boundary integral."""
    rng = np.random.default_rng(7)
    for _ in range(20):
        nx, ny = rng.integers(1, 9, size=2)
        g = build_grid(int(nx), int(ny), float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))
        ff = FaceField(g, rng.normal(size=(g.ny, g.nx + 1)), rng.normal(size=(g.ny + 1, g.nx)))
        total = cell_divergence(g, ff).values.sum() * g.cell_volume
        assert total == pytest.approx(ff.boundary_outward().boundary_integral(), abs=1e-12)
