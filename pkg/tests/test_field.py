from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbscope.field import (GridSpec, OutOfDomainError, ScalarField, ball_integral, ball_region,
                           gradient, interpolate, laplacian_mass, read_fbsf, sphere_integral,
                           unit_ball_volume, write_csv, write_fbsf)


def unit_grid(cells=16):
    return GridSpec(2, (0.0, 0.0), (1.0, 1.0), (cells, cells))


def test_gridspec_rejects_anisotropic_and_coarse():
    with pytest.raises(ValueError):
        GridSpec(2, (0, 0), (1.0, 2.0), (16, 16))
    with pytest.raises(ValueError):
        GridSpec(2, (0, 0), (1.0, 1.0), (4, 4))
    with pytest.raises(ValueError):
        GridSpec(4, (0,) * 4, (1.0,) * 4, (8,) * 4)


def test_gridspec_geometry():
    g = GridSpec.cube(3, 16, 2.0)
    assert g.h == pytest.approx(0.25)
    assert g.shape == (17, 17, 17)
    assert g.nodes().shape == (17 ** 3, 3)
    assert g.distance_to_boundary((0.5, 0, 0)) == pytest.approx(1.5)


def test_scalar_field_invariants():
    g = unit_grid()
    with pytest.raises(ValueError):
        ScalarField.from_function(g, lambda p: p[:, 0] - 0.5)
    f = ScalarField.from_function(g, lambda p: p[:, 0])
    rep = f.check_invariants()
    assert rep == {"nonnegative": True, "chi_dominates": True, "gradient_bounded": True}
    assert f.lipschitz == pytest.approx(1.0)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0  # read-only


def test_interpolate_examples():
    g = unit_grid()
    assert interpolate(ScalarField.from_function(g, lambda p: p[:, 0]), (0.3, 0.7)) == pytest.approx(0.3)
    assert interpolate(ScalarField.from_function(g, lambda p: 0 * p[:, 0]), (0.41, 0.13)) == 0.0
    g1 = GridSpec(2, (0, 0), (1.0, 1.0), (8, 8))
    f = ScalarField.from_function(g1, lambda p: p[:, 0] * p[:, 1])
    assert interpolate(f, (0.5, 0.5)) == pytest.approx(0.25)
    with pytest.raises(OutOfDomainError):
        interpolate(f, (1.2, 0.5))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_interpolate_reproduces_bilinear(x, y, a, b, c):
    g = unit_grid(8)
    fn = lambda p: 5 + a * p[:, 0] + b * p[:, 1] + c * p[:, 0] * p[:, 1]
    f = ScalarField.from_function(g, fn)
    assert interpolate(f, (x, y)) == pytest.approx(float(fn(np.array([[x, y]]))[0]), abs=1e-12)


def test_gradient_examples():
    g = GridSpec.cube(2, 32)
    f = ScalarField.from_function(g, lambda p: 2 * np.maximum(p[:, 0] + 1, 0))
    np.testing.assert_allclose(gradient(f, (0.1, 0.2)), [2.0, 0.0], atol=1e-12)
    w = ScalarField.from_function(g, lambda p: 0.3 * np.abs(p[:, 1]))
    np.testing.assert_allclose(gradient(w, (0.2, 0.5)), [0.0, 0.3], atol=1e-12)
    with pytest.raises(OutOfDomainError):
        gradient(f, (0.99, 0.0))


def test_gradient_second_order():
    # the error is C(theta) h^2 with theta the position inside the cell, so theta is held fixed
    errs = []
    fn = lambda q: 2 + 0.5 * (q ** 2).sum(1) + np.sin(q[:, 0])
    for cells in (16, 32, 64):
        g = GridSpec.cube(2, cells)
        p = np.array([0.25, -0.125]) + g.h * np.array([1 / 3, 0.7])
        exact = p + np.array([math.cos(p[0]), 0.0])
        errs.append(np.abs(gradient(ScalarField.from_function(g, fn), p) - exact).max())
    slopes = -np.diff(np.log2(errs))
    assert slopes.min() >= 1.9


@pytest.mark.parametrize("dim, expected", [(2, math.pi), (3, 4 * math.pi / 3)])
def test_ball_integral_of_one(dim, expected):
    g = GridSpec.cube(dim, 64 if dim == 2 else 32, 1.5)
    est = ball_integral(g, "one", ball_region(g, np.zeros(dim), 1.0))
    assert abs(est.value - expected) <= max(est.err, 1e-3 * expected)


def test_ball_integral_half_space_chi():
    # u = 0 with chi the half-space indicator; no node row sits on y = 0
    g = GridSpec.cube(2, 64, 1.5, center=(0.0, 1.5 / 64))
    f = ScalarField.from_function(g, lambda p: 0 * p[:, 0], chi=lambda p: (p[:, 1] > 0) * 1.0)
    est = ball_integral(f, "chi", ball_region(g, (0, 0), 1.0))
    assert est.value == pytest.approx(math.pi / 2, abs=max(est.err, 1e-3))


def test_ball_integral_requires_interior():
    g = GridSpec.cube(2, 32)
    with pytest.raises(OutOfDomainError):
        ball_integral(g, "one", ball_region(g, (0.5, 0), 0.5))


def test_sphere_integrals():
    g2 = GridSpec.cube(2, 64, 1.5)
    assert sphere_integral(g2, "one", ball_region(g2, (0, 0), 1.0)).value == pytest.approx(2 * math.pi)
    xn2 = lambda pts, f: pts[:, -1] ** 2
    assert sphere_integral(g2, xn2, ball_region(g2, (0, 0), 1.0), 64).value == pytest.approx(math.pi)
    g3 = GridSpec.cube(3, 16, 1.5)
    est = sphere_integral(g3, xn2, ball_region(g3, (0, 0, 0), 1.0), 64)
    assert est.value == pytest.approx(unit_ball_volume(3), rel=1e-12)
    assert est.err < 1e-12


def test_laplacian_mass_examples():
    g = GridSpec.cube(2, 256)
    lin = ScalarField.from_function(g, lambda p: p[:, 0] + 1.0)
    assert abs(laplacian_mass(lin, ball_region(g, (0, 0), 0.5)).value) < 1e-10
    w = ScalarField.from_function(g, lambda p: 0.4 * np.abs(p[:, 1]))
    assert laplacian_mass(w, ball_region(g, (0, 0), 0.5)).value == pytest.approx(0.8, rel=1e-3)


def test_fbsf_round_trip(tmp_path):
    g = GridSpec.cube(3, 8)
    f = ScalarField.from_function(g, lambda p: np.abs(p[:, 2]), lipschitz=1.25)
    write_fbsf(f, tmp_path / "f.fbsf")
    assert (tmp_path / "f.fbsf").read_bytes()[:4] == b"FBSF"
    back = read_fbsf(tmp_path / "f.fbsf")
    assert back.spec == g and back.lipschitz == 1.25
    np.testing.assert_array_equal(back.values, f.values)
    np.testing.assert_array_equal(back.chi, f.chi)
    write_csv(f, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,z,u,chi" and len(lines) == 1 + 9 ** 3
