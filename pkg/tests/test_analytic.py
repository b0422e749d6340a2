from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbscope import analytic as an
from fbscope.field import GridSpec, unit_ball_volume
from fbscope.sample import alpha_n

# Frozen by direct polar quadrature of the defining integrals (scipy dblquad / quad),
# independently of the closed forms: (D, H, M, N, V).
FROZEN = {
    ("wedge:q=0.5", (0.1, 0.2), 0.3): (3.926990816987241, 1.4835298641951802, 2.4434609527920608,
                                       0.529411764705882, 0.0),
    ("absharm:v=x2-y2+0.5x", (0.1, 0.0), 0.3): (5.246459731494954, 2.073451151369263, 3.1730085801256913,
                                                1.0151515151515154, 0.0),
}


def test_eval_examples():
    w = an.parse_solution("wedge:q=0.5,nu=en")
    assert w.eval(np.array([0.0, -0.2])) == pytest.approx(0.1)
    np.testing.assert_allclose(w.grad(np.array([0.0, -0.2])), [0.0, -0.5])
    hp = an.halfplane(1.0)
    assert hp.eval(np.array([0.3, -0.1])) == 0.0 and hp.chi(np.array([0.3, -0.1])) == 0.0
    a = an.absharm("x2-y2")
    assert a.eval(np.array([1.0, 0.0])) == 1.0
    np.testing.assert_allclose(a.grad(np.array([1.0, 0.0])), [2.0, 0.0])


def test_crease_gradient_is_the_plus_nu_limit():
    np.testing.assert_allclose(an.wedge(0.5).grad(np.array([0.3, 0.0])), [0.0, 0.5])


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_exact_functionals_match_frozen_quadrature(key):
    text, x, r = key
    s = an.exact_functionals(an.parse_solution(text), x, r)
    np.testing.assert_allclose([s.D, s.H, s.M, s.N, s.V], FROZEN[key], rtol=1e-9, atol=1e-12)


def test_halfplane_off_centre_matches_segment_geometry():
    r, t = 0.4, 0.1
    segment = r * r * math.acos(t / r) - t * math.sqrt(r * r - t * t)
    area_pos = math.pi * r * r - segment
    s = an.exact_functionals(an.halfplane(1.0), (0.0, t), r)
    assert s.D == pytest.approx(2 * area_pos / r ** 2, rel=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_wedge_frequency_one_and_full_density(dim):
    for q in (0.3, 1.7):
        for r in (0.01, 0.5, 3.0):
            s = an.exact_functionals(an.wedge(q, dim=dim), np.zeros(dim), r)
            assert s.N == pytest.approx(1.0, abs=1e-12)
            assert s.M == pytest.approx(unit_ball_volume(dim), rel=1e-12)
            assert 2 * alpha_n(dim) * math.sqrt(s.H) == pytest.approx(2 * q, rel=1e-12)


def test_halfplane_density_half():
    s = an.exact_functionals(an.halfplane(1.0), (0.0, 0.0), 0.37)
    assert s.M == pytest.approx(math.pi / 2, abs=1e-12)
    assert s.D == pytest.approx(math.pi) and s.H == pytest.approx(math.pi / 2)


def test_homabs_degree_two():
    for r in (0.2, 0.7):
        s = an.exact_functionals(an.homabs(2), (0.0, 0.0), r)
        assert s.N == pytest.approx(2.0, abs=1e-12) and s.V == 0.0
        # direct: D = pi + 2 pi r^2, H = pi r^2
        assert s.D == pytest.approx(math.pi + 2 * math.pi * r * r) and s.H == pytest.approx(math.pi * r * r)


def test_exact_laplacian_mass():
    assert an.exact_laplacian_mass(an.wedge(0.3), (0, 0), 0.5) == pytest.approx(4 * 0.3 * 0.5)
    assert an.exact_laplacian_mass(an.halfplane(1.0), (0, 0), 0.5) == pytest.approx(1.0)
    assert an.exact_laplacian_mass(an.zero(), (0, 0), 0.5) == 0.0
    with pytest.raises(an.NotAvailableError):
        an.exact_laplacian_mass(an.absharm("x2-y2+0.5x"), (0.1, 0.0), 0.5)


def test_nodal_oracle_matches_closed_form_for_homogeneous_profile():
    # closed form against the contour-based line integral
    sol = an.absharm("x2-y2")
    exact = an.exact_laplacian_mass(sol, (0, 0), 0.4)
    brute = an.nodal_mass_oracle(sol, (0, 0), 0.4, 1e-4)
    assert brute == pytest.approx(exact, rel=2e-3)


def test_polynomial_parser_and_harmonicity():
    p = an.Polynomial.parse("3x2y - y3", 2)
    assert p.degree == 3 and p.is_homogeneous()
    assert not p.laplacian().terms
    with pytest.raises(ValueError):
        an.absharm("x2+y2")  # not harmonic
    with pytest.raises(ValueError):
        an.parse_solution("wedge:q=0.5,foo=1")


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 0.5), st.floats(0.05, 0.5))
def test_weiss_monotone_exactly(x0, y0, r1, dr):
    # M_x(r) is nondecreasing for every catalogue solution with closed forms
    for sol in (an.wedge(0.6), an.halfplane(1.3), an.absharm("x2-y2+0.5x")):
        a = an.exact_functionals(sol, (x0, y0), r1)
        b = an.exact_functionals(sol, (x0, y0), r1 + dr)
        assert b.M >= a.M - 1e-10 * max(1.0, abs(a.M))


def test_to_field_samples_solution():
    g = GridSpec.cube(2, 16)
    f = an.to_field(an.halfplane(1.0), g)
    np.testing.assert_allclose(f.values, np.maximum(g.mesh()[1], 0.0))
    assert f.lipschitz == pytest.approx(1.0)


def test_cusp_is_values_only():
    c = an.cusp()
    assert c.eval(np.array([0.3, 0.2])) >= 0
    with pytest.raises(an.NotAvailableError):
        an.exact_functionals(c, (0.0, 0.0), 0.1)
