from __future__ import annotations

import json
import math

import numpy as np
import pytest

from fbscope import analytic as an
from fbscope.field import GridSpec, OutOfDomainError, ScalarField, unit_ball_volume
from fbscope.functionals import (NEG_INF, limit_extrapolate, m_derivative_check, n_derivative_check,
                                 profile, profile_to_json, sample, samples_to_csv, variational_residual)
from fbscope.sample import alpha_n


@pytest.fixture(scope="module")
def wedge_grid():
    return an.to_field(an.wedge(0.5), GridSpec.cube(2, 256))


def test_alpha_n_normalisation():
    assert alpha_n(2) == pytest.approx(1 / math.sqrt(math.pi))
    assert alpha_n(3) == pytest.approx(math.sqrt(3 / (4 * math.pi)))
    for d in (2, 3):
        assert alpha_n(d) ** 2 * unit_ball_volume(d) == pytest.approx(1.0)


def test_wedge_sample_on_grid(wedge_grid):
    s = sample(wedge_grid, (0.0, 0.0), 0.25)
    assert s.N == pytest.approx(1.0, abs=1e-2)
    assert abs(s.V) <= max(s.quad_err, 1e-12)
    assert s.M == s.D - s.H
    assert s.n_defined


def test_halfplane_sample():
    g = GridSpec.cube(2, 256)
    s = sample(an.to_field(an.halfplane(1.0), g), (0.0, 0.0), 0.25)
    assert s.M == pytest.approx(math.pi / 2, abs=1e-2)
    # the positive phase carries all of D - |B_1| = 0, so N vanishes and V takes the rest
    assert s.N == pytest.approx(0.0, abs=1e-2)
    assert s.V == pytest.approx(1.0, abs=1e-2)
    # N + V is the almgren ratio r int|grad u|^2 / int_dB u^2 = r (pi r^2 / 2) / (pi r^3 / 2)
    assert s.N + s.V == pytest.approx(1.0, abs=2e-2)


def test_zero_field_sentinel():
    s = sample(an.to_field(an.zero(), GridSpec.cube(2, 32)), (0.0, 0.0), 0.4)
    assert abs(s.D) < 1e-12 and abs(s.M) < 1e-12 and s.H == 0.0
    assert s.N == NEG_INF and not s.n_defined


def test_non_interior_ball_rejected(wedge_grid):
    with pytest.raises(OutOfDomainError):
        sample(wedge_grid, (0.8, 0.0), 0.3)


@pytest.mark.parametrize("sol, x, r", [
    (an.halfplane(1.0), (0.05, -0.1), 0.3),
    (an.absharm("x2-y2+0.5x"), (0.1, 0.0), 0.3),
    (an.wedge(0.7), (0.2, 0.1), 0.4),
])
def test_frequency_plus_volume_is_almgren(sol, x, r):
    x0, y0 = x
    # polar midpoint rule; grad u jumps across the free boundary, so this is first order
    pr = (np.arange(1500) + 0.5) * r / 1500
    th = (np.arange(3000) + 0.5) * 2 * math.pi / 3000
    P, T = np.meshgrid(pr, th, indexing="ij")
    pts = np.stack([x0 + P * np.cos(T), y0 + P * np.sin(T)], -1).reshape(-1, 2)
    grad2 = float(np.sum((sol.grad(pts) ** 2).sum(1) * P.ravel())) * (r / 1500) * (2 * math.pi / 3000)
    # periodic trapezoid on the circle; the integrand only has kinks
    t = np.linspace(0, 2 * math.pi, 200000, endpoint=False)
    u2 = r * float(np.mean(sol.eval(np.stack([x0 + r * np.cos(t), y0 + r * np.sin(t)], 1)) ** 2)) * 2 * math.pi
    almgren = r * grad2 / u2
    ex = an.exact_functionals(sol, x, r)
    assert ex.N + ex.V == pytest.approx(almgren, rel=1e-3)
    s = sample(an.to_field(sol, GridSpec.cube(2, 512)), x, r)
    assert s.N + s.V == pytest.approx(almgren, abs=2 * s.n_err + 1e-2)


def test_profile_wedge_constant_weiss():
    prof = profile(an.wedge(0.5), (0.0, 0.0), 0.01, 0.5, 8)
    np.testing.assert_allclose(prof.column("M"), math.pi, rtol=1e-12)
    assert all(prof.m_monotone) and all(f is True for f in prof.n_monotone)
    assert np.all(np.diff(prof.radii) > 0)


def test_profile_homabs_frequency_two():
    prof = profile(an.homabs(2), (0.0, 0.0), 0.05, 0.8, 8)
    np.testing.assert_allclose(prof.column("N"), 2.0, atol=1e-10)


def test_profile_grid_monotone_and_json(wedge_grid):
    prof = profile(wedge_grid, (0.1, 0.0), 0.05, 0.5, 8)
    assert all(prof.m_monotone)
    doc = json.loads(profile_to_json(prof, {"tag": "w"}))
    assert doc["tag"] == "w" and len(doc["samples"]) == 8


def test_profile_preconditions():
    with pytest.raises(ValueError):
        profile(an.wedge(0.5), (0, 0), 0.1, 0.5, 4)
    with pytest.raises(ValueError):
        profile(an.wedge(0.5), (0, 0), 0.5, 0.1, 8)


def test_m_derivative_wedge_and_linear():
    for sol in (an.wedge(0.5), an.halfplane(1.0)):
        chk = m_derivative_check(sol, (0.0, 0.0), 0.3)
        assert abs(chk.lhs) < 1e-8 and abs(chk.rhs) < 1e-8


def test_m_derivative_homabs_grid():
    f = an.to_field(an.homabs(2), GridSpec.cube(2, 512))
    chk = m_derivative_check(f, (0.0, 0.0), 0.4)
    assert chk.rhs > 0
    assert chk.relative <= 0.05


def test_n_derivative_homogeneous_vanishes():
    for sol in (an.wedge(0.5), an.homabs(2)):
        chk = n_derivative_check(sol, (0.0, 0.0), 0.3)
        assert abs(chk.lhs) < 1e-6 and abs(chk.rhs) < 1e-6


def test_n_derivative_needs_certificate():
    with pytest.raises(ValueError):
        n_derivative_check(an.zero(), (0.0, 0.0), 0.3)


def test_limit_wedge():
    q = 0.4
    lim = limit_extrapolate(profile(an.wedge(q), (0.0, 0.0), 0.01, 0.5, 8))
    assert lim.M0 == pytest.approx(math.pi) and lim.N0 == pytest.approx(1.0)
    assert lim.H0 == pytest.approx(q * q * math.pi)
    assert lim.stable and lim.n_stable


def test_limit_halfplane_and_interior_point():
    lim = limit_extrapolate(profile(an.halfplane(1.0), (0.0, 0.0), 0.01, 0.5, 8))
    assert lim.M0 == pytest.approx(math.pi / 2)
    inner = limit_extrapolate(profile(an.halfplane(1.0), (0.0, 0.5), 0.01, 0.2, 8))
    assert inner.M0 == NEG_INF and inner.interior_positive


def test_variational_residual_gate():
    g = GridSpec.cube(2, 128)
    wedge = variational_residual(an.to_field(an.wedge(0.5), g))
    assert wedge.consistent and wedge.value < 1e-2
    harm = variational_residual(ScalarField.from_function(g, lambda p: 2 + p[:, 0] * p[:, 1]))
    assert harm.value < 1e-2
    visc = ScalarField.from_function(g, lambda p: np.where(p[:, 1] > 0, p[:, 1], -0.5 * p[:, 1]),
                                     chi=lambda p: (p[:, 1] > 0) * 1.0)
    bad = variational_residual(visc)
    assert bad.value > 10 * max(wedge.value, harm.value)


def test_samples_csv(tmp_path, wedge_grid):
    rows = [sample(wedge_grid, (0.0, 0.0), r) for r in (0.1, 0.2)]
    samples_to_csv(rows, tmp_path / "f.csv", {"run": "a"})
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0].startswith("run,") and len(lines) == 3
