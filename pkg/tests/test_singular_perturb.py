from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fbscope import analytic as an
from fbscope.field import GridSpec
from fbscope.functionals import variational_residual
from fbscope.singular_perturb import (BetaSpec, SolverConfig, UnderResolvedWarning, continuation,
                                      default_beta, shoot_1d, solve)


def test_default_beta_examples():
    b = default_beta(0.1)
    assert b.beta(0.5) == pytest.approx(0.75)
    assert b.beta_eps(0.05) == pytest.approx(7.5)
    assert b.beta(0.0) == 0.0 and b.beta(1.0) == 0.0 and b.beta(1.5) == 0.0
    with pytest.raises(ValueError):
        default_beta(0.0)


@pytest.mark.parametrize("name", ["poly", "sine"])
def test_profile_normalised(name):
    b = BetaSpec(1.0, name)
    assert integrate.quad(lambda s: float(b.beta(s)), 0, 1, epsabs=1e-13)[0] == pytest.approx(0.5, abs=1e-10)
    assert np.all(b.beta(np.linspace(0.01, 0.99, 99)) > 0)
    assert b.B(2.0) == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 2.0), st.floats(-0.5, 3.0))
def test_chi_eps_in_unit_interval(eps, u):
    c = float(default_beta(eps).chi_eps(u * eps))
    assert 0.0 <= c <= 1.0


def test_constant_data_above_layer_is_exact():
    eps = 0.2
    res = solve(GridSpec.cube(2, 32), default_beta(eps), 2 * eps)
    assert res.converged and res.residual_norm < 1e-14 and not res.under_resolved
    np.testing.assert_allclose(res.field.values, 2 * eps)
    np.testing.assert_allclose(res.field.chi, 1.0)


def test_matches_shooting_oracle_second_order():
    beta = default_beta(0.5)
    p1 = shoot_1d(beta, values=(1.0, 0.0))
    errs = []
    for cells in (32, 64):
        spec = GridSpec.cube(2, cells)
        res = solve(spec, beta, lambda p: p1(p[:, 0]))
        assert res.converged
        exact = p1(spec.nodes()[:, 0]).reshape(spec.shape)
        errs.append(np.abs(res.field.values - exact).max())
    assert np.log2(errs[0] / errs[1]) >= 1.8


def test_discrete_maximum_principle_and_residual():
    spec = GridSpec.cube(2, 64)
    res = solve(spec, default_beta(0.1), an.wedge(1.0))
    assert res.converged
    assert res.field.values.min() >= 0.0
    assert res.field.values.max() <= 1.0 + 1e-12
    rep = variational_residual(res.field)
    assert rep.value <= 1e-6 + rep.tolerance


def test_nonconvergence_is_reported():
    res = solve(GridSpec.cube(2, 64), default_beta(0.1), an.wedge(1.0), SolverConfig(max_iter=1))
    assert not res.converged
    assert res.diagnostics()["iterations"] == 1


def test_under_resolved_warning():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        res = solve(GridSpec.cube(2, 16), default_beta(0.05), an.wedge(1.0))
    assert res.under_resolved
    assert any(issubclass(x.category, UnderResolvedWarning) for x in w)


def test_continuation_harmonic_range_is_constant_and_wedge_is_cauchy():
    spec = GridSpec.cube(2, 32)
    lad = continuation(spec, default_beta(0.2), 1.0, [0.2, 0.15, 0.1])
    assert lad.cauchy_sup == (0.0, 0.0)
    lad = continuation(GridSpec.cube(2, 64), default_beta(0.4), an.wedge(1.0), [0.4, 0.2, 0.1])
    d = lad.cauchy_sup
    assert len(lad) == 3 and d[1] <= 1.2 * d[0]
    with pytest.raises(ValueError):
        continuation(spec, default_beta(0.2), 1.0, [0.1, 0.2])


def test_shoot_affine_above_layer_and_conserved():
    prof = shoot_1d(default_beta(0.1), values=(1.0, 0.0))
    top = prof.u > 0.1 + 1e-9
    np.testing.assert_allclose(np.abs(prof.du[top]), 1.0, atol=1e-8)
    assert prof.drift <= 1e-8
    flat = shoot_1d(default_beta(0.1), slope=0.0)
    assert np.all(flat.u == 0.0)


def test_shoot_argument_errors():
    with pytest.raises(ValueError):
        shoot_1d(default_beta(0.1))
    with pytest.raises(ValueError):
        shoot_1d(default_beta(0.1), values=(-1.0, 0.0))
