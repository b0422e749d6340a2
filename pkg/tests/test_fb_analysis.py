from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from fbscope import analytic as an
from fbscope.fb_analysis import (blowup, boundary_to_csv, classify, deviation_functionals,
                                 extract_boundary, measure_profile, measure_profiles_to_json,
                                 positivity_density, renormalize)
from fbscope.field import GridSpec, ScalarField, unit_ball_volume
from fbscope.sample import alpha_n

SPEC = GridSpec.cube(2, 128)


@pytest.fixture(scope="module")
def wedge():
    f = an.to_field(an.wedge(0.5), SPEC)
    return f, classify(f, extract_boundary(f))


@pytest.fixture(scope="module")
def halfplane():
    f = an.to_field(an.halfplane(1.0), SPEC)
    return f, classify(f, extract_boundary(f))


def test_extract_wedge_points_on_crease(wedge):
    _, pts = wedge
    assert len(pts) > 0
    assert np.abs(pts.points[:, 1]).max() <= SPEC.h
    # the extracted segment spans the box, so the length is its width
    assert pts.length == pytest.approx(2.0, rel=0.02)


def test_extract_empty_cases():
    pos = ScalarField.from_function(SPEC, lambda p: 1 + p[:, 0] ** 2)
    assert len(extract_boundary(pos)) == 0 and not extract_boundary(pos).u_zero
    zero = extract_boundary(an.to_field(an.zero(), SPEC))
    assert len(zero) == 0 and zero.u_zero


def test_classify_wedge_sigma_h(wedge):
    _, pts = wedge
    resolved = ~pts.mask("unresolved")
    assert resolved.sum() > 0.5 * len(pts)
    assert set(np.array(pts.labels)[resolved]) == {"sigmaH"}
    np.testing.assert_allclose(pts.N0[resolved], 1.0, atol=0.02)
    np.testing.assert_allclose(np.abs(pts.normals[resolved, 1]), 1.0, atol=1e-6)


def test_classify_halfplane_regular(halfplane):
    _, pts = halfplane
    resolved = ~pts.mask("unresolved")
    assert resolved.sum() > 0.5 * len(pts)
    assert set(np.array(pts.labels)[resolved]) == {"regular"}
    np.testing.assert_allclose(pts.M0[resolved], math.pi / 2, rtol=0.02)


def test_density_gap_on_oracles(wedge, halfplane):
    b1 = unit_ball_volume(2)
    for _, pts in (wedge, halfplane):
        m = pts.M0[~pts.mask("unresolved")]
        assert not np.any((m > 0.05 * b1) & (m < 0.45 * b1))


def test_absharm_nodal_lines_and_origin():
    f = an.to_field(an.absharm("x2-y2"), SPEC)
    pts = classify(f, extract_boundary(f))
    far = np.linalg.norm(pts.points, axis=1) > 0.3
    ok = far & ~pts.mask("unresolved")
    assert ok.sum() > 0
    assert set(np.array(pts.labels)[ok]) <= {"sigmaH", "degenerate"}
    near = np.argmin(np.linalg.norm(pts.points, axis=1))
    assert pts.labels[near] in ("degenerate", "unresolved") or pts.N0[near] > 1.5


def test_blowup_and_renormalize_wedge():
    f = an.to_field(an.wedge(0.5), SPEC)
    b = blowup(f, (0.0, 0.0), 0.25)
    ref = an.to_field(an.wedge(0.5), b.spec)
    np.testing.assert_allclose(b.values, ref.values, atol=1e-12)
    v = renormalize(f, (0.0, 0.0), 0.25)
    target = an.to_field(an.wedge(alpha_n(2)), v.spec)
    np.testing.assert_allclose(v.values, target.values, atol=1e-3)


def test_blowup_homogeneous_degree_two():
    f = an.to_field(an.homabs(2), SPEC)
    b = blowup(f, (0.0, 0.0), 0.5)
    np.testing.assert_allclose(b.values, 0.5 * an.to_field(an.homabs(2), b.spec).values, atol=1e-3)


def test_renormalize_needs_positive_h():
    with pytest.raises(ValueError):
        renormalize(an.to_field(an.zero(), SPEC), (0.0, 0.0), 0.25)


def test_measure_profile_wedge_and_halfplane(wedge, halfplane):
    for (f, pts), expected in ((wedge, lambda r: 4 * 0.5 * r), (halfplane, lambda r: 2 * r)):
        mp = measure_profile(f, (0.0, 0.0), pts, [0.2, 0.4])
        assert np.all(mp.mismatch <= 0.03)
        np.testing.assert_allclose(mp.measured, [expected(0.2), expected(0.4)], rtol=0.05)
        assert mp.monotone and not mp.contaminated.any()
    doc = json.loads(measure_profiles_to_json([mp], {"config_hash": "abc"}))
    assert doc["config_hash"] == "abc" and len(doc["profiles"]) == 1


def test_measure_profile_requires_labels():
    f = an.to_field(an.wedge(0.5), SPEC)
    with pytest.raises(ValueError):
        measure_profile(f, (0.0, 0.0), extract_boundary(f), [0.2])


def test_deviation_functionals():
    for r in (0.1, 0.4):
        d = deviation_functionals(an.wedge(0.5), (0.0, 0.0), r, (0.0, 1.0))
        assert d["energy_dev"] == pytest.approx(1.0) and d["profile_dev"] == pytest.approx(0.0, abs=1e-10)
    g = deviation_functionals(an.to_field(an.wedge(0.5), SPEC), (0.0, 0.0), 0.4, (0.0, 1.0))
    assert g["energy_dev"] == pytest.approx(1.0, abs=0.02) and g["profile_dev"] < 1e-3
    hp = deviation_functionals(an.halfplane(1.0), (0.0, 0.0), 0.3, (0.0, 1.0))
    assert abs(hp["energy_dev"] - 1.0) > 0.5


def test_positivity_density():
    assert positivity_density(an.to_field(an.halfplane(1.0), SPEC), (0.0, 0.0), 0.4) == \
        pytest.approx(0.5, abs=0.02)
    # the zero row of the crease costs a strip of width h: bias 2h / (pi r)
    bias = 2 * SPEC.h / (math.pi * 0.4)
    assert positivity_density(an.to_field(an.wedge(0.5), SPEC), (0.0, 0.0), 0.4) == \
        pytest.approx(1.0 - bias, abs=0.005)


def test_boundary_csv(tmp_path, wedge):
    _, pts = wedge
    boundary_to_csv(pts, tmp_path / "b.csv", {"config_hash": "h"})
    rows = list(csv.DictReader(open(tmp_path / "b.csv")))
    assert len(rows) == len(pts)
    assert rows[0]["config_hash"] == "h" and rows[0]["label"] in ("sigmaH", "unresolved")
    assert float(rows[0]["x"]) == pts.points[0, 0]
