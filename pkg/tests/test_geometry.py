from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbscope import analytic as an
from fbscope.geometry import (DiscreteMeasure, EmptyMeasureError, FrequencyOracle, beta_number,
                              beta_number_bruteforce, covering_tree, dichotomy_probe,
                              disjoint_packing_count, minkowski_estimate, ray_candidates,
                              subspace_inequality_probe, synthetic_constant, synthetic_curve,
                              synthetic_line)


def test_beta_trivial_cases():
    line = DiscreteMeasure.uniform(np.column_stack([np.linspace(-1, 1, 7), 0.3 * np.linspace(-1, 1, 7)]))
    assert beta_number(line, (0, 0), 2.0).beta2 == 0.0
    assert beta_number(DiscreteMeasure.uniform([[0.1, 0.2]]), (0, 0), 1.0).beta2 == 0.0
    two = DiscreteMeasure([[0, 0], [0.3, 0.1]], [1.0, 5.0])
    assert beta_number(two, (0, 0), 1.0).beta2 == 0.0
    assert beta_number_bruteforce(two, (0, 0), 1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(EmptyMeasureError):
        beta_number(line, (5, 5), 0.1)


def test_beta_square_matches_bruteforce():
    s, r = 0.5, 0.8
    sq = DiscreteMeasure.uniform(s / 2 * np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]]))
    b = beta_number(sq, (0, 0), r).beta2
    # any line through the centre leaves each vertex at squared distance s^2/4 on average
    assert b == pytest.approx(4 * (s / 2) ** 2 / r ** 3)
    assert beta_number_bruteforce(sq, (0, 0), r) == pytest.approx(b, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_beta_random_clouds_agree(seed):
    rng = np.random.default_rng(seed)
    mu = DiscreteMeasure(rng.uniform(-0.5, 0.5, (10, 2)), rng.uniform(0.5, 2.0, 10))
    a = beta_number(mu, (0, 0), 1.0).beta2
    assert beta_number_bruteforce(mu, (0, 0), 1.0, 10_000) == pytest.approx(a, abs=1e-4)


def test_beta_3d_agrees():
    rng = np.random.default_rng(7)
    mu = DiscreteMeasure.uniform(rng.uniform(-0.5, 0.5, (12, 3)))
    a = beta_number(mu, (0, 0, 0), 1.0).beta2
    assert beta_number_bruteforce(mu, (0, 0, 0), 1.0) == pytest.approx(a, rel=1e-4, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 1000))
def test_beta_linear_in_mass(c, seed):
    rng = np.random.default_rng(seed)
    mu = DiscreteMeasure.uniform(rng.uniform(-1, 1, (6, 2)))
    a = beta_number(mu, (0, 0), 2.0).beta2
    assert beta_number(mu.scaled(c), (0, 0), 2.0).beta2 == pytest.approx(c * a, rel=1e-9, abs=1e-15)


def test_probe_wedge_crease_both_sides_vanish():
    mu = DiscreteMeasure.uniform(np.column_stack([np.linspace(-0.05, 0.05, 11), np.zeros(11)]))
    out = subspace_inequality_probe(mu, FrequencyOracle.from_analytic(an.wedge(0.5)), (0, 0), 0.1)
    assert out["lhs"] == 0.0 and out["rhs"] == pytest.approx(0.0, abs=1e-10)
    assert not out["violation"]


def test_probe_absharm_two_masses():
    oracle = FrequencyOracle.from_analytic(an.absharm("x2-y2"))
    r = 0.1
    mu = DiscreteMeasure.uniform([[0.0, 0.0], [r / 2 / math.sqrt(2), r / 2 / math.sqrt(2)]])
    out = subspace_inequality_probe(mu, oracle, (0, 0), r)
    assert out["lhs"] == 0.0 and out["rhs"] >= 0.0 and not out["violation"]


def test_probe_flags_unrealizable_simplex():
    mu = DiscreteMeasure.uniform([[0, 0], [0.05, 0], [0, 0.05]])
    out = subspace_inequality_probe(mu, synthetic_constant(1.0), (0, 0), 0.1)
    assert out["lhs"] > 0 and out["rhs"] == 0.0 and out["violation"] and not out["realizable"]


def test_dichotomy_probe_cases():
    line = np.column_stack([np.linspace(-0.1, 0.1, 21), np.zeros(21)])
    w = dichotomy_probe(line, FrequencyOracle.from_analytic(an.wedge(0.5)), (0, 0), 0.1, 0.1, 0.05)
    assert w.first_alternative and w.nmax == pytest.approx(1.0)
    grid = np.array([[a, b] for a in np.linspace(-0.04, 0.04, 9) for b in np.linspace(-0.04, 0.04, 9)])
    d = dichotomy_probe(grid, FrequencyOracle.from_analytic(an.absharm("x2-y2")), (0, 0), 0.05, 0.1, 0.05)
    assert not d.first_alternative and d.within_delta and d.max_dist < 0.1
    s = dichotomy_probe(line, synthetic_line(2.0), (0, 0), 0.1, 0.1, 0.05)
    assert not s.first_alternative and s.max_dist > 0.1 and s.within_delta is False
    with pytest.raises(ValueError):
        dichotomy_probe(line, synthetic_line(2.0), (5, 5), 0.1, 0.1, 0.05)


def test_covering_wedge_is_terminal_root():
    pts = np.column_stack([np.linspace(-0.5, 0.5, 41), np.zeros(41)])
    rep = covering_tree(pts, FrequencyOracle.from_analytic(an.wedge(0.5)), (0, 0), 0.5, 0.1, 0.05, 0.1, 1e-3)
    assert len(rep.nodes) == 1 and rep.root.status == "terminal"
    assert rep.packing_sum() == pytest.approx(0.5)


def test_covering_absharm_bounded_generations():
    oracle = FrequencyOracle.from_analytic(an.absharm("x2-y2"))
    pts = ray_candidates([45, 135, 225, 315], 0.5, d_min=1e-4, growth=1.02)
    counts = []
    for r_stop in (1e-2, 5e-3):
        rep = covering_tree(pts, oracle, (0, 0), 0.5, 0.1, 0.05, 0.1, r_stop)
        counts.append(rep.max_non_terminal())
        # the oracle looks at 20 r, so open balls sit within a fixed multiple of r of the singular point
        for nd in rep.nodes:
            if nd.status in ("subdivided", "stopped"):
                assert np.linalg.norm(nd.center) <= 32 * nd.radius
        assert rep.budget_ok()
    assert counts[0] == counts[1]


def test_covering_synthetic_curve_grows_then_respects_budget():
    pts = np.column_stack([np.linspace(-0.5, 0.5, 2001), np.zeros(2001)])
    rep = covering_tree(pts, synthetic_curve(0.1), (0, 0), 0.5, 0.1, 0.05, 0.1, 1e-3)
    gens = rep.generation_counts()
    assert gens[1]["nodes"] > gens[0]["nodes"]
    assert rep.budget_ok()
    doc = rep.to_json({"config_hash": "x"})
    assert '"config_hash": "x"' in doc and rep.to_dot().startswith("digraph")


def test_covering_rejects_bad_parameters():
    with pytest.raises(ValueError):
        covering_tree([[0, 0]], synthetic_constant(), (0, 0), 1.0, 0.1, 0.2, 0.1, 1e-2)


def test_ray_candidates():
    P = ray_candidates([0, 90], 1.0, d_min=1e-3, growth=2.0)
    assert np.all(P[0] == 0) and len(P) == 1 + 2 * 10
    assert np.linalg.norm(P, axis=1).max() <= 1.0
    with pytest.raises(ValueError):
        ray_candidates([0], 1.0, d_min=2.0)


def test_minkowski_examples():
    s, L = 0.02, 1.0
    seg = np.column_stack([np.linspace(0, L, 2001), np.zeros(2001)])
    assert minkowski_estimate(seg, s) == pytest.approx(2 * s * L + math.pi * s * s, rel=0.1)
    assert minkowski_estimate([[0.3, 0.3]], s) == pytest.approx(math.pi * s * s, rel=0.1)
    assert minkowski_estimate(np.zeros((0, 2)), s) == 0.0


def test_packing_examples():
    s, L = 0.02, 1.0
    seg = np.column_stack([np.linspace(0, L, 2001), np.zeros(2001)])
    k = disjoint_packing_count(seg, s)
    assert L / (2 * s) / 2 <= k <= 2 * L / (2 * s)
    assert disjoint_packing_count([[0, 0]], s) == 1
    assert disjoint_packing_count([[0, 0], [s, 0]], s) == 1
