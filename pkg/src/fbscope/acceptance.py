"""The acceptance suite: twelve numbered checks shared by ``fbscope verify`` and the tests.

Each check returns a :class:`CriterionResult` whose ``metrics`` are plain
floats/ints/bools computed from seeded inputs, so a serialized report is
byte-stable.  ``tol_scale`` multiplies every tolerance; values below 1 make
the suite stricter (useful for seeing which margins are thin).
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analytic as an
from .fb_analysis import classify, extract_boundary, measure_profile
from .field import GridSpec, ScalarField, unit_ball_volume
from .functionals import (m_derivative_check, n_derivative_check, profile,
                          variational_residual)
from .geometry import (DiscreteMeasure, FrequencyOracle, beta_number, beta_number_bruteforce,
                       covering_tree, ray_candidates, subspace_inequality_probe, synthetic_constant,
                       synthetic_curve, synthetic_line, synthetic_point)
from .sample import alpha_n
from .singular_perturb import continuation, default_beta, shoot_1d, solve

__all__ = ["CriterionResult", "Criterion", "CRITERIA", "run_criteria", "criterion_ids"]


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    metrics: dict = dc_field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0

    def as_dict(self) -> dict:
        # wall time is left out so reports stay byte-identical
        return {"id": self.cid, "name": self.name, "passed": bool(self.passed),
                "metrics": self.metrics, "detail": self.detail}

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.cid:2d} {self.name}: {self.detail}"


@dataclass(frozen=True)
class Criterion:
    cid: int
    name: str
    run: Callable[[float], tuple[bool, dict, str]]


# 1 -------------------------------------------------------------------------

def _c1(ts: float):
    errs = {f"dim{n}": abs(alpha_n(n) ** 2 * unit_ball_volume(n) - 1.0) for n in (2, 3)}
    worst = max(errs.values())
    return worst <= 1e-10 * ts, errs, f"max |alpha^2 |B1| - 1| = {worst:.2e}"


# 2 -------------------------------------------------------------------------

def _c2(ts: float):
    spec = GridSpec.cube(2, 256)
    b1 = unit_ball_volume(2)
    tol = 1e-2 * ts
    m = {}
    ok = True
    for q in (0.3, 0.7):
        sol = an.wedge(q)
        f = an.to_field(sol, spec)
        prof = profile(f, (0.0, 0.0), 0.05, 0.8, 8)
        rel = 0.0
        for s in prof.samples:
            e = an.exact_functionals(sol, (0.0, 0.0), s.r)
            for k in ("D", "H", "M"):
                a, b = getattr(s, k), getattr(e, k)
                rel = max(rel, abs(a - b) / abs(b))
        nd = float(np.max(np.abs(prof.column("N") - 1.0)))
        md = float(np.max(np.abs(prof.column("M") - b1)) / b1)
        ex = [an.exact_functionals(sol, (0.0, 0.0), r) for r in prof.radii]
        exact_dev = max(max(abs(e.N - 1.0), abs(e.M - b1) / b1) for e in ex)
        m[f"q{q}"] = {"rel_vs_exact": rel, "N_dev": nd, "M_rel_dev": md, "exact_dev": exact_dev}
        ok &= rel <= tol and nd <= tol and md <= tol and exact_dev <= 1e-12
    worst = max(max(v["rel_vs_exact"], v["N_dev"], v["M_rel_dev"]) for v in m.values())
    return ok, m, f"worst relative deviation {worst:.2e} (tol {tol:.0e})"


# 3 -------------------------------------------------------------------------

def _c3(ts: float):
    spec = GridSpec.cube(2, 256)
    sol = an.halfplane(1.0)
    f = an.to_field(sol, spec)
    prof = profile(f, (0.0, 0.0), 0.05, 0.8, 8)
    dev = float(np.max(np.abs(prof.column("M") - math.pi / 2)))
    exact = abs(an.exact_functionals(sol, (0.0, 0.0), 0.3).M - math.pi / 2)
    pts = classify(f, extract_boundary(f))
    counts = pts.counts()
    resolved = len(pts) - counts.get("unresolved", 0)
    n_reg = counts.get("regular", 0)
    ok = dev <= 1e-2 * ts and exact <= 1e-12 and resolved > 0 and n_reg == resolved
    return ok, {"M_dev": dev, "exact_M_dev": exact, "counts": counts, "resolved": resolved}, \
        f"max |M - pi/2| = {dev:.2e}; {n_reg}/{resolved} resolved points regular"


# 4 -------------------------------------------------------------------------

def _c4(ts: float):
    spec = GridSpec.cube(2, 512)
    radii = [0.1, 0.2, 0.3, 0.4]
    m = {}
    f = an.to_field(an.wedge(0.4), spec)
    pts = classify(f, extract_boundary(f))
    mp = measure_profile(f, (0.0, 0.0), pts, radii)
    wedge_mis = float(mp.mismatch.max())
    m["wedge"] = {"measured": mp.measured.tolist(), "predicted": mp.predicted.tolist(),
                  "max_mismatch": wedge_mis}
    sol = an.absharm("x2-y2")
    f = an.to_field(sol, spec)
    pts = classify(f, extract_boundary(f))
    mp = measure_profile(f, (0.0, 0.0), pts, radii)
    oracle = np.array([an.nodal_mass_oracle(sol, (0.0, 0.0), r, s) for r, s in zip(radii, mp.sigma)])
    mis_meas = float(np.max(np.abs(mp.measured - oracle) / oracle))
    mis_pred = float(np.max(np.abs(mp.predicted - oracle) / oracle))
    m["absharm"] = {"measured": mp.measured.tolist(), "predicted": mp.predicted.tolist(),
                    "oracle": oracle.tolist(), "measured_vs_oracle": mis_meas,
                    "predicted_vs_oracle": mis_pred}
    ok = wedge_mis <= 0.03 * ts and max(mis_meas, mis_pred) <= 0.05 * ts
    return ok, m, (f"wedge mismatch {wedge_mis:.2e} (tol {0.03 * ts:.0e}); |x2-y2| vs nodal oracle "
                   f"{max(mis_meas, mis_pred):.2e} (tol {0.05 * ts:.0e})")


# 5 -------------------------------------------------------------------------

def _monotonicity_corpus() -> list[tuple[str, object, tuple]]:
    """(label, field, centre) triples: exact oracles, gridded oracles and solver output."""
    c2, c3 = (0.0, 0.0), (0.0, 0.0, 0.0)
    out: list[tuple[str, object, tuple]] = [
        ("wedge:q=0.3", an.wedge(0.3), c2),
        ("wedge:q=0.7", an.wedge(0.7), c2),
        ("halfplane:a=1", an.halfplane(1.0), c2),
        ("wedge_chi_one:q=0.5", an.wedge_chi_one(0.5), c2),
        ("absharm:v=x2-y2", an.absharm("x2-y2"), c2),
        ("absharm:v=x2-y2+0.5x", an.absharm("x2-y2+0.5x"), c2),
        ("homabs:k=2", an.homabs(2), c2),
        ("homabs:k=3", an.homabs(3), c2),
        ("wedge:q=0.5 (3d)", an.wedge(0.5, dim=3), c3),
        ("halfplane:a=1 (3d)", an.halfplane(1.0, dim=3), c3),
        ("absharm:v=x2-z2 (3d)", an.absharm("x2-z2", dim=3), c3),
    ]
    g = GridSpec.cube(2, 256)
    for text in ("wedge:q=0.3", "absharm:v=x2-y2+0.5x", "homabs:k=3"):
        out.append((text + " @256", an.to_field(an.parse_solution(text), g), c2))
    beta = default_beta(0.5)
    p1 = shoot_1d(beta, values=(1.0, 0.0))
    r1 = solve(GridSpec.cube(2, 128), beta, lambda p: p1(p[:, 0]))
    if r1.converged:
        out.append(("solve:1d eps=0.5 @128", r1.field, (0.0, 0.0)))
    lad = continuation(GridSpec.cube(2, 128), default_beta(0.4), an.wedge(1.0), [0.4, 0.2, 0.1])
    for r in lad:
        if r.converged:
            out.append((f"solve:wedge eps={r.epsilon:g} @128", r.field, (0.0, 0.0)))
    return out


def _c5(ts: float):
    corpus = _monotonicity_corpus()
    m_fail, n_fail, n_checked = [], [], 0
    for label, fld, x in corpus:
        prof = profile(fld, x, 0.05, 0.6, 8)
        if not all(prof.m_monotone):
            m_fail.append(label)
        flags = [v for v in prof.n_monotone if v is not None]
        n_checked += len(flags)
        if not all(flags):
            n_fail.append(label)
    # derivative identities on a two-step refinement ladder
    sol = an.absharm("x2-y2+0.5x")
    ladder = {}
    for cells in (256, 512):
        f = an.to_field(sol, GridSpec.cube(2, cells))
        row = {}
        for r in (0.3, 0.4):
            row[f"M@{r}"] = m_derivative_check(f, (0.0, 0.0), r).relative
            row[f"N@{r}"] = n_derivative_check(f, (0.0, 0.0), r).relative
        ladder[cells] = row
    worst = max(max(v.values()) for v in ladder.values())
    decreasing = all(ladder[512][k] < ladder[256][k] for k in ladder[256])
    ok = (len(corpus) >= 12 and not m_fail and not n_fail and worst <= 0.10 * ts and decreasing)
    metrics = {"n_fields": len(corpus), "fields": [c[0] for c in corpus], "M_failures": m_fail,
               "N_failures": n_fail, "N_intervals_checked": n_checked,
               "derivative_ladder": {str(k): v for k, v in ladder.items()},
               "worst_derivative_residual": worst, "residual_decreasing": decreasing}
    return ok, metrics, (f"{len(corpus)} fields, M/N monotone failures {len(m_fail)}/{len(n_fail)}; "
                         f"derivative residual {worst:.2e} (tol {0.1 * ts:.0e}), decreasing={decreasing}")


# 6 -------------------------------------------------------------------------

def _share(cells: int) -> tuple[float, dict]:
    f = an.to_field(an.absharm("x2-y2"), GridSpec.cube(2, cells))
    pts = classify(f, extract_boundary(f))
    sig = pts.mask("sigmaH")
    hi = sig & (pts.N0 > 1.1)
    return float(pts.weights[hi].sum() / pts.weights[sig].sum()), pts.counts()


def _c6(ts: float):
    s512, c512 = _share(512)
    s1024, c1024 = _share(1024)
    ok = s512 <= 0.02 * ts and s1024 <= 0.5 * s512 * min(ts, 1.0)
    return ok, {"share_512": s512, "share_1024": s1024, "counts_512": c512, "counts_1024": c1024}, \
        f"share {s512:.3%} at 512^2, {s1024:.3%} at 1024^2 (ratio {s1024 / s512:.3f})"


# 7 -------------------------------------------------------------------------

def _c7(ts: float):
    rng = np.random.default_rng(20240607)
    worst = {}
    for n in (2, 3):
        w = 0.0
        for _ in range(100):
            k = int(rng.integers(n + 2, 30))
            mu = DiscreteMeasure(rng.uniform(-1, 1, (k, n)), rng.uniform(0.1, 2.0, k))
            a = beta_number(mu, np.zeros(n), 1.8).beta2
            b = beta_number_bruteforce(mu, np.zeros(n), 1.8)
            w = max(w, abs(a - b) / a)
        worst[f"dim{n}"] = w
    flat = {}
    for n in (2, 3):
        pts = rng.uniform(-0.5, 0.5, (40, n))
        pts[:, -1] = 0.0
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        mu = DiscreteMeasure(pts @ Q.T + 0.1, rng.uniform(0.5, 1.5, 40))
        flat[f"dim{n}"] = beta_number(mu, np.full(n, 0.1), 1.0).beta2
    ok = max(worst.values()) <= 1e-4 * ts and all(v == 0.0 for v in flat.values())
    return ok, {"worst_rel": worst, "hyperplane_beta2": flat}, \
        f"worst relative gap {max(worst.values()):.2e}; hyperplane beta2 {sorted(set(flat.values()))}"


# 8 -------------------------------------------------------------------------

def _probe_corpus():
    # measures sit on sigmaH points only (half-plane edges are excluded by design)
    line = np.stack([np.linspace(-0.5, 0.5, 201), np.zeros(201)], axis=1)
    plane = np.array([[a, b, 0.0] for a in np.linspace(-0.3, 0.3, 13) for b in np.linspace(-0.3, 0.3, 13)])
    arms4 = ray_candidates([45, 135, 225, 315], 0.5, 1e-3, 1.05)
    arms6 = ray_candidates([30, 90, 150, 210, 270, 330], 0.5, 1e-3, 1.05)
    cases = []
    wo = FrequencyOracle.from_analytic(an.wedge(0.5))
    for x, r in [((0.0, 0.0), 0.02), ((0.2, 0.0), 0.01)]:
        cases.append(("wedge crease", DiscreteMeasure.uniform(line), wo, x, r))
    w3 = FrequencyOracle.from_analytic(an.wedge(0.5, dim=3))
    cases.append(("wedge crease (3d)", DiscreteMeasure.uniform(plane), w3, (0.0, 0.0, 0.0), 0.02))
    ao = FrequencyOracle.from_analytic(an.absharm("x2-y2"))
    for x, r in [((0.0, 0.0), 0.02), ((0.0, 0.0), 0.005), ((0.05, 0.05), 0.01), ((0.01, 0.01), 0.01)]:
        cases.append(("absharm x2-y2 arms", DiscreteMeasure.uniform(arms4), ao, x, r))
    two = np.array([[0.0, 0.0], [0.01 / (2 * math.sqrt(2)), 0.01 / (2 * math.sqrt(2))]])
    cases.append(("absharm two masses", DiscreteMeasure.uniform(two), ao, (0.0, 0.0), 0.01))
    ko = FrequencyOracle.from_analytic(an.homabs(3))
    for x, r in [((0.0, 0.0), 0.02), ((0.0, 0.03), 0.01)]:
        cases.append(("homabs k=3 arms", DiscreteMeasure.uniform(arms6), ko, x, r))
    return cases


def _c8(ts: float):
    rows = []
    for label, mu, oracle, x, r in _probe_corpus():
        d = subspace_inequality_probe(mu, oracle, x, r)
        rows.append({"case": label, "x": list(x), "r": r, **{k: d[k] for k in ("lhs", "rhs", "violation",
                                                                                  "contaminated", "realizable")}})
    zero = 1e-10
    pos = [w for w in rows if w["rhs"] > zero]
    C = max((w["lhs"] / w["rhs"] for w in pos), default=0.0)
    holds = all(w["lhs"] <= C * w["rhs"] + 1e-8 for w in pos)
    zero_ok = all(w["lhs"] <= 1e-6 * ts for w in rows if w["rhs"] <= zero and w["realizable"])
    simplex = DiscreteMeasure.uniform([[0.0, 0.0], [0.05, 0.0], [0.0, 0.05]])
    neg = subspace_inequality_probe(simplex, synthetic_constant(1.0), (0.01, 0.01), 0.1)
    ok = math.isfinite(C) and holds and zero_ok and bool(neg["violation"]) and not any(
        w["contaminated"] for w in rows)
    metrics = {"C": C, "instances": rows, "n_rhs_positive": len(pos), "zero_rhs_ok": zero_ok,
               "negative_control": {k: neg[k] for k in ("lhs", "rhs", "violation", "realizable")}}
    return ok, metrics, (f"fitted C = {C:.4g} over {len(pos)} instances with rhs > 0; zero-rhs cases "
                         f"{'clean' if zero_ok else 'dirty'}; simplex control violation={neg['violation']}")


# 9 -------------------------------------------------------------------------

def _c9(ts: float):
    d1, d2, eps = 0.2, 0.05, 0.1
    line = ray_candidates([0, 180], 0.5, 1e-4, 1.02)
    wrep = covering_tree(line, FrequencyOracle.from_analytic(an.wedge(0.5)), (0.0, 0.0), 0.5, d1, d2, eps, 1e-4)
    wedge_ok = len(wrep.nodes) == 1 and wrep.root.status == "terminal"
    arms = ray_candidates([45, 135, 225, 315], 0.5, 1e-6, 1.005)
    ao = FrequencyOracle.from_analytic(an.absharm("x2-y2"))
    reps = {rs: covering_tree(arms, ao, (0.0, 0.0), 0.5, d1, d2, eps, rs) for rs in (1e-4, 5e-5)}
    a, b = reps[1e-4], reps[5e-5]
    counts = [g["non_terminal"] for g in b.generation_counts()]
    count_ok = max(counts) <= 3
    pa, pb = a.packing_sum(), b.packing_sum()
    stable = abs(pb - pa) <= 0.2 * ts * pa
    seg = np.stack([np.linspace(-0.5, 0.5, 2001), np.zeros(2001)], axis=1)
    controls = {
        "curve": covering_tree(seg, synthetic_curve(d1), (0.0, 0.0), 0.5, d1, d2, eps, 1e-3),
        "line": covering_tree(seg, synthetic_line(2.0), (0.0, 0.0), 0.5, d1, d2, eps, 1e-3),
        "point": covering_tree(ray_candidates([45, 135, 225, 315], 0.5, 1e-5, 1.01), synthetic_point(1.0),
                               (0.0, 0.0), 0.5, d1, d2, eps, 1e-3),
    }
    runs = {"wedge": wrep, "absharm_1e-4": a, "absharm_5e-5": b, **controls}
    budget = {k: {"max_large_drops": r.max_large_drops(), "budget": r.budget, "ok": r.budget_ok()}
              for k, r in runs.items()}
    budget_ok = all(v["ok"] for v in budget.values())
    ok = wedge_ok and count_ok and stable and budget_ok
    metrics = {"wedge_nodes": len(wrep.nodes), "wedge_root": wrep.root.status,
               "absharm_non_terminal": counts, "packing": {"1e-4": pa, "5e-5": pb},
               "budget": budget}
    return ok, metrics, (f"wedge nodes {len(wrep.nodes)}; |x2-y2| non-terminal per generation {counts} "
                         f"(limit 3); packing {pa:.4f} -> {pb:.4f}; budget ok={budget_ok}")


# 10 ------------------------------------------------------------------------

def _grad_sup(field: ScalarField, frac: float = 0.5) -> float:
    u = field.values
    g = np.gradient(u, field.h)
    mag = np.sqrt(sum(c * c for c in g))
    n = u.shape[0] - 1
    q = int(round(n * (1 - frac) / 2))
    return float(mag[(slice(q, n - q + 1),) * field.dim].max())


def _c10(ts: float):
    beta = default_beta(0.5)
    p1 = shoot_1d(beta, values=(1.0, 0.0))
    oned = {}
    residuals = []
    ok = True
    for cells in (128, 256):
        spec = GridSpec.cube(2, cells)
        res = solve(spec, beta, lambda p: p1(p[:, 0]))
        exact = p1(spec.nodes()[:, 0]).reshape(spec.shape)
        err = float(np.abs(res.field.values - exact).max())
        bound = 5 * spec.h ** 2 + 1e-8
        oned[cells] = {"sup_err": err, "bound": bound, "converged": res.converged}
        ok &= res.converged and err <= bound * ts
        if cells == 128:
            rep = variational_residual(res.field)
            residuals.append({"case": "1d eps=0.5 @128", "value": rep.value, "tolerance": rep.tolerance})
    lad = continuation(GridSpec.cube(2, 256), default_beta(0.4), an.wedge(1.0), [0.4, 0.2, 0.1, 0.05])
    grads = []
    for r in lad:
        ok &= r.converged
        grads.append(_grad_sup(r.field))
        rep = variational_residual(r.field)
        residuals.append({"case": f"wedge eps={r.epsilon:g} @256", "value": rep.value,
                          "tolerance": rep.tolerance})
    res_ok = all(d["value"] <= (1e-6 + d["tolerance"]) * ts for d in residuals)
    grad_ok = max(grads) <= 1.15 * ts
    cauchy = list(lad.cauchy_sup)
    ok = ok and res_ok and grad_ok
    metrics = {"one_d": {str(k): v for k, v in oned.items()}, "residuals": residuals,
               "grad_sup": grads, "cauchy_sup": cauchy}
    worst = max(v["sup_err"] / v["bound"] for v in oned.values())
    return ok, metrics, (f"1D error/bound {worst:.3f}; residual within tolerance={res_ok}; "
                         f"sup|grad u| {max(grads):.3f} (limit 1.15)")


# 11 ------------------------------------------------------------------------

def _c11(ts: float):
    spec = GridSpec.cube(2, 512)
    gate = 1e-3 * ts
    vals = {}
    for text in ("wedge:q=0.4", "absharm:v=x2-y2"):
        vals[text] = variational_residual(an.to_field(an.parse_solution(text), spec)).value
    visc = ScalarField.from_function(spec, lambda p: np.maximum(p[:, 1], 0) + 0.5 * np.maximum(-p[:, 1], 0))
    vals["x_n^+ + 0.5 x_n^-"] = variational_residual(visc).value
    ok = vals["wedge:q=0.4"] <= gate and vals["absharm:v=x2-y2"] <= gate and \
        vals["x_n^+ + 0.5 x_n^-"] >= 10 * gate
    return ok, {"residuals": vals, "gate": gate}, \
        "; ".join(f"{k} {v:.2e}" for k, v in vals.items()) + f" (gate {gate:.0e})"


# 12 ------------------------------------------------------------------------

def _c12(ts: float):
    from . import cli  # deferred: cli imports this module

    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for rep in range(2):
            out = Path(tmp) / f"run{rep}"
            cli.determinism_pipeline(out, seed=0)
            digests.append(cli.tree_digest(out))
    same = digests[0] == digests[1]
    return same, {"files": len(digests[0]), "identical": same}, \
        f"{len(digests[0])} artifacts, identical={same}"


CRITERIA: dict[int, Criterion] = {c.cid: c for c in [
    Criterion(1, "constant identity", _c1),
    Criterion(2, "wedge suite", _c2),
    Criterion(3, "half-plane suite", _c3),
    Criterion(4, "measure identity", _c4),
    Criterion(5, "monotonicity battery", _c5),
    Criterion(6, "frequency-1 prevalence", _c6),
    Criterion(7, "beta-number oracle equivalence", _c7),
    Criterion(8, "subspace inequality probe", _c8),
    Criterion(9, "covering behaviour", _c9),
    Criterion(10, "singular perturbation", _c10),
    Criterion(11, "variational residual discrimination", _c11),
    Criterion(12, "determinism", _c12),
]}


def criterion_ids() -> list[int]:
    return sorted(CRITERIA)


def run_one(cid: int, tol_scale: float = 1.0) -> CriterionResult:
    c = CRITERIA[cid]
    t = time.perf_counter()
    try:
        ok, metrics, detail = c.run(tol_scale)
    except Exception as exc:  # a crash is a failure with its message kept
        ok, metrics, detail = False, {"error": type(exc).__name__}, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(cid, c.name, bool(ok), metrics, detail, time.perf_counter() - t)


def run_criteria(ids=None, tol_scale: float = 1.0, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for cid in (criterion_ids() if ids is None else ids):
        r = run_one(int(cid), tol_scale)
        if echo:
            echo(r.line())
        out.append(r)
    return out
