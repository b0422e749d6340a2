"""Weiss energy, frequency and their radial profiles on gridded or analytic fields.

For a pair (u, chi), centre x and radius r (n = dimension)::

    D = r^-n     int_{B_r} |grad u|^2 + chi
    H = r^-(n+1) int_{dB_r} u^2
    M = D - H
    N = (D - |B_1|) / H           (-inf when H = 0)
    V = r^-n int_{B_r} (1 - chi) / H

so that N + V = r int |grad u|^2 / int_{dB_r} u^2.
"""

from __future__ import annotations

import csv
import json
import math
from itertools import product
from dataclasses import dataclass, field as dc_field, asdict
from typing import Sequence, Union

import numpy as np

from .analytic import AnalyticSolution, NotAvailableError, exact_functionals
from .field import (
    OutOfDomainError,
    ScalarField,
    ball_cell_weights,
    default_n_quad,
    gradient,
    interpolate,
    sphere_rule,
    triangle_vertex_mean,
    unit_ball_volume,
    _interp_array,
)
from .sample import NEG_INF, FunctionalSample, alpha_n, build_sample

__all__ = [
    "FunctionalSample",
    "RadialProfile",
    "DerivativeCheck",
    "LimitEstimate",
    "ResidualReport",
    "alpha_n",
    "sample",
    "profile",
    "m_derivative_check",
    "n_derivative_check",
    "limit_extrapolate",
    "variational_residual",
    "bump_fields",
    "samples_to_csv",
    "profile_to_json",
]

Field = Union[ScalarField, AnalyticSolution]


# sampling --------------------------------------------------------------------

def _grid_integrals(field: ScalarField, x, r: float, n_quad: int | None):
    spec = field.spec
    h = spec.h
    sl, w = ball_cell_weights(spec, x, r)
    vol = h ** spec.dim
    G = float(np.sum(w * field.cell_grad2[sl])) * vol
    K = float(np.sum(w * (1.0 - field.cell_chi[sl]))) * vol
    n = default_n_quad(spec, r) if n_quad is None else n_quad
    S1 = _sphere_u2(field, x, r, n)
    S = _sphere_u2(field, x, r, 2 * n)
    return G, K, S, abs(S - S1)


def _sphere_u2(field: ScalarField, x, r: float, n: int) -> float:
    omega, wq = sphere_rule(field.dim, n)
    vals = _interp_array(field.spec, field.values, np.asarray(x) + r * omega)
    return float(np.dot(wq, vals * vals)) * r ** (field.dim - 1)


def _analytic_integrals(sol: AnalyticSolution, x, r: float, n_rad: int = 64, n_ang: int = 256):
    """Polar-coordinate quadrature of the analytic pair (used when no closed form exists)."""
    n = sol.dim
    t, wt = np.polynomial.legendre.leggauss(n_rad)
    rho = 0.5 * r * (t + 1)
    wr = 0.5 * r * wt * rho ** (n - 1)
    omega, wa = sphere_rule(n, n_ang)
    pts = (np.asarray(x)[None, None, :] + rho[:, None, None] * omega[None, :, :]).reshape(-1, n)
    g = sol.grad(pts)
    g2 = (g * g).sum(axis=1).reshape(n_rad, -1)
    defi = (1.0 - sol.chi(pts)).reshape(n_rad, -1)
    G = float(wr @ (g2 @ wa))
    K = float(wr @ (defi @ wa))
    sph = np.asarray(x) + r * omega
    S = float(np.dot(wa, sol.eval(sph) ** 2)) * r ** (n - 1)
    return G, K, S


def sample(field: Field, x, r: float, n_quad: int | None = None, errors: bool = True) -> FunctionalSample:
    """(D, H, M, N, V) at centre ``x``, radius ``r`` with quadrature error estimates.

    Analytic solutions use closed forms where available and polar quadrature
    otherwise.  Grid fields use exact cell-disk weights (2D) or subdivided
    weights (3D); the error budget combines the every-other-node comparison
    for ball terms with the n_quad-doubling and coarse-grid gaps for H.
    """
    x = np.asarray(x, float).ravel()
    if isinstance(field, AnalyticSolution):
        try:
            return exact_functionals(field, x, r)
        except NotAvailableError:
            G, K, S = _analytic_integrals(field, x, r)
            G2, K2, S2 = _analytic_integrals(field, x, r, 96, 512)
            return build_sample(x, r, field.dim, G2, K2, S2, abs(G2 - G) + abs(K2 - K), abs(S2 - S))
    spec = field.spec
    if spec.distance_to_boundary(x) <= r + 2 * spec.h:
        raise OutOfDomainError(f"B_{r:g}({tuple(x)}) is not interior")
    G, K, S, err_s = _grid_integrals(field, x, r, n_quad)
    err_b = 0.0
    if errors:
        cf = field.coarse
        if cf is not None and cf.spec.distance_to_boundary(x) > r + 2 * cf.h:
            Gc, Kc, Sc, _ = _grid_integrals(cf, x, r, n_quad)
            err_b = (abs(G - Gc) + abs(K - Kc)) / 3.0
            err_s += abs(S - Sc) / 3.0
        else:
            sl, w = ball_cell_weights(spec, x, r)
            Gm = float(np.sum(w * field.cell_grad2_midpoint[sl])) * spec.h ** spec.dim
            err_b = abs(G - Gm)
    return build_sample(x, r, spec.dim, G, K, S, err_b, err_s)


# profiles --------------------------------------------------------------------

@dataclass
class RadialProfile:
    """Samples on a geometric radius ladder plus monotonicity diagnostics.

    ``m_monotone[i]`` / ``n_monotone[i]`` refer to the interval
    (radii[i], radii[i+1]); ``n_monotone`` is None where N is not certified.
    """

    x: tuple[float, ...]
    radii: np.ndarray
    samples: list[FunctionalSample]
    u_center: float
    h: float
    lipschitz: float
    m_monotone: list[bool] = dc_field(default_factory=list)
    n_monotone: list[bool | None] = dc_field(default_factory=list)
    dM: list[float] = dc_field(default_factory=list)
    dN: list[float] = dc_field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], float)

    @property
    def certified_from(self) -> int | None:
        """Index of the smallest rung where M >= |B_1| within tolerance."""
        for i, s in enumerate(self.samples):
            if s.n_defined:
                return i
        return None


def _field_meta(field: Field, x) -> tuple[float, float, float]:
    if isinstance(field, AnalyticSolution):
        return float(field.eval(np.asarray(x, float))), 0.0, float("nan")
    return float(interpolate(field, x)), field.h, field.lipschitz


def profile(field: Field, x, r_min: float, r_max: float, n_radii: int = 8,
            n_quad: int | None = None) -> RadialProfile:
    """Sample a geometric ladder of ``n_radii`` radii from r_min to r_max."""
    if n_radii < 8:
        raise ValueError("n_radii must be >= 8")
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    radii = np.geomspace(r_min, r_max, n_radii)
    samples = [sample(field, x, float(r), n_quad) for r in radii]
    u0, h, lip = _field_meta(field, x)
    prof = RadialProfile(tuple(float(v) for v in np.asarray(x, float).ravel()), radii, samples, u0, h, lip)
    _annotate(prof)
    return prof


def _annotate(prof: RadialProfile) -> None:
    s = prof.samples
    cert = prof.certified_from
    for i in range(len(s) - 1):
        a, b = s[i], s[i + 1]
        dr = b.r - a.r
        slack = 2 * (a.quad_err + b.quad_err) + 1e-12 * max(1.0, abs(a.M))
        prof.m_monotone.append(bool(b.M >= a.M - slack))
        prof.dM.append((b.M - a.M) / dr)
        if cert is not None and i >= cert and np.isfinite(a.N) and np.isfinite(b.N):
            nslack = 2 * (a.n_err + b.n_err) + 1e-12 * max(1.0, abs(a.N))
            prof.n_monotone.append(bool(b.N >= a.N - nslack))
            prof.dN.append((b.N - a.N) / dr)
        else:
            prof.n_monotone.append(None)
            prof.dN.append(float("nan"))


# derivative identities -------------------------------------------------------

@dataclass(frozen=True)
class DerivativeCheck:
    """Finite-difference derivative ``lhs`` against the sphere-integral ``rhs``."""

    r: float
    lhs: float
    rhs: float
    residual: float
    relative: float
    tol: float
    form: str = "M"

    def as_dict(self) -> dict:
        return asdict(self)


def _sphere_fields(field: Field, x, s: float, n_quad: int | None):
    n = field.dim
    if isinstance(field, AnalyticSolution):
        m = 512 if n_quad is None else n_quad
        omega, w = sphere_rule(n, m)
        pts = np.asarray(x) + s * omega
        return field.eval(pts), field.grad(pts), omega, w
    m = default_n_quad(field.spec, s) if n_quad is None else n_quad
    omega, w = sphere_rule(n, m)
    pts = np.asarray(x) + s * omega
    return _interp_array(field.spec, field.values, pts), gradient(field, pts), omega, w


def _default_dr(field: Field, r: float) -> float:
    if isinstance(field, AnalyticSolution):
        return 1e-3 * r
    return min(max(0.05 * r, 2 * field.h), 0.5 * r)


def _relative(lhs: float, rhs: float, floor: float, ref: float) -> tuple[float, float]:
    """Residual relative to the larger side; near-zero derivatives are measured against ``ref``.

    ``ref`` is the natural size of the derivative (functional / r), so a
    vanishing derivative with O(h^2) noise on one side does not read as 100%.
    """
    res = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    small = max(floor, 1e-4 * ref)
    if scale > small:
        return res, res / scale
    return res, res / ref if ref > 0 else (0.0 if res <= floor else math.inf)


def m_derivative_check(field: Field, x, r: float, dr: float | None = None,
                       n_quad: int | None = None) -> DerivativeCheck:
    """Compare (M(r+dr) - M(r-dr)) / 2dr with 2 r^-(n+2) int_{dB_r} (u - y.grad u)^2."""
    x = np.asarray(x, float).ravel()
    dr = _default_dr(field, r) if dr is None else dr
    lo, hi = sample(field, x, r - dr, n_quad), sample(field, x, r + dr, n_quad)
    lhs = (hi.M - lo.M) / (2 * dr)
    u, g, omega, w = _sphere_fields(field, x, r, n_quad)
    n = field.dim
    radial = r * np.einsum("ij,ij->i", g, omega)
    rhs = 2.0 / r ** (n + 2) * float(np.dot(w, (u - radial) ** 2)) * r ** (n - 1)
    tol = (lo.quad_err + hi.quad_err) / (2 * dr)
    res, rel = _relative(lhs, rhs, max(tol, 1e-12), max(abs(lo.M), abs(hi.M)) / r)
    return DerivativeCheck(float(r), float(lhs), float(rhs), res, rel, float(tol), "M")


def n_derivative_check(field: Field, x, r: float, dr: float | None = None,
                       n_quad: int | None = None) -> DerivativeCheck:
    """Finite-difference dN/dr against both sphere-integral forms; returns the worse one.

    Form 1: 2/(H s^(n+2)) int (grad u.y - (N+V) u)^2 + (2/s)(V^2 + V(N-1)).
    Form 2: 2/(H s^(n+2)) int (grad u.y - N u)^2 + (2/s) V (N-1).
    """
    x = np.asarray(x, float).ravel()
    mid = sample(field, x, r, n_quad)
    if not (mid.H > 0 and mid.n_defined):
        raise ValueError(f"frequency not certified at r={r:g} (M={mid.M:.6g}, H={mid.H:.3g})")
    dr = _default_dr(field, r) if dr is None else dr
    lo, hi = sample(field, x, r - dr, n_quad), sample(field, x, r + dr, n_quad)
    lhs = (hi.N - lo.N) / (2 * dr)
    u, g, omega, w = _sphere_fields(field, x, r, n_quad)
    n = field.dim
    radial = r * np.einsum("ij,ij->i", g, omega)
    N, V, H = mid.N, mid.V, mid.H
    area = r ** (n - 1)
    c = 2.0 / (H * r ** (n + 2))
    rhs1 = c * float(np.dot(w, (radial - (N + V) * u) ** 2)) * area + (2 / r) * (V * V + V * (N - 1))
    rhs2 = c * float(np.dot(w, (radial - N * u) ** 2)) * area + (2 / r) * V * (N - 1)
    tol = (lo.n_err + hi.n_err) / (2 * dr)
    floor = max(tol, 1e-12)
    ref = max(1.0, abs(N)) / r
    res1, rel1 = _relative(lhs, rhs1, floor, ref)
    res2, rel2 = _relative(lhs, rhs2, floor, ref)
    if rel1 >= rel2:
        return DerivativeCheck(float(r), float(lhs), float(rhs1), res1, rel1, float(tol), "N:form1")
    return DerivativeCheck(float(r), float(lhs), float(rhs2), res2, rel2, float(tol), "N:form2")


# limits ----------------------------------------------------------------------

@dataclass(frozen=True)
class LimitEstimate:
    """Small-radius limits M(0+), N(0+), H(0+) with ladder-stability flags."""

    M0: float
    N0: float
    H0: float
    stable: bool
    n_stable: bool
    interior_positive: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _richardson(f1: float, f2: float, ratio: float, p: float = 2.0) -> float:
    k = ratio ** p
    return (k * f1 - f2) / (k - 1)


def limit_extrapolate(prof: RadialProfile, rel_tol: float = 0.05) -> LimitEstimate:
    """Estimate the r -> 0+ limits from the bottom of the ladder.

    M and N are nondecreasing, so the bottom rung bounds the limit from above;
    one quadratic Richardson step between the two bottom rungs sharpens it and
    is clipped to that bound.  H0 gets the same step clipped to [0, H(r_min)]:
    near a crease H(r) = H0 (1 + O(r^2)), while at a higher-order zero H ~ r^2
    extrapolates to 0.  A point where u(x) exceeds what the Lipschitz
    bound allows within two cells of the zero set is an interior positivity
    point and gets M0 = N0 = -inf.
    """
    s = prof.samples
    if len(s) < 2:
        raise ValueError("need at least two rungs")
    s1, s2 = s[0], s[1]
    ratio = s2.r / s1.r
    thresh = 0.0 if prof.h == 0 else 2 * prof.h * prof.lipschitz
    if prof.u_center > thresh:
        return LimitEstimate(NEG_INF, NEG_INF, s1.H, True, True, True)
    b1 = unit_ball_volume(len(prof.x))
    M0 = min(_richardson(s1.M, s2.M, ratio), s1.M)
    dm = abs(s1.M - s2.M) / max(abs(s1.M), 1e-3 * b1)
    dh = abs(s1.H - s2.H) / max(abs(s1.H), 1e-300) if s1.H > 0 else 0.0
    stable = bool(dm <= rel_tol)
    if np.isfinite(s1.N) and np.isfinite(s2.N):
        N0 = min(_richardson(s1.N, s2.N, ratio), s1.N)
        n_stable = bool(abs(s1.N - s2.N) <= rel_tol * max(abs(s1.N), 1.0))
    else:
        N0, n_stable = s1.N, False
    H0 = min(max(_richardson(s1.H, s2.H, ratio), 0.0), max(s1.H, 0.0))
    return LimitEstimate(float(M0), float(N0), float(H0), stable and dh <= 1.0, n_stable)


# variational residual --------------------------------------------------------

@dataclass(frozen=True)
class Bump:
    center: np.ndarray
    scale: float
    direction: np.ndarray


def bump_fields(spec, n: int = 32, seed: int = 0) -> list[Bump]:
    """Seeded family of tensor-product bumps xi = a * prod_k phi((x_k - c_k)/s), phi(t) = (1-t^2)^4.

    Supports stay at least one bump radius plus two cells away from the box walls.
    """
    rng = np.random.default_rng(seed)
    o = np.asarray(spec.origin)
    ext = np.asarray(spec.extent)
    half = 0.5 * ext.min()
    out = []
    for _ in range(n):
        s = float(rng.uniform(0.15, 0.45) * half)
        lo = o + s + 2 * spec.h
        hi = o + ext - s - 2 * spec.h
        c = rng.uniform(lo, hi)
        a = rng.normal(size=spec.dim)
        a /= np.linalg.norm(a)
        out.append(Bump(c, s, a))
    return out


def _bump_nodal(b: Bump, coords: list[np.ndarray]):
    """phi values and derivatives on the tensor grid ``coords``."""
    phis, dphis = [], []
    for k, xk in enumerate(coords):
        t = (xk - b.center[k]) / b.scale
        inside = np.abs(t) < 1
        base = np.where(inside, 1 - t * t, 0.0)
        phis.append(base ** 4)
        dphis.append(np.where(inside, -8 * t * base ** 3 / b.scale, 0.0))
    return phis, dphis


def _residual_one(field: ScalarField, b: Bump) -> tuple[float, float]:
    """Signed integral and normaliser for one test field.

    2D integrates per valley-split triangle with vertex means of div xi and
    grad phi; 3D pairs each cell corner's one-sided gradient with the test
    field at that corner.
    """
    spec = field.spec
    n = spec.dim
    h = spec.h
    o = np.asarray(spec.origin)
    lo = np.maximum(np.floor((b.center - b.scale - o) / h).astype(int) - 1, 0)
    hi = np.minimum(np.ceil((b.center + b.scale - o) / h).astype(int) + 1, np.asarray(spec.cells))
    node_axes = [o[k] + h * np.arange(lo[k], hi[k] + 1) for k in range(n)]
    phis, dphis = _bump_nodal(b, node_axes)
    # scalar bump and its gradient on the node block
    def outer(factors):
        out = factors[0]
        for f in factors[1:]:
            out = np.multiply.outer(out, f)
        return out
    phi = outer(phis)
    dphi = [outer([dphis[j] if j == k else phis[j] for j in range(n)]) for k in range(n)]
    a = b.direction
    div = sum(a[k] * dphi[k] for k in range(n))
    # D xi[i, j] = a_i d_j phi
    cells_sl = tuple(slice(int(l), int(u)) for l, u in zip(lo, hi))
    if n == 2:
        gA, gB, main = field.triangles
        m = main[cells_sl]
        total = 0.0
        div_means = triangle_vertex_mean(div, m)
        dphi_means = [triangle_vertex_mean(d, m) for d in dphi]
        for t, g in enumerate((gA[cells_sl], gB[cells_sl])):
            g2 = (g * g).sum(axis=-1)
            ga = g @ a
            gd = g[..., 0] * dphi_means[0][t] + g[..., 1] * dphi_means[1][t]
            total += float(np.sum(g2 * div_means[t] - 2.0 * ga * gd))
        chi_c = field.cell_chi[cells_sl]
        total += 2.0 * float(np.sum(chi_c * 0.5 * (div_means[0] + div_means[1])))
        total *= h * h / 2
        norm = (float(np.sum(np.abs(phi))) + float(np.sum(np.sqrt(sum(d * d for d in dphi))))) * h ** n
        return total, norm
    G = field.corner_gradients[(slice(None), *cells_sl)]
    chi_c = field.cell_chi[cells_sl]
    total = 0.0
    div_mean = 0.0
    for ci, corner in enumerate(product((0, 1), repeat=n)):
        sl = tuple(slice(c, c + (u - l)) for c, l, u in zip(corner, lo, hi))
        g = G[ci]
        g2 = (g * g).sum(axis=-1)
        ga = g @ a
        gdphi = sum(g[..., j] * dphi[j][sl] for j in range(n))
        dv = div[sl]
        total += float(np.sum(g2 * dv - 2.0 * ga * gdphi))
        div_mean = div_mean + dv
    total += float(np.sum(chi_c * div_mean))
    total *= h ** n / 2 ** n
    norm = (float(np.sum(np.abs(phi))) + float(np.sum(np.sqrt(sum(d * d for d in dphi))))) * h ** n
    return total, norm


@dataclass(frozen=True)
class ResidualReport:
    """Normalised domain-variation residual over the test family.

    ``value`` is the max over test fields; ``per_field`` the individual values;
    ``quad_tol`` the per-field |R_h - R_2h| refinement gaps.  The residual is a
    sup over the family, so its quadrature tolerance is the largest gap, and
    ``consistent`` means value <= floor + max(quad_tol).  (Single fields can
    be pre-asymptotic at coarse h; the family sup is not.)
    """

    value: float
    per_field: tuple[float, ...]
    quad_tol: tuple[float, ...]
    consistent: bool
    floor: float

    @property
    def tolerance(self) -> float:
        return max(self.quad_tol) if self.quad_tol else 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["tolerance"] = self.tolerance
        return d


def variational_residual(field: ScalarField, n_testfields: int = 32, seed: int = 0,
                         floor: float = 1e-6) -> ResidualReport:
    """max_xi |int (|grad u|^2 + chi) div xi - 2 grad u . D xi grad u| / (int |xi| + int |D xi|)."""
    bumps = bump_fields(field.spec, n_testfields, seed)
    vals = []
    for b in bumps:
        t, nrm = _residual_one(field, b)
        vals.append(t / nrm)
    tols = [0.0] * len(vals)
    cf = field.coarse
    if cf is not None:
        tols = []
        for b, v in zip(bumps, vals):
            t, nrm = _residual_one(cf, b)
            tols.append(abs(v - t / nrm))
    per = tuple(abs(v) for v in vals)
    consistent = max(per) <= floor + max(tols)
    return ResidualReport(max(per), per, tuple(tols), bool(consistent), floor)


# emitters --------------------------------------------------------------------

CSV_FIELDS = ("x", "r", "D", "H", "M", "N", "V", "quad_err", "n_err", "n_defined")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (tuple, list, np.ndarray)):
        return ";".join(_fmt(t) for t in v)
    return f"{float(v):.17g}"


def samples_to_csv(samples: Sequence[FunctionalSample], path, extra: dict | None = None) -> None:
    """One row per sample, 17 significant digits; ``extra`` adds constant columns."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(extra) + list(CSV_FIELDS))
        for s in samples:
            d = s.as_dict()
            w.writerow([str(v) for v in extra.values()] + [_fmt(d[k]) for k in CSV_FIELDS])


def _jsonable(v):
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.floating,)):
        return _jsonable(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(t) for t in v.tolist()]
    if isinstance(v, dict):
        return {k: _jsonable(t) for k, t in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(t) for t in v]
    return v


def profile_to_json(prof: RadialProfile, extra: dict | None = None) -> str:
    doc = {
        **(extra or {}),
        "x": list(prof.x),
        "radii": prof.radii,
        "samples": [s.as_dict() for s in prof.samples],
        "u_center": prof.u_center,
        "m_monotone": prof.m_monotone,
        "n_monotone": prof.n_monotone,
        "dM": prof.dM,
        "dN": prof.dN,
    }
    return json.dumps(_jsonable(doc), indent=1, sort_keys=True)
