"""Free-boundary extraction, point classification and the Laplacian-measure identity.

Boundary points come from marching edges: every grid edge joining a node with
u above a small threshold to one at or below it contributes its linear
crossing, and coincident crossings are merged.  Each point carries a surface
weight from column projection: a crossing on an edge parallel to axis k stands
for h^(n-1) / |nu_k| of boundary, and only crossings on the axis where the
local normal is largest are counted.

Classification reads the small-radius limits of the Weiss energy M and the
frequency N off a radius ladder (see :func:`fbscope.functionals.limit_extrapolate`).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .analytic import AnalyticSolution
from .field import (
    GridSpec,
    OutOfDomainError,
    ScalarField,
    _interp_array,
    ball_integral,
    ball_region,
    laplacian_mass,
    radial_cutoff,
    sphere_rule,
    unit_ball_volume,
)
from .functionals import _jsonable, limit_extrapolate, profile, sample
from .sample import alpha_n

__all__ = [
    "LABELS",
    "ClassifyConfig",
    "BoundaryPointSet",
    "MeasureProfile",
    "extract_boundary",
    "classify",
    "blowup",
    "renormalize",
    "measure_profile",
    "deviation_functionals",
    "positivity_density",
    "boundary_to_csv",
    "measure_profiles_to_json",
]

LABELS = ("regular", "sigmaH", "degenerate", "unresolved")
_UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class ClassifyConfig:
    """Ladder and band thresholds; lengths are in grid cells, bands in units of |B_1|."""

    r_min_cells: float = 4.0
    r_max_cells: float = 32.0
    n_radii: int = 8
    tol_class: float = 0.05
    gap: float = 0.15
    h0_cells: float = 4.0
    rel_tol: float = 0.05
    normal_cells: float = 8.0


@dataclass
class BoundaryPointSet:
    """Extracted boundary points and, after :func:`classify`, their labels.

    ``weights`` are surface-measure weights; ``geom_normals`` come from the
    point cloud, ``normals`` from gradient moments (filled by classify).
    """

    dim: int
    h: float
    points: np.ndarray
    weights: np.ndarray
    geom_normals: np.ndarray
    axes: np.ndarray
    u_zero: bool = False
    M0: np.ndarray | None = None
    N0: np.ndarray | None = None
    H0: np.ndarray | None = None
    labels: tuple[str, ...] = ()
    normals: np.ndarray | None = None

    def __post_init__(self) -> None:
        m = len(self.points)
        if self.M0 is None:
            self.M0 = np.full(m, np.nan)
            self.N0 = np.full(m, np.nan)
            self.H0 = np.full(m, np.nan)
            self.normals = np.full((m, self.dim), np.nan)
        if not self.labels:
            self.labels = (_UNCLASSIFIED,) * m

    def __len__(self) -> int:
        return len(self.points)

    @property
    def classified(self) -> bool:
        return len(self) == 0 or _UNCLASSIFIED not in self.labels

    @property
    def length(self) -> float:
        """Total surface measure of the extracted boundary."""
        return float(self.weights.sum())

    def mask(self, *labels: str) -> np.ndarray:
        lab = np.array(self.labels, dtype=object)
        return np.isin(lab, labels) if len(lab) else np.zeros(0, bool)

    def counts(self) -> dict[str, int]:
        return {lab: int(self.mask(lab).sum()) for lab in (*LABELS, _UNCLASSIFIED) if self.mask(lab).any()}


# extraction ------------------------------------------------------------------

def extract_boundary(field: ScalarField, rel_thresh: float = 1e-8) -> BoundaryPointSet:
    """Marching-edge zero crossings of u, merged within h/2."""
    spec = field.spec
    n, h = spec.dim, spec.h
    u = field.values
    umax = float(u.max())
    if umax == 0.0:
        return _empty(spec, u_zero=True)
    thr = rel_thresh * umax
    pos = u > thr
    origin = np.asarray(spec.origin)
    pts, ax = [], []
    for k in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        cross = pos[lo] != pos[hi]
        if not cross.any():
            continue
        idx = np.argwhere(cross)
        u0 = u[lo][cross]
        u1 = u[hi][cross]
        t = (u0 - thr) / (u0 - u1)
        p = origin + h * idx.astype(float)
        p[:, k] += h * t
        pts.append(p)
        ax.append(np.full(len(p), k))
    if not pts:
        return _empty(spec)
    P = np.concatenate(pts)
    A = np.concatenate(ax)
    P, axes = _merge(P, A, n, 0.5 * h)
    order = np.lexsort(P.T[::-1])
    P, axes = P[order], axes[order]
    normals = _cloud_normals(P, axes, 2.5 * h)
    k = np.argmax(np.abs(normals), axis=1)
    nk = np.abs(normals[np.arange(len(P)), k])
    counted = axes[np.arange(len(P)), k]
    weights = np.where(counted, h ** (n - 1) / nk, 0.0)
    return BoundaryPointSet(n, h, P, weights, normals, axes)


def _empty(spec: GridSpec, u_zero: bool = False) -> BoundaryPointSet:
    n = spec.dim
    return BoundaryPointSet(n, spec.h, np.zeros((0, n)), np.zeros(0), np.zeros((0, n)),
                            np.zeros((0, n), bool), u_zero)


def _merge(P: np.ndarray, A: np.ndarray, n: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
    tree = cKDTree(P)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    m = len(P)
    g = sparse.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m)) \
        if len(pairs) else sparse.coo_matrix((m, m))
    ncomp, lab = connected_components(g, directed=False)
    counts = np.bincount(lab, minlength=ncomp)
    merged = np.zeros((ncomp, n))
    for k in range(n):
        merged[:, k] = np.bincount(lab, weights=P[:, k], minlength=ncomp) / counts
    axes = np.zeros((ncomp, n), bool)
    axes[lab, A] = True
    return merged, axes


def _cloud_normals(P: np.ndarray, axes: np.ndarray, radius: float) -> np.ndarray:
    """Smallest-variance direction of each point's neighbourhood."""
    m, n = P.shape
    out = np.zeros((m, n))
    tree = cKDTree(P)
    for i, nb in enumerate(tree.query_ball_point(P, radius)):
        Q = P[nb]
        if len(Q) >= n:
            C = np.cov((Q - Q.mean(axis=0)).T, bias=True)
            w, V = np.linalg.eigh(C)
            v = V[:, 0]
            if w[1] <= 1e-14 * radius ** 2:
                v = _axis_normal(axes[i], n)
        else:
            v = _axis_normal(axes[i], n)
        out[i] = _canonical_sign(v)
    return out


def _axis_normal(axes_row: np.ndarray, n: int) -> np.ndarray:
    v = np.zeros(n)
    v[int(np.argmax(axes_row))] = 1.0
    return v


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v if v[k] >= 0 else -v


# classification --------------------------------------------------------------

def _moment_normal(grads: list[np.ndarray], u: np.ndarray, spec: GridSpec, x: np.ndarray,
                   radius: float) -> np.ndarray:
    """Top eigenvector of sum grad u grad u^T over {u > 0} nodes in B_radius(x)."""
    h = spec.h
    o = np.asarray(spec.origin)
    lo = np.maximum(np.floor((x - radius - o) / h).astype(int), 0)
    hi = np.minimum(np.ceil((x + radius - o) / h).astype(int) + 1, np.asarray(spec.shape))
    sl = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
    axes = [o[k] + h * np.arange(lo[k], hi[k]) - x[k] for k in range(spec.dim)]
    Y = np.meshgrid(*axes, indexing="ij")
    inside = (sum(y * y for y in Y) <= radius * radius) & (u[sl] > 0)
    G = np.stack([g[sl][inside] for g in grads], axis=1)
    if len(G) == 0:
        return np.full(spec.dim, np.nan)
    w, V = np.linalg.eigh(G.T @ G)
    return _canonical_sign(V[:, -1])


def classify(field: ScalarField, pts: BoundaryPointSet,
             config: ClassifyConfig | None = None) -> BoundaryPointSet:
    """Label each point regular / sigmaH / degenerate / unresolved from ladder limits.

    sigmaH: M0 >= |B_1| (1 - tol_class); degenerate: sigmaH with H0 <= (h0_cells h)^2;
    regular: |B_1| (1/2 - tol_class) <= M0 <= |B_1| (1 - gap).  Unstable ladders,
    ladders that cannot start at r_min, and values between the bands stay
    unresolved.
    """
    cfg = config or ClassifyConfig()
    spec = field.spec
    h = spec.h
    n = spec.dim
    b1 = unit_ball_volume(n)
    m = len(pts)
    M0 = np.full(m, np.nan)
    N0 = np.full(m, np.nan)
    H0 = np.full(m, np.nan)
    normals = np.full((m, n), np.nan)
    labels = []
    grads = np.gradient(field.values, h)
    if n == 1:
        grads = [grads]
    r_min = cfg.r_min_cells * h
    for i, x in enumerate(pts.points):
        r_max = min(cfg.r_max_cells * h, spec.distance_to_boundary(x) - 3 * h)
        normals[i] = _moment_normal(grads, field.values, spec, x, cfg.normal_cells * h)
        if r_max <= r_min:
            labels.append("unresolved")
            continue
        prof = profile(field, x, r_min, r_max, cfg.n_radii)
        lim = limit_extrapolate(prof, cfg.rel_tol)
        M0[i], N0[i], H0[i] = lim.M0, lim.N0, lim.H0
        labels.append(_label(lim, b1, cfg, h))
    return replace(pts, M0=M0, N0=N0, H0=H0, labels=tuple(labels), normals=normals)


def _label(lim, b1: float, cfg: ClassifyConfig, h: float) -> str:
    M0 = lim.M0
    if not lim.stable or not math.isfinite(M0):
        return "unresolved"
    if M0 >= b1 * (1 - cfg.tol_class):
        return "degenerate" if lim.H0 <= (cfg.h0_cells * h) ** 2 else "sigmaH"
    if b1 * (0.5 - cfg.tol_class) <= M0 <= b1 * (1 - cfg.gap):
        return "regular"
    return "unresolved"


# rescalings ------------------------------------------------------------------

def _rescaled(field: ScalarField, x, r: float, scale: float, cells: int | None) -> ScalarField:
    spec = field.spec
    x = np.asarray(x, float)
    if cells is None:
        cells = max(8, 2 * int(round(r / spec.h)))
    if np.any(x - r < np.asarray(spec.origin) - 1e-12) or np.any(x + r > spec.upper + 1e-12):
        raise OutOfDomainError(f"cube of half-width {r:g} around {tuple(x)} leaves the grid")
    unit = GridSpec.cube(spec.dim, cells)
    pts = x + r * unit.nodes()
    u = _interp_array(spec, field.values, pts).reshape(unit.shape) / scale
    chi = np.clip(_interp_array(spec, field.chi, pts).reshape(unit.shape), 0.0, 1.0)
    lip = field.lipschitz * r / scale
    return ScalarField(unit, np.maximum(u, 0.0), chi, lip)


def blowup(field: ScalarField, x, r: float, cells: int | None = None) -> ScalarField:
    """u(x + r y) / r and chi(x + r y) on [-1, 1]^n.

    ``cells`` defaults to the native resolution 2r/h, where the unit-grid
    nodes land on original nodes whenever x is a node.
    """
    return _rescaled(field, x, r, r, cells)


def renormalize(field: ScalarField, x, r: float, cells: int | None = None) -> ScalarField:
    """u(x + r y) / (r sqrt(H_x(r))), which has H = 1 at radius 1."""
    H = sample(field, x, r, errors=False).H
    if not H > 0:
        raise ValueError(f"H_x(r) = {H} at r={r:g}; cannot renormalize")
    return _rescaled(field, x, r, r * math.sqrt(H), cells)


# measure identity ------------------------------------------------------------

@dataclass
class MeasureProfile:
    """Measured Laplacian mass vs the label-weighted boundary prediction on a radius ladder."""

    x: tuple[float, ...]
    radii: np.ndarray
    measured: np.ndarray
    measured_err: np.ndarray
    predicted: np.ndarray
    sigma: np.ndarray
    contaminated: np.ndarray
    n_unresolved: np.ndarray

    @property
    def mismatch(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.measured), 1e-300)
        return np.abs(self.measured - self.predicted) / scale

    @property
    def monotone(self) -> bool:
        d = np.diff(self.measured)
        return bool(np.all(d >= -2 * (self.measured_err[1:] + self.measured_err[:-1]) - 1e-12))

    def as_dict(self) -> dict:
        return {
            "x": list(self.x),
            "radii": self.radii.tolist(),
            "measured": self.measured.tolist(),
            "measured_err": self.measured_err.tolist(),
            "predicted": self.predicted.tolist(),
            "mismatch": self.mismatch.tolist(),
            "sigma": self.sigma.tolist(),
            "contaminated": [bool(c) for c in self.contaminated],
            "n_unresolved": [int(c) for c in self.n_unresolved],
            "monotone": self.monotone,
        }


def point_densities(pts: BoundaryPointSet) -> np.ndarray:
    """Per-point density of the Laplacian measure: 1 on regular, 2 alpha sqrt(H0) on sigmaH."""
    a = alpha_n(pts.dim)
    out = np.zeros(len(pts))
    reg = pts.mask("regular")
    hi = pts.mask("sigmaH", "degenerate")
    out[reg] = 1.0
    out[hi] = 2 * a * np.sqrt(np.maximum(pts.H0[hi], 0.0))
    return out


def measure_profile(field: ScalarField, x, pts: BoundaryPointSet, radii: Sequence[float],
                    sigma: float | None = None) -> MeasureProfile:
    """Laplacian mass of B_r(x) against the boundary prediction.

    Both sides use the same radial cutoff (width ``sigma``, default
    max(4h, 0.1 r)), so the comparison is exact for straight boundaries.
    """
    if not pts.classified:
        raise ValueError("classify the boundary points first")
    x = np.asarray(x, float)
    h = field.h
    dens = point_densities(pts)
    unres = pts.mask("unresolved")
    rho = np.linalg.norm(pts.points - x, axis=1) if len(pts) else np.zeros(0)
    meas, err, pred, sig, cont, nun = [], [], [], [], [], []
    for r in radii:
        s = max(4 * h, 0.1 * r) if sigma is None else float(sigma)
        est = laplacian_mass(field, ball_region(field.spec, x, r), s)
        eta = radial_cutoff(rho, r, s)[0]
        meas.append(est.value)
        err.append(est.err)
        pred.append(float(np.sum(pts.weights * eta * dens)))
        sig.append(s)
        k = int(np.sum(unres & (eta > 0)))
        nun.append(k)
        cont.append(k > 0)
    f = lambda v, t=float: np.array(v, dtype=t)
    return MeasureProfile(tuple(float(v) for v in x), f(radii), f(meas), f(err), f(pred), f(sig),
                          f(cont, bool), f(nun, int))


# deviation functionals -------------------------------------------------------

def _profile_dev_cells(field: ScalarField, x: np.ndarray, nu: np.ndarray, A: float) -> np.ndarray:
    """Per-cell mean of |grad u - A sgn((z - x).nu) nu|^2."""
    spec = field.spec
    h = spec.h
    o = np.asarray(spec.origin)
    centers = [o[k] + h * (np.arange(spec.cells[k]) + 0.5) - x[k] for k in range(spec.dim)]
    C = np.meshgrid(*centers, indexing="ij")
    if spec.dim == 2:
        gA, gB, main = field.triangles
        out = 0.0
        # triangle centroids relative to the cell centre, for each split
        offs = {True: ((1 / 6, -1 / 6), (-1 / 6, 1 / 6)), False: ((-1 / 6, -1 / 6), (1 / 6, 1 / 6))}
        for t, g in enumerate((gA, gB)):
            dx = np.where(main, offs[True][t][0], offs[False][t][0]) * h
            dy = np.where(main, offs[True][t][1], offs[False][t][1]) * h
            s = np.where((C[0] + dx) * nu[0] + (C[1] + dy) * nu[1] >= 0, 1.0, -1.0)
            d0 = g[..., 0] - A * s * nu[0]
            d1 = g[..., 1] - A * s * nu[1]
            out = out + 0.5 * (d0 * d0 + d1 * d1)
        return out
    u = field.values
    grads = []
    for k in range(spec.dim):
        d = np.diff(u, axis=k) / h
        for j in range(spec.dim):
            if j != k:
                d = 0.5 * (d.take(range(d.shape[j] - 1), axis=j) + d.take(range(1, d.shape[j]), axis=j))
        grads.append(d)
    s = np.where(sum(c * v for c, v in zip(C, nu)) >= 0, 1.0, -1.0)
    return sum((g - A * s * v) ** 2 for g, v in zip(grads, nu))


def _circle_rule(breaks: list[float], per_arc: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on each arc between the break angles (unit-circle points, weights)."""
    b = sorted(set(float(np.mod(v, 2 * np.pi)) for v in breaks))
    b = b + [b[0] + 2 * np.pi]
    t, w = np.polynomial.legendre.leggauss(per_arc)
    th, wt = [], []
    for lo, hi in zip(b[:-1], b[1:]):
        if hi - lo < 1e-14:
            continue
        th.append(lo + 0.5 * (hi - lo) * (t + 1))
        wt.append(0.5 * (hi - lo) * w)
    th = np.concatenate(th)
    return np.stack([np.cos(th), np.sin(th)], axis=1), np.concatenate(wt)


def _analytic_profile_dev(sol: AnalyticSolution, x: np.ndarray, r: float, nu: np.ndarray,
                          A: float, n_rad: int = 96, n_ang: int = 512) -> float:
    n = sol.dim
    t, wt = np.polynomial.legendre.leggauss(n_rad)
    rho = 0.5 * r * (t + 1)
    wr = 0.5 * r * wt * rho ** (n - 1)
    if n == 2:
        # arcs split where the reference or a planar crease changes sign
        normals = [nu]
        if sol.kind in ("HalfPlane", "Wedge", "WedgeWithChiOne"):
            normals.append(sol._nu())
        breaks = [0.0]
        for v in normals:
            base = math.atan2(v[1], v[0]) + 0.5 * np.pi
            breaks += [base, base + np.pi]
        omega, wa = _circle_rule(breaks)
    else:
        omega, wa = sphere_rule(n, n_ang)
    Z = rho[:, None, None] * omega[None, :, :]
    pts = (x + Z).reshape(-1, n)
    g = sol.grad(pts)
    s = np.where(Z.reshape(-1, n) @ nu >= 0, 1.0, -1.0)
    d2 = ((g - A * s[:, None] * nu[None, :]) ** 2).sum(axis=1).reshape(n_rad, -1)
    return float(wr @ (d2 @ wa))


def deviation_functionals(field: ScalarField | AnalyticSolution, x, r: float, nu) -> dict:
    """Energy and profile deviations at scale r.

    energy_dev = r int_{B_r} (|grad u|^2 + chi - 1) / int_{dB_r} u^2, which is
    the frequency N_x(r) and tends to 1 at sigmaH points.  profile_dev =
    int_{B_1} |grad v - grad w|^2 for the renormalised v = u(x + r.)/(r sqrt H)
    and w = alpha(n) |y . nu|; it tends to 0 at sigmaH points.  (The reference
    has unit energy, int_{B_1} |grad w|^2 = alpha^2 |B_1| = 1.)
    """
    x = np.asarray(x, float)
    nu = np.asarray(nu, float)
    nu = nu / np.linalg.norm(nu)
    s = sample(field, x, r)
    if not s.H > 0:
        raise ValueError(f"H_x(r) = {s.H}; deviation functionals need H > 0")
    n = len(x)
    A = alpha_n(n) * math.sqrt(s.H)
    if isinstance(field, AnalyticSolution):
        integral = _analytic_profile_dev(field, x, r, nu, A)
    else:
        cells = _profile_dev_cells(field, x, nu, A)
        integral = ball_integral(field, cells, ball_region(field.spec, x, r)).value
    return {"energy_dev": float(s.N), "profile_dev": float(integral / (r ** n * s.H)),
            "H": float(s.H), "r": float(r)}


def positivity_density(field: ScalarField, x, r: float) -> float:
    """|B_r(x) ∩ {u > 0}| / |B_r| with per-cell positive fractions from the corner values."""
    pos = (field.values > 0).astype(float)
    n = field.dim
    c = pos
    for k in range(n):
        c = 0.5 * (c.take(range(c.shape[k] - 1), axis=k) + c.take(range(1, c.shape[k]), axis=k))
    est = ball_integral(field, c, ball_region(field.spec, x, r))
    return est.value / (unit_ball_volume(n) * r ** n)


# emitters --------------------------------------------------------------------

def boundary_to_csv(pts: BoundaryPointSet, path, extra: dict | None = None) -> None:
    """One row per boundary point: coordinates, weight, M0, N0, H0, label, normal.

    ``extra`` prepends constant columns (e.g. a config hash).
    """
    extra = extra or {}
    n = pts.dim
    coords = ["x", "y", "z"][:n]
    header = list(extra) + coords + ["weight", "M0", "N0", "H0", "label"] + [f"nu_{c}" for c in coords]
    f = lambda v: f"{float(v):.17g}"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(pts)):
            row = [str(v) for v in extra.values()] + [f(v) for v in pts.points[i]]
            row += [f(pts.weights[i]), f(pts.M0[i]), f(pts.N0[i]), f(pts.H0[i]), pts.labels[i]]
            row += [f(v) for v in pts.normals[i]]
            w.writerow(row)


def measure_profiles_to_json(profiles: Sequence[MeasureProfile], extra: dict | None = None) -> str:
    doc = {"profiles": [p.as_dict() for p in profiles]}
    if extra:
        doc.update(extra)
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2)
